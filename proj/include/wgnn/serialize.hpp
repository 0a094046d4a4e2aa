#ifndef WGNN_SERIALIZE_HPP
#define WGNN_SERIALIZE_HPP

#include <string>

#include <json.hpp>

#include "wgnn/gnn.hpp"

namespace wgnn {

nlohmann::json gnn_config_to_json(const GnnConfig& config);
GnnConfig gnn_config_from_json(const nlohmann::json& j);

/// Versioned binary checkpoint: {format_version, config, named weight
/// tensors with shapes}. Round-trips bit-exactly.
void save_checkpoint(const std::string& path, const GnnModel& model);
GnnModel load_checkpoint(const std::string& path);

} // namespace wgnn

#endif
