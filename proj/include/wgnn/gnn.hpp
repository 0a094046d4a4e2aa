#ifndef WGNN_GNN_HPP
#define WGNN_GNN_HPP

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "wgnn/graphs.hpp"
#include "wgnn/tape.hpp"

namespace wgnn {

enum class ProcessorKind { linear, fnn };
enum class CombinerKind { linear, affine_act, fnn };
enum class ReadoutKind { none, fnn, fnn_with_h };

struct ProcessorConfig {
    ProcessorKind kind = ProcessorKind::linear;
    std::vector<int> hidden;  // fnn hidden sizes
};

struct CombinerConfig {
    CombinerKind kind = CombinerKind::affine_act;
    std::vector<int> hidden;
};

struct ReadoutConfig {
    ReadoutKind kind = ReadoutKind::none;
    std::vector<int> hidden;
};

/// Architecture axes of one GNN: update family, graph kind, per-layer
/// dimensions, processor/combiner linearity, pooling, and read-out.
struct GnnConfig {
    GnnFamily family = GnnFamily::vertex;
    GraphKind graph_kind = GraphKind::ls_het;
    int L = 3;
    std::vector<int> dims;      // representation dim after each layer, size L
    std::vector<int> agg_dims;  // aggregation output dim per layer; empty = dims
    ProcessorConfig processor;
    CombinerConfig combiner;
    // Separate sig/int combiners for the heterogeneous scheduling Edge-GNN.
    std::optional<CombinerConfig> combiner_sig;
    std::optional<CombinerConfig> combiner_int;
    PoolMode pooling = PoolMode::mean;
    std::string activation = "relu";
    ReadoutConfig readout;

    void validate() const;
    bool is_precoding() const { return graph_kind == GraphKind::p_het; }
    int agg_dim(int layer) const { return agg_dims.empty() ? dims[layer] : agg_dims[layer]; }
    /// Representation dim entering layer l (layer 0 sees the input features).
    int rep_dim_in(int layer) const;
    int input_dim() const;  // 1 for scheduling graphs, 2 for precoding
};

/// Remark-1 functions (linear processor, affine+activation combiner) with the
/// simulation default of mean pooling.
GnnConfig vanilla_config(GnnFamily family, GraphKind kind, std::vector<int> dims,
                         const std::string& activation = "relu");

struct GnnModel {
    GnnConfig config;
    std::map<std::string, Tensor> weights;
};

enum class InitMode { fan_uniform, zeros };

/// Enumerates every weight tensor of a config in a fixed order.
void for_each_param(const GnnConfig& config,
                    const std::function<void(const std::string&, const std::vector<int>&)>& fn);

/// Uniform(-a, a) with a = sqrt(6 / (fan_in + fan_out)); biases zero.
/// InitMode::zeros is a test mode producing all-zero weights.
GnnModel init_model(const GnnConfig& config, std::uint64_t seed,
                    InitMode mode = InitMode::fan_uniform);

long param_count(const GnnConfig& config);

/// Inserts the model weights as tape leaves; returns name -> node id.
std::map<std::string, NodeId> insert_params(Tape& tape, const GnnModel& model,
                                            bool requires_grad);

struct GnnForward {
    NodeId output_node = -1;  // (K,1) activation probabilities, or (NK,2) precoder
    Tensor output;            // value copy; precoding output reshaped to {N,K,2}
    NodeId raw_node = -1;     // action values before the output head (logits /
    Tensor raw;               // unscaled precoder); scale-stable for collision checks
};

/// Runs the configured GNN over the graph on the given tape. Scheduling and
/// power outputs pass through a sigmoid head; precoding outputs are scaled so
/// Tr(V V^H) = p_max before being returned.
GnnForward gnn_forward(Tape& tape, const GnnConfig& config,
                       const std::map<std::string, NodeId>& params, const Graph& graph,
                       double p_max = 1.0);

/// Value-only forward on a scratch tape.
Tensor gnn_forward_value(const GnnModel& model, const Graph& graph, double p_max = 1.0);

/// Pre-head action values (no sigmoid squashing / trace scaling).
Tensor gnn_forward_raw(const GnnModel& model, const Graph& graph);

// Per-variant entry points (thin wrappers with family/kind checks).
Tensor forward_vertex_ls_het(const GnnModel& model, const Graph& graph);
Tensor forward_vertex_ls_undir(const GnnModel& model, const Graph& graph);
Tensor forward_edge_ls(const GnnModel& model, const Graph& graph);
Tensor forward_vertex_p_het(const GnnModel& model, const Graph& graph, double p_max = 1.0);
Tensor forward_edge_p_het(const GnnModel& model, const Graph& graph, double p_max = 1.0);

struct DimCheck {
    int layer = 0;
    std::string condition;
    double lhs = 0.0, rhs = 0.0;
    bool pass = false;
    double margin = 0.0;  // lhs - rhs
};

struct DimReport {
    bool pass = false;
    std::vector<DimCheck> checks;
};

/// Evaluates the per-layer width conditions a precoding GNN needs so the
/// channel matrix is not compressed: vertex variants need
/// N*M_A + K*M_U >= 2NK for both representation and aggregation widths;
/// edge variants need M_E >= 2 (interior layers), M_Eq >= 2, and a final
/// action width of exactly 2.
DimReport validate_dims(const GnnConfig& config, int N, int K);

} // namespace wgnn

#endif
