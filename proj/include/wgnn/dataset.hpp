#ifndef WGNN_DATASET_HPP
#define WGNN_DATASET_HPP

#include <string>
#include <vector>

#include <json.hpp>

#include "wgnn/channel.hpp"

namespace wgnn {

enum class Problem { ls, pc, pr };

Problem problem_from(const std::string& s);
const char* problem_str(Problem p);

/// Sample container for one problem: channel matrices plus the seeds that
/// produced them and the dataset-level feature-normalization statistics.
struct Dataset {
    Problem problem = Problem::ls;
    ScenarioParams params;  // ls/pc geometry; tx power also feeds the rate evaluators
    int N = 0;              // antennas (pr)
    int K_pr = 0;           // users (pr)
    double snr_db = 10.0;   // pr operating point
    std::uint64_t base_seed = 0;
    std::vector<std::uint64_t> seeds;
    std::vector<ChannelMatrix> alphas;        // ls/pc samples
    std::vector<ComplexChannelMatrix> Hs;     // pr samples

    // Feature conditioning, computed at generation time. Scheduling/power
    // gains are fed to GNNs in decibel form standardized to zero mean and
    // unit variance; Rayleigh precoding channels pass through unchanged.
    std::string norm_mode = "db_standardize";
    double norm_mean = 0.0;
    double norm_std = 1.0;

    int size() const {
        return static_cast<int>(problem == Problem::pr ? Hs.size() : alphas.size());
    }
    int K() const { return problem == Problem::pr ? K_pr : params.K; }

    /// Feature view of sample idx (normalized; rates always use the raw sample).
    ChannelMatrix features_ls(int idx) const;
    ComplexChannelMatrix features_pr(int idx) const;
};

Dataset generate_dataset_ls(Problem problem, const ScenarioParams& params, int n_samples,
                            std::uint64_t seed);
Dataset generate_dataset_pr(int N, int K, double snr_db, int n_samples, std::uint64_t seed);

nlohmann::json scenario_params_to_json(const ScenarioParams& p);
ScenarioParams scenario_params_from_json(const nlohmann::json& j);

/// Versioned binary container; round-trips bit-exactly.
void save_dataset(const std::string& path, const Dataset& ds);
Dataset load_dataset(const std::string& path);

} // namespace wgnn

#endif
