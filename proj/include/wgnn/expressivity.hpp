#ifndef WGNN_EXPRESSIVITY_HPP
#define WGNN_EXPRESSIVITY_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "wgnn/baselines.hpp"
#include "wgnn/channel.hpp"
#include "wgnn/gnn.hpp"

namespace wgnn {

/// Channel-matrix pair constrained so that diagonals match and off-diagonal
/// row/column sums match; a scheduling GNN that only sees those aggregates
/// cannot tell the two apart.
struct PairConstraintLS {
    ChannelMatrix alpha1, alpha2;
};

/// Complex pair with matching full row and column sums (independently for the
/// real and imaginary parts).
struct PairConstraintP {
    ComplexChannelMatrix H1, H2;
};

/// How the second matrix is drawn from the constraint system's solution set:
/// absolute = null-space step of size delta x median off-diagonal magnitude;
/// relative = each entry perturbed by roughly delta x its own magnitude
/// (the constraint system is solved in entry-scaled variables);
/// polytope = near-uniform sample of the positive solution set by a
/// hit-and-run walk along null-space chords (delta is ignored).
enum class PairScaleMode { absolute, relative, polytope };

struct PairGenOptions {
    double delta = 0.3;
    PairScaleMode mode = PairScaleMode::absolute;
    int max_attempts = 64;
};

/// Draws a null-space perturbation of the constraint system and applies it to
/// the base matrix, rescaling to keep all gains positive.
/// K >= 3 required (the system has no free directions below that).
PairConstraintLS gen_pair_ls(const ChannelMatrix& alpha, double delta, std::uint64_t seed,
                             PairScaleMode mode = PairScaleMode::absolute);

/// N, K >= 2 required.
PairConstraintP gen_pair_p(const ComplexChannelMatrix& H, double delta, std::uint64_t seed);

struct PairVerification {
    bool ok = false;
    double max_residual = 0.0;
    bool degenerate = false;  // matrices are equal
};

/// Checks every constraint equality to 1e-10 absolute.
PairVerification verify_pair(const PairConstraintLS& pair);
PairVerification verify_pair(const PairConstraintP& pair);

struct CollisionResult {
    bool collide = false;
    double max_gap = 0.0;
};

/// Runs the model on both halves of the pair and reports the max-norm output
/// gap; collide = (gap <= tol). Pairs are fed to the GNN unnormalized.
CollisionResult collision_check(const GnnModel& model, const PairConstraintLS& pair, double tol);
CollisionResult collision_check(const GnnModel& model, const PairConstraintP& pair, double tol,
                                double p_max = 1.0);

struct ProbeConfig {
    int n_trials = 500;
    double equality_threshold = 1e-3;                    // power control
    std::vector<double> epsilon_grid = {0.01, 0.05, 0.1, 0.2};  // precoding
    double delta = 0.3;
    // Probes draw the second matrix uniformly from the solution polytope, the
    // operational reading of "generated by solving the linear equations".
    PairScaleMode delta_mode = PairScaleMode::polytope;
    int solver_iters = 100;
};

struct ProbePoint {
    std::string problem;  // "ls", "pc", "pr"
    int K = 0;
    int N = 0;               // pr only
    double power_or_snr = 0.0;  // transmit power dBm, or SNR dB for pr
    double epsilon = 0.0;    // pr only
    int n_trials = 0;
    int n_equal = 0;
    double probability = 0.0;
    double ci_lo = 0.0, ci_hi = 0.0;  // Wilson 95%
};

/// Solution-collision probability estimate for one sweep point: constrained
/// pairs are generated, both instances are solved with the problem's oracle
/// (exhaustive search for scheduling, WMMSE otherwise), and equal solutions
/// are counted.
struct ProbeReport {
    std::string problem;
    std::vector<ProbePoint> points;
    std::vector<double> pair_gaps;  // per-trial solution distance (0/1 for ls)
};

/// Link scheduling: exact schedule match; K <= 12 (exhaustive guard).
ProbeReport prob_equal_ls(int K, double power_dbm, const ScenarioParams& base,
                          const ProbeConfig& cfg, std::uint64_t seed);

/// Power control: |p1 - p2|_max below the equality threshold.
ProbeReport prob_equal_pc(int K, double power_dbm, const ScenarioParams& base,
                          const ProbeConfig& cfg, std::uint64_t seed);

/// Precoding: one point per epsilon in the grid.
ProbeReport prob_equal_pr(int N, int K, double snr_db, const ProbeConfig& cfg,
                          std::uint64_t seed);

/// Dispatch on problem tag ("ls", "pc", "pr").
ProbeReport prob_equal_solutions(const std::string& problem, int size_k, int size_n,
                                 double power_or_snr, const ScenarioParams& base,
                                 const ProbeConfig& cfg, std::uint64_t seed);

/// CSV rows: problem,K,N,power_or_snr,epsilon,n_trials,n_equal,probability,ci_lo,ci_hi
std::string probe_report_csv_header();
std::string probe_report_to_csv(const ProbeReport& report);

/// Wilson 95% score interval for a binomial proportion.
void wilson_interval(int successes, int trials, double& lo, double& hi);

} // namespace wgnn

#endif
