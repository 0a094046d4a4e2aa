#ifndef WGNN_HARNESS_HPP
#define WGNN_HARNESS_HPP

#include <string>
#include <vector>

#include "wgnn/dataset.hpp"
#include "wgnn/gnn.hpp"
#include "wgnn/tape.hpp"

namespace wgnn {

/// Unsupervised loss weights: negative mean sum rate plus activation
/// penalties w1*sum(log y) + w2*sum(log(1-y)) keeping scheduling outputs away
/// from all-off and all-on.
struct LossConfig {
    double w1 = 0.0;
    double w2 = 0.0;
    Problem problem = Problem::ls;

    static LossConfig defaults(Problem p) {
        LossConfig c;
        c.problem = p;
        if (p == Problem::ls) {
            c.w1 = 1e-1;
            c.w2 = 1e-4;
        }
        return c;
    }
    void validate() const {
        if (w1 < 0.0 || w2 < 0.0) throw ConfigError("LossConfig: weights must be >= 0");
    }
};

/// Differentiable per-sample loss contribution for a scheduling or power
/// output y in (0,1)^K. Training rates use the soft y in place of the hard
/// decision; power control substitutes p = p_max * y.
NodeId sample_loss_ls(Tape& tape, NodeId y, const ChannelMatrix& alpha_raw,
                      const LossConfig& cfg, double sigma2, double p_max);

/// Negative sum rate of a trace-scaled precoder node (NK, 2).
NodeId sample_loss_pr(Tape& tape, NodeId v, const ComplexChannelMatrix& H_raw, double sigma2);

/// Batch loss: mean of per-sample losses (already negated inside).
struct BatchLoss {
    NodeId node = -1;
    double value = 0.0;
    long log_clamps = 0;
};

/// Mean loss over a batch of forward outputs and their raw channel samples.
BatchLoss batch_loss(Tape& tape, const std::vector<NodeId>& outputs,
                     const Dataset& ds, const std::vector<int>& sample_ids,
                     const LossConfig& cfg, double sigma2, double p_max);

enum class BaselineTag { exhaustive, fp_ls, wmmse_pc, wmmse_precoding };
BaselineTag baseline_from(const std::string& s);
const char* baseline_str(BaselineTag t);

struct TrainConfig {
    int n_samples = 500;  // training slice of the dataset
    int n_val = 100;      // validation slice immediately after
    int batch_size = 64;
    int epochs = 200;
    double learning_rate = 0.01;
    std::uint64_t seed = 1;
    int patience = 20;  // early stop in validation evals without improvement
    int eval_every = 1;
    // Input normalization mode; "dataset" adopts the mode stored with the
    // dataset (models must be evaluated under the mode they trained with).
    std::string normalization = "dataset";
    GnnConfig gnn;
    LossConfig loss;
    std::string baseline = "exhaustive";  // validation baseline

    void validate() const;
};

struct EpochStats {
    int epoch = 0;
    double train_loss = 0.0;
    double val_ratio = 0.0;  // NaN when not evaluated this epoch
};

struct TrainResult {
    GnnModel model;  // weights at the best validation ratio
    std::vector<EpochStats> history;
    double best_val_ratio = 0.0;
    int epochs_run = 0;
};

/// warm_start, when given, seeds the optimizer from existing weights instead
/// of a fresh initialization (used for staged learning-rate schedules).
TrainResult train(const TrainConfig& cfg, const Dataset& ds,
                  const GnnModel* warm_start = nullptr);

struct EvalResult {
    double sum_rate_ratio = 0.0;  // mean learned rate / mean baseline rate
    std::vector<double> rates_learned;
    std::vector<double> rates_baseline;
    std::string baseline;
    int n_runs = 0;
};

/// Hard decisions applied (0.5 threshold for scheduling, p_max*y for power;
/// precoders already satisfy the trace constraint by construction).
EvalResult evaluate(const GnnModel& model, const Dataset& ds, int begin, int end,
                    BaselineTag baseline);

/// Per-sample baseline rates over [begin, end).
std::vector<double> baseline_rates(const Dataset& ds, int begin, int end, BaselineTag tag);

/// Per-sample learned-policy rates over [begin, end).
std::vector<double> model_rates(const GnnModel& model, const Dataset& ds, int begin, int end);

struct ExperimentOutcome {
    int cells_run = 0;
    int cells_skipped = 0;
    std::string results_csv;
    std::string summary_csv;
};

/// Executes a declared grid (configs x seeds) described by a JSON spec file,
/// writing one CSV row per (cell, metric), checkpoints, and a summary table.
/// Completed cells are recorded in an on-disk manifest and skipped on rerun.
ExperimentOutcome run_experiment(const std::string& spec_path, const std::string& out_dir);

} // namespace wgnn

#endif
