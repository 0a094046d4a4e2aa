#ifndef WGNN_BASELINES_HPP
#define WGNN_BASELINES_HPP

#include <vector>

#include "wgnn/channel.hpp"

namespace wgnn {

/// Binary link-activation vector.
struct ScheduleVector {
    std::vector<int> x;  // entries in {0, 1}
    void validate() const;
};

/// Per-link transmit powers with a box constraint.
struct PowerVector {
    std::vector<double> p;
    double p_max = 0.0;
    void validate() const;
};

/// N x K complex precoder with a total power (trace) constraint.
struct PrecodingMatrix {
    ComplexChannelMatrix V;  // reuses the complex matrix storage
    double p_max = 0.0;
    double trace() const;
    void validate() const;  // Tr(V V^H) <= p_max + 1e-9
};

/// Sum rate of active links (bits/s/Hz):
/// sum_k log2(1 + x_k p_k a_kk / (sum_{j != k} x_j p_j a_jk + sigma2)).
double sumrate_ls(const std::vector<int>& x, const ChannelMatrix& alpha,
                  const std::vector<double>& p, double sigma2);

/// Same objective with x == 1 and continuous powers.
double sumrate_pc(const std::vector<double>& p, const ChannelMatrix& alpha, double sigma2);

/// Multi-user precoding sum rate with SINR |h_k^H v_k|^2 / (sum_{j!=k} |h_k^H v_j|^2 + sigma2).
double sumrate_pr(const ComplexChannelMatrix& V, const ComplexChannelMatrix& H, double sigma2);

struct ExhaustiveResult {
    ScheduleVector schedule;
    double rate = 0.0;
};

/// Optimal schedule by enumerating all 2^K activations (K <= 20 guard).
/// Ties break toward more active links, then the lexicographically smallest x.
ExhaustiveResult exhaustive_ls(const ChannelMatrix& alpha, const std::vector<double>& p,
                               double sigma2);

/// Fractional-programming link scheduling: closed-form updates of the SINR
/// and quadratic-transform auxiliaries over soft activations in [0, 1],
/// hard-thresholded at 0.5 on exit.
ScheduleVector fp_ls(const ChannelMatrix& alpha, const std::vector<double>& p, double sigma2,
                     int iters = 100);

struct WmmseOptions {
    int iters = 100;
    double rel_tol = 1e-6;  // early stop on relative objective change
};

struct WmmsePcResult {
    PowerVector powers;
    std::vector<double> objective_trace;  // sum rate after each iteration
};

/// Scalar WMMSE block updates (receiver gain, MSE weight, power with box
/// projection onto [0, p_max]).
WmmsePcResult wmmse_pc(const ChannelMatrix& alpha, double p_max, double sigma2,
                       const WmmseOptions& opts = {});

struct WmmsePrecodingResult {
    PrecodingMatrix precoder;
    std::vector<double> objective_trace;
};

/// Multi-antenna WMMSE with a power-constraint multiplier found by bisection.
/// Singular intermediate systems are regularized with a 1e-12 ridge.
WmmsePrecodingResult wmmse_precoding(const ComplexChannelMatrix& H, double p_max, double sigma2,
                                     const WmmseOptions& opts = {});

} // namespace wgnn

#endif
