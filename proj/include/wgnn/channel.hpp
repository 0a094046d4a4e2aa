#ifndef WGNN_CHANNEL_HPP
#define WGNN_CHANNEL_HPP

#include <cstdint>
#include <vector>

#include "wgnn/errors.hpp"

namespace wgnn {

enum class FadingModel { rayleigh, unit };

/// D2D scenario parameters. Defaults follow the simulation setup
/// (500 m square, D2D distance 2-65 m, 5 MHz at 2.4 GHz, -169 dBm/Hz noise,
/// 1.5 m antennas with 2.5 dBi gain, 40 dBm transmit power).
struct ScenarioParams {
    int K = 50;                      // number of D2D pairs
    double area_side = 500.0;        // m
    double d2d_min = 2.0;            // m
    double d2d_max = 65.0;           // m
    double bandwidth = 5e6;          // Hz
    double carrier = 2.4e9;          // Hz
    double noise_psd = -169.0;       // dBm/Hz
    double antenna_height = 1.5;     // m
    double antenna_gain = 2.5;       // dBi per antenna
    double tx_power_dbm = 40.0;      // dBm

    // Channel model knobs. The log-distance exponent is configuration, not a
    // ground-truth constant; shadowing may be disabled for degenerate tests.
    double pathloss_exp = 3.0;
    double shadowing_std_db = 8.0;
    FadingModel fading = FadingModel::rayleigh;

    void validate() const;
    double tx_power_watts() const;
};

struct D2dScenario {
    std::vector<double> tx_x, tx_y, rx_x, rx_y;
    int K() const { return static_cast<int>(tx_x.size()); }
    double distance(int tx, int rx) const;
};

/// Real K x K composite channel gain matrix, linear scale.
/// Row i = transmitter i, column j = receiver j.
struct ChannelMatrix {
    int K = 0;
    std::vector<double> gains;  // row-major K x K

    ChannelMatrix() = default;
    explicit ChannelMatrix(int k) : K(k), gains(static_cast<std::size_t>(k) * k, 0.0) {}

    double& at(int i, int j) { return gains[static_cast<std::size_t>(i) * K + j]; }
    double at(int i, int j) const { return gains[static_cast<std::size_t>(i) * K + j]; }

    /// All gains strictly positive and finite.
    void validate() const;
};

/// Complex N x K channel matrix stored as separate real/imaginary parts.
struct ComplexChannelMatrix {
    int N = 0, K = 0;
    std::vector<double> re, im;  // row-major N x K each

    ComplexChannelMatrix() = default;
    ComplexChannelMatrix(int n, int k)
        : N(n), K(k), re(static_cast<std::size_t>(n) * k, 0.0), im(re) {}

    double& real(int n, int k) { return re[static_cast<std::size_t>(n) * K + k]; }
    double real(int n, int k) const { return re[static_cast<std::size_t>(n) * K + k]; }
    double& imag(int n, int k) { return im[static_cast<std::size_t>(n) * K + k]; }
    double imag(int n, int k) const { return im[static_cast<std::size_t>(n) * K + k]; }

    void validate() const;
};

/// Drops K transmitters uniformly in the square; each receiver at uniform
/// distance in [d2d_min, d2d_max] and uniform angle from its transmitter.
D2dScenario gen_d2d_scenario(const ScenarioParams& params, std::uint64_t seed);

/// Composite gains: log-distance path loss x log-normal shadowing x |Rayleigh|^2.
/// PL(dB) = PL(1 m, free space at carrier) + 10 n log10(d) - 2 G_ant.
ChannelMatrix gen_channel_matrix(const D2dScenario& scenario, const ScenarioParams& params,
                                 std::uint64_t seed);

/// i.i.d. circularly-symmetric complex Gaussian entries, unit variance.
ComplexChannelMatrix gen_rayleigh_H(int N, int K, std::uint64_t seed);

/// Noise power in watts from the spectral density and bandwidth.
double noise_power(const ScenarioParams& params);

/// Free-space path loss at 1 m for the given carrier, in dB.
double pathloss_ref_db(double carrier_hz);

/// Linear-scale path gain (inverse path loss) including antenna gains.
double path_gain(double distance_m, const ScenarioParams& params);

double dbm_to_watts(double dbm);
double db_to_linear(double db);

} // namespace wgnn

#endif
