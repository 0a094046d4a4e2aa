#include "wgnn/channel.hpp"

#include <cmath>

#include "wgnn/rng.hpp"

namespace wgnn {

void ScenarioParams::validate() const {
    if (K < 1) throw ConfigError("ScenarioParams: K must be >= 1");
    if (!(d2d_min < d2d_max)) throw ConfigError("ScenarioParams: d2d_min must be < d2d_max");
    if (d2d_min <= 0.0 || area_side <= 0.0 || bandwidth <= 0.0 || carrier <= 0.0) {
        throw ConfigError("ScenarioParams: physical quantities must be positive");
    }
    if (pathloss_exp <= 0.0) throw ConfigError("ScenarioParams: pathloss_exp must be positive");
    if (shadowing_std_db < 0.0) throw ConfigError("ScenarioParams: shadowing std must be >= 0");
}

double ScenarioParams::tx_power_watts() const { return dbm_to_watts(tx_power_dbm); }

double D2dScenario::distance(int tx, int rx) const {
    const double dx = tx_x[tx] - rx_x[rx];
    const double dy = tx_y[tx] - rx_y[rx];
    return std::sqrt(dx * dx + dy * dy);
}

void ChannelMatrix::validate() const {
    if (static_cast<std::size_t>(K) * K != gains.size()) {
        throw DimensionError("ChannelMatrix: storage does not match K");
    }
    for (double g : gains) {
        if (!(g > 0.0) || !std::isfinite(g)) {
            throw NumericError("ChannelMatrix: gains must be positive and finite");
        }
    }
}

void ComplexChannelMatrix::validate() const {
    const std::size_t n = static_cast<std::size_t>(N) * K;
    if (re.size() != n || im.size() != n) {
        throw DimensionError("ComplexChannelMatrix: storage does not match N x K");
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (!std::isfinite(re[i]) || !std::isfinite(im[i])) {
            throw NumericError("ComplexChannelMatrix: entries must be finite");
        }
    }
}

double dbm_to_watts(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }

double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

double noise_power(const ScenarioParams& params) {
    const double total_dbm = params.noise_psd + 10.0 * std::log10(params.bandwidth);
    return dbm_to_watts(total_dbm);
}

double pathloss_ref_db(double carrier_hz) {
    // Free-space loss at d0 = 1 m: 20 log10(4 pi d0 f / c).
    const double c = 299792458.0;
    return 20.0 * std::log10(4.0 * M_PI * carrier_hz / c);
}

double path_gain(double distance_m, const ScenarioParams& params) {
    const double pl_db = pathloss_ref_db(params.carrier) +
                         10.0 * params.pathloss_exp * std::log10(distance_m) -
                         2.0 * params.antenna_gain;
    return db_to_linear(-pl_db);
}

D2dScenario gen_d2d_scenario(const ScenarioParams& params, std::uint64_t seed) {
    params.validate();
    Rng rng(Rng::derive(seed, 0x5ce7a110));
    D2dScenario s;
    s.tx_x.resize(params.K);
    s.tx_y.resize(params.K);
    s.rx_x.resize(params.K);
    s.rx_y.resize(params.K);
    for (int i = 0; i < params.K; ++i) {
        s.tx_x[i] = rng.uniform(0.0, params.area_side);
        s.tx_y[i] = rng.uniform(0.0, params.area_side);
        const double d = rng.uniform(params.d2d_min, params.d2d_max);
        const double phi = rng.uniform(0.0, 2.0 * M_PI);
        s.rx_x[i] = s.tx_x[i] + d * std::cos(phi);
        s.rx_y[i] = s.tx_y[i] + d * std::sin(phi);
    }
    return s;
}

ChannelMatrix gen_channel_matrix(const D2dScenario& scenario, const ScenarioParams& params,
                                 std::uint64_t seed) {
    params.validate();
    const int K = scenario.K();
    if (K < 1) throw ConfigError("gen_channel_matrix: empty scenario");
    Rng rng(Rng::derive(seed, 0xc4a1));
    ChannelMatrix alpha(K);
    for (int i = 0; i < K; ++i) {
        for (int j = 0; j < K; ++j) {
            const double d = std::max(scenario.distance(i, j), 1.0);
            double g = path_gain(d, params);
            if (params.shadowing_std_db > 0.0) {
                g *= db_to_linear(rng.normal(0.0, params.shadowing_std_db));
            }
            if (params.fading == FadingModel::rayleigh) {
                const double hr = rng.normal(0.0, std::sqrt(0.5));
                const double hi = rng.normal(0.0, std::sqrt(0.5));
                g *= hr * hr + hi * hi;
            }
            // |h|^2 can underflow to exactly 0 with negligible probability;
            // keep the positivity invariant.
            alpha.at(i, j) = std::max(g, 1e-300);
        }
    }
    alpha.validate();
    return alpha;
}

ComplexChannelMatrix gen_rayleigh_H(int N, int K, std::uint64_t seed) {
    if (N < 1 || K < 1) throw ConfigError("gen_rayleigh_H: N and K must be >= 1");
    Rng rng(Rng::derive(seed, 0x4a71e16));
    ComplexChannelMatrix H(N, K);
    const double s = std::sqrt(0.5);
    for (int n = 0; n < N; ++n) {
        for (int k = 0; k < K; ++k) {
            H.real(n, k) = rng.normal(0.0, s);
            H.imag(n, k) = rng.normal(0.0, s);
        }
    }
    return H;
}

} // namespace wgnn
