#include "wgnn/expressivity.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <sstream>

#include "wgnn/graphs.hpp"
#include "wgnn/rng.hpp"

namespace wgnn {

namespace {

int off_index(int K, int i, int j) { return i * (K - 1) + (j < i ? j : j - 1); }

double median_of(std::vector<double> v) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return (n % 2 == 1) ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

/// Orthonormal basis of the null space of A via SVD.
Eigen::MatrixXd null_basis(const Eigen::MatrixXd& A) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    const double tol = 1e-12 * (sv.size() > 0 ? sv(0) : 1.0);
    int rank = 0;
    for (int i = 0; i < sv.size(); ++i) {
        if (sv(i) > tol) ++rank;
    }
    return svd.matrixV().rightCols(A.cols() - rank);
}

/// Constraint matrix of the zero off-diagonal row/column sum system, in the
/// diagonal-free variable layout; weights allow entry-scaled variables.
Eigen::MatrixXd ls_constraint_matrix(int K, const std::vector<double>* weights) {
    const int m = K * (K - 1);
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(2 * K, m);
    for (int i = 0; i < K; ++i) {
        for (int j = 0; j < K; ++j) {
            if (i == j) continue;
            const int v = off_index(K, i, j);
            const double w = weights ? (*weights)[v] : 1.0;
            A(i, v) = w;      // row sum of row i
            A(K + j, v) = w;  // column sum of column j
        }
    }
    return A;
}

Eigen::MatrixXd p_constraint_matrix(int N, int K) {
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(N + K, N * K);
    for (int n = 0; n < N; ++n) {
        for (int k = 0; k < K; ++k) {
            A(n, n * K + k) = 1.0;      // row sum over users
            A(N + k, n * K + k) = 1.0;  // column sum over antennas
        }
    }
    return A;
}

double rms(const Eigen::VectorXd& v) {
    return v.size() > 0 ? std::sqrt(v.squaredNorm() / v.size()) : 0.0;
}

/// Hit-and-run walk over {x > 0 : A x = A x0}: each step moves along a random
/// null-space chord, uniformly within the positive segment. Steps scale with
/// the null-space dimension so higher-dimensional polytopes still mix.
std::vector<double> polytope_walk(const std::vector<double>& x0, const Eigen::MatrixXd& basis,
                                  Rng& rng) {
    const int m = static_cast<int>(x0.size());
    Eigen::VectorXd x(m);
    for (int v = 0; v < m; ++v) x(v) = x0[v];
    const int steps = 30 * static_cast<int>(basis.cols());
    for (int s = 0; s < steps; ++s) {
        Eigen::VectorXd c(basis.cols());
        for (int i = 0; i < c.size(); ++i) c(i) = rng.normal();
        Eigen::VectorXd u = basis * c;
        const double un = u.norm();
        if (un < 1e-300) continue;
        u /= un;
        double tmin = -1e300, tmax = 1e300;
        for (int v = 0; v < m; ++v) {
            if (u(v) > 1e-300) {
                tmin = std::max(tmin, -x(v) / u(v));
            } else if (u(v) < -1e-300) {
                tmax = std::min(tmax, x(v) / (-u(v)));
            }
        }
        if (!(tmin < tmax) || !std::isfinite(tmin) || !std::isfinite(tmax)) continue;
        // a slight pull toward the current point keeps a boundary margin
        const double t = (tmin + (tmax - tmin) * rng.uniform()) * 0.98;
        x += t * u;
    }
    std::vector<double> out(m);
    for (int v = 0; v < m; ++v) out[v] = x(v);
    return out;
}

} // namespace

PairConstraintLS gen_pair_ls(const ChannelMatrix& alpha, double delta, std::uint64_t seed,
                             PairScaleMode mode) {
    const int K = alpha.K;
    if (K < 3) throw SizeError("gen_pair_ls requires K >= 3");
    if (delta <= 0.0) throw ContractError("gen_pair_ls: delta must be > 0");
    alpha.validate();

    const int m = K * (K - 1);
    std::vector<double> offdiag(m);
    for (int i = 0; i < K; ++i)
        for (int j = 0; j < K; ++j)
            if (i != j) offdiag[off_index(K, i, j)] = alpha.at(i, j);

    const Eigen::MatrixXd basis =
        null_basis(ls_constraint_matrix(K, mode == PairScaleMode::relative ? &offdiag : nullptr));
    if (basis.cols() == 0) throw SizeError("gen_pair_ls: constraint system has no free directions");

    Rng rng(Rng::derive(seed, 0x9a125));

    if (mode == PairScaleMode::polytope) {
        for (int attempt = 0; attempt < 8; ++attempt) {
            const std::vector<double> x = polytope_walk(offdiag, basis, rng);
            ChannelMatrix alpha2 = alpha;
            for (int i = 0; i < K; ++i)
                for (int j = 0; j < K; ++j)
                    if (i != j) alpha2.at(i, j) = x[off_index(K, i, j)];
            PairConstraintLS pair{alpha, std::move(alpha2)};
            const PairVerification v = verify_pair(pair);
            if (v.ok && !v.degenerate) return pair;
        }
        throw GenerationError("gen_pair_ls: polytope walk failed to leave the base point");
    }

    const double target =
        (mode == PairScaleMode::absolute) ? delta * median_of(offdiag) : delta;

    // Prefer draws that keep every gain positive at full scale; only fall
    // back to shrinking the perturbation when no such draw shows up.
    ChannelMatrix best = alpha;
    double best_scale = -1.0;
    for (int attempt = 0; attempt < 64; ++attempt) {
        Eigen::VectorXd c(basis.cols());
        for (int i = 0; i < c.size(); ++i) c(i) = rng.normal();
        Eigen::VectorXd w = basis * c;
        const double r = rms(w);
        if (r < 1e-300) continue;
        w *= target / r;

        std::vector<double> perturb(m);
        for (int v = 0; v < m; ++v) {
            perturb[v] = (mode == PairScaleMode::relative) ? offdiag[v] * w(v) : w(v);
        }
        double scale = 1.0;
        for (int v = 0; v < m; ++v) {
            if (offdiag[v] + perturb[v] <= 0.0) {
                scale = std::min(scale, 0.9 * offdiag[v] / std::abs(perturb[v]));
            }
        }
        if (scale < best_scale || scale <= 1e-13) continue;
        ChannelMatrix alpha2 = alpha;
        double max_abs = 0.0;
        for (int i = 0; i < K; ++i)
            for (int j = 0; j < K; ++j)
                if (i != j) {
                    const double d = scale * perturb[off_index(K, i, j)];
                    alpha2.at(i, j) += d;
                    max_abs = std::max(max_abs, std::abs(d));
                }
        if (max_abs <= 1e-13 * median_of(offdiag)) continue;  // degenerate draw
        const PairVerification v = verify_pair(PairConstraintLS{alpha, alpha2});
        if (!v.ok || v.degenerate) continue;
        best = std::move(alpha2);
        best_scale = scale;
        if (scale == 1.0) break;
    }
    if (best_scale > 0.0) return {alpha, std::move(best)};
    throw GenerationError("gen_pair_ls: no valid perturbation within bounded retries");
}

PairConstraintP gen_pair_p(const ComplexChannelMatrix& H, double delta, std::uint64_t seed) {
    const int N = H.N, K = H.K;
    if (N < 2 || K < 2) throw SizeError("gen_pair_p requires N, K >= 2");
    if (delta <= 0.0) throw ContractError("gen_pair_p: delta must be > 0");
    H.validate();

    const Eigen::MatrixXd basis = null_basis(p_constraint_matrix(N, K));
    if (basis.cols() == 0) throw SizeError("gen_pair_p: constraint system has no free directions");

    std::vector<double> mags(static_cast<std::size_t>(N) * K);
    for (std::size_t i = 0; i < mags.size(); ++i) {
        mags[i] = std::hypot(H.re[i], H.im[i]);
    }
    const double target = delta * median_of(mags);

    Rng rng(Rng::derive(seed, 0x9a126));
    for (int attempt = 0; attempt < 64; ++attempt) {
        Eigen::VectorXd cr(basis.cols()), ci(basis.cols());
        for (int i = 0; i < cr.size(); ++i) {
            cr(i) = rng.normal();
            ci(i) = rng.normal();
        }
        Eigen::VectorXd dre = basis * cr;
        Eigen::VectorXd dim = basis * ci;
        double r = 0.0;
        for (int v = 0; v < dre.size(); ++v) r += dre(v) * dre(v) + dim(v) * dim(v);
        r = std::sqrt(r / dre.size());
        if (r < 1e-300) continue;
        dre *= target / r;
        dim *= target / r;

        ComplexChannelMatrix H2 = H;
        for (int v = 0; v < dre.size(); ++v) {
            H2.re[v] += dre(v);
            H2.im[v] += dim(v);
        }
        PairConstraintP pair{H, H2};
        const PairVerification ver = verify_pair(pair);
        if (ver.ok && !ver.degenerate) return pair;
    }
    throw GenerationError("gen_pair_p: no valid perturbation within bounded retries");
}

PairVerification verify_pair(const PairConstraintLS& pair) {
    PairVerification out;
    const int K = pair.alpha1.K;
    if (pair.alpha2.K != K) {
        out.ok = false;
        return out;
    }
    double resid = 0.0;
    for (int i = 0; i < K; ++i) {
        resid = std::max(resid, std::abs(pair.alpha1.at(i, i) - pair.alpha2.at(i, i)));
        double row1 = 0.0, row2 = 0.0, col1 = 0.0, col2 = 0.0;
        for (int j = 0; j < K; ++j) {
            if (j == i) continue;
            row1 += pair.alpha1.at(i, j);
            row2 += pair.alpha2.at(i, j);
            col1 += pair.alpha1.at(j, i);
            col2 += pair.alpha2.at(j, i);
        }
        resid = std::max(resid, std::abs(row1 - row2));
        resid = std::max(resid, std::abs(col1 - col2));
    }
    bool positive = true;
    for (double g : pair.alpha2.gains) positive = positive && g > 0.0;
    out.max_residual = resid;
    out.degenerate = pair.alpha1.gains == pair.alpha2.gains;
    out.ok = positive && resid <= 1e-10;
    return out;
}

PairVerification verify_pair(const PairConstraintP& pair) {
    PairVerification out;
    const int N = pair.H1.N, K = pair.H1.K;
    if (pair.H2.N != N || pair.H2.K != K) {
        out.ok = false;
        return out;
    }
    double resid = 0.0;
    for (int n = 0; n < N; ++n) {
        double r1 = 0.0, r2 = 0.0, i1 = 0.0, i2 = 0.0;
        for (int k = 0; k < K; ++k) {
            r1 += pair.H1.real(n, k);
            r2 += pair.H2.real(n, k);
            i1 += pair.H1.imag(n, k);
            i2 += pair.H2.imag(n, k);
        }
        resid = std::max({resid, std::abs(r1 - r2), std::abs(i1 - i2)});
    }
    for (int k = 0; k < K; ++k) {
        double r1 = 0.0, r2 = 0.0, i1 = 0.0, i2 = 0.0;
        for (int n = 0; n < N; ++n) {
            r1 += pair.H1.real(n, k);
            r2 += pair.H2.real(n, k);
            i1 += pair.H1.imag(n, k);
            i2 += pair.H2.imag(n, k);
        }
        resid = std::max({resid, std::abs(r1 - r2), std::abs(i1 - i2)});
    }
    out.max_residual = resid;
    out.degenerate = pair.H1.re == pair.H2.re && pair.H1.im == pair.H2.im;
    out.ok = resid <= 1e-10;
    return out;
}

namespace {

double max_gap(const Tensor& a, const Tensor& b) {
    double gap = 0.0;
    for (std::size_t i = 0; i < a.numel(); ++i) gap = std::max(gap, std::abs(a[i] - b[i]));
    return gap;
}

Graph build_for_model(const GnnConfig& c, const ChannelMatrix& alpha) {
    switch (c.graph_kind) {
        case GraphKind::ls_het: return build_g_ls_het(alpha, c.family);
        case GraphKind::ls_undir: return build_g_ls_undir(alpha, c.family);
        default: throw ConfigError("scheduling pair fed to a precoding model");
    }
}

} // namespace

// Collisions are measured on the pre-head action values: the sigmoid head is
// a fixed bijection, so it preserves exact collisions, but its saturation
// would shrink genuine output gaps below any fixed threshold for weight draws
// that land far from the origin.
CollisionResult collision_check(const GnnModel& model, const PairConstraintLS& pair, double tol) {
    if (model.config.is_precoding()) {
        throw ConfigError("collision_check: model kind does not match the pair's problem");
    }
    const Tensor out1 = gnn_forward_raw(model, build_for_model(model.config, pair.alpha1));
    const Tensor out2 = gnn_forward_raw(model, build_for_model(model.config, pair.alpha2));
    const double gap = max_gap(out1, out2);
    return {gap <= tol, gap};
}

CollisionResult collision_check(const GnnModel& model, const PairConstraintP& pair, double tol,
                                double /*p_max*/) {
    if (!model.config.is_precoding()) {
        throw ConfigError("collision_check: model kind does not match the pair's problem");
    }
    const Tensor out1 = gnn_forward_raw(model, build_g_p_het(pair.H1));
    const Tensor out2 = gnn_forward_raw(model, build_g_p_het(pair.H2));
    const double gap = max_gap(out1, out2);
    return {gap <= tol, gap};
}

void wilson_interval(int successes, int trials, double& lo, double& hi) {
    if (trials <= 0) {
        lo = 0.0;
        hi = 1.0;
        return;
    }
    const double z = 1.959963984540054;
    const double n = trials;
    const double phat = static_cast<double>(successes) / n;
    const double denom = 1.0 + z * z / n;
    const double center = (phat + z * z / (2.0 * n)) / denom;
    const double half =
        z * std::sqrt(phat * (1.0 - phat) / n + z * z / (4.0 * n * n)) / denom;
    lo = (successes == 0) ? 0.0 : std::max(0.0, center - half);
    hi = (successes == trials) ? 1.0 : std::min(1.0, center + half);
}

namespace {

ProbePoint make_point(const std::string& problem, int K, int N, double sweep, double eps,
                      int n_trials, int n_equal) {
    ProbePoint p;
    p.problem = problem;
    p.K = K;
    p.N = N;
    p.power_or_snr = sweep;
    p.epsilon = eps;
    p.n_trials = n_trials;
    p.n_equal = n_equal;
    p.probability = n_trials > 0 ? static_cast<double>(n_equal) / n_trials : 0.0;
    wilson_interval(n_equal, n_trials, p.ci_lo, p.ci_hi);
    return p;
}

} // namespace

ProbeReport prob_equal_ls(int K, double power_dbm, const ScenarioParams& base,
                          const ProbeConfig& cfg, std::uint64_t seed) {
    if (K > 12) throw SizeError("prob_equal_ls: exhaustive guard allows K <= 12");
    if (K < 3) throw SizeError("prob_equal_ls requires K >= 3");
    ScenarioParams params = base;
    params.K = K;
    const double sigma2 = noise_power(params);
    const std::vector<double> p(K, dbm_to_watts(power_dbm));

    ProbeReport report;
    report.problem = "ls";
    int n_equal = 0;
    for (int t = 0; t < cfg.n_trials; ++t) {
        const std::uint64_t s = Rng::derive(seed, 1000003ULL * t);
        const D2dScenario sc = gen_d2d_scenario(params, s);
        const ChannelMatrix a1 = gen_channel_matrix(sc, params, Rng::derive(s, 1));
        const PairConstraintLS pair = gen_pair_ls(a1, cfg.delta, Rng::derive(s, 2), cfg.delta_mode);
        const ExhaustiveResult r1 = exhaustive_ls(pair.alpha1, p, sigma2);
        const ExhaustiveResult r2 = exhaustive_ls(pair.alpha2, p, sigma2);
        const bool equal = r1.schedule.x == r2.schedule.x;
        n_equal += equal ? 1 : 0;
        report.pair_gaps.push_back(equal ? 0.0 : 1.0);
    }
    report.points.push_back(make_point("ls", K, 0, power_dbm, 0.0, cfg.n_trials, n_equal));
    return report;
}

ProbeReport prob_equal_pc(int K, double power_dbm, const ScenarioParams& base,
                          const ProbeConfig& cfg, std::uint64_t seed) {
    if (K < 3) throw SizeError("prob_equal_pc requires K >= 3");
    ScenarioParams params = base;
    params.K = K;
    const double sigma2 = noise_power(params);
    const double p_max = dbm_to_watts(power_dbm);
    WmmseOptions wopts;
    wopts.iters = cfg.solver_iters;

    ProbeReport report;
    report.problem = "pc";
    int n_equal = 0;
    for (int t = 0; t < cfg.n_trials; ++t) {
        const std::uint64_t s = Rng::derive(seed, 1000033ULL * t);
        const D2dScenario sc = gen_d2d_scenario(params, s);
        const ChannelMatrix a1 = gen_channel_matrix(sc, params, Rng::derive(s, 1));
        const PairConstraintLS pair = gen_pair_ls(a1, cfg.delta, Rng::derive(s, 2), cfg.delta_mode);
        const WmmsePcResult r1 = wmmse_pc(pair.alpha1, p_max, sigma2, wopts);
        const WmmsePcResult r2 = wmmse_pc(pair.alpha2, p_max, sigma2, wopts);
        double gap = 0.0;
        for (int k = 0; k < K; ++k) gap = std::max(gap, std::abs(r1.powers.p[k] - r2.powers.p[k]));
        n_equal += (gap < cfg.equality_threshold) ? 1 : 0;
        report.pair_gaps.push_back(gap);
    }
    report.points.push_back(make_point("pc", K, 0, power_dbm, 0.0, cfg.n_trials, n_equal));
    return report;
}

ProbeReport prob_equal_pr(int N, int K, double snr_db, const ProbeConfig& cfg,
                          std::uint64_t seed) {
    if (N < 2 || K < 2) throw SizeError("prob_equal_pr requires N, K >= 2");
    const double p_max = 1.0;
    const double sigma2 = p_max / db_to_linear(snr_db);
    WmmseOptions wopts;
    wopts.iters = cfg.solver_iters;

    ProbeReport report;
    report.problem = "pr";
    std::vector<int> n_equal(cfg.epsilon_grid.size(), 0);
    for (int t = 0; t < cfg.n_trials; ++t) {
        const std::uint64_t s = Rng::derive(seed, 1000211ULL * t);
        const ComplexChannelMatrix H1 = gen_rayleigh_H(N, K, s);
        const PairConstraintP pair = gen_pair_p(H1, cfg.delta, Rng::derive(s, 2));
        const WmmsePrecodingResult r1 = wmmse_precoding(pair.H1, p_max, sigma2, wopts);
        const WmmsePrecodingResult r2 = wmmse_precoding(pair.H2, p_max, sigma2, wopts);
        double gap = 0.0;
        for (std::size_t i = 0; i < r1.precoder.V.re.size(); ++i) {
            gap = std::max(gap, std::hypot(r1.precoder.V.re[i] - r2.precoder.V.re[i],
                                           r1.precoder.V.im[i] - r2.precoder.V.im[i]));
        }
        for (std::size_t e = 0; e < cfg.epsilon_grid.size(); ++e) {
            if (gap < cfg.epsilon_grid[e]) ++n_equal[e];
        }
        report.pair_gaps.push_back(gap);
    }
    for (std::size_t e = 0; e < cfg.epsilon_grid.size(); ++e) {
        report.points.push_back(
            make_point("pr", K, N, snr_db, cfg.epsilon_grid[e], cfg.n_trials, n_equal[e]));
    }
    return report;
}

ProbeReport prob_equal_solutions(const std::string& problem, int size_k, int size_n,
                                 double power_or_snr, const ScenarioParams& base,
                                 const ProbeConfig& cfg, std::uint64_t seed) {
    if (problem == "ls") return prob_equal_ls(size_k, power_or_snr, base, cfg, seed);
    if (problem == "pc") return prob_equal_pc(size_k, power_or_snr, base, cfg, seed);
    if (problem == "pr") return prob_equal_pr(size_n, size_k, power_or_snr, cfg, seed);
    throw ConfigError("prob_equal_solutions: unknown problem '" + problem + "'");
}

std::string probe_report_csv_header() {
    return "problem,K,N,power_or_snr,epsilon,n_trials,n_equal,probability,ci_lo,ci_hi";
}

std::string probe_report_to_csv(const ProbeReport& report) {
    std::ostringstream os;
    for (const auto& p : report.points) {
        os << p.problem << ',' << p.K << ',' << p.N << ',' << p.power_or_snr << ','
           << p.epsilon << ',' << p.n_trials << ',' << p.n_equal << ',' << p.probability << ','
           << p.ci_lo << ',' << p.ci_hi << '\n';
    }
    return os.str();
}

} // namespace wgnn
