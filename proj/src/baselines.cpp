#include "wgnn/baselines.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <complex>

namespace wgnn {

namespace {

constexpr double kLog2 = 0.6931471805599453;  // ln 2

void check_ls_args(const std::vector<double>& p, const ChannelMatrix& alpha, double sigma2) {
    if (sigma2 <= 0.0) throw DomainError("noise power must be positive");
    if (static_cast<int>(p.size()) != alpha.K) {
        throw DimensionError("power vector length does not match channel matrix");
    }
}

} // namespace

void ScheduleVector::validate() const {
    for (int v : x) {
        if (v != 0 && v != 1) throw ContractError("schedule entries must be 0 or 1");
    }
}

void PowerVector::validate() const {
    for (double v : p) {
        if (v < 0.0 || v > p_max + 1e-12) {
            throw ContractError("power outside [0, p_max]");
        }
    }
}

double PrecodingMatrix::trace() const {
    double t = 0.0;
    for (std::size_t i = 0; i < V.re.size(); ++i) t += V.re[i] * V.re[i] + V.im[i] * V.im[i];
    return t;
}

void PrecodingMatrix::validate() const {
    if (trace() > p_max + 1e-9) throw ContractError("precoder violates trace constraint");
}

double sumrate_ls(const std::vector<int>& x, const ChannelMatrix& alpha,
                  const std::vector<double>& p, double sigma2) {
    check_ls_args(p, alpha, sigma2);
    if (static_cast<int>(x.size()) != alpha.K) {
        throw DimensionError("schedule length does not match channel matrix");
    }
    const int K = alpha.K;
    double rate = 0.0;
    for (int k = 0; k < K; ++k) {
        if (!x[k]) continue;
        double interf = sigma2;
        for (int j = 0; j < K; ++j) {
            if (j != k && x[j]) interf += p[j] * alpha.at(j, k);
        }
        rate += std::log2(1.0 + p[k] * alpha.at(k, k) / interf);
    }
    return rate;
}

double sumrate_pc(const std::vector<double>& p, const ChannelMatrix& alpha, double sigma2) {
    check_ls_args(p, alpha, sigma2);
    const int K = alpha.K;
    double rate = 0.0;
    for (int k = 0; k < K; ++k) {
        double interf = sigma2;
        for (int j = 0; j < K; ++j) {
            if (j != k) interf += p[j] * alpha.at(j, k);
        }
        rate += std::log2(1.0 + p[k] * alpha.at(k, k) / interf);
    }
    return rate;
}

double sumrate_pr(const ComplexChannelMatrix& V, const ComplexChannelMatrix& H, double sigma2) {
    if (sigma2 <= 0.0) throw DomainError("noise power must be positive");
    if (V.N != H.N || V.K != H.K) throw DimensionError("precoder/channel dimension mismatch");
    const int N = H.N, K = H.K;
    double rate = 0.0;
    for (int k = 0; k < K; ++k) {
        double sig = 0.0, interf = sigma2;
        for (int j = 0; j < K; ++j) {
            // h_k^H v_j = sum_n conj(h_nk) v_nj
            double re = 0.0, im = 0.0;
            for (int n = 0; n < N; ++n) {
                const double hr = H.real(n, k), hi = H.imag(n, k);
                const double vr = V.real(n, j), vi = V.imag(n, j);
                re += hr * vr + hi * vi;
                im += hr * vi - hi * vr;
            }
            const double pwr = re * re + im * im;
            if (j == k)
                sig = pwr;
            else
                interf += pwr;
        }
        rate += std::log2(1.0 + sig / interf);
    }
    return rate;
}

ExhaustiveResult exhaustive_ls(const ChannelMatrix& alpha, const std::vector<double>& p,
                               double sigma2) {
    check_ls_args(p, alpha, sigma2);
    const int K = alpha.K;
    if (K > 20) throw SizeError("exhaustive_ls limited to K <= 20");
    std::vector<int> x(K, 0), best(K, 0);
    double best_rate = 0.0;  // the all-off schedule
    int best_active = 0;
    for (std::uint32_t mask = 1; mask < (1u << K); ++mask) {
        int active = 0;
        for (int k = 0; k < K; ++k) {
            x[k] = (mask >> k) & 1u;
            active += x[k];
        }
        const double rate = sumrate_ls(x, alpha, p, sigma2);
        bool better = rate > best_rate;
        if (rate == best_rate) {
            if (active > best_active) {
                better = true;
            } else if (active == best_active && x < best) {
                better = true;
            }
        }
        if (better) {
            best_rate = rate;
            best = x;
            best_active = active;
        }
    }
    return {ScheduleVector{best}, best_rate};
}

ScheduleVector fp_ls(const ChannelMatrix& alpha, const std::vector<double>& p, double sigma2,
                     int iters) {
    check_ls_args(p, alpha, sigma2);
    if (iters < 1) throw ContractError("fp_ls: iters must be >= 1");
    const int K = alpha.K;
    std::vector<double> x(K, 1.0), gamma(K, 0.0), y(K, 0.0);
    for (int it = 0; it < iters; ++it) {
        // SINR auxiliaries at the current soft schedule.
        for (int k = 0; k < K; ++k) {
            double interf = sigma2;
            for (int j = 0; j < K; ++j) {
                if (j != k) interf += x[j] * p[j] * alpha.at(j, k);
            }
            gamma[k] = x[k] * p[k] * alpha.at(k, k) / interf;
        }
        // Quadratic-transform auxiliaries (denominator is total received power).
        for (int k = 0; k < K; ++k) {
            double total = sigma2;
            for (int j = 0; j < K; ++j) total += x[j] * p[j] * alpha.at(j, k);
            y[k] = std::sqrt((1.0 + gamma[k]) * x[k] * p[k] * alpha.at(k, k)) / total;
        }
        // Closed-form soft activation update, clipped to [0, 1].
        for (int k = 0; k < K; ++k) {
            double denom = 0.0;
            for (int j = 0; j < K; ++j) denom += y[j] * y[j] * p[k] * alpha.at(k, j);
            if (denom <= 0.0) {
                x[k] = 1.0;
                continue;
            }
            const double num = y[k] * std::sqrt((1.0 + gamma[k]) * p[k] * alpha.at(k, k));
            x[k] = std::min(1.0, (num / denom) * (num / denom));
        }
    }
    ScheduleVector out;
    out.x.resize(K);
    for (int k = 0; k < K; ++k) out.x[k] = x[k] >= 0.5 ? 1 : 0;
    return out;
}

WmmsePcResult wmmse_pc(const ChannelMatrix& alpha, double p_max, double sigma2,
                       const WmmseOptions& opts) {
    if (sigma2 <= 0.0) throw DomainError("noise power must be positive");
    if (p_max <= 0.0) throw DomainError("p_max must be positive");
    if (opts.iters < 1) throw ContractError("wmmse_pc: iters must be >= 1");
    const int K = alpha.K;
    // Amplitude parameterization v_k = sqrt(p_k), initialized at full power.
    std::vector<double> v(K, std::sqrt(p_max)), u(K, 0.0), w(K, 0.0);
    std::vector<double> sq(K);
    for (int k = 0; k < K; ++k) sq[k] = std::sqrt(alpha.at(k, k));

    WmmsePcResult res;
    std::vector<double> powers(K);
    auto record = [&]() {
        for (int k = 0; k < K; ++k) powers[k] = v[k] * v[k];
        res.objective_trace.push_back(sumrate_pc(powers, alpha, sigma2));
        return res.objective_trace.back();
    };

    double prev = -1.0;
    for (int it = 0; it < opts.iters; ++it) {
        for (int k = 0; k < K; ++k) {
            double total = sigma2;
            for (int j = 0; j < K; ++j) total += alpha.at(j, k) * v[j] * v[j];
            u[k] = sq[k] * v[k] / total;
            const double e = 1.0 - u[k] * sq[k] * v[k];
            w[k] = 1.0 / std::max(e, 1e-12);
        }
        for (int k = 0; k < K; ++k) {
            double denom = 0.0;
            for (int j = 0; j < K; ++j) denom += w[j] * u[j] * u[j] * alpha.at(k, j);
            const double vk = (denom > 0.0) ? w[k] * u[k] * sq[k] / denom : std::sqrt(p_max);
            v[k] = std::min(std::max(vk, 0.0), std::sqrt(p_max));
        }
        const double obj = record();
        if (prev >= 0.0 && std::abs(obj - prev) <= opts.rel_tol * std::max(std::abs(prev), 1.0)) {
            break;
        }
        prev = obj;
    }
    PowerVector pv;
    pv.p.resize(K);
    for (int k = 0; k < K; ++k) pv.p[k] = v[k] * v[k];
    pv.p_max = p_max;
    pv.validate();
    res.powers = std::move(pv);
    return res;
}

WmmsePrecodingResult wmmse_precoding(const ComplexChannelMatrix& H, double p_max, double sigma2,
                                     const WmmseOptions& opts) {
    if (sigma2 <= 0.0) throw DomainError("noise power must be positive");
    if (p_max <= 0.0) throw DomainError("p_max must be positive");
    if (opts.iters < 1) throw ContractError("wmmse_precoding: iters must be >= 1");
    H.validate();
    const int N = H.N, K = H.K;
    using Cplx = std::complex<double>;
    using CMat = Eigen::MatrixXcd;
    using CVec = Eigen::VectorXcd;

    CMat Hm(N, K);
    for (int n = 0; n < N; ++n)
        for (int k = 0; k < K; ++k) Hm(n, k) = Cplx(H.real(n, k), H.imag(n, k));

    // Matched-filter initialization at full power.
    CMat V(N, K);
    for (int k = 0; k < K; ++k) {
        const double norm = Hm.col(k).norm();
        const CVec dir = norm > 0.0 ? CVec(Hm.col(k) / norm) : CVec(CVec::Unit(N, 0));
        V.col(k) = dir * std::sqrt(p_max / K);
    }

    WmmsePrecodingResult res;
    auto to_result = [&](const CMat& Vm) {
        ComplexChannelMatrix out(N, K);
        for (int n = 0; n < N; ++n)
            for (int k = 0; k < K; ++k) {
                out.real(n, k) = Vm(n, k).real();
                out.imag(n, k) = Vm(n, k).imag();
            }
        return out;
    };
    auto rate_of = [&](const CMat& Vm) { return sumrate_pr(to_result(Vm), H, sigma2); };

    CVec u(K);
    Eigen::VectorXd w(K);
    double prev = -1.0;
    for (int it = 0; it < opts.iters; ++it) {
        // MMSE receivers and MSE weights.
        for (int k = 0; k < K; ++k) {
            Cplx sig = Hm.col(k).adjoint() * V.col(k);
            double total = sigma2;
            for (int j = 0; j < K; ++j) {
                const Cplx c = Hm.col(k).adjoint() * V.col(j);
                total += std::norm(c);
            }
            u(k) = std::conj(sig) / total;
            const double e = 1.0 - std::norm(sig) / total;
            w(k) = 1.0 / std::max(e, 1e-12);
        }
        // Transmit update: (A + mu I)^{-1} b_k with mu from the power constraint.
        CMat A = CMat::Zero(N, N);
        CMat B(N, K);
        for (int k = 0; k < K; ++k) {
            A += w(k) * std::norm(u(k)) * Hm.col(k) * Hm.col(k).adjoint();
            B.col(k) = w(k) * std::conj(u(k)) * Hm.col(k);
        }
        A += 1e-12 * CMat::Identity(N, N);  // ridge against singular intermediates
        auto solve_with_mu = [&](double mu) {
            CMat M = A + mu * CMat::Identity(N, N);
            return CMat(M.ldlt().solve(B));
        };
        CMat V0 = solve_with_mu(0.0);
        if (V0.squaredNorm() <= p_max) {
            V = V0;
        } else {
            double lo = 0.0, hi = 1.0;
            while (solve_with_mu(hi).squaredNorm() > p_max) hi *= 2.0;
            for (int b = 0; b < 80; ++b) {
                const double mid = 0.5 * (lo + hi);
                if (solve_with_mu(mid).squaredNorm() > p_max)
                    lo = mid;
                else
                    hi = mid;
            }
            V = solve_with_mu(hi);
        }
        const double obj = rate_of(V);
        res.objective_trace.push_back(obj);
        if (prev >= 0.0 && std::abs(obj - prev) <= opts.rel_tol * std::max(std::abs(prev), 1.0)) {
            break;
        }
        prev = obj;
    }
    // The bisection leaves Tr(VV^H) at or just under p_max; clip any residual
    // overshoot so the constraint holds exactly.
    const double tr = V.squaredNorm();
    if (tr > p_max) V *= std::sqrt(p_max / tr);
    PrecodingMatrix pm;
    pm.V = to_result(V);
    pm.p_max = p_max;
    pm.validate();
    res.precoder = std::move(pm);
    return res;
}

} // namespace wgnn
