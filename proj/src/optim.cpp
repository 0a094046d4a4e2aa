#include "wgnn/optim.hpp"

#include <cmath>

#include "wgnn/errors.hpp"

namespace wgnn {

void adam_step(Tensor& param, const Tensor& grad, Tensor& m, Tensor& v, long step,
               double lr, double beta1, double beta2, double eps) {
    if (!param.same_shape(grad)) {
        throw DimensionError("adam_step: gradient shape " + grad.shape_str() +
                             " does not match parameter shape " + param.shape_str());
    }
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(step));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(step));
    for (std::size_t i = 0; i < param.numel(); ++i) {
        const double g = grad[i];
        m[i] = beta1 * m[i] + (1.0 - beta1) * g;
        v[i] = beta2 * v[i] + (1.0 - beta2) * g * g;
        const double mhat = m[i] / bc1;
        const double vhat = v[i] / bc2;
        param[i] -= lr * mhat / (std::sqrt(vhat) + eps);
    }
}

void adam_step(std::map<std::string, Tensor>& params,
               const std::map<std::string, Tensor>& grads, AdamState& state) {
    if (state.lr < 0.0) throw ConfigError("adam_step: lr must be >= 0");
    ++state.step;
    for (auto& [name, param] : params) {
        auto git = grads.find(name);
        if (git == grads.end()) continue;
        auto mit = state.m.find(name);
        if (mit == state.m.end()) {
            mit = state.m.emplace(name, Tensor(param.shape())).first;
            state.v.emplace(name, Tensor(param.shape()));
        }
        adam_step(param, git->second, mit->second, state.v.at(name), state.step, state.lr,
                  state.beta1, state.beta2, state.eps);
    }
}

Tensor finite_diff_gradient(const std::function<double(const Tensor&)>& f, const Tensor& x,
                            double h) {
    if (h <= 0.0) throw ContractError("finite_diff_gradient: h must be > 0");
    Tensor grad(x.shape());
    Tensor probe = x;
    for (std::size_t i = 0; i < x.numel(); ++i) {
        const double orig = probe[i];
        probe[i] = orig + h;
        const double fp = f(probe);
        probe[i] = orig - h;
        const double fm = f(probe);
        probe[i] = orig;
        grad[i] = (fp - fm) / (2.0 * h);
    }
    return grad;
}

} // namespace wgnn
