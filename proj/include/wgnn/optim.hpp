#ifndef WGNN_OPTIM_HPP
#define WGNN_OPTIM_HPP

#include <functional>
#include <map>
#include <string>

#include "wgnn/tensor.hpp"

namespace wgnn {

/// Adam optimizer state: step count plus first/second moment tensors per
/// named parameter. Moment shapes always match the parameter shapes.
struct AdamState {
    long step = 0;
    std::map<std::string, Tensor> m;
    std::map<std::string, Tensor> v;
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

/// One Adam update with bias correction, applied in place to params.
/// Parameters without a gradient entry are left untouched.
void adam_step(std::map<std::string, Tensor>& params,
               const std::map<std::string, Tensor>& grads, AdamState& state);

/// Single-tensor convenience overload.
void adam_step(Tensor& param, const Tensor& grad, Tensor& m, Tensor& v, long step,
               double lr, double beta1, double beta2, double eps);

/// Central finite differences of a scalar function, h per coordinate.
/// Test oracle for the tape's backward pass.
Tensor finite_diff_gradient(const std::function<double(const Tensor&)>& f, const Tensor& x,
                            double h);

} // namespace wgnn

#endif
