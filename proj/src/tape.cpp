#include "wgnn/tape.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

namespace wgnn {

namespace {

enum InternalOp {
    kLeaf,
    kMatmul,
    kAdd,
    kSub,
    kMul,
    kScalarMul,
    kConcat,
    kSum,
    kMean,
    kMax,
    kAct,
    kLog,
    kExp,
    kSquare,
    kAbs,
    kSqrt,
    kGather,
    kSegPool,
    kReshape,
};

constexpr double kLogClamp = 1e-12;

double stable_sigmoid(double x) {
    if (x >= 0.0) {
        return 1.0 / (1.0 + std::exp(-x));
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

double stable_softplus(double x) {
    return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
}

} // namespace

ActKind activation_from_name(const std::string& name) {
    if (name == "relu") return ActKind::relu;
    if (name == "leaky_relu") return ActKind::leaky_relu;
    if (name == "elu") return ActKind::elu;
    if (name == "swish") return ActKind::swish;
    if (name == "softplus") return ActKind::softplus;
    if (name == "mish") return ActKind::mish;
    if (name == "sigmoid") return ActKind::sigmoid;
    throw ConfigError("unknown activation '" + name + "'");
}

const char* activation_name(ActKind k) {
    switch (k) {
        case ActKind::relu: return "relu";
        case ActKind::leaky_relu: return "leaky_relu";
        case ActKind::elu: return "elu";
        case ActKind::swish: return "swish";
        case ActKind::softplus: return "softplus";
        case ActKind::mish: return "mish";
        case ActKind::sigmoid: return "sigmoid";
    }
    return "?";
}

double act_eval(ActKind k, double x) {
    switch (k) {
        case ActKind::relu: return x > 0.0 ? x : 0.0;
        case ActKind::leaky_relu: return x >= 0.0 ? x : 0.2 * x;
        case ActKind::elu: return x >= 0.0 ? x : std::expm1(x);
        case ActKind::swish: return x * stable_sigmoid(x);
        case ActKind::softplus: return stable_softplus(x);
        case ActKind::mish: return x * std::tanh(stable_softplus(x));
        case ActKind::sigmoid: return stable_sigmoid(x);
    }
    return 0.0;
}

double act_deriv(ActKind k, double x) {
    switch (k) {
        case ActKind::relu: return x > 0.0 ? 1.0 : 0.0;
        case ActKind::leaky_relu: return x >= 0.0 ? 1.0 : 0.2;
        case ActKind::elu: return x >= 0.0 ? 1.0 : std::exp(x);
        case ActKind::swish: {
            const double s = stable_sigmoid(x);
            return s + x * s * (1.0 - s);
        }
        case ActKind::softplus: return stable_sigmoid(x);
        case ActKind::mish: {
            const double sp = stable_softplus(x);
            const double t = std::tanh(sp);
            return t + x * (1.0 - t * t) * stable_sigmoid(x);
        }
        case ActKind::sigmoid: {
            const double s = stable_sigmoid(x);
            return s * (1.0 - s);
        }
    }
    return 0.0;
}

Tensor apply_activation(ActKind k, const Tensor& x) {
    Tensor out = x;
    for (double& v : out.data()) v = act_eval(k, v);
    return out;
}

NodeId Tape::push(Node n, const std::string& where) {
    n.value.require_finite(where);
    nodes_.push_back(std::move(n));
    return static_cast<NodeId>(nodes_.size() - 1);
}

const Tape::Node& Tape::node(NodeId id) const {
    if (id < 0 || id >= static_cast<NodeId>(nodes_.size())) {
        throw ContractError("invalid node id " + std::to_string(id));
    }
    return nodes_[id];
}

NodeId Tape::input(Tensor value, bool requires_grad) {
    Node n;
    n.op = kLeaf;
    n.value = std::move(value);
    n.requires_grad = requires_grad;
    return push(std::move(n), "tape input");
}

NodeId Tape::matmul(NodeId a, NodeId b) {
    const Tensor& A = value(a);
    const Tensor& B = value(b);
    if (A.rank() != 2 || B.rank() != 2 || A.cols() != B.rows()) {
        throw DimensionError("matmul shapes " + A.shape_str() + " x " + B.shape_str());
    }
    const int m = A.rows(), k = A.cols(), p = B.cols();
    Tensor C({m, p});
    // ikj loop order keeps the inner accesses contiguous.
    for (int i = 0; i < m; ++i) {
        const double* arow = A.data().data() + static_cast<std::size_t>(i) * k;
        double* crow = C.data().data() + static_cast<std::size_t>(i) * p;
        for (int kk = 0; kk < k; ++kk) {
            const double av = arow[kk];
            if (av == 0.0) continue;
            const double* brow = B.data().data() + static_cast<std::size_t>(kk) * p;
            for (int j = 0; j < p; ++j) crow[j] += av * brow[j];
        }
    }
    Node n;
    n.op = kMatmul;
    n.a = a;
    n.b = b;
    n.value = std::move(C);
    return push(std::move(n), "matmul");
}

NodeId Tape::add(NodeId a, NodeId b) {
    const Tensor& A = value(a);
    const Tensor& B = value(b);
    Tensor C = A;
    if (A.same_shape(B)) {
        for (std::size_t i = 0; i < C.numel(); ++i) C[i] += B[i];
    } else if (B.numel() == 1) {
        for (double& v : C.data()) v += B[0];
    } else if (A.rank() == 2 && static_cast<int>(B.numel()) == A.cols()) {
        // row-vector broadcast (bias add)
        for (int i = 0; i < A.rows(); ++i)
            for (int j = 0; j < A.cols(); ++j) C.at(i, j) += B[static_cast<std::size_t>(j)];
    } else {
        throw DimensionError("add shapes " + A.shape_str() + " + " + B.shape_str());
    }
    Node n;
    n.op = kAdd;
    n.a = a;
    n.b = b;
    n.value = std::move(C);
    return push(std::move(n), "add");
}

NodeId Tape::sub(NodeId a, NodeId b) {
    const Tensor& A = value(a);
    const Tensor& B = value(b);
    if (!A.same_shape(B)) {
        throw DimensionError("sub shapes " + A.shape_str() + " - " + B.shape_str());
    }
    Tensor C = A;
    for (std::size_t i = 0; i < C.numel(); ++i) C[i] -= B[i];
    Node n;
    n.op = kSub;
    n.a = a;
    n.b = b;
    n.value = std::move(C);
    return push(std::move(n), "sub");
}

NodeId Tape::mul(NodeId a, NodeId b) {
    const Tensor& A = value(a);
    const Tensor& B = value(b);
    Tensor C;
    if (A.same_shape(B)) {
        C = A;
        for (std::size_t i = 0; i < C.numel(); ++i) C[i] *= B[i];
    } else if (B.numel() == 1) {
        C = A;
        for (double& v : C.data()) v *= B[0];
    } else if (A.numel() == 1) {
        C = B;
        for (double& v : C.data()) v *= A[0];
    } else {
        throw DimensionError("mul shapes " + A.shape_str() + " * " + B.shape_str());
    }
    Node n;
    n.op = kMul;
    n.a = a;
    n.b = b;
    n.value = std::move(C);
    return push(std::move(n), "mul");
}

NodeId Tape::scalar_mul(NodeId a, double s) {
    Tensor C = value(a);
    for (double& v : C.data()) v *= s;
    Node n;
    n.op = kScalarMul;
    n.a = a;
    n.scalar = s;
    n.value = std::move(C);
    return push(std::move(n), "scalar_mul");
}

NodeId Tape::concat(const std::vector<NodeId>& parts, int axis) {
    if (parts.empty()) throw ContractError("concat of zero tensors");
    if (axis != 0 && axis != 1) throw DimensionError("concat axis must be 0 or 1");
    const Tensor& first = value(parts[0]);
    if (first.rank() != 2) throw DimensionError("concat requires rank-2 tensors");
    int rows = first.rows(), cols = first.cols();
    for (std::size_t i = 1; i < parts.size(); ++i) {
        const Tensor& t = value(parts[i]);
        if (t.rank() != 2) throw DimensionError("concat requires rank-2 tensors");
        if (axis == 0) {
            if (t.cols() != cols) throw DimensionError("concat(axis=0) column mismatch");
            rows += t.rows();
        } else {
            if (t.rows() != rows) throw DimensionError("concat(axis=1) row mismatch");
            cols += t.cols();
        }
    }
    Tensor C({rows, cols});
    if (axis == 0) {
        std::size_t off = 0;
        for (NodeId p : parts) {
            const Tensor& t = value(p);
            std::copy(t.data().begin(), t.data().end(), C.data().begin() + off);
            off += t.numel();
        }
    } else {
        int coff = 0;
        for (NodeId p : parts) {
            const Tensor& t = value(p);
            for (int i = 0; i < rows; ++i)
                for (int j = 0; j < t.cols(); ++j) C.at(i, coff + j) = t.at(i, j);
            coff += t.cols();
        }
    }
    Node n;
    n.op = kConcat;
    n.a = parts[0];
    if (parts.size() > 1) n.b = parts[1];
    for (std::size_t i = 2; i < parts.size(); ++i) n.extra_inputs.push_back(parts[i]);
    n.axis = axis;
    n.value = std::move(C);
    return push(std::move(n), "concat");
}

namespace {

// Shared reduce implementation: axis -1 reduces everything to a scalar,
// axis 0/1 reduce rank-2 tensors along that axis.
Tensor reduce_forward(const Tensor& A, int axis, int op, std::vector<int>* arg_index) {
    if (axis == -1) {
        double acc = (op == kMax) ? -HUGE_VAL : 0.0;
        int arg = -1;
        for (std::size_t i = 0; i < A.numel(); ++i) {
            if (op == kMax) {
                if (A[i] > acc) {
                    acc = A[i];
                    arg = static_cast<int>(i);
                }
            } else {
                acc += A[i];
            }
        }
        if (op == kMean && A.numel() > 0) acc /= static_cast<double>(A.numel());
        if (op == kMax) {
            if (A.numel() == 0) throw DimensionError("max of empty tensor");
            arg_index->assign(1, arg);
        }
        return Tensor::scalar(acc);
    }
    if (A.rank() != 2) throw DimensionError("axis reduce requires rank-2 tensor");
    if (axis != 0 && axis != 1) throw DimensionError("reduce axis must be -1, 0 or 1");
    const int m = A.rows(), nn = A.cols();
    const int out_n = (axis == 0) ? nn : m;
    const int red_n = (axis == 0) ? m : nn;
    if (op == kMax && red_n == 0) throw DimensionError("max over empty axis");
    Tensor out({out_n});
    if (op == kMax) arg_index->assign(out_n, -1);
    for (int o = 0; o < out_n; ++o) {
        double acc = (op == kMax) ? -HUGE_VAL : 0.0;
        for (int r = 0; r < red_n; ++r) {
            const double v = (axis == 0) ? A.at(r, o) : A.at(o, r);
            if (op == kMax) {
                if (v > acc) {
                    acc = v;
                    (*arg_index)[o] = r;
                }
            } else {
                acc += v;
            }
        }
        if (op == kMean && red_n > 0) acc /= static_cast<double>(red_n);
        out[o] = acc;
    }
    return out;
}

} // namespace

NodeId Tape::sum(NodeId a, int axis) {
    Node n;
    n.op = kSum;
    n.a = a;
    n.axis = axis;
    n.value = reduce_forward(value(a), axis, kSum, nullptr);
    return push(std::move(n), "sum");
}

NodeId Tape::mean(NodeId a, int axis) {
    Node n;
    n.op = kMean;
    n.a = a;
    n.axis = axis;
    n.value = reduce_forward(value(a), axis, kMean, nullptr);
    return push(std::move(n), "mean");
}

NodeId Tape::max(NodeId a, int axis) {
    Node n;
    n.op = kMax;
    n.a = a;
    n.axis = axis;
    n.value = reduce_forward(value(a), axis, kMax, &n.arg_index);
    return push(std::move(n), "max");
}

NodeId Tape::activation(NodeId a, ActKind k) {
    Node n;
    n.op = kAct;
    n.a = a;
    n.act = k;
    n.value = apply_activation(k, value(a));
    return push(std::move(n), "activation");
}

NodeId Tape::log(NodeId a) {
    Tensor C = value(a);
    for (double& v : C.data()) {
        if (v < kLogClamp) {
            v = kLogClamp;
            ++log_clamps_;
        }
        v = std::log(v);
    }
    Node n;
    n.op = kLog;
    n.a = a;
    n.value = std::move(C);
    return push(std::move(n), "log");
}

NodeId Tape::exp(NodeId a) {
    Tensor C = value(a);
    for (double& v : C.data()) v = std::exp(v);
    Node n;
    n.op = kExp;
    n.a = a;
    n.value = std::move(C);
    return push(std::move(n), "exp");
}

NodeId Tape::square(NodeId a) {
    Tensor C = value(a);
    for (double& v : C.data()) v *= v;
    Node n;
    n.op = kSquare;
    n.a = a;
    n.value = std::move(C);
    return push(std::move(n), "square");
}

NodeId Tape::abs(NodeId a) {
    Tensor C = value(a);
    for (double& v : C.data()) v = std::abs(v);
    Node n;
    n.op = kAbs;
    n.a = a;
    n.value = std::move(C);
    return push(std::move(n), "abs");
}

NodeId Tape::sqrt(NodeId a) {
    Tensor C = value(a);
    for (double& v : C.data()) {
        if (v < 0.0) throw DomainError("sqrt of negative value");
        v = std::sqrt(v);
    }
    Node n;
    n.op = kSqrt;
    n.a = a;
    n.value = std::move(C);
    return push(std::move(n), "sqrt");
}

NodeId Tape::gather_rows(NodeId a, std::shared_ptr<const std::vector<int>> indices) {
    const Tensor& A = value(a);
    if (A.rank() != 2) throw DimensionError("gather_rows requires rank-2 tensor");
    const int cols = A.cols();
    Tensor C({static_cast<int>(indices->size()), cols});
    for (std::size_t r = 0; r < indices->size(); ++r) {
        const int src = (*indices)[r];
        if (src < 0 || src >= A.rows()) throw DimensionError("gather_rows index out of range");
        std::copy_n(A.data().begin() + static_cast<std::size_t>(src) * cols, cols,
                    C.data().begin() + r * cols);
    }
    Node n;
    n.op = kGather;
    n.a = a;
    n.gather_idx = std::move(indices);
    n.value = std::move(C);
    return push(std::move(n), "gather_rows");
}

NodeId Tape::segment_pool(NodeId a, PoolMode mode, std::shared_ptr<const Segments> segs) {
    const Tensor& A = value(a);
    if (A.rank() != 2) throw DimensionError("segment_pool requires rank-2 tensor");
    const int cols = A.cols();
    const int groups = static_cast<int>(segs->groups.size());
    Tensor C({groups, cols});
    Node n;
    if (mode == PoolMode::max) n.arg_index.assign(static_cast<std::size_t>(groups) * cols, -1);
    for (int g = 0; g < groups; ++g) {
        const auto& members = segs->groups[g];
        for (int j = 0; j < cols; ++j) {
            double acc = (mode == PoolMode::max) ? -HUGE_VAL : 0.0;
            int arg = -1;
            for (int r : members) {
                if (r < 0 || r >= A.rows()) throw DimensionError("segment index out of range");
                const double v = A.at(r, j);
                if (mode == PoolMode::max) {
                    if (v > acc) {
                        acc = v;
                        arg = r;
                    }
                } else {
                    acc += v;
                }
            }
            if (members.empty()) acc = 0.0;  // empty neighborhoods pool to zero
            if (mode == PoolMode::mean && !members.empty())
                acc /= static_cast<double>(members.size());
            C.at(g, j) = acc;
            if (mode == PoolMode::max)
                n.arg_index[static_cast<std::size_t>(g) * cols + j] = arg;
        }
    }
    n.op = kSegPool;
    n.a = a;
    n.pool = mode;
    n.segments = std::move(segs);
    n.value = std::move(C);
    return push(std::move(n), "segment_pool");
}

NodeId Tape::reshape(NodeId a, std::vector<int> shape) {
    const Tensor& A = value(a);
    if (shape_numel(shape) != A.numel()) {
        throw DimensionError("reshape numel mismatch");
    }
    Node n;
    n.op = kReshape;
    n.a = a;
    n.reshape_from = A.shape();
    n.value = Tensor(std::move(shape), A.data());
    return push(std::move(n), "reshape");
}

NodeId Tape::forward(const OpSpec& spec, const std::vector<NodeId>& inputs) {
    auto need = [&](std::size_t n) {
        if (inputs.size() != n) {
            throw ContractError("op '" + spec.op + "' expects " + std::to_string(n) +
                                " inputs, got " + std::to_string(inputs.size()));
        }
    };
    if (spec.op == "matmul") {
        need(2);
        return matmul(inputs[0], inputs[1]);
    }
    if (spec.op == "add") {
        need(2);
        return add(inputs[0], inputs[1]);
    }
    if (spec.op == "sub") {
        need(2);
        return sub(inputs[0], inputs[1]);
    }
    if (spec.op == "elementwise-mul" || spec.op == "mul") {
        need(2);
        return mul(inputs[0], inputs[1]);
    }
    if (spec.op == "scalar-mul") {
        need(1);
        return scalar_mul(inputs[0], spec.scalar);
    }
    if (spec.op == "concat") return concat(inputs, spec.axis);
    if (spec.op == "sum") {
        need(1);
        return sum(inputs[0], spec.axis);
    }
    if (spec.op == "mean") {
        need(1);
        return mean(inputs[0], spec.axis);
    }
    if (spec.op == "max") {
        need(1);
        return max(inputs[0], spec.axis);
    }
    if (spec.op == "activation") {
        need(1);
        return activation(inputs[0], activation_from_name(spec.activation));
    }
    if (spec.op == "log") {
        need(1);
        return log(inputs[0]);
    }
    if (spec.op == "exp") {
        need(1);
        return exp(inputs[0]);
    }
    if (spec.op == "square") {
        need(1);
        return square(inputs[0]);
    }
    if (spec.op == "abs") {
        need(1);
        return abs(inputs[0]);
    }
    if (spec.op == "sqrt") {
        need(1);
        return sqrt(inputs[0]);
    }
    throw ConfigError("unknown op '" + spec.op + "'");
}

const Tensor& Tape::value(NodeId id) const { return node(id).value; }

bool Tape::has_grad(NodeId id) const { return node(id).has_grad; }

const Tensor& Tape::grad(NodeId id) const {
    const Node& n = node(id);
    if (!n.has_grad) throw ContractError("node has no gradient (backward not run or unreachable)");
    return n.grad;
}

Tensor& Tape::grad_buffer(NodeId id) {
    Node& n = nodes_[id];
    if (!n.has_grad) {
        n.grad = Tensor(n.value.shape());
        n.has_grad = true;
    }
    return n.grad;
}

void Tape::accumulate(NodeId id, const Tensor& g) {
    Tensor& buf = grad_buffer(id);
    for (std::size_t i = 0; i < buf.numel(); ++i) buf[i] += g[i];
}

void Tape::backward(NodeId loss) {
    const Node& ln = node(loss);
    if (ln.value.numel() != 1) {
        throw ContractError("backward requires a scalar loss, got shape " + ln.value.shape_str());
    }
    // Reverse reachability from the loss.
    std::vector<char> needed(nodes_.size(), 0);
    needed[loss] = 1;
    for (NodeId id = loss; id >= 0; --id) {
        if (!needed[id]) continue;
        const Node& n = nodes_[id];
        if (n.a >= 0) needed[n.a] = 1;
        if (n.b >= 0) needed[n.b] = 1;
        for (NodeId e : n.extra_inputs) needed[e] = 1;
    }
    grad_buffer(loss)[0] = 1.0;

    for (NodeId id = loss; id >= 0; --id) {
        if (!needed[id] || !nodes_[id].has_grad) continue;
        // Copy attributes we need before any accumulate() may reallocate.
        const Node& n = nodes_[id];
        const Tensor g = n.grad;
        switch (n.op) {
            case kLeaf:
                break;
            case kMatmul: {
                const Tensor& A = nodes_[n.a].value;
                const Tensor& B = nodes_[n.b].value;
                const int m = A.rows(), k = A.cols(), p = B.cols();
                Tensor dA({m, k});
                Tensor dB({k, p});
                for (int i = 0; i < m; ++i)
                    for (int j = 0; j < p; ++j) {
                        const double gv = g.at(i, j);
                        if (gv == 0.0) continue;
                        for (int kk = 0; kk < k; ++kk) {
                            dA.at(i, kk) += gv * B.at(kk, j);
                            dB.at(kk, j) += A.at(i, kk) * gv;
                        }
                    }
                accumulate(n.a, dA);
                accumulate(n.b, dB);
                break;
            }
            case kAdd: {
                const Tensor& A = nodes_[n.a].value;
                const Tensor& B = nodes_[n.b].value;
                accumulate(n.a, g);
                if (A.same_shape(B)) {
                    accumulate(n.b, g);
                } else if (B.numel() == 1) {
                    double s = 0.0;
                    for (std::size_t i = 0; i < g.numel(); ++i) s += g[i];
                    Tensor dB(B.shape());
                    dB[0] = s;
                    accumulate(n.b, dB);
                } else {
                    Tensor dB(B.shape());
                    for (int i = 0; i < A.rows(); ++i)
                        for (int j = 0; j < A.cols(); ++j) dB[j] += g.at(i, j);
                    accumulate(n.b, dB);
                }
                break;
            }
            case kSub: {
                accumulate(n.a, g);
                Tensor dB = g;
                for (double& v : dB.data()) v = -v;
                accumulate(n.b, dB);
                break;
            }
            case kMul: {
                const Tensor& A = nodes_[n.a].value;
                const Tensor& B = nodes_[n.b].value;
                if (A.same_shape(B)) {
                    Tensor dA = g, dB = g;
                    for (std::size_t i = 0; i < g.numel(); ++i) {
                        dA[i] *= B[i];
                        dB[i] *= A[i];
                    }
                    accumulate(n.a, dA);
                    accumulate(n.b, dB);
                } else if (B.numel() == 1) {
                    Tensor dA = g;
                    for (double& v : dA.data()) v *= B[0];
                    Tensor dB(B.shape());
                    for (std::size_t i = 0; i < g.numel(); ++i) dB[0] += g[i] * A[i];
                    accumulate(n.a, dA);
                    accumulate(n.b, dB);
                } else {
                    Tensor dB = g;
                    for (double& v : dB.data()) v *= A[0];
                    Tensor dA(A.shape());
                    for (std::size_t i = 0; i < g.numel(); ++i) dA[0] += g[i] * B[i];
                    accumulate(n.a, dA);
                    accumulate(n.b, dB);
                }
                break;
            }
            case kScalarMul: {
                Tensor dA = g;
                for (double& v : dA.data()) v *= n.scalar;
                accumulate(n.a, dA);
                break;
            }
            case kConcat: {
                std::vector<NodeId> parts;
                parts.push_back(n.a);
                if (n.b >= 0) parts.push_back(n.b);
                parts.insert(parts.end(), n.extra_inputs.begin(), n.extra_inputs.end());
                if (n.axis == 0) {
                    std::size_t off = 0;
                    for (NodeId p : parts) {
                        const Tensor& t = nodes_[p].value;
                        Tensor dp(t.shape());
                        std::copy_n(g.data().begin() + off, t.numel(), dp.data().begin());
                        off += t.numel();
                        accumulate(p, dp);
                    }
                } else {
                    int coff = 0;
                    for (NodeId p : parts) {
                        const Tensor& t = nodes_[p].value;
                        Tensor dp(t.shape());
                        for (int i = 0; i < t.rows(); ++i)
                            for (int j = 0; j < t.cols(); ++j) dp.at(i, j) = g.at(i, coff + j);
                        coff += t.cols();
                        accumulate(p, dp);
                    }
                }
                break;
            }
            case kSum:
            case kMean: {
                const Tensor& A = nodes_[n.a].value;
                Tensor dA(A.shape());
                if (n.axis == -1) {
                    const double base =
                        n.op == kMean ? g[0] / static_cast<double>(A.numel()) : g[0];
                    for (double& v : dA.data()) v = base;
                } else {
                    const int red_n = (n.axis == 0) ? A.rows() : A.cols();
                    const double scale =
                        n.op == kMean ? 1.0 / static_cast<double>(red_n) : 1.0;
                    for (int i = 0; i < A.rows(); ++i)
                        for (int j = 0; j < A.cols(); ++j)
                            dA.at(i, j) = g[(n.axis == 0) ? j : i] * scale;
                }
                accumulate(n.a, dA);
                break;
            }
            case kMax: {
                const Tensor& A = nodes_[n.a].value;
                Tensor dA(A.shape());
                if (n.axis == -1) {
                    dA[static_cast<std::size_t>(n.arg_index[0])] = g[0];
                } else {
                    for (std::size_t o = 0; o < n.arg_index.size(); ++o) {
                        const int r = n.arg_index[o];
                        if (n.axis == 0)
                            dA.at(r, static_cast<int>(o)) = g[o];
                        else
                            dA.at(static_cast<int>(o), r) = g[o];
                    }
                }
                accumulate(n.a, dA);
                break;
            }
            case kAct: {
                const Tensor& A = nodes_[n.a].value;
                Tensor dA = g;
                for (std::size_t i = 0; i < dA.numel(); ++i) dA[i] *= act_deriv(n.act, A[i]);
                accumulate(n.a, dA);
                break;
            }
            case kLog: {
                const Tensor& A = nodes_[n.a].value;
                Tensor dA = g;
                for (std::size_t i = 0; i < dA.numel(); ++i)
                    dA[i] = (A[i] > kLogClamp) ? dA[i] / A[i] : 0.0;
                accumulate(n.a, dA);
                break;
            }
            case kExp: {
                Tensor dA = g;
                for (std::size_t i = 0; i < dA.numel(); ++i) dA[i] *= n.value[i];
                accumulate(n.a, dA);
                break;
            }
            case kSquare: {
                const Tensor& A = nodes_[n.a].value;
                Tensor dA = g;
                for (std::size_t i = 0; i < dA.numel(); ++i) dA[i] *= 2.0 * A[i];
                accumulate(n.a, dA);
                break;
            }
            case kAbs: {
                const Tensor& A = nodes_[n.a].value;
                Tensor dA = g;
                for (std::size_t i = 0; i < dA.numel(); ++i) {
                    const double s = (A[i] > 0.0) ? 1.0 : (A[i] < 0.0 ? -1.0 : 0.0);
                    dA[i] *= s;
                }
                accumulate(n.a, dA);
                break;
            }
            case kSqrt: {
                Tensor dA = g;
                for (std::size_t i = 0; i < dA.numel(); ++i) dA[i] *= 0.5 / n.value[i];
                accumulate(n.a, dA);
                break;
            }
            case kGather: {
                const Tensor& A = nodes_[n.a].value;
                Tensor dA(A.shape());
                const int cols = A.cols();
                for (std::size_t r = 0; r < n.gather_idx->size(); ++r) {
                    const int src = (*n.gather_idx)[r];
                    for (int j = 0; j < cols; ++j)
                        dA.at(src, j) += g.at(static_cast<int>(r), j);
                }
                accumulate(n.a, dA);
                break;
            }
            case kSegPool: {
                const Tensor& A = nodes_[n.a].value;
                Tensor dA(A.shape());
                const int cols = A.cols();
                const auto& groups = n.segments->groups;
                for (std::size_t gix = 0; gix < groups.size(); ++gix) {
                    const auto& members = groups[gix];
                    if (members.empty()) continue;
                    for (int j = 0; j < cols; ++j) {
                        const double gv = g.at(static_cast<int>(gix), j);
                        if (n.pool == PoolMode::sum) {
                            for (int r : members) dA.at(r, j) += gv;
                        } else if (n.pool == PoolMode::mean) {
                            const double s = gv / static_cast<double>(members.size());
                            for (int r : members) dA.at(r, j) += s;
                        } else {
                            const int r = n.arg_index[gix * cols + j];
                            if (r >= 0) dA.at(r, j) += gv;
                        }
                    }
                }
                accumulate(n.a, dA);
                break;
            }
            case kReshape: {
                Tensor dA(n.reshape_from, g.data());
                accumulate(n.a, dA);
                break;
            }
            default:
                throw ContractError("backward: unhandled op");
        }
    }
}

} // namespace wgnn
