#ifndef WGNN_TAPE_HPP
#define WGNN_TAPE_HPP

#include <memory>
#include <string>
#include <vector>

#include "wgnn/tensor.hpp"

namespace wgnn {

enum class ActKind { relu, leaky_relu, elu, swish, softplus, mish, sigmoid };

ActKind activation_from_name(const std::string& name);
const char* activation_name(ActKind k);

double act_eval(ActKind k, double x);
double act_deriv(ActKind k, double x);

/// Elementwise activation outside the tape (shared with the tape op).
Tensor apply_activation(ActKind k, const Tensor& x);

enum class PoolMode { sum, mean, max };

/// Row groups for segment pooling: output row g aggregates input rows
/// groups[g]. Groups may overlap and may be empty (empty pools to zero).
struct Segments {
    std::vector<std::vector<int>> groups;
};

using NodeId = int;

/// Attributes for the generic forward() entry point.
struct OpSpec {
    std::string op;          // op name, e.g. "matmul", "activation"
    int axis = -1;           // for concat/sum/mean/max; -1 = reduce all
    double scalar = 0.0;     // for scalar-mul
    std::string activation;  // for activation(name)
};

/// Reverse-mode autodiff tape over small dense tensors.
///
/// Nodes are appended in topological order (every node's inputs precede it).
/// Values are immutable once recorded; backward() fills per-node adjoints for
/// everything reachable from the loss and leaves leaf values untouched.
/// A tape is single-owner and single-threaded; distinct tapes may run on
/// distinct threads concurrently.
class Tape {
public:
    /// Records a leaf. Parameters pass requires_grad = true.
    NodeId input(Tensor value, bool requires_grad = false);
    NodeId constant(Tensor value) { return input(std::move(value), false); }

    NodeId matmul(NodeId a, NodeId b);
    /// add supports equal shapes, plus broadcasting of a (1,n) / rank-1 row
    /// vector or a scalar in the second operand.
    NodeId add(NodeId a, NodeId b);
    NodeId sub(NodeId a, NodeId b);
    /// Elementwise product; either operand may be a scalar node (broadcast).
    NodeId mul(NodeId a, NodeId b);
    NodeId scalar_mul(NodeId a, double s);
    NodeId concat(const std::vector<NodeId>& parts, int axis);
    NodeId sum(NodeId a, int axis = -1);
    NodeId mean(NodeId a, int axis = -1);
    /// max(axis) records argmax indices; backward routes the adjoint to the
    /// recorded winner (first index wins ties).
    NodeId max(NodeId a, int axis);
    NodeId activation(NodeId a, ActKind k);
    /// Natural log, clamped at 1e-12; clamp events are counted on the tape.
    NodeId log(NodeId a);
    NodeId exp(NodeId a);
    NodeId square(NodeId a);
    NodeId abs(NodeId a);
    NodeId sqrt(NodeId a);
    /// Output row r is input row indices[r]; indices may repeat.
    NodeId gather_rows(NodeId a, std::shared_ptr<const std::vector<int>> indices);
    NodeId segment_pool(NodeId a, PoolMode mode, std::shared_ptr<const Segments> segs);
    NodeId reshape(NodeId a, std::vector<int> shape);

    /// Generic dispatch on a named op (the string forms used in configs and
    /// tests). Unknown op names raise ConfigError.
    NodeId forward(const OpSpec& spec, const std::vector<NodeId>& inputs);

    /// Reverse sweep from a scalar loss node. ContractError if the loss is
    /// not scalar-shaped.
    void backward(NodeId loss);

    const Tensor& value(NodeId id) const;
    /// Adjoint of a node after backward(); ContractError if absent.
    const Tensor& grad(NodeId id) const;
    bool has_grad(NodeId id) const;

    std::size_t size() const { return nodes_.size(); }
    long log_clamp_count() const { return log_clamps_; }

private:
    struct Node {
        int op;  // internal op tag
        NodeId a = -1, b = -1;
        std::vector<NodeId> extra_inputs;  // concat parts beyond the first two
        Tensor value;
        Tensor grad;
        bool has_grad = false;
        bool requires_grad = false;
        // op-specific attributes
        int axis = -1;
        double scalar = 0.0;
        ActKind act = ActKind::relu;
        PoolMode pool = PoolMode::sum;
        std::vector<int> arg_index;  // argmax winners for max/segment max
        std::shared_ptr<const std::vector<int>> gather_idx;
        std::shared_ptr<const Segments> segments;
        std::vector<int> reshape_from;
    };

    std::vector<Node> nodes_;
    long log_clamps_ = 0;

    NodeId push(Node n, const std::string& where);
    const Node& node(NodeId id) const;
    Tensor& grad_buffer(NodeId id);
    void accumulate(NodeId id, const Tensor& g);
};

} // namespace wgnn

#endif
