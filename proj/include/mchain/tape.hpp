#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "mchain/tensor.hpp"

namespace mchain {

/// Index of a node on a Tape. Parents always have smaller ids than children.
struct NodeId {
  std::uint32_t index = 0;
  friend auto operator<=>(const NodeId&, const NodeId&) = default;
};

enum class Op { leaf, add, sub, mul, matmul, bias_add, tanh, relu, square, sum, mean, reshape };

const char* op_name(Op op);

/// Backward-only rewrite g -> g + tau * frozen_z. `frozen_z` is a value copy
/// of the node's forward output and holds no reference into the graph.
struct PenalConnection {
  double tau = 0.0;
  Tensor frozen_z;
};

/// Identity hook that records the incoming gradient under `sink`.
struct Probe {
  std::size_t sink = 0;
};

using GradientHook = std::variant<PenalConnection, Probe>;

/// Applies a hook to an incoming gradient. Never touches the tape.
Tensor apply_hook(const GradientHook& hook, const Tensor& grad);

struct ProbeCapture {
  std::size_t sink;
  NodeId node;
  Tensor grad;
};

/// Result of Tape::backward: d(root)/d(node) for every node reachable from
/// the root, after hooks, plus everything the probes captured.
class Gradients {
 public:
  Gradients() = default;
  Gradients(std::vector<std::optional<Tensor>> grads, std::vector<ProbeCapture> probes,
            std::size_t hook_calls);

  bool has(NodeId id) const noexcept;
  /// Throws TapeError when the node received no gradient.
  const Tensor& at(NodeId id) const;
  const Tensor* find(NodeId id) const noexcept;

  std::span<const ProbeCapture> probes() const noexcept { return probes_; }
  /// Gradient captured by the probe with this sink id, if it fired.
  const Tensor* probe(std::size_t sink) const noexcept;
  std::size_t hook_calls() const noexcept { return hook_calls_; }

 private:
  std::vector<std::optional<Tensor>> grads_;
  std::vector<ProbeCapture> probes_;
  std::size_t hook_calls_ = 0;
};

/// Append-only reverse-mode tape with eager forward evaluation.
///
/// Each recorded node stores its forward value; backward walks node ids in
/// strictly decreasing order, so a node's gradient is complete (all
/// consumers have higher ids) by the time it is visited. A hook registered on
/// a node rewrites that complete gradient exactly once, before it is pushed
/// to the node's parents.
///
/// Broadcasting exists only for bias_add: (batch, n) + (n).
class Tape {
 public:
  NodeId leaf(Tensor value);

  /// Records a primitive applied to existing nodes. `target` is only read by
  /// Op::reshape. Throws ShapeError on non-conforming operands and
  /// NumericError when the forward value is not finite.
  NodeId record(Op op, std::span<const NodeId> inputs, const Shape& target = {});
  NodeId record(Op op, std::initializer_list<NodeId> inputs, const Shape& target = {});

  NodeId add(NodeId a, NodeId b) { return record(Op::add, {a, b}); }
  NodeId sub(NodeId a, NodeId b) { return record(Op::sub, {a, b}); }
  NodeId mul(NodeId a, NodeId b) { return record(Op::mul, {a, b}); }
  NodeId matmul(NodeId a, NodeId b) { return record(Op::matmul, {a, b}); }
  NodeId bias_add(NodeId x, NodeId bias) { return record(Op::bias_add, {x, bias}); }
  NodeId tanh(NodeId x) { return record(Op::tanh, {x}); }
  NodeId relu(NodeId x) { return record(Op::relu, {x}); }
  NodeId square(NodeId x) { return record(Op::square, {x}); }
  NodeId sum(NodeId x) { return record(Op::sum, {x}); }
  NodeId mean(NodeId x) { return record(Op::mean, {x}); }
  NodeId reshape(NodeId x, const Shape& shape) { return record(Op::reshape, {x}, shape); }

  const Tensor& value(NodeId id) const;
  Op op(NodeId id) const;
  std::span<const NodeId> parents(NodeId id) const;
  std::size_t size() const noexcept { return nodes_.size(); }

  /// At most one hook per node; the hook's frozen tensor (if any) must have
  /// the node's shape.
  void register_hook(NodeId id, GradientHook hook);
  bool has_hook(NodeId id) const;

  /// Reverse pass from a single-element root.
  Gradients backward(NodeId root) const;

 private:
  struct Node {
    Op op;
    std::vector<NodeId> parents;
    Tensor value;
    std::optional<GradientHook> hook;
  };

  const Node& node(NodeId id) const;

  std::vector<Node> nodes_;
};

}  // namespace mchain
