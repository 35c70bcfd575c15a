#include "mchain/tape.hpp"

#include <cmath>
#include <string>

#include "mchain/errors.hpp"

namespace mchain {

const char* op_name(Op op) {
  switch (op) {
    case Op::leaf: return "leaf";
    case Op::add: return "add";
    case Op::sub: return "sub";
    case Op::mul: return "mul";
    case Op::matmul: return "matmul";
    case Op::bias_add: return "bias_add";
    case Op::tanh: return "tanh";
    case Op::relu: return "relu";
    case Op::square: return "square";
    case Op::sum: return "sum";
    case Op::mean: return "mean";
    case Op::reshape: return "reshape";
  }
  return "?";
}

namespace {

struct HookApplier {
  const Tensor& grad;

  Tensor operator()(const PenalConnection& h) const {
    if (h.frozen_z.shape() != grad.shape()) {
      throw TapeError("penal connection: frozen z has shape " + shape_to_string(h.frozen_z.shape()) +
                      " but gradient has shape " + shape_to_string(grad.shape()));
    }
    // g + 0*z would turn a -0.0 gradient into +0.0.
    if (h.tau == 0.0) return grad;
    std::vector<double> out(grad.size());
    const auto g = grad.data();
    const auto z = h.frozen_z.data();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = g[i] + h.tau * z[i];
    return Tensor(grad.shape(), std::move(out));
  }

  Tensor operator()(const Probe&) const { return grad; }
};

[[noreturn]] void shape_fail(Op op, const Tensor& a, const Tensor& b) {
  throw ShapeError(std::string(op_name(op)) + ": incompatible shapes " + shape_to_string(a.shape()) + " and " +
                   shape_to_string(b.shape()));
}

std::size_t expected_arity(Op op) {
  switch (op) {
    case Op::leaf: return 0;
    case Op::add:
    case Op::sub:
    case Op::mul:
    case Op::matmul:
    case Op::bias_add: return 2;
    default: return 1;
  }
}

Tensor checked(Op op, Shape shape, std::vector<double> data) {
  for (double v : data) {
    if (!std::isfinite(v)) throw NumericError(std::string(op_name(op)) + ": numeric overflow (non-finite result)");
  }
  return Tensor(std::move(shape), std::move(data));
}

Tensor forward_value(Op op, const Tensor* const* in, const Shape& target) {
  switch (op) {
    case Op::add:
    case Op::sub:
    case Op::mul: {
      const Tensor& a = *in[0];
      const Tensor& b = *in[1];
      if (a.shape() != b.shape()) shape_fail(op, a, b);
      std::vector<double> out(a.size());
      for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = op == Op::add ? a[i] + b[i] : op == Op::sub ? a[i] - b[i] : a[i] * b[i];
      }
      return checked(op, a.shape(), std::move(out));
    }
    case Op::matmul: {
      const Tensor& a = *in[0];
      const Tensor& b = *in[1];
      if (a.rank() != 2 || b.rank() != 2 || a.shape()[1] != b.shape()[0]) shape_fail(op, a, b);
      const std::size_t m = a.shape()[0], k = a.shape()[1], n = b.shape()[1];
      std::vector<double> out(m * n, 0.0);
      const auto A = a.data();
      const auto B = b.data();
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t p = 0; p < k; ++p) {
          const double aip = A[i * k + p];
          for (std::size_t j = 0; j < n; ++j) out[i * n + j] += aip * B[p * n + j];
        }
      }
      return checked(op, {m, n}, std::move(out));
    }
    case Op::bias_add: {
      const Tensor& x = *in[0];
      const Tensor& b = *in[1];
      if (x.rank() != 2 || b.rank() != 1 || b.shape()[0] != x.shape()[1]) shape_fail(op, x, b);
      const std::size_t m = x.shape()[0], n = x.shape()[1];
      std::vector<double> out(m * n);
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) out[i * n + j] = x[i * n + j] + b[j];
      }
      return checked(op, x.shape(), std::move(out));
    }
    case Op::tanh:
    case Op::relu:
    case Op::square: {
      const Tensor& x = *in[0];
      std::vector<double> out(x.size());
      for (std::size_t i = 0; i < out.size(); ++i) {
        const double v = x[i];
        out[i] = op == Op::tanh ? std::tanh(v) : op == Op::relu ? (v > 0.0 ? v : 0.0) : v * v;
      }
      return checked(op, x.shape(), std::move(out));
    }
    case Op::sum:
    case Op::mean: {
      const Tensor& x = *in[0];
      double s = 0.0;
      for (double v : x.data()) s += v;
      if (op == Op::mean) s /= static_cast<double>(x.size());
      return checked(op, {1}, {s});
    }
    case Op::reshape: {
      const Tensor& x = *in[0];
      if (shape_size(target) != x.size() || target.empty()) {
        throw ShapeError("reshape: cannot reshape " + shape_to_string(x.shape()) + " to " + shape_to_string(target));
      }
      return x.reshaped(target);
    }
    case Op::leaf: break;
  }
  throw TapeError("record: leaf nodes are created with Tape::leaf");
}

}  // namespace

Tensor apply_hook(const GradientHook& hook, const Tensor& grad) { return std::visit(HookApplier{grad}, hook); }

Gradients::Gradients(std::vector<std::optional<Tensor>> grads, std::vector<ProbeCapture> probes,
                     std::size_t hook_calls)
    : grads_(std::move(grads)), probes_(std::move(probes)), hook_calls_(hook_calls) {}

bool Gradients::has(NodeId id) const noexcept { return find(id) != nullptr; }

const Tensor* Gradients::find(NodeId id) const noexcept {
  if (id.index >= grads_.size() || !grads_[id.index]) return nullptr;
  return &*grads_[id.index];
}

const Tensor& Gradients::at(NodeId id) const {
  const Tensor* g = find(id);
  if (!g) throw TapeError("no gradient recorded for node " + std::to_string(id.index));
  return *g;
}

const Tensor* Gradients::probe(std::size_t sink) const noexcept {
  for (const auto& p : probes_) {
    if (p.sink == sink) return &p.grad;
  }
  return nullptr;
}

NodeId Tape::leaf(Tensor value) {
  nodes_.push_back(Node{Op::leaf, {}, std::move(value), std::nullopt});
  return NodeId{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

NodeId Tape::record(Op op, std::initializer_list<NodeId> inputs, const Shape& target) {
  return record(op, std::span<const NodeId>(inputs.begin(), inputs.size()), target);
}

NodeId Tape::record(Op op, std::span<const NodeId> inputs, const Shape& target) {
  if (inputs.size() != expected_arity(op)) {
    throw TapeError(std::string(op_name(op)) + ": expected " + std::to_string(expected_arity(op)) + " inputs, got " +
                    std::to_string(inputs.size()));
  }
  const Tensor* values[2] = {nullptr, nullptr};
  for (std::size_t i = 0; i < inputs.size(); ++i) values[i] = &node(inputs[i]).value;
  Tensor out = forward_value(op, values, target);
  nodes_.push_back(Node{op, std::vector<NodeId>(inputs.begin(), inputs.end()), std::move(out), std::nullopt});
  return NodeId{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

const Tape::Node& Tape::node(NodeId id) const {
  if (id.index >= nodes_.size()) throw TapeError("unknown node id " + std::to_string(id.index));
  return nodes_[id.index];
}

const Tensor& Tape::value(NodeId id) const { return node(id).value; }

Op Tape::op(NodeId id) const { return node(id).op; }

std::span<const NodeId> Tape::parents(NodeId id) const { return node(id).parents; }

void Tape::register_hook(NodeId id, GradientHook hook) {
  const Node& n = node(id);
  if (n.hook) throw TapeError("node " + std::to_string(id.index) + " already has a gradient hook");
  if (const auto* pc = std::get_if<PenalConnection>(&hook)) {
    if (pc->frozen_z.shape() != n.value.shape()) {
      throw TapeError("penal connection: frozen z shape " + shape_to_string(pc->frozen_z.shape()) +
                      " does not match node shape " + shape_to_string(n.value.shape()));
    }
    if (!(pc->tau >= 0.0)) throw TapeError("penal connection: tau must be non-negative");
  }
  nodes_[id.index].hook = std::move(hook);
}

bool Tape::has_hook(NodeId id) const { return node(id).hook.has_value(); }

Gradients Tape::backward(NodeId root) const {
  const Node& root_node = node(root);
  if (root_node.value.size() != 1) {
    throw TapeError("backward: root must be a scalar, got shape " + shape_to_string(root_node.value.shape()));
  }

  const std::size_t count = static_cast<std::size_t>(root.index) + 1;
  std::vector<std::vector<double>> acc(count);
  std::vector<std::optional<Tensor>> grads(nodes_.size());
  std::vector<ProbeCapture> probes;
  std::size_t hook_calls = 0;

  acc[root.index].assign(1, 1.0);

  auto slot = [&](NodeId p) -> std::vector<double>& {
    auto& buf = acc[p.index];
    if (buf.empty()) buf.assign(nodes_[p.index].value.size(), 0.0);
    return buf;
  };

  for (std::size_t idx = count; idx-- > 0;) {
    if (acc[idx].empty()) continue;
    const Node& n = nodes_[idx];
    Tensor g = checked(n.op, n.value.shape(), std::move(acc[idx]));
    acc[idx].clear();
    acc[idx].shrink_to_fit();

    if (n.hook) {
      g = apply_hook(*n.hook, g);
      ++hook_calls;
      if (const auto* pr = std::get_if<Probe>(&*n.hook)) {
        probes.push_back(ProbeCapture{pr->sink, NodeId{static_cast<std::uint32_t>(idx)}, g});
      }
    }

    const auto G = g.data();
    switch (n.op) {
      case Op::leaf: break;
      case Op::add:
      case Op::sub: {
        auto& da = slot(n.parents[0]);
        for (std::size_t i = 0; i < G.size(); ++i) da[i] += G[i];
        auto& db = slot(n.parents[1]);
        if (n.op == Op::add) {
          for (std::size_t i = 0; i < G.size(); ++i) db[i] += G[i];
        } else {
          for (std::size_t i = 0; i < G.size(); ++i) db[i] -= G[i];
        }
        break;
      }
      case Op::mul: {
        const auto a = nodes_[n.parents[0].index].value.data();
        const auto b = nodes_[n.parents[1].index].value.data();
        auto& da = slot(n.parents[0]);
        for (std::size_t i = 0; i < G.size(); ++i) da[i] += G[i] * b[i];
        auto& db = slot(n.parents[1]);
        for (std::size_t i = 0; i < G.size(); ++i) db[i] += G[i] * a[i];
        break;
      }
      case Op::matmul: {
        const Tensor& A = nodes_[n.parents[0].index].value;
        const Tensor& B = nodes_[n.parents[1].index].value;
        const std::size_t m = A.shape()[0], k = A.shape()[1], cols = B.shape()[1];
        const auto a = A.data();
        const auto b = B.data();
        auto& da = slot(n.parents[0]);
        for (std::size_t i = 0; i < m; ++i) {
          for (std::size_t p = 0; p < k; ++p) {
            double s = 0.0;
            for (std::size_t j = 0; j < cols; ++j) s += G[i * cols + j] * b[p * cols + j];
            da[i * k + p] += s;
          }
        }
        auto& db = slot(n.parents[1]);
        for (std::size_t i = 0; i < m; ++i) {
          for (std::size_t p = 0; p < k; ++p) {
            const double aip = a[i * k + p];
            for (std::size_t j = 0; j < cols; ++j) db[p * cols + j] += aip * G[i * cols + j];
          }
        }
        break;
      }
      case Op::bias_add: {
        const std::size_t cols = n.value.shape()[1];
        auto& dx = slot(n.parents[0]);
        for (std::size_t i = 0; i < G.size(); ++i) dx[i] += G[i];
        auto& db = slot(n.parents[1]);
        for (std::size_t i = 0; i < G.size(); ++i) db[i % cols] += G[i];
        break;
      }
      case Op::tanh: {
        const auto y = n.value.data();
        auto& dx = slot(n.parents[0]);
        for (std::size_t i = 0; i < G.size(); ++i) dx[i] += G[i] * (1.0 - y[i] * y[i]);
        break;
      }
      case Op::relu: {
        const auto x = nodes_[n.parents[0].index].value.data();
        auto& dx = slot(n.parents[0]);
        for (std::size_t i = 0; i < G.size(); ++i) {
          if (x[i] > 0.0) dx[i] += G[i];
        }
        break;
      }
      case Op::square: {
        const auto x = nodes_[n.parents[0].index].value.data();
        auto& dx = slot(n.parents[0]);
        for (std::size_t i = 0; i < G.size(); ++i) dx[i] += G[i] * 2.0 * x[i];
        break;
      }
      case Op::sum:
      case Op::mean: {
        auto& dx = slot(n.parents[0]);
        const double scale = n.op == Op::mean ? G[0] / static_cast<double>(dx.size()) : G[0];
        for (double& v : dx) v += scale;
        break;
      }
      case Op::reshape: {
        auto& dx = slot(n.parents[0]);
        for (std::size_t i = 0; i < G.size(); ++i) dx[i] += G[i];
        break;
      }
    }
    grads[idx] = std::move(g);
  }

  return Gradients(std::move(grads), std::move(probes), hook_calls);
}

}  // namespace mchain
