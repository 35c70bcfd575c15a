#include "mchain/nn.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

#include "mchain/errors.hpp"

namespace mchain {

const char* to_string(Activation a) { return a == Activation::tanh ? "tanh" : "relu"; }

const char* to_string(Variant v) {
  switch (v) {
    case Variant::plain: return "plain";
    case Variant::skip: return "skip";
    case Variant::markov: return "markov";
  }
  return "?";
}

Variant parse_variant(std::string_view s) {
  if (s == "plain") return Variant::plain;
  if (s == "skip") return Variant::skip;
  if (s == "markov") return Variant::markov;
  throw std::invalid_argument("unknown variant '" + std::string(s) + "' (expected plain, skip or markov)");
}

Activation parse_activation(std::string_view s) {
  if (s == "tanh") return Activation::tanh;
  if (s == "relu") return Activation::relu;
  throw std::invalid_argument("unknown activation '" + std::string(s) + "'");
}

void ModelSpec::validate() const {
  if (input_dim == 0 || output_dim == 0) throw std::invalid_argument("model: input and output dims must be positive");
  if (hidden_dims.empty()) throw std::invalid_argument("model: at least one hidden width is required");
  for (std::size_t w : hidden_dims) {
    if (w == 0) throw std::invalid_argument("model: hidden widths must be positive");
  }
  if (!(tau >= 0.0) || !std::isfinite(tau)) throw std::invalid_argument("model: tau must be finite and >= 0");
  if (variant != Variant::markov && tau != 0.0) {
    throw std::invalid_argument(std::string("model: tau is only meaningful for markov, got tau != 0 for ") +
                                to_string(variant));
  }
  if (variant != Variant::plain) {
    for (std::size_t i = 1; i < hidden_dims.size(); ++i) {
      if (hidden_dims[i] != hidden_dims[i - 1]) {
        throw std::invalid_argument("model: identity shortcuts need equal widths, block " + std::to_string(i) +
                                    " maps " + std::to_string(hidden_dims[i - 1]) + " -> " +
                                    std::to_string(hidden_dims[i]));
      }
    }
  }
}

ModelSpec toy_model_spec(Variant variant, double tau, std::uint64_t seed) {
  ModelSpec spec;
  spec.input_dim = 2;
  spec.hidden_dims = {3, 3};
  spec.output_dim = 1;
  spec.variant = variant;
  spec.tau = variant == Variant::markov ? tau : 0.0;
  spec.init.seed = seed;
  spec.chain_input_bias = true;
  return spec;
}

ModelSpec residual_mlp_spec(std::size_t width, std::size_t depth, Variant variant, double tau, std::uint64_t seed) {
  ModelSpec spec;
  spec.input_dim = 2;
  spec.hidden_dims.assign(depth + 1, width);
  spec.output_dim = 1;
  spec.variant = variant;
  spec.tau = variant == Variant::markov ? tau : 0.0;
  spec.init.seed = seed;
  return spec;
}

Params::Params(std::vector<NamedTensor> entries) : entries_(std::move(entries)) {}

const Tensor& Params::get(std::string_view name) const {
  for (const auto& e : entries_) {
    if (e.name == name) return e.value;
  }
  throw std::out_of_range("no parameter named '" + std::string(name) + "'");
}

std::size_t Params::element_count() const {
  std::size_t n = 0;
  for (const auto& e : entries_) n += e.value.size();
  return n;
}

bool Params::bitwise_equal(const Params& other) const noexcept {
  if (entries_.size() != other.entries_.size()) return false;
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (entries_[i].name != other.entries_[i].name || !entries_[i].value.bitwise_equal(other.entries_[i].value)) {
      return false;
    }
  }
  return true;
}

namespace {

std::string block_name(std::size_t i) { return "block" + std::to_string(i); }

}  // namespace

Params init_params(const ModelSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.init.seed);
  std::vector<NamedTensor> out;

  auto linear = [&](const std::string& name, std::size_t fan_in, std::size_t fan_out) {
    std::vector<double> w(fan_in * fan_out, 0.0);
    if (spec.init.scheme == InitScheme::xavier_uniform) {
      const double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
      std::uniform_real_distribution<double> dist(-a, a);
      for (double& v : w) v = dist(rng);
    }
    out.push_back({name + ".weight", Tensor({fan_in, fan_out}, std::move(w))});
    out.push_back({name + ".bias", Tensor::zeros({fan_out})});
  };

  linear("stem", spec.input_dim, spec.hidden_dims[0]);
  if (spec.chain_input_bias) out.push_back({"chain.bias", Tensor::zeros({spec.hidden_dims[0]})});
  for (std::size_t i = 1; i < spec.hidden_dims.size(); ++i) {
    linear(block_name(i), spec.hidden_dims[i - 1], spec.hidden_dims[i]);
  }
  linear("head", spec.hidden_dims.back(), spec.output_dim);
  return Params(std::move(out));
}

bool ChainTrace::complete() const noexcept {
  for (const auto& n : nodes) {
    if (!n.g_x_value) return false;
  }
  return true;
}

ForwardResult forward(const ModelSpec& spec, const Params& params, const Tensor& x0, Tape& tape) {
  spec.validate();
  if (x0.rank() != 2 || x0.shape()[1] != spec.input_dim) {
    throw ShapeError("forward: input shape " + shape_to_string(x0.shape()) + " does not match (batch, " +
                     std::to_string(spec.input_dim) + ")");
  }

  ForwardResult result;
  std::size_t cursor = 0;
  auto next_param = [&](std::string_view expected) {
    if (cursor >= params.size() || params[cursor].name != expected) {
      throw ShapeError("forward: parameter set does not match the model spec at '" + std::string(expected) + "'");
    }
    const NodeId id = tape.leaf(params[cursor].value);
    result.param_nodes.push_back(id);
    ++cursor;
    return id;
  };
  auto activate = [&](NodeId x) { return spec.activation == Activation::tanh ? tape.tanh(x) : tape.relu(x); };
  auto dense = [&](NodeId x, const std::string& name) {
    const NodeId w = next_param(name + ".weight");
    const NodeId b = next_param(name + ".bias");
    return tape.bias_add(tape.matmul(x, w), b);
  };

  NodeId x = tape.leaf(x0);
  x = activate(dense(x, "stem"));
  if (spec.chain_input_bias) x = tape.bias_add(x, next_param("chain.bias"));

  result.trace.x0 = tape.value(x);
  for (std::size_t i = 1; i < spec.hidden_dims.size(); ++i) {
    const NodeId z = activate(dense(x, block_name(i)));
    if (spec.variant == Variant::plain) {
      x = z;
      continue;
    }
    ChainNode node{z, z, tape.value(z), std::nullopt, std::nullopt};
    if (spec.variant == Variant::markov) tape.register_hook(z, PenalConnection{spec.tau, tape.value(z)});
    x = tape.add(x, z);
    node.x_node = x;
    if (spec.variant == Variant::markov) {
      node.probe_sink = i - 1;
      tape.register_hook(x, Probe{i - 1});
    }
    result.trace.nodes.push_back(std::move(node));
  }
  result.trace.x_last = tape.value(x);

  result.output = dense(x, "head");
  if (cursor != params.size()) throw ShapeError("forward: parameter set has unused entries");
  return result;
}

NodeId loss_mse(NodeId pred, const Tensor& target, Tape& tape) {
  if (tape.value(pred).shape() != target.shape()) {
    throw ShapeError("loss_mse: prediction shape " + shape_to_string(tape.value(pred).shape()) +
                     " vs target shape " + shape_to_string(target.shape()));
  }
  const NodeId t = tape.leaf(target);
  return tape.mean(tape.square(tape.sub(pred, t)));
}

ChainTrace collect_chain_gradients(ChainTrace trace, const Gradients& grads) {
  for (std::size_t l = 0; l < trace.nodes.size(); ++l) {
    auto& node = trace.nodes[l];
    const Tensor* g = node.probe_sink ? grads.probe(*node.probe_sink) : nullptr;
    if (!g) g = grads.find(node.x_node);
    if (!g) {
      throw TapeError("collect_chain_gradients: chain node " + std::to_string(l + 1) +
                      " has no gradient (backward not run or graph detached)");
    }
    node.g_x_value = *g;
  }
  return trace;
}

GradMap param_gradients(const Params& params, const ForwardResult& fwd, const Gradients& grads) {
  GradMap out;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const Tensor* g = grads.find(fwd.param_nodes.at(i));
    out.emplace(params[i].name, g ? *g : Tensor::zeros(params[i].value.shape()));
  }
  return out;
}

}  // namespace mchain
