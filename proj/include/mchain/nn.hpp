#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mchain/tape.hpp"
#include "mchain/tensor.hpp"

namespace mchain {

enum class Activation { tanh, relu };
enum class Variant { plain, skip, markov };
enum class InitScheme { xavier_uniform, zeros };

const char* to_string(Activation a);
const char* to_string(Variant v);
Variant parse_variant(std::string_view s);
Activation parse_activation(std::string_view s);

struct InitSpec {
  std::uint64_t seed = 0;
  InitScheme scheme = InitScheme::xavier_uniform;
};

/// Residual MLP layout:
///
///   stem:   input_dim -> hidden_dims[0], activation
///   [optional learnable bias added to the chain input]
///   block i (i = 1..k): hidden_dims[i-1] -> hidden_dims[i], activation
///   head:   hidden_dims[k] -> output_dim, linear
///
/// For skip/markov every block is wrapped as a chain node x_l = x_{l-1} + z_l,
/// so all hidden widths must agree. Plain is the same stack without shortcuts.
struct ModelSpec {
  std::size_t input_dim = 0;
  std::vector<std::size_t> hidden_dims;
  std::size_t output_dim = 0;
  Activation activation = Activation::tanh;
  Variant variant = Variant::plain;
  double tau = 0.0;
  InitSpec init;
  bool chain_input_bias = false;

  /// Number of blocks (chain nodes when wrapped in shortcuts).
  std::size_t num_blocks() const { return hidden_dims.empty() ? 0 : hidden_dims.size() - 1; }
  /// Throws std::invalid_argument when the spec is inconsistent.
  void validate() const;
};

/// 2 -> 3 stem, one 3 -> 3 block, 3 -> 1 head, plus a 3-element chain input
/// bias: 9 + 12 + 4 + 3 = 28 parameters.
ModelSpec toy_model_spec(Variant variant, double tau, std::uint64_t seed);

/// Stem 2 -> width, `depth` width -> width blocks, head width -> 1.
ModelSpec residual_mlp_spec(std::size_t width, std::size_t depth, Variant variant, double tau,
                            std::uint64_t seed);

struct NamedTensor {
  std::string name;
  Tensor value;
};

/// Ordered, named parameter set. Order is the declaration order of layers.
class Params {
 public:
  Params() = default;
  explicit Params(std::vector<NamedTensor> entries);

  std::size_t size() const noexcept { return entries_.size(); }
  const NamedTensor& operator[](std::size_t i) const { return entries_[i]; }
  auto begin() const noexcept { return entries_.begin(); }
  auto end() const noexcept { return entries_.end(); }

  /// Throws std::out_of_range for unknown names.
  const Tensor& get(std::string_view name) const;
  std::size_t element_count() const;
  bool bitwise_equal(const Params& other) const noexcept;

 private:
  std::vector<NamedTensor> entries_;
};

using GradMap = std::map<std::string, Tensor, std::less<>>;

/// Deterministic parameters: weights ~ U(-a, a), a = sqrt(6 / (fan_in + fan_out)),
/// biases zero. Only the layer shapes and seed matter, never the variant.
Params init_params(const ModelSpec& spec);

struct ChainNode {
  NodeId z_node;
  NodeId x_node;
  Tensor z_value;
  std::optional<Tensor> g_x_value;
  std::optional<std::size_t> probe_sink;
};

struct ChainTrace {
  std::vector<ChainNode> nodes;
  Tensor x0;
  Tensor x_last;

  std::size_t length() const noexcept { return nodes.size(); }
  bool complete() const noexcept;
};

struct ForwardResult {
  NodeId output;
  ChainTrace trace;
  /// Tape leaf of every parameter, aligned with Params order.
  std::vector<NodeId> param_nodes;
};

/// Records the model on `tape`. For markov, each z_l carries a penal
/// connection hook with a frozen copy of z_l and each x_l a probe whose sink
/// id is the node index l - 1.
ForwardResult forward(const ModelSpec& spec, const Params& params, const Tensor& x0, Tape& tape);

/// Mean of squared error over all elements; returns a scalar node.
NodeId loss_mse(NodeId pred, const Tensor& target, Tape& tape);

/// Fills g_x_value for every node from the probe captures (markov) or the
/// gradient map. Throws TapeError if a node received no gradient.
ChainTrace collect_chain_gradients(ChainTrace trace, const Gradients& grads);

/// Gradients of the parameter leaves, keyed by parameter name.
GradMap param_gradients(const Params& params, const ForwardResult& fwd, const Gradients& grads);

}  // namespace mchain
