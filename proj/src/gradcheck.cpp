#include "mchain/gradcheck.hpp"

#include <algorithm>
#include <cstring>
#include <functional>
#include <random>
#include <sstream>

#include "mchain/experiments.hpp"
#include "mchain/finite_diff.hpp"
#include "mchain/nn.hpp"
#include "mchain/tape.hpp"

namespace mchain {

bool GradcheckReport::passed() const {
  return !entries.empty() && std::all_of(entries.begin(), entries.end(), [](const auto& e) { return e.passed; });
}

namespace {

using Builder = std::function<NodeId(Tape&, const std::vector<NodeId>&)>;

Tensor random_tensor(std::mt19937_64& rng, Shape shape) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> v(shape_size(shape));
  for (double& x : v) x = normal(rng);
  return Tensor(std::move(shape), std::move(v));
}

double eval_root(const Builder& build, const std::vector<Tensor>& inputs) {
  Tape tape;
  std::vector<NodeId> leaves;
  for (const auto& t : inputs) leaves.push_back(tape.leaf(t));
  return tape.value(build(tape, leaves)).item();
}

// Worst relative error over all inputs of one case.
double check_case(const Builder& build, const std::vector<Tensor>& inputs) {
  Tape tape;
  std::vector<NodeId> leaves;
  for (const auto& t : inputs) leaves.push_back(tape.leaf(t));
  const Gradients grads = tape.backward(build(tape, leaves));
  double worst = 0.0;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    auto f = [&](const Tensor& probe) {
      std::vector<Tensor> perturbed = inputs;
      perturbed[i] = probe;
      return eval_root(build, perturbed);
    };
    const Tensor numeric = finite_difference_grad(f, inputs[i], kGradcheckStep);
    const Tensor* analytic = grads.find(leaves[i]);
    const Tensor zero = Tensor::zeros(inputs[i].shape());
    worst = std::max(worst, relative_error(analytic ? *analytic : zero, numeric));
  }
  return worst;
}

// Reduces a non-scalar node with fixed random weights so every output
// element contributes a distinct sensitivity.
NodeId weighted_sum(Tape& tape, NodeId x, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const NodeId w = tape.leaf(random_tensor(rng, tape.value(x).shape()));
  return tape.sum(tape.mul(x, w));
}

struct PrimitiveCase {
  std::string name;
  std::function<std::vector<Tensor>(std::mt19937_64&)> inputs;
  Builder build;
};

std::vector<PrimitiveCase> primitive_cases() {
  auto dims = [](std::mt19937_64& rng) {
    std::uniform_int_distribution<std::size_t> d(1, 4);
    return std::pair{d(rng), d(rng)};
  };
  auto unary = [dims](std::string name, NodeId (Tape::*op)(NodeId)) {
    return PrimitiveCase{
        std::move(name),
        [dims](std::mt19937_64& rng) {
          auto [m, n] = dims(rng);
          return std::vector<Tensor>{random_tensor(rng, {m, n})};
        },
        [op](Tape& t, const std::vector<NodeId>& in) { return weighted_sum(t, (t.*op)(in[0]), 7); }};
  };
  auto binary = [dims](std::string name, NodeId (Tape::*op)(NodeId, NodeId)) {
    return PrimitiveCase{
        std::move(name),
        [dims](std::mt19937_64& rng) {
          auto [m, n] = dims(rng);
          return std::vector<Tensor>{random_tensor(rng, {m, n}), random_tensor(rng, {m, n})};
        },
        [op](Tape& t, const std::vector<NodeId>& in) { return weighted_sum(t, (t.*op)(in[0], in[1]), 11); }};
  };

  std::vector<PrimitiveCase> cases;
  cases.push_back(binary("add", &Tape::add));
  cases.push_back(binary("sub", &Tape::sub));
  cases.push_back(binary("mul", &Tape::mul));
  cases.push_back({"matmul",
                   [](std::mt19937_64& rng) {
                     std::uniform_int_distribution<std::size_t> d(1, 4);
                     const std::size_t m = d(rng), k = d(rng), n = d(rng);
                     return std::vector<Tensor>{random_tensor(rng, {m, k}), random_tensor(rng, {k, n})};
                   },
                   [](Tape& t, const std::vector<NodeId>& in) { return weighted_sum(t, t.matmul(in[0], in[1]), 13); }});
  cases.push_back({"bias_add",
                   [dims](std::mt19937_64& rng) {
                     auto [m, n] = dims(rng);
                     return std::vector<Tensor>{random_tensor(rng, {m, n}), random_tensor(rng, {n})};
                   },
                   [](Tape& t, const std::vector<NodeId>& in) {
                     return weighted_sum(t, t.bias_add(in[0], in[1]), 17);
                   }});
  cases.push_back(unary("tanh", &Tape::tanh));
  cases.push_back(unary("relu", &Tape::relu));
  cases.push_back(unary("square", &Tape::square));
  cases.push_back({"sum",
                   [dims](std::mt19937_64& rng) {
                     auto [m, n] = dims(rng);
                     return std::vector<Tensor>{random_tensor(rng, {m, n})};
                   },
                   [](Tape& t, const std::vector<NodeId>& in) { return t.sum(t.square(in[0])); }});
  cases.push_back({"mean",
                   [dims](std::mt19937_64& rng) {
                     auto [m, n] = dims(rng);
                     return std::vector<Tensor>{random_tensor(rng, {m, n})};
                   },
                   [](Tape& t, const std::vector<NodeId>& in) { return t.mean(t.square(in[0])); }});
  cases.push_back({"reshape",
                   [dims](std::mt19937_64& rng) {
                     auto [m, n] = dims(rng);
                     return std::vector<Tensor>{random_tensor(rng, {m, n})};
                   },
                   [](Tape& t, const std::vector<NodeId>& in) {
                     const Shape& s = t.value(in[0]).shape();
                     return weighted_sum(t, t.reshape(in[0], {s[1], s[0]}), 19);
                   }});
  cases.push_back({"mean(square(matmul))",
                   [](std::mt19937_64& rng) {
                     return std::vector<Tensor>{random_tensor(rng, {2, 3}), random_tensor(rng, {3, 1})};
                   },
                   [](Tape& t, const std::vector<NodeId>& in) {
                     return t.mean(t.square(t.matmul(in[0], in[1])));
                   }});
  return cases;
}

// Loss of the toy model as a function of its flattened parameters.
double toy_model_check(const ModelSpec& spec, const Params& params, const Batch& batch) {
  Tape tape;
  const ForwardResult fwd = forward(spec, params, batch.inputs, tape);
  const Gradients grads = tape.backward(loss_mse(fwd.output, batch.targets, tape));
  const GradMap analytic = param_gradients(params, fwd, grads);

  std::vector<double> flat;
  for (const auto& p : params) flat.insert(flat.end(), p.value.data().begin(), p.value.data().end());
  auto unflatten = [&](const Tensor& v) {
    std::vector<NamedTensor> out;
    std::size_t off = 0;
    for (const auto& p : params) {
      const auto n = p.value.size();
      out.push_back({p.name, Tensor(p.value.shape(), std::vector<double>(v.data().begin() + off,
                                                                         v.data().begin() + off + n))});
      off += n;
    }
    return Params(std::move(out));
  };
  auto loss = [&](const Tensor& v) { return evaluate_mse(spec, unflatten(v), batch); };
  const Tensor numeric = finite_difference_grad(loss, Tensor::vector(flat), kGradcheckStep);

  std::vector<double> a;
  for (const auto& p : params) {
    const Tensor& g = analytic.at(p.name);
    a.insert(a.end(), g.data().begin(), g.data().end());
  }
  return relative_error(Tensor::vector(a), numeric);
}

// Elements where the hooked z gradient differs from g_x + tau * z.
std::size_t hook_mismatches(const ModelSpec& spec, const Params& params, const Batch& batch) {
  Tape tape;
  const ForwardResult fwd = forward(spec, params, batch.inputs, tape);
  const Gradients grads = tape.backward(loss_mse(fwd.output, batch.targets, tape));
  std::size_t bad = 0;
  for (const auto& node : fwd.trace.nodes) {
    const Tensor& gz = grads.at(node.z_node);
    const Tensor& gx = grads.at(node.x_node);
    for (std::size_t i = 0; i < gz.size(); ++i) {
      const double expected = gx[i] + spec.tau * node.z_value[i];
      if (std::memcmp(&expected, &gz.data()[i], sizeof(double)) != 0) ++bad;
    }
  }
  return bad;
}

}  // namespace

GradcheckReport run_gradcheck(std::uint64_t seed, std::size_t cases) {
  GradcheckReport report;
  for (const auto& pc : primitive_cases()) {
    GradcheckEntry e{pc.name, cases, 0.0, kGradcheckTolerance, false};
    for (std::size_t c = 0; c < cases; ++c) {
      std::mt19937_64 rng(seed * 1000003 + c);
      e.max_error = std::max(e.max_error, check_case(pc.build, pc.inputs(rng)));
    }
    e.passed = e.max_error < e.tolerance;
    report.entries.push_back(std::move(e));
  }

  for (Variant v : {Variant::plain, Variant::skip, Variant::markov}) {
    GradcheckEntry e{std::string("toy model (") + to_string(v) + (v == Variant::markov ? ", tau=0)" : ")"), cases,
                     0.0, kGradcheckTolerance, false};
    for (std::size_t c = 0; c < cases; ++c) {
      const ModelSpec spec = toy_model_spec(v, 0.0, seed + c);
      std::mt19937_64 rng(seed * 7919 + c);
      const Batch batch = gen_saddle_batch(rng, 8);
      e.max_error = std::max(e.max_error, toy_model_check(spec, init_params(spec), batch));
    }
    e.passed = e.max_error < e.tolerance;
    report.entries.push_back(std::move(e));
  }

  {
    GradcheckEntry e{"penal hook g_z == g_x + tau*z (bitwise)", cases, 0.0, 0.5, false};
    for (std::size_t c = 0; c < cases; ++c) {
      std::mt19937_64 rng(seed * 104729 + c);
      const Batch batch = gen_saddle_batch(rng, 8);
      const ModelSpec toy = toy_model_spec(Variant::markov, 0.25, seed + c);
      e.max_error += static_cast<double>(hook_mismatches(toy, init_params(toy), batch));
      const ModelSpec deep = residual_mlp_spec(4, 4, Variant::markov, 1e-4, seed + c);
      e.max_error += static_cast<double>(hook_mismatches(deep, init_params(deep), batch));
    }
    e.passed = e.max_error == 0.0;
    report.entries.push_back(std::move(e));
  }
  return report;
}

std::string format_gradcheck(const GradcheckReport& report) {
  std::ostringstream os;
  for (const auto& e : report.entries) {
    os << (e.passed ? "PASS" : "FAIL") << "  " << e.name << "  cases=" << e.cases << "  max_err=" << e.max_error
       << "  tol=" << e.tolerance << '\n';
  }
  os << (report.passed() ? "gradcheck: all checks passed" : "gradcheck: FAILED") << '\n';
  return os.str();
}

}  // namespace mchain
