#include "mchain/optim.hpp"

#include <cmath>
#include <stdexcept>

#include "mchain/errors.hpp"

namespace mchain {

OptimState make_optim_state(const Params& params, SgdHyper hyper) {
  if (!(hyper.lr > 0.0)) throw std::invalid_argument("sgd: lr must be positive");
  if (!(hyper.momentum >= 0.0 && hyper.momentum < 1.0)) throw std::invalid_argument("sgd: momentum must be in [0, 1)");
  if (!(hyper.weight_decay >= 0.0)) throw std::invalid_argument("sgd: weight_decay must be >= 0");
  OptimState state{hyper, {}};
  state.buffers.reserve(params.size());
  for (const auto& p : params) state.buffers.push_back(Tensor::zeros(p.value.shape()));
  return state;
}

Params sgd_step(const Params& params, const GradMap& grads, OptimState& state) {
  if (state.buffers.size() != params.size()) throw std::invalid_argument("sgd: optimizer state does not match params");
  const auto [lr, momentum, wd] = state.hyper;
  std::vector<NamedTensor> next;
  next.reserve(params.size());
  std::vector<Tensor> buffers;
  buffers.reserve(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& [name, p] = params[i];
    const auto it = grads.find(name);
    if (it == grads.end()) throw std::invalid_argument("sgd: missing gradient for '" + name + "'");
    const Tensor& g = it->second;
    require_same_shape(p, g, "sgd_step");
    const Tensor& buf = state.buffers[i];
    require_same_shape(p, buf, "sgd_step");

    std::vector<double> nb(p.size());
    std::vector<double> np(p.size());
    for (std::size_t k = 0; k < p.size(); ++k) {
      const double gk = g[k] + wd * p[k];
      nb[k] = momentum * buf[k] + gk;
      np[k] = p[k] - lr * nb[k];
    }
    buffers.emplace_back(p.shape(), std::move(nb));
    next.push_back({name, Tensor(p.shape(), std::move(np))});
  }
  state.buffers = std::move(buffers);
  return Params(std::move(next));
}

double step_decay_lr(double base_lr, long step, const std::vector<long>& milestones, double gamma) {
  if (!(gamma > 0.0 && gamma <= 1.0)) throw std::invalid_argument("step_decay_lr: gamma must be in (0, 1]");
  for (std::size_t i = 1; i < milestones.size(); ++i) {
    if (milestones[i] <= milestones[i - 1]) throw std::invalid_argument("step_decay_lr: milestones must increase");
  }
  double lr = base_lr;
  for (long m : milestones) {
    if (m <= step) lr *= gamma;
  }
  return lr;
}

}  // namespace mchain
