#pragma once

#include <vector>

#include "mchain/nn.hpp"

namespace mchain {

struct SgdHyper {
  double lr = 0.001;
  double momentum = 0.0;
  double weight_decay = 0.0;
};

/// Momentum buffers (one per parameter, in Params order) plus hyper-parameters.
struct OptimState {
  SgdHyper hyper;
  std::vector<Tensor> buffers;
};

/// Zero buffers shaped like `params`. Throws std::invalid_argument unless
/// lr > 0, momentum in [0, 1) and weight_decay >= 0.
OptimState make_optim_state(const Params& params, SgdHyper hyper);

/// One momentum-SGD step in declaration order:
///   g' = g + wd * p;  buf = m * buf + g';  p <- p - lr * buf
/// Throws std::invalid_argument if a parameter has no gradient or shapes differ.
Params sgd_step(const Params& params, const GradMap& grads, OptimState& state);

/// base_lr * gamma^(number of milestones <= step).
double step_decay_lr(double base_lr, long step, const std::vector<long>& milestones, double gamma);

}  // namespace mchain
