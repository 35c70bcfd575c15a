#include <gtest/gtest.h>

#include <cmath>

#include "mchain/experiments.hpp"

using namespace mchain;

// Baselines pinned from the first verified run of the default recipes.

TEST(Regression, PlainToyFinalEvalLoss) {
  TrainConfig c = TrainConfig::toy_defaults();
  c.variants = {Variant::plain};
  const RunLog log = run_toy(c);
  EXPECT_NEAR(log.series.at(0).final_eval_loss, 123.85443246463467, 1e-9 * 123.85443246463467);
}

TEST(Regression, ShallowDepthSweepVariantsAgree) {
  TrainConfig c = TrainConfig::depth_sweep_defaults();
  c.depths = {2};
  c.num_seeds = 5;
  const RunLog log = run_depth_sweep(c);
  double skip = 0.0, markov = 0.0;
  for (const auto& s : log.series) (s.kind == Variant::markov ? markov : skip) += *s.test_accuracy / 5.0;
  EXPECT_NEAR(markov, skip, 0.02);
  EXPECT_NEAR(skip, 0.6508, 1e-12);
}
