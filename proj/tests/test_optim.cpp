#include <gtest/gtest.h>

#include <fstream>

#include "json.hpp"
#include "mchain/optim.hpp"

using namespace mchain;

namespace {

Params single(double v) { return Params({{"p", Tensor::scalar(v)}}); }
GradMap grad(double g) { return GradMap{{"p", Tensor::scalar(g)}}; }

}  // namespace

TEST(Sgd, VanillaStep) {
  OptimState s = make_optim_state(single(1.0), {0.1, 0.0, 0.0});
  EXPECT_NEAR(sgd_step(single(1.0), grad(0.5), s).get("p").item(), 0.95, 1e-15);
}

TEST(Sgd, MomentumUnrollMatchesOracle) {
  std::ifstream in(MCHAIN_ORACLE_PATH);
  const auto oracle = nlohmann::json::parse(in);

  OptimState s = make_optim_state(single(1.0), {0.1, 0.9, 0.0});
  Params p = single(1.0);
  std::vector<double> got;
  for (int i = 0; i < 2; ++i) got.push_back((p = sgd_step(p, grad(1.0), s)).get("p").item());
  const auto want = oracle.at("sgd_momentum_unroll").get<std::vector<double>>();
  EXPECT_NEAR(got[0], want[0], 1e-15);
  EXPECT_NEAR(got[1], want[1], 1e-15);
  EXPECT_NEAR(s.buffers.at(0).item(), 1.9, 1e-15);

  OptimState s2 = make_optim_state(single(2.0), {0.05, 0.5, 0.1});
  Params p2 = single(2.0);
  const auto want2 = oracle.at("sgd_wd_unroll").get<std::vector<double>>();
  const double gs[] = {0.5, -0.25, 1.0};
  for (int i = 0; i < 3; ++i) {
    p2 = sgd_step(p2, grad(gs[i]), s2);
    EXPECT_NEAR(p2.get("p").item(), want2[i], 1e-14);
  }
}

TEST(Sgd, ZeroGradientIsAFixedPoint) {
  OptimState s = make_optim_state(single(0.3), {0.1, 0.9, 0.0});
  EXPECT_TRUE(sgd_step(single(0.3), grad(0.0), s).bitwise_equal(single(0.3)));
}

TEST(Sgd, ValidatesHyperparametersAndGradients) {
  EXPECT_THROW(make_optim_state(single(1), {0.0, 0.0, 0.0}), std::invalid_argument);
  EXPECT_THROW(make_optim_state(single(1), {0.1, 1.0, 0.0}), std::invalid_argument);
  EXPECT_THROW(make_optim_state(single(1), {0.1, 0.5, -1.0}), std::invalid_argument);
  OptimState s = make_optim_state(single(1), {0.1, 0.0, 0.0});
  EXPECT_THROW(sgd_step(single(1), GradMap{}, s), std::invalid_argument);
}

TEST(StepDecay, Examples) {
  const std::vector<long> m = {100, 150};
  EXPECT_EQ(step_decay_lr(0.1, 99, m, 0.1), 0.1);
  EXPECT_NEAR(step_decay_lr(0.1, 120, m, 0.1), 0.01, 1e-17);
  EXPECT_NEAR(step_decay_lr(0.1, 200, m, 0.1), 0.001, 1e-18);
  EXPECT_THROW(step_decay_lr(0.1, 5, {150, 100}, 0.1), std::invalid_argument);
  EXPECT_THROW(step_decay_lr(0.1, 5, m, 0.0), std::invalid_argument);
}
