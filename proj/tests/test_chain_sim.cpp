#include <gtest/gtest.h>

#include <cmath>
#include <fstream>

#include "json.hpp"
#include "mchain/chain_sim.hpp"

using namespace mchain;

namespace {

nlohmann::json oracle() {
  std::ifstream in(MCHAIN_ORACLE_PATH);
  return nlohmann::json::parse(in);
}

SimConfig small(double sigma, double kappa) {
  SimConfig c;
  c.sigma = sigma;
  c.kappa = kappa;
  c.L = 6;
  c.trials = 500;
  return c;
}

}  // namespace

TEST(Lemma3Bound, Examples) {
  SimConfig c;
  c.a = 1.0;
  c.L = 10;
  c.Z = 1.0;
  c.delta = 0.5;
  EXPECT_NEAR(lemma3_bound(c), oracle().at("lemma3_bound_a1_L10_Z1_d05").get<double>(), 1e-12);
  EXPECT_NEAR(lemma3_bound(c), 1.84207, 1e-5);
  SimConfig c2 = c;
  c2.Z = 2.0;
  EXPECT_NEAR(lemma3_bound(c2), 4.0 * lemma3_bound(c), 1e-12);
  double prev = lemma3_bound(c);
  for (std::size_t L : {100u, 1000u, 100000u}) {
    c.L = L;
    EXPECT_LT(lemma3_bound(c), prev);
    prev = lemma3_bound(c);
  }
  EXPECT_LT(prev, 1e-3);
  c.L = 1;
  EXPECT_THROW(lemma3_bound(c), std::invalid_argument);
}

TEST(CheckCondition, Examples) {
  SimConfig c;
  c.a = 1.0;
  c.Z = 1.0;
  c.delta = 1.0;
  c.D = 10.0;
  c.L = 10;
  EXPECT_FALSE(check_condition(c));
  c.L = 50;
  EXPECT_TRUE(check_condition(c));
  const auto o = oracle();
  EXPECT_LT(o.at("condition_lhs_L10").get<double>(), o.at("condition_rhs_D10_d1_a1_Z1").get<double>());
  EXPECT_GE(o.at("condition_lhs_L50").get<double>(), o.at("condition_rhs_D10_d1_a1_Z1").get<double>());
  c.D = 0.0;
  for (std::size_t L = 2; L < 40; ++L) {
    c.L = L;
    EXPECT_TRUE(check_condition(c));
  }
}

TEST(Simulate, FullCorrectionWithoutNoiseHitsTarget) {
  const SimResult r = simulate_chain(small(0.0, 1.0));
  ASSERT_EQ(r.per_step_mse.size(), 7u);
  EXPECT_GT(r.per_step_mse[0], 0.0);
  for (std::size_t l = 1; l < r.per_step_mse.size(); ++l) EXPECT_EQ(r.per_step_mse[l], 0.0);
  EXPECT_EQ(r.empirical_mse, 0.0);
  EXPECT_TRUE(r.passed());
}

TEST(Simulate, HalfCorrectionContractsGeometrically) {
  const SimResult r = simulate_chain(small(0.0, 0.5));
  const auto want = oracle().at("geometric_contraction_k05").get<std::vector<double>>();
  for (std::size_t l = 0; l < want.size(); ++l) {
    EXPECT_NEAR(r.per_step_mse[l], r.per_step_mse[0] * want[l], 1e-12 * r.per_step_mse[0]);
  }
}

TEST(Simulate, StartsInsideTheBall) {
  const SimResult r = simulate_chain(small(0.0, 0.5));
  EXPECT_LE(r.per_step_mse[0], 1.0);
  EXPECT_EQ(r.exit_fraction, 0.0);
}

TEST(Simulate, WorkerCountDoesNotChangeResults) {
  SimConfig c;
  c.dim = 4;
  c.L = 32;
  c.trials = 3001;
  c.sigma = 0.3;
  const std::string one = sim_result_csv(simulate_chain(c, 1));
  EXPECT_EQ(one, sim_result_csv(simulate_chain(c, 3)));
  EXPECT_EQ(one, sim_result_csv(simulate_chain(c, 8)));
}

TEST(Simulate, NoisyConfigWithinBound) {
  SimConfig c;
  c.dim = 2;
  c.L = 64;
  c.delta = 0.5;
  c.sigma = 0.1;
  c.trials = 10000;
  ASSERT_TRUE(check_condition(c));
  const SimResult r = simulate_chain(c);
  EXPECT_GE(r.empirical_mse, 0.0);
  EXPECT_LE(r.empirical_mse, r.bound);
}

TEST(Simulate, ValidatesConfig) {
  SimConfig c;
  c.kappa = 1.5;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c.kappa.reset();
  c.delta = 0.3;
  EXPECT_EQ(c.effective_kappa(), 0.3);
  c.delta = 2.0;
  EXPECT_EQ(c.effective_kappa(), 1.0);
}

TEST(Sweep, CoversTheRequiredGrid) {
  const auto cfgs = default_sweep(0, 10000);
  EXPECT_GE(cfgs.size(), 20u);
  for (const auto& c : cfgs) {
    EXPECT_TRUE(c.dim == 2 || c.dim == 16);
    EXPECT_TRUE(c.delta == 0.1 || c.delta == 0.5);
    EXPECT_TRUE(c.a == 0.5 || c.a == 1.0);
    EXPECT_GE(c.L, 4u);
    EXPECT_LE(c.L, 256u);
    EXPECT_EQ(c.trials, 10000u);
    EXPECT_LE(c.sigma * c.sigma * static_cast<double>(c.dim), c.Z * c.Z);
  }
}
