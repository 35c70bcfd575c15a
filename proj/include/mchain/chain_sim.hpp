#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace mchain {

/// Parameters of the stochastic forward process x_l = x_{l-1} + z_l with
/// E[z_l] = d_l = kappa (y - x_{l-1}), z_l = d_l + sigma * xi, ||z_l|| <= Z.
struct SimConfig {
  std::size_t dim = 2;
  std::size_t L = 16;
  double delta = 0.5;
  double Z = 1.0;
  double D = 2.0;
  double a = 1.0;
  double sigma = 0.05;
  /// Contraction rate of the mean direction; defaults to min(1, delta).
  std::optional<double> kappa;
  std::size_t trials = 10000;
  std::uint64_t seed = 0;

  double effective_kappa() const;
  /// Throws std::invalid_argument on out-of-range fields.
  void validate() const;
};

struct SimResult {
  double empirical_mse = 0.0;
  double bound = 0.0;
  bool condition_met = false;
  /// Mean ||x_l - y||^2 over trials for l = 0..L.
  std::vector<double> per_step_mse;
  /// Number of z draws rescaled to norm Z.
  std::size_t clipped_draws = 0;
  /// Fraction of trials in which some state left ||x - y|| <= D.
  double exit_fraction = 0.0;

  bool passed() const { return empirical_mse <= bound; }
};

/// (1 + a) ln(L) Z^2 / (delta^2 L). Requires L >= 2.
double lemma3_bound(const SimConfig& cfg);

/// L^a ln(L) >= D^2 delta^2 / ((1 + a) Z^2). Requires L >= 2.
bool check_condition(const SimConfig& cfg);

/// Seed of trial `trial` derived from the run seed (splitmix64 mixing).
std::uint64_t trial_seed(std::uint64_t seed, std::uint64_t trial);

/// Runs cfg.trials independent chains. Each trial owns its RNG stream and the
/// reduction runs in trial order, so the result is bitwise independent of
/// `workers`.
SimResult simulate_chain(const SimConfig& cfg, std::size_t workers = 1);

/// "step,mse" rows for l = 0..L, then an "empirical_mse,bound,condition_met"
/// header and its row.
std::string sim_result_csv(const SimResult& result);

/// Parameter grid over dim in {2, 16}, L in {4, 16, 64, 256},
/// delta in {0.1, 0.5}, a in {0.5, 1}; Z = 1, D = 2 and sigma set so the
/// noise carries 5% of the Z^2 budget.
std::vector<SimConfig> default_sweep(std::uint64_t seed, std::size_t trials);

std::string sweep_csv_header();
std::string sweep_csv_row(const SimConfig& cfg, const SimResult& result);

}  // namespace mchain
