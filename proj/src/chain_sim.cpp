#include "mchain/chain_sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>
#include <thread>

#include "mchain/format.hpp"

namespace mchain {

double SimConfig::effective_kappa() const { return kappa ? *kappa : std::min(1.0, delta); }

void SimConfig::validate() const {
  if (dim < 1) throw std::invalid_argument("sim: dim must be >= 1");
  if (L < 1) throw std::invalid_argument("sim: L must be >= 1");
  if (!(delta > 0.0)) throw std::invalid_argument("sim: delta must be positive");
  if (!(Z > 0.0)) throw std::invalid_argument("sim: Z must be positive");
  if (!(D >= 0.0)) throw std::invalid_argument("sim: D must be non-negative");
  if (!(a > 0.0)) throw std::invalid_argument("sim: a must be positive");
  if (!(sigma >= 0.0)) throw std::invalid_argument("sim: sigma must be non-negative");
  if (trials < 1) throw std::invalid_argument("sim: trials must be >= 1");
  const double k = effective_kappa();
  if (!(k > 0.0 && k <= 1.0)) throw std::invalid_argument("sim: kappa must lie in (0, 1]");
}

double lemma3_bound(const SimConfig& cfg) {
  if (cfg.L < 2) throw std::invalid_argument("lemma3_bound: L must be >= 2 (log L must be positive)");
  const double L = static_cast<double>(cfg.L);
  return (1.0 + cfg.a) * std::log(L) * cfg.Z * cfg.Z / (cfg.delta * cfg.delta * L);
}

bool check_condition(const SimConfig& cfg) {
  if (cfg.L < 2) throw std::invalid_argument("check_condition: L must be >= 2");
  const double L = static_cast<double>(cfg.L);
  const double lhs = std::pow(L, cfg.a) * std::log(L);
  const double rhs = cfg.D * cfg.D * cfg.delta * cfg.delta / ((1.0 + cfg.a) * cfg.Z * cfg.Z);
  return lhs >= rhs;
}

std::uint64_t trial_seed(std::uint64_t seed, std::uint64_t trial) {
  auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  return mix(mix(seed) ^ trial);
}

namespace {

struct TrialOutcome {
  std::size_t clipped = 0;
  bool exited = false;
};

// Target y is the origin; sq_err receives ||x_l||^2 for l = 0..L.
TrialOutcome run_trial(const SimConfig& cfg, std::uint64_t seed, double* sq_err) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  const std::size_t n = cfg.dim;
  const double kappa = cfg.effective_kappa();

  // x_0 uniform in the ball of diameter D around y.
  std::vector<double> x(n);
  double norm = 0.0;
  do {
    norm = 0.0;
    for (double& v : x) {
      v = normal(rng);
      norm += v * v;
    }
  } while (norm == 0.0);
  norm = std::sqrt(norm);
  const double radius = 0.5 * cfg.D * std::pow(uniform(rng), 1.0 / static_cast<double>(n));
  for (double& v : x) v *= radius / norm;

  auto sq = [&] {
    double s = 0.0;
    for (double v : x) s += v * v;
    return s;
  };

  TrialOutcome out;
  const double limit = cfg.D * cfg.D;
  std::vector<double> z(n);
  sq_err[0] = sq();
  for (std::size_t l = 1; l <= cfg.L; ++l) {
    double zz = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      z[i] = -kappa * x[i] + cfg.sigma * normal(rng);
      zz += z[i] * z[i];
    }
    if (zz > cfg.Z * cfg.Z) {
      const double s = cfg.Z / std::sqrt(zz);
      for (double& v : z) v *= s;
      ++out.clipped;
    }
    for (std::size_t i = 0; i < n; ++i) x[i] += z[i];
    sq_err[l] = sq();
    if (sq_err[l] > limit) out.exited = true;
  }
  return out;
}

}  // namespace

SimResult simulate_chain(const SimConfig& cfg, std::size_t workers) {
  cfg.validate();
  const std::size_t steps = cfg.L + 1;
  std::vector<double> sq_err(cfg.trials * steps);
  std::vector<TrialOutcome> outcomes(cfg.trials);

  auto run_range = [&](std::size_t begin, std::size_t end) {
    for (std::size_t t = begin; t < end; ++t) {
      outcomes[t] = run_trial(cfg, trial_seed(cfg.seed, t), &sq_err[t * steps]);
    }
  };

  workers = std::clamp<std::size_t>(workers, 1, cfg.trials);
  if (workers == 1) {
    run_range(0, cfg.trials);
  } else {
    std::vector<std::jthread> pool;
    const std::size_t chunk = (cfg.trials + workers - 1) / workers;
    for (std::size_t w = 0; w < workers; ++w) {
      const std::size_t begin = w * chunk;
      const std::size_t end = std::min(cfg.trials, begin + chunk);
      if (begin < end) pool.emplace_back(run_range, begin, end);
    }
  }

  SimResult result;
  result.per_step_mse.assign(steps, 0.0);
  std::size_t exited = 0;
  for (std::size_t t = 0; t < cfg.trials; ++t) {
    for (std::size_t l = 0; l < steps; ++l) result.per_step_mse[l] += sq_err[t * steps + l];
    result.clipped_draws += outcomes[t].clipped;
    exited += outcomes[t].exited ? 1 : 0;
  }
  for (double& v : result.per_step_mse) v /= static_cast<double>(cfg.trials);
  result.empirical_mse = result.per_step_mse.back();
  result.exit_fraction = static_cast<double>(exited) / static_cast<double>(cfg.trials);
  if (cfg.L >= 2) {
    result.bound = lemma3_bound(cfg);
    result.condition_met = check_condition(cfg);
  } else {
    result.bound = std::numeric_limits<double>::infinity();
    result.condition_met = false;
  }
  return result;
}

std::string sim_result_csv(const SimResult& r) {
  std::string out = "step,mse\n";
  for (std::size_t l = 0; l < r.per_step_mse.size(); ++l) {
    out += std::to_string(l) + ',' + format_double(r.per_step_mse[l]) + '\n';
  }
  out += "empirical_mse,bound,condition_met\n";
  out += format_double(r.empirical_mse) + ',' + format_double(r.bound) + ',' + (r.condition_met ? "true" : "false") +
         '\n';
  return out;
}

std::vector<SimConfig> default_sweep(std::uint64_t seed, std::size_t trials) {
  std::vector<SimConfig> out;
  std::uint64_t k = 0;
  for (std::size_t dim : {2u, 16u}) {
    for (double delta : {0.1, 0.5}) {
      for (double a : {0.5, 1.0}) {
        for (std::size_t L : {4u, 16u, 64u, 256u}) {
          SimConfig c;
          c.dim = dim;
          c.L = L;
          c.delta = delta;
          c.a = a;
          c.Z = 1.0;
          c.D = 2.0;
          c.sigma = std::sqrt(0.05 * c.Z * c.Z / static_cast<double>(dim));
          c.trials = trials;
          c.seed = trial_seed(seed, k++);
          out.push_back(c);
        }
      }
    }
  }
  return out;
}

std::string sweep_csv_header() {
  return "dim,L,delta,Z,D,a,sigma,kappa,trials,empirical_mse,bound,condition_met,clipped_draws,exit_fraction,pass";
}

std::string sweep_csv_row(const SimConfig& c, const SimResult& r) {
  return std::to_string(c.dim) + ',' + std::to_string(c.L) + ',' + format_double(c.delta) + ',' + format_double(c.Z) +
         ',' + format_double(c.D) + ',' + format_double(c.a) + ',' + format_double(c.sigma) + ',' +
         format_double(c.effective_kappa()) + ',' + std::to_string(c.trials) + ',' + format_double(r.empirical_mse) +
         ',' + format_double(r.bound) + ',' + (r.condition_met ? "true" : "false") + ',' +
         std::to_string(r.clipped_draws) + ',' + format_double(r.exit_fraction) + ',' +
         (r.passed() ? "true" : "false");
}

}  // namespace mchain
