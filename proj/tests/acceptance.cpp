#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <sstream>

#include "CLI11.hpp"
#include "mchain/chain_sim.hpp"
#include "mchain/experiments.hpp"
#include "mchain/format.hpp"
#include "mchain/gradcheck.hpp"
#include "support/properties.hpp"

using namespace mchain;

namespace {

struct Verdict {
  bool passed = false;
  std::string detail;
};

struct Criterion {
  int id;
  const char* title;
  double limit_seconds;
  std::function<Verdict()> run;
};

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string fmt(double v) { return format_double(v); }

Verdict gradients() {
  const GradcheckReport r = run_gradcheck(0, 20);
  double worst = 0.0;
  std::string failing;
  for (const auto& e : r.entries) {
    if (!e.passed) failing += " " + e.name;
    if (e.tolerance == kGradcheckTolerance) worst = std::max(worst, e.max_error);
  }
  return {r.passed(), std::to_string(r.entries.size()) + " checks x 20 cases, worst rel err " + fmt(worst) +
                          (failing.empty() ? "" : ", failing:" + failing)};
}

Verdict hook_exactness() {
  std::size_t nodes = 0, additive_mismatch = 0, subtractive_mismatch = 0;
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  std::vector<ModelSpec> specs = {toy_model_spec(Variant::markov, 1e-4, 0), toy_model_spec(Variant::markov, 0.25, 1)};
  for (std::size_t depth : {2u, 8u, 32u}) {
    specs.push_back(residual_mlp_spec(8, depth, Variant::markov, 1e-4, depth));
    specs.push_back(residual_mlp_spec(8, depth, Variant::markov, 0.3, depth + 100));
  }
  for (const ModelSpec& spec : specs) {
    const Params params = init_params(spec);
    for (int rep = 0; rep < 4; ++rep) {
      std::vector<double> xs(16 * spec.input_dim), ys(16 * spec.output_dim);
      for (double& v : xs) v = u(rng);
      for (double& v : ys) v = u(rng);
      Tape tape;
      const ForwardResult fwd = forward(spec, params, Tensor({16, spec.input_dim}, xs), tape);
      const Gradients g = tape.backward(loss_mse(fwd.output, Tensor({16, spec.output_dim}, ys), tape));
      const ChainTrace trace = collect_chain_gradients(fwd.trace, g);
      for (const ChainNode& n : trace.nodes) {
        ++nodes;
        const Tensor& gz = g.at(n.z_node);
        const Tensor tz = spec.tau * n.z_value;
        if (!gz.bitwise_equal(*n.g_x_value + tz)) ++additive_mismatch;
        if (!(gz - *n.g_x_value).bitwise_equal(tz)) ++subtractive_mismatch;
      }
    }
  }
  return {additive_mismatch == 0 && nodes > 0,
          std::to_string(nodes) + " hooked nodes, g_z != g_x + tau*z in " + std::to_string(additive_mismatch) +
              " (rounding residue of g_z - g_x vs tau*z in " + std::to_string(subtractive_mismatch) + ")"};
}

Verdict zero_tau_equivalence() {
  TrainConfig c = TrainConfig::toy_defaults();
  c.tau = 0.0;
  c.steps = 1000;
  c.log_every = 100;
  c.variants = {Variant::skip, Variant::markov};
  const RunLog log = run_toy(c);
  const bool same = log.series.at(0).final_params.bitwise_equal(log.series.at(1).final_params);
  return {same, std::string("params after 1000 steps ") + (same ? "bitwise identical" : "differ")};
}

Verdict lemma1() {
  const auto r = props::lemma1_suite(2024, 100);
  return {r.failures == 0 && r.cases == 100, std::to_string(r.cases) + " cases, " + std::to_string(r.failures) +
                                                  " failures" +
                                                  (r.failure_notes.empty() ? "" : " (" + r.failure_notes[0] + ")")};
}

Verdict lemma2() {
  const auto r = props::lemma2_suite(2024, 200);
  return {r.failures == 0 && r.cases == 200, std::to_string(r.cases) + " cases, " + std::to_string(r.failures) +
                                                  " failures" +
                                                  (r.failure_notes.empty() ? "" : " (" + r.failure_notes[0] + ")")};
}

Verdict lemma3() {
  std::size_t considered = 0, within = 0;
  double worst_ratio = 0.0;
  const auto cfgs = default_sweep(0, 10000);
  for (const SimConfig& c : cfgs) {
    if (!check_condition(c)) continue;
    ++considered;
    const SimResult r = simulate_chain(c);
    if (r.empirical_mse <= r.bound) ++within;
    worst_ratio = std::max(worst_ratio, r.empirical_mse / r.bound);
  }
  return {considered >= 20 && within == considered,
          std::to_string(cfgs.size()) + " configs, " + std::to_string(considered) + " meet the condition, " +
              std::to_string(within) + " within bound, worst mse/bound " + fmt(worst_ratio)};
}

struct ToyOutcome {
  RunLog log;
  bool computed = false;
};

const RunLog& toy_five_seeds() {
  static ToyOutcome cache;
  if (!cache.computed) {
    TrainConfig c = TrainConfig::toy_defaults();
    c.num_seeds = 5;
    cache.log = run_toy(c);
    cache.computed = true;
  }
  return cache.log;
}

const RunSeries& find_series(const RunLog& log, std::uint64_t seed, Variant v) {
  for (const auto& s : log.series) {
    if (s.seed == seed && s.kind == v) return s;
  }
  throw std::logic_error("missing series");
}

Verdict toy_ordering() {
  const RunLog& log = toy_five_seeds();
  int wins = 0;
  std::string per_seed;
  for (std::uint64_t k = 0; k < 5; ++k) {
    const double p = find_series(log, k, Variant::plain).final_eval_loss;
    const double s = find_series(log, k, Variant::skip).final_eval_loss;
    const double m = find_series(log, k, Variant::markov).final_eval_loss;
    const bool win = m < s && m < p;
    wins += win ? 1 : 0;
    char buf[96];
    std::snprintf(buf, sizeof buf, " s%llu[p=%.2f s=%.2f m=%.2f]", static_cast<unsigned long long>(k), p, s, m);
    per_seed += buf;
  }
  return {wins >= 3, "markov best in " + std::to_string(wins) + "/5 seeds;" + per_seed};
}

Verdict epsilon_dynamics() {
  const RunLog& log = toy_five_seeds();
  int majority = 0;
  std::string per_seed;
  for (std::uint64_t k = 0; k < 5; ++k) {
    const auto f = find_series(log, k, Variant::markov).positive_epsilon_fraction(2000);
    const double frac = f.value_or(0.0);
    if (frac >= 0.6) ++majority;
    char buf[32];
    std::snprintf(buf, sizeof buf, " s%llu=%.3f", static_cast<unsigned long long>(k), frac);
    per_seed += buf;
  }
  return {majority >= 3, std::to_string(majority) + "/5 seeds with eps'>0 in >=60% of logged steps after 2000;" +
                             per_seed};
}

Verdict depth_sweep() {
  TrainConfig c = TrainConfig::depth_sweep_defaults();
  c.depths = {32};
  c.num_seeds = 5;
  const RunLog log = run_depth_sweep(c);
  double skip = 0.0, markov = 0.0;
  for (const auto& s : log.series) (s.kind == Variant::markov ? markov : skip) += s.test_accuracy.value_or(0.0) / 5.0;
  return {markov >= skip, "L=32 mean test accuracy markov " + fmt(markov) + " vs skip " + fmt(skip)};
}

Verdict determinism() {
  const auto dir = std::filesystem::temp_directory_path() / "mchain_acceptance_det";
  std::filesystem::remove_all(dir);
  const TrainConfig c = TrainConfig::toy_defaults();
  write_run_outputs(run_toy(c), dir / "toy1");
  write_run_outputs(run_toy(c), dir / "toy2");
  std::size_t compared = 0, differing = 0;
  for (const auto& e : std::filesystem::directory_iterator(dir / "toy1")) {
    if (e.path().extension() != ".csv") continue;
    ++compared;
    if (slurp(e.path()) != slurp(dir / "toy2" / e.path().filename())) ++differing;
  }
  std::string one, many;
  for (const SimConfig& s : default_sweep(0, 10000)) {
    one += sweep_csv_row(s, simulate_chain(s, 1)) + '\n';
    many += sweep_csv_row(s, simulate_chain(s, 4)) + '\n';
  }
  std::filesystem::remove_all(dir);
  const bool sim_same = one == many;
  return {compared > 0 && differing == 0 && sim_same,
          "toy CSVs " + std::to_string(compared - differing) + "/" + std::to_string(compared) +
              " identical; simulate 1 vs 4 workers " + (sim_same ? "identical" : "differ")};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance suite"};
  std::vector<int> only;
  app.add_option("--criterion", only, "run only these criteria (1-10)");
  CLI11_PARSE(app, argc, argv);

  const std::vector<Criterion> criteria = {
      {1, "gradient correctness", 10.0, gradients},
      {2, "hook exactness", 1.0, hook_exactness},
      {3, "tau=0 equivalence", 5.0, zero_tau_equivalence},
      {4, "lemma 1 property suite", 1.0, lemma1},
      {5, "lemma 2 property suite", 1.0, lemma2},
      {6, "lemma 3 monte-carlo sweep", 60.0, lemma3},
      {7, "toy saddle ordering", 180.0, toy_ordering},
      {8, "toy eps' dynamics", 180.0, epsilon_dynamics},
      {9, "depth-sweep at L=32", 300.0, depth_sweep},
      {10, "determinism", 60.0, determinism},
  };

  int failed = 0;
  for (const Criterion& c : criteria) {
    if (!only.empty() && std::find(only.begin(), only.end(), c.id) == only.end()) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = c.run();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = secs < c.limit_seconds;
    const bool ok = v.passed && in_time;
    failed += ok ? 0 : 1;
    char timing[64];
    std::snprintf(timing, sizeof timing, "%.2fs of %.0fs%s", secs, c.limit_seconds, in_time ? "" : " EXCEEDED");
    std::cout << (ok ? "PASS" : "FAIL") << "  criterion " << c.id << " (" << c.title << "): " << v.detail << " ["
              << timing << "]" << std::endl;
  }
  return failed == 0 ? 0 : 1;
}
