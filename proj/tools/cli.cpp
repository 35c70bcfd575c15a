#include "cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "mchain/chain_sim.hpp"
#include "mchain/experiments.hpp"
#include "mchain/format.hpp"
#include "mchain/gradcheck.hpp"

namespace mchain::cli {

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << content;
}

struct TrainOverrides {
  std::optional<std::string> config;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> num_seeds;
  std::optional<std::string> out;
  std::optional<double> tau;
  std::optional<double> lr;
  std::optional<double> momentum;
  std::optional<double> weight_decay;
  std::optional<std::size_t> batch_size;
  std::optional<std::size_t> steps;
  std::optional<std::size_t> log_every;
  std::vector<std::string> variants;
  std::optional<std::string> activation;
  std::vector<std::size_t> depths;
  std::optional<std::size_t> width;

  void bind(CLI::App* app, bool depth_sweep) {
    app->add_option("--config", config, "JSON file with TrainConfig fields");
    app->add_option("--seed", seed, "base seed");
    app->add_option("--seeds", num_seeds, "number of consecutive seeds to run");
    app->add_option("--out", out, "output directory");
    app->add_option("--tau", tau, "penal connection strength for the markov variant");
    app->add_option("--lr", lr, "learning rate");
    app->add_option("--momentum", momentum, "SGD momentum");
    app->add_option("--weight-decay", weight_decay, "coupled weight decay");
    app->add_option("--batch-size", batch_size, "batch size");
    app->add_option("--steps", steps, "optimizer steps per run");
    app->add_option("--log-every", log_every, "logging cadence in steps");
    app->add_option("--variants", variants, "comma-separated subset of plain,skip,markov")->delimiter(',');
    app->add_option("--activation", activation, "tanh or relu");
    if (depth_sweep) {
      app->add_option("--depths", depths, "comma-separated chain lengths")->delimiter(',');
      app->add_option("--width", width, "hidden width of every chain node");
    }
  }

  TrainConfig resolve(TrainConfig c) const {
    if (config) c = apply_config_json(std::move(c), read_file(*config));
    if (seed) c.seed = *seed;
    if (num_seeds) c.num_seeds = *num_seeds;
    if (out) c.output_dir = *out;
    if (tau) c.tau = *tau;
    if (lr) c.lr = *lr;
    if (momentum) c.momentum = *momentum;
    if (weight_decay) c.weight_decay = *weight_decay;
    if (batch_size) c.batch_size = *batch_size;
    if (steps) c.steps = *steps;
    if (log_every) c.log_every = *log_every;
    try {
      if (!variants.empty()) {
        c.variants.clear();
        for (const auto& v : variants) c.variants.push_back(parse_variant(v));
      }
      if (activation) c.activation = parse_activation(*activation);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
    if (!depths.empty()) c.depths = depths;
    if (width) c.width = *width;
    c.validate();
    return c;
  }
};

struct SimOverrides {
  std::optional<std::string> config;
  std::optional<std::size_t> dim, L, trials;
  std::optional<double> delta, Z, D, a, sigma, kappa;
  std::optional<std::uint64_t> seed;
  std::size_t workers = 1;
  std::string out = "out/simulate";
  bool sweep = false;

  void bind(CLI::App* app) {
    app->add_option("--config", config, "JSON file with SimConfig fields");
    app->add_option("--dim", dim, "state dimension");
    app->add_option("--L", L, "chain length (>= 2)");
    app->add_option("--delta", delta, "convexity margin");
    app->add_option("--Z", Z, "second-moment bound on z");
    app->add_option("--D", D, "diameter of the starting region");
    app->add_option("--a", a, "bound exponent");
    app->add_option("--sigma", sigma, "noise scale");
    app->add_option("--kappa", kappa, "contraction rate of the mean direction (default min(1, delta))");
    app->add_option("--trials", trials, "Monte-Carlo trials");
    app->add_option("--seed", seed, "seed");
    app->add_option("--workers", workers, "worker threads (results do not depend on this)");
    app->add_option("--out", out, "output directory");
    app->add_flag("--sweep", sweep, "run the default parameter sweep instead of a single configuration");
  }

  SimConfig resolve() const {
    SimConfig c;
    if (config) c = apply_sim_config_json(c, read_file(*config));
    if (dim) c.dim = *dim;
    if (L) c.L = *L;
    if (trials) c.trials = *trials;
    if (delta) c.delta = *delta;
    if (Z) c.Z = *Z;
    if (D) c.D = *D;
    if (a) c.a = *a;
    if (sigma) c.sigma = *sigma;
    if (kappa) c.kappa = *kappa;
    if (seed) c.seed = *seed;
    if (c.L < 2) throw ConfigError("simulate: L must be >= 2 (the bound needs log L > 0)");
    try {
      c.validate();
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
    return c;
  }
};

int run_training(const TrainConfig& cfg, std::ostream& out) {
  const RunLog log = cfg.task == Task::toy_saddle ? run_toy(cfg) : run_depth_sweep(cfg);
  write_run_outputs(log, cfg.output_dir);
  const long after = static_cast<long>(cfg.steps / 5);
  for (const auto& s : log.series) {
    out << file_prefix(cfg.task) << " seed=" << s.seed << " variant=" << s.variant
        << " final_eval_loss=" << format_double(s.final_eval_loss);
    if (s.test_accuracy) out << " test_accuracy=" << format_double(*s.test_accuracy);
    if (const auto f = s.positive_epsilon_fraction(after)) out << " eps_positive_fraction=" << format_double(*f);
    out << '\n';
  }
  out << "wrote outputs to " << cfg.output_dir << '\n';
  return kExitOk;
}

int run_simulate(const SimOverrides& o, std::ostream& out) {
  if (o.sweep) {
    const SimConfig base = o.resolve();
    std::string csv = sweep_csv_header() + '\n';
    bool ok = true;
    for (const SimConfig& c : default_sweep(base.seed, base.trials)) {
      const SimResult r = simulate_chain(c, o.workers);
      csv += sweep_csv_row(c, r) + '\n';
      const bool pass = !r.condition_met || r.passed();
      ok = ok && pass;
      out << (pass ? "PASS" : "FAIL") << " dim=" << c.dim << " L=" << c.L << " delta=" << format_double(c.delta)
          << " a=" << format_double(c.a) << " empirical_mse=" << format_double(r.empirical_mse)
          << " bound=" << format_double(r.bound) << " condition_met=" << (r.condition_met ? "true" : "false") << '\n';
    }
    write_file(std::filesystem::path(o.out) / "simulate-sweep.csv", csv);
    return ok ? kExitOk : kExitFailure;
  }
  const SimConfig c = o.resolve();
  const SimResult r = simulate_chain(c, o.workers);
  write_file(std::filesystem::path(o.out) / "simulate.csv", sim_result_csv(r));
  out << (r.passed() ? "PASS" : "FAIL") << " empirical_mse=" << format_double(r.empirical_mse)
      << " bound=" << format_double(r.bound) << " condition_met=" << (r.condition_met ? "true" : "false")
      << " clipped_draws=" << r.clipped_draws << " exit_fraction=" << format_double(r.exit_fraction) << '\n';
  return r.passed() ? kExitOk : kExitFailure;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Residual networks as learnable Markov chains: penal connection experiments"};
  app.require_subcommand(1);

  TrainOverrides toy_opts;
  auto* toy = app.add_subcommand("toy", "train plain/skip/markov nets on the x^2 - y^2 saddle task");
  toy_opts.bind(toy, false);

  TrainOverrides sweep_opts;
  auto* sweep = app.add_subcommand("depth-sweep", "train skip/markov residual MLPs of growing depth on spirals");
  sweep_opts.bind(sweep, true);

  SimOverrides sim_opts;
  auto* simulate = app.add_subcommand("simulate", "Monte-Carlo check of the chain convergence bound");
  sim_opts.bind(simulate);

  std::uint64_t gc_seed = 0;
  std::size_t gc_cases = 20;
  auto* gradcheck = app.add_subcommand("gradcheck", "finite-difference check of every primitive and the toy model");
  gradcheck->add_option("--seed", gc_seed, "seed");
  gradcheck->add_option("--cases", gc_cases, "seeded cases per check");

  // CLI11 consumes a reversed argument list without the program name.
  std::vector<std::string> reversed(args.rbegin(), args.rend());
  if (!reversed.empty()) reversed.pop_back();
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << '\n' << app.help();
    return kExitUsage;
  }

  try {
    if (toy->parsed()) return run_training(toy_opts.resolve(TrainConfig::toy_defaults()), out);
    if (sweep->parsed()) return run_training(sweep_opts.resolve(TrainConfig::depth_sweep_defaults()), out);
    if (simulate->parsed()) return run_simulate(sim_opts, out);
    if (gradcheck->parsed()) {
      if (gc_cases == 0) throw ConfigError("gradcheck: --cases must be > 0");
      const GradcheckReport report = run_gradcheck(gc_seed, gc_cases);
      out << format_gradcheck(report);
      return report.passed() ? kExitOk : kExitFailure;
    }
  } catch (const ConfigError& e) {
    err << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace mchain::cli
