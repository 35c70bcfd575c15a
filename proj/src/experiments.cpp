#include "mchain/experiments.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>

#include "json.hpp"
#include "mchain/chain_sim.hpp"
#include "mchain/errors.hpp"
#include "mchain/format.hpp"
#include "mchain/svg.hpp"

#ifndef MCHAIN_VERSION
#define MCHAIN_VERSION "dev"
#endif

namespace mchain {

using json = nlohmann::ordered_json;

const char* to_string(Task t) { return t == Task::toy_saddle ? "toy_saddle" : "depth_sweep"; }

const char* file_prefix(Task t) { return t == Task::toy_saddle ? "toy" : "depth-sweep"; }

TrainConfig TrainConfig::toy_defaults() {
  TrainConfig c;
  c.task = Task::toy_saddle;
  c.variants = {Variant::plain, Variant::skip, Variant::markov};
  c.tau = 1e-4;
  c.lr = 0.001;
  c.momentum = 0.98;
  c.batch_size = 32;
  c.steps = 10000;
  c.log_every = 10;
  c.output_dir = "out/toy";
  return c;
}

TrainConfig TrainConfig::depth_sweep_defaults() {
  TrainConfig c;
  c.task = Task::depth_sweep;
  c.variants = {Variant::skip, Variant::markov};
  c.tau = 1e-4;
  c.lr = 0.001;
  c.momentum = 0.9;
  c.batch_size = 64;
  c.steps = 1500;
  c.log_every = 50;
  c.depths = {2, 4, 8, 16, 32};
  c.width = 16;
  c.output_dir = "out/depth-sweep";
  return c;
}

void TrainConfig::validate() const {
  if (variants.empty()) throw ConfigError("config: at least one variant is required");
  if (steps == 0) throw ConfigError("config: steps must be > 0");
  if (batch_size == 0) throw ConfigError("config: batch_size must be > 0");
  if (log_every == 0 || log_every > steps) throw ConfigError("config: log_every must be in [1, steps]");
  if (num_seeds == 0) throw ConfigError("config: num_seeds must be > 0");
  if (!(tau >= 0.0) || !std::isfinite(tau)) throw ConfigError("config: tau must be finite and >= 0");
  if (!(lr > 0.0)) throw ConfigError("config: lr must be > 0");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw ConfigError("config: momentum must be in [0, 1)");
  if (!(weight_decay >= 0.0)) throw ConfigError("config: weight_decay must be >= 0");
  if (task == Task::depth_sweep) {
    if (depths.empty()) throw ConfigError("config: depths must not be empty");
    for (std::size_t d : depths) {
      if (d == 0) throw ConfigError("config: depths must be positive");
    }
    if (width == 0) throw ConfigError("config: width must be > 0");
    if (train_size == 0 || test_size == 0) throw ConfigError("config: dataset sizes must be > 0");
    for (Variant v : variants) {
      if (v == Variant::plain) throw ConfigError("config: depth_sweep trains residual variants only (skip, markov)");
    }
  }
}

namespace {

json config_to_json(const TrainConfig& c) {
  json j;
  j["task"] = to_string(c.task);
  std::vector<std::string> vs;
  for (Variant v : c.variants) vs.emplace_back(to_string(v));
  j["variants"] = vs;
  j["tau"] = c.tau;
  j["lr"] = c.lr;
  j["momentum"] = c.momentum;
  j["weight_decay"] = c.weight_decay;
  j["batch_size"] = c.batch_size;
  j["steps"] = c.steps;
  j["seed"] = c.seed;
  j["num_seeds"] = c.num_seeds;
  j["log_every"] = c.log_every;
  j["output_dir"] = c.output_dir;
  j["activation"] = to_string(c.activation);
  if (c.task == Task::depth_sweep) {
    j["depths"] = c.depths;
    j["width"] = c.width;
    j["train_size"] = c.train_size;
    j["test_size"] = c.test_size;
  }
  return j;
}

}  // namespace

TrainConfig apply_config_json(TrainConfig c, const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config: invalid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ConfigError("config: top level must be a JSON object");
  for (const auto& [key, value] : doc.items()) {
    try {
      if (key == "task") {
        const auto s = value.get<std::string>();
        if (s != to_string(c.task)) {
          throw ConfigError("config: task '" + s + "' does not match the command (" + to_string(c.task) + ")");
        }
      } else if (key == "variants") {
        c.variants.clear();
        for (const auto& v : value) c.variants.push_back(parse_variant(v.get<std::string>()));
      } else if (key == "tau") {
        c.tau = value.get<double>();
      } else if (key == "lr") {
        c.lr = value.get<double>();
      } else if (key == "momentum") {
        c.momentum = value.get<double>();
      } else if (key == "weight_decay") {
        c.weight_decay = value.get<double>();
      } else if (key == "batch_size") {
        c.batch_size = value.get<std::size_t>();
      } else if (key == "steps") {
        c.steps = value.get<std::size_t>();
      } else if (key == "seed") {
        c.seed = value.get<std::uint64_t>();
      } else if (key == "num_seeds") {
        c.num_seeds = value.get<std::size_t>();
      } else if (key == "log_every") {
        c.log_every = value.get<std::size_t>();
      } else if (key == "output_dir") {
        c.output_dir = value.get<std::string>();
      } else if (key == "activation") {
        c.activation = parse_activation(value.get<std::string>());
      } else if (key == "depths") {
        c.depths = value.get<std::vector<std::size_t>>();
      } else if (key == "width") {
        c.width = value.get<std::size_t>();
      } else if (key == "train_size") {
        c.train_size = value.get<std::size_t>();
      } else if (key == "test_size") {
        c.test_size = value.get<std::size_t>();
      } else {
        throw ConfigError("config: unknown key '" + key + "'");
      }
    } catch (const json::exception& e) {
      throw ConfigError("config: bad value for '" + key + "': " + e.what());
    } catch (const ConfigError&) {
      throw;
    } catch (const std::invalid_argument& e) {
      throw ConfigError("config: bad value for '" + key + "': " + e.what());
    }
  }
  return c;
}

SimConfig apply_sim_config_json(SimConfig c, const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config: invalid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ConfigError("config: top level must be a JSON object");
  for (const auto& [key, value] : doc.items()) {
    try {
      if (key == "dim") {
        c.dim = value.get<std::size_t>();
      } else if (key == "L") {
        c.L = value.get<std::size_t>();
      } else if (key == "delta") {
        c.delta = value.get<double>();
      } else if (key == "Z") {
        c.Z = value.get<double>();
      } else if (key == "D") {
        c.D = value.get<double>();
      } else if (key == "a") {
        c.a = value.get<double>();
      } else if (key == "sigma") {
        c.sigma = value.get<double>();
      } else if (key == "kappa") {
        c.kappa = value.get<double>();
      } else if (key == "trials") {
        c.trials = value.get<std::size_t>();
      } else if (key == "seed") {
        c.seed = value.get<std::uint64_t>();
      } else {
        throw ConfigError("config: unknown key '" + key + "'");
      }
    } catch (const json::exception& e) {
      throw ConfigError("config: bad value for '" + key + "': " + e.what());
    }
  }
  return c;
}

double saddle_target(double x, double y) { return x * x - y * y; }

Batch gen_saddle_batch(std::mt19937_64& rng, std::size_t batch_size) {
  if (batch_size == 0) throw std::invalid_argument("gen_saddle_batch: batch_size must be > 0");
  std::uniform_real_distribution<double> coord(-5.0, 5.0);
  std::vector<double> in(batch_size * 2);
  std::vector<double> out(batch_size);
  for (std::size_t i = 0; i < batch_size; ++i) {
    in[2 * i] = coord(rng);
    in[2 * i + 1] = coord(rng);
    out[i] = saddle_target(in[2 * i], in[2 * i + 1]);
  }
  return {Tensor({batch_size, 2}, std::move(in)), Tensor({batch_size, 1}, std::move(out))};
}

Batch saddle_eval_grid() {
  constexpr std::size_t n = 41;
  std::vector<double> in;
  std::vector<double> out;
  in.reserve(n * n * 2);
  out.reserve(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double x = -5.0 + 0.25 * static_cast<double>(i);
      const double y = -5.0 + 0.25 * static_cast<double>(j);
      in.push_back(x);
      in.push_back(y);
      out.push_back(saddle_target(x, y));
    }
  }
  return {Tensor({n * n, 2}, std::move(in)), Tensor({n * n, 1}, std::move(out))};
}

Batch spiral_dataset(std::uint64_t seed, std::size_t n) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> noise(0.0, 0.03);
  std::vector<double> in(n * 2);
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const int cls = static_cast<int>(i % 2);
    const double t = unit(rng);
    const double r = 0.1 + 0.9 * t;
    const double theta = 3.0 * std::numbers::pi * t + cls * std::numbers::pi;
    in[2 * i] = r * std::cos(theta) + noise(rng);
    in[2 * i + 1] = r * std::sin(theta) + noise(rng);
    out[i] = cls == 0 ? 1.0 : -1.0;
  }
  return {Tensor({n, 2}, std::move(in)), Tensor({n, 1}, std::move(out))};
}

std::optional<double> RunSeries::positive_epsilon_fraction(long after_step) const {
  std::size_t total = 0, positive = 0;
  for (const auto& r : rows) {
    if (r.step <= after_step || !r.epsilon_prime) continue;
    ++total;
    if (*r.epsilon_prime > 0.0) ++positive;
  }
  if (total == 0) return std::nullopt;
  return static_cast<double>(positive) / static_cast<double>(total);
}

StepResult train_step(const ModelSpec& spec, const Params& params, const Batch& batch) {
  Tape tape;
  const ForwardResult fwd = forward(spec, params, batch.inputs, tape);
  const NodeId loss = loss_mse(fwd.output, batch.targets, tape);
  const Gradients grads = tape.backward(loss);
  StepResult out;
  out.loss = tape.value(loss).item();
  out.grads = param_gradients(params, fwd, grads);
  if (fwd.trace.length() > 0) out.efficiency = epsilon_prime(collect_chain_gradients(fwd.trace, grads));
  return out;
}

namespace {

Tensor predict(const ModelSpec& spec, const Params& params, const Tensor& inputs) {
  Tape tape;
  const ForwardResult fwd = forward(spec, params, inputs, tape);
  return tape.value(fwd.output);
}

std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t stream) { return trial_seed(seed, stream); }

constexpr std::uint64_t kToyDataStream = 1;
constexpr std::uint64_t kSpiralTrainStream = 2;
constexpr std::uint64_t kSpiralTestStream = 3;
constexpr std::uint64_t kSpiralBatchStream = 4;

Batch gather(const Batch& data, const std::vector<std::size_t>& idx) {
  const std::size_t in_cols = data.inputs.shape()[1];
  std::vector<double> in(idx.size() * in_cols);
  std::vector<double> out(idx.size());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    for (std::size_t c = 0; c < in_cols; ++c) in[i * in_cols + c] = data.inputs[idx[i] * in_cols + c];
    out[i] = data.targets[idx[i]];
  }
  return {Tensor({idx.size(), in_cols}, std::move(in)), Tensor({idx.size(), 1}, std::move(out))};
}

[[noreturn]] void diverged(const std::string& variant, std::uint64_t seed, std::size_t step, const std::exception& e) {
  throw TrainingError("training diverged: variant " + variant + ", seed " + std::to_string(seed) + ", step " +
                      std::to_string(step) + ": " + e.what());
}

}  // namespace

double evaluate_mse(const ModelSpec& spec, const Params& params, const Batch& batch) {
  const Tensor pred = predict(spec, params, batch.inputs);
  require_same_shape(pred, batch.targets, "evaluate_mse");
  double s = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = pred[i] - batch.targets[i];
    s += d * d;
  }
  return s / static_cast<double>(pred.size());
}

double evaluate_sign_accuracy(const ModelSpec& spec, const Params& params, const Batch& batch) {
  const Tensor pred = predict(spec, params, batch.inputs);
  require_same_shape(pred, batch.targets, "evaluate_sign_accuracy");
  std::size_t hit = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if ((pred[i] > 0.0) == (batch.targets[i] > 0.0)) ++hit;
  }
  return static_cast<double>(hit) / static_cast<double>(pred.size());
}

RunLog run_toy(const TrainConfig& cfg) {
  if (cfg.task != Task::toy_saddle) throw ConfigError("run_toy: config task must be toy_saddle");
  cfg.validate();
  const auto started = std::chrono::steady_clock::now();
  RunLog log{cfg, {}, MCHAIN_VERSION, 0.0};
  const Batch grid = saddle_eval_grid();

  for (std::size_t k = 0; k < cfg.num_seeds; ++k) {
    const std::uint64_t seed = cfg.seed + k;
    const std::uint64_t data_seed = stream_seed(seed, kToyDataStream);
    for (Variant v : cfg.variants) {
      ModelSpec spec = toy_model_spec(v, cfg.tau, seed);
      spec.activation = cfg.activation;
      RunSeries series;
      series.variant = to_string(v);
      series.kind = v;
      series.seed = seed;
      series.depth = spec.num_blocks();
      Params params = init_params(spec);
      OptimState state = make_optim_state(params, {cfg.lr, cfg.momentum, cfg.weight_decay});
      std::mt19937_64 data_rng(data_seed);
      for (std::size_t step = 1; step <= cfg.steps; ++step) {
        const Batch batch = gen_saddle_batch(data_rng, cfg.batch_size);
        try {
          const StepResult res = train_step(spec, params, batch);
          params = sgd_step(params, res.grads, state);
          series.final_train_loss = res.loss;
          if (step % cfg.log_every == 0 || step == cfg.steps) {
            LogRow row;
            row.step = static_cast<long>(step);
            row.variant = series.variant;
            row.train_loss = res.loss;
            row.eval_loss = evaluate_mse(spec, params, grid);
            if (res.efficiency) row.epsilon_prime = res.efficiency->epsilon_prime;
            row.lr = state.hyper.lr;
            series.rows.push_back(std::move(row));
          }
        } catch (const NumericError& e) {
          diverged(series.variant, seed, step, e);
        }
      }
      series.final_eval_loss = series.rows.back().eval_loss;
      series.final_params = std::move(params);
      log.series.push_back(std::move(series));
    }
  }
  log.wall_clock_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return log;
}

RunLog run_depth_sweep(const TrainConfig& cfg) {
  if (cfg.task != Task::depth_sweep) throw ConfigError("run_depth_sweep: config task must be depth_sweep");
  cfg.validate();
  const auto started = std::chrono::steady_clock::now();
  RunLog log{cfg, {}, MCHAIN_VERSION, 0.0};
  const std::vector<long> milestones = {static_cast<long>(cfg.steps / 2), static_cast<long>(cfg.steps * 3 / 4)};

  for (std::size_t k = 0; k < cfg.num_seeds; ++k) {
    const std::uint64_t seed = cfg.seed + k;
    const Batch train = spiral_dataset(stream_seed(seed, kSpiralTrainStream), cfg.train_size);
    const Batch test = spiral_dataset(stream_seed(seed, kSpiralTestStream), cfg.test_size);
    for (std::size_t depth : cfg.depths) {
      for (Variant v : cfg.variants) {
        ModelSpec spec = residual_mlp_spec(cfg.width, depth, v, cfg.tau, seed);
        spec.activation = cfg.activation;
        RunSeries series;
        series.variant = std::string(to_string(v)) + "-L" + std::to_string(depth);
        series.kind = v;
        series.seed = seed;
        series.depth = depth;
        Params params = init_params(spec);
        OptimState state = make_optim_state(params, {cfg.lr, cfg.momentum, cfg.weight_decay});
        std::mt19937_64 batch_rng(stream_seed(seed, kSpiralBatchStream));
        std::uniform_int_distribution<std::size_t> pick(0, cfg.train_size - 1);
        std::vector<std::size_t> idx(cfg.batch_size);
        for (std::size_t step = 1; step <= cfg.steps; ++step) {
          for (auto& i : idx) i = pick(batch_rng);
          const Batch batch = gather(train, idx);
          state.hyper.lr = step_decay_lr(cfg.lr, static_cast<long>(step - 1), milestones, 0.1);
          try {
            const StepResult res = train_step(spec, params, batch);
            params = sgd_step(params, res.grads, state);
            series.final_train_loss = res.loss;
            if (step % cfg.log_every == 0 || step == cfg.steps) {
              LogRow row;
              row.step = static_cast<long>(step);
              row.variant = series.variant;
              row.train_loss = res.loss;
              row.eval_loss = evaluate_mse(spec, params, test);
              if (res.efficiency) row.epsilon_prime = res.efficiency->epsilon_prime;
              row.lr = state.hyper.lr;
              series.rows.push_back(std::move(row));
            }
          } catch (const NumericError& e) {
            diverged(series.variant, seed, step, e);
          }
        }
        series.final_eval_loss = series.rows.back().eval_loss;
        series.test_accuracy = evaluate_sign_accuracy(spec, params, test);
        series.final_params = std::move(params);
        log.series.push_back(std::move(series));
      }
    }
  }
  log.wall_clock_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return log;
}

std::string series_csv(const RunSeries& s) {
  std::string out = "step,variant,train_loss,eval_loss,epsilon_prime,lr\n";
  for (const auto& r : s.rows) {
    out += std::to_string(r.step) + ',' + r.variant + ',' + format_double(r.train_loss) + ',' +
           format_double(r.eval_loss) + ',' + (r.epsilon_prime ? format_double(*r.epsilon_prime) : "") + ',' +
           format_double(r.lr) + '\n';
  }
  return out;
}

std::string summary_csv(const RunLog& log) {
  const long after = static_cast<long>(log.config.steps / 5);
  std::string out = "seed,variant,depth,final_train_loss,final_eval_loss,test_accuracy,eps_positive_fraction\n";
  for (const auto& s : log.series) {
    const auto frac = s.positive_epsilon_fraction(after);
    out += std::to_string(s.seed) + ',' + s.variant + ',' + std::to_string(s.depth) + ',' +
           format_double(s.final_train_loss) + ',' + format_double(s.final_eval_loss) + ',' +
           (s.test_accuracy ? format_double(*s.test_accuracy) : "") + ',' + (frac ? format_double(*frac) : "") + '\n';
  }
  return out;
}

std::string run_svg(const RunLog& log) {
  std::vector<PlotSeries> plots;
  PlotOptions opt;
  if (log.config.task == Task::toy_saddle) {
    const std::uint64_t first = log.series.empty() ? 0 : log.series.front().seed;
    for (const auto& s : log.series) {
      if (s.seed != first) continue;
      PlotSeries p{s.variant, {}};
      for (const auto& r : s.rows) p.points.emplace_back(static_cast<double>(r.step), r.eval_loss);
      plots.push_back(std::move(p));
    }
    opt.title = "Saddle task: grid MSE (seed " + std::to_string(first) + ")";
    opt.x_label = "step";
    opt.y_label = "grid MSE";
    opt.log_y = true;
  } else {
    std::map<std::string, std::map<std::size_t, std::pair<double, int>>> acc;
    for (const auto& s : log.series) {
      auto& cell = acc[to_string(s.kind)][s.depth];
      cell.first += s.test_accuracy.value_or(0.0);
      cell.second += 1;
    }
    for (Variant v : log.config.variants) {
      PlotSeries p{to_string(v), {}};
      for (const auto& [depth, cell] : acc[to_string(v)]) {
        p.points.emplace_back(static_cast<double>(depth), cell.first / cell.second);
      }
      plots.push_back(std::move(p));
    }
    opt.title = "Spiral task: mean test accuracy vs chain length";
    opt.x_label = "chain length L";
    opt.y_label = "test accuracy";
  }
  return line_chart_svg(plots, opt);
}

std::string run_metadata_json(const RunLog& log) {
  json j;
  j["config"] = config_to_json(log.config);
  j["code_version"] = log.code_version;
  j["wall_clock_seconds"] = log.wall_clock_seconds;
  return j.dump(2) + "\n";
}

namespace {

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << content;
}

}  // namespace

void write_run_outputs(const RunLog& log, const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  const std::string prefix = file_prefix(log.config.task);
  for (const auto& s : log.series) {
    write_file(out_dir / (prefix + "-" + s.variant + "-seed" + std::to_string(s.seed) + ".csv"), series_csv(s));
  }
  write_file(out_dir / (prefix + "-summary.csv"), summary_csv(log));
  write_file(out_dir / (prefix + ".svg"), run_svg(log));
  write_file(out_dir / (prefix + "-run.json"), run_metadata_json(log));
}

}  // namespace mchain
