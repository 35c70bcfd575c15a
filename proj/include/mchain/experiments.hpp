#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "mchain/chain_sim.hpp"
#include "mchain/metrics.hpp"
#include "mchain/nn.hpp"
#include "mchain/optim.hpp"

namespace mchain {

/// Bad configuration or command-line input (CLI exit code 2).
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Training diverged or otherwise failed (CLI exit code 1).
class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Task { toy_saddle, depth_sweep };

const char* to_string(Task t);
/// File prefix used for outputs: "toy" or "depth-sweep".
const char* file_prefix(Task t);

struct TrainConfig {
  Task task = Task::toy_saddle;
  std::vector<Variant> variants;
  double tau = 1e-4;
  double lr = 0.001;
  double momentum = 0.98;
  double weight_decay = 0.0;
  std::size_t batch_size = 32;
  std::size_t steps = 10000;
  std::uint64_t seed = 0;
  /// Runs seeds seed, seed + 1, ..., seed + num_seeds - 1.
  std::size_t num_seeds = 1;
  std::size_t log_every = 10;
  std::string output_dir = "out";
  Activation activation = Activation::tanh;
  // depth_sweep only
  std::vector<std::size_t> depths;
  std::size_t width = 16;
  std::size_t train_size = 2000;
  std::size_t test_size = 500;

  /// Saddle recipe: lr 0.001, momentum 0.98, batch 32, 10000 steps, tau 1e-4.
  static TrainConfig toy_defaults();
  static TrainConfig depth_sweep_defaults();

  /// Throws ConfigError on invalid fields.
  void validate() const;
};

/// Applies a JSON object on top of `base`. Keys must be TrainConfig field
/// names; unknown keys or wrongly typed values throw ConfigError.
TrainConfig apply_config_json(TrainConfig base, const std::string& json_text);

/// Same contract for simulate: keys are SimConfig field names
/// (dim, L, delta, Z, D, a, sigma, kappa, trials, seed).
SimConfig apply_sim_config_json(SimConfig base, const std::string& json_text);

struct Batch {
  Tensor inputs;   // (B, 2)
  Tensor targets;  // (B, 1)
};

/// Points uniform in [-5, 5]^2 with target x^2 - y^2.
Batch gen_saddle_batch(std::mt19937_64& rng, std::size_t batch_size);
double saddle_target(double x, double y);
/// Fixed 41 x 41 grid over [-5, 5]^2.
Batch saddle_eval_grid();

/// Two interleaved spirals, labels +1 / -1, classes alternate by index.
Batch spiral_dataset(std::uint64_t seed, std::size_t n);

struct LogRow {
  long step = 0;
  std::string variant;
  double train_loss = 0.0;
  double eval_loss = 0.0;
  std::optional<double> epsilon_prime;
  double lr = 0.0;
};

/// One training run: a (variant, seed[, depth]) combination.
struct RunSeries {
  std::string variant;  // "markov", or "markov-L32" for depth sweeps
  Variant kind = Variant::plain;
  std::uint64_t seed = 0;
  std::size_t depth = 0;
  std::vector<LogRow> rows;
  double final_train_loss = 0.0;
  double final_eval_loss = 0.0;
  std::optional<double> test_accuracy;
  Params final_params;

  /// Fraction of logged rows with step > after_step whose eps' is positive.
  std::optional<double> positive_epsilon_fraction(long after_step) const;
};

struct RunLog {
  TrainConfig config;
  std::vector<RunSeries> series;
  std::string code_version;
  double wall_clock_seconds = 0.0;
};

/// Forward + backward of one batch.
struct StepResult {
  double loss = 0.0;
  GradMap grads;
  std::optional<EfficiencyReport> efficiency;
};

StepResult train_step(const ModelSpec& spec, const Params& params, const Batch& batch);
/// MSE of the model on a batch (no backward).
double evaluate_mse(const ModelSpec& spec, const Params& params, const Batch& batch);
/// Fraction of samples whose prediction has the sign of the +1 / -1 label.
double evaluate_sign_accuracy(const ModelSpec& spec, const Params& params, const Batch& batch);

/// Trains every variant on the saddle task from one shared initialisation and
/// one shared batch stream per seed.
RunLog run_toy(const TrainConfig& cfg);

/// Trains each variant at each chain length on the spiral task.
RunLog run_depth_sweep(const TrainConfig& cfg);

std::string series_csv(const RunSeries& series);
std::string summary_csv(const RunLog& log);
std::string run_svg(const RunLog& log);
std::string run_metadata_json(const RunLog& log);

/// Writes <out>/<task>-<variant>-seed<k>.csv, <out>/<task>-summary.csv,
/// <out>/<task>.svg and <out>/<task>-run.json.
void write_run_outputs(const RunLog& log, const std::filesystem::path& out_dir);

}  // namespace mchain
