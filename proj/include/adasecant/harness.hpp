#pragma once

// Experiment runner: flat key=value configs, a training loop that records
// per-step metrics, hyperparameter grids, and CSV / plot output.
//
// Config keys (one `key = value` per line, '#' starts a comment):
//
//   problem              quadratic | rosenbrock | logistic | mlp
//   problem.dim          quadratic and rosenbrock dimension
//   problem.h_min/h_max  quadratic curvatures, log-spaced
//   problem.noise        gradient noise std for quadratic and rosenbrock
//   problem.dataset      moons | digits (logistic and mlp)
//   problem.samples      two-moons example count
//   problem.per_class    digits examples per class
//   problem.data_noise   two-moons coordinate noise
//   problem.hidden       hidden widths, e.g. 8 or 16,8
//   problem.activation   tanh | relu | sigmoid
//   problem.init_std     weight initialisation std
//   optimizer            adasecant | sgd | adagrad | rmsprop | adadelta
//   optimizer.<name>     hyperparameters of the selected optimizer (see
//                        optimizer_keys)
//   steps, batch_size, seed, log_every, out
//
// Datasets are generated from `seed`, as are the initial point and the
// minibatch stream, so (config, seed) fixes every metric except wallclock_ms.

#include "adasecant/optimizer.hpp"
#include "adasecant/problems.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace adasecant {

struct ProblemSpec {
  std::string name = "quadratic";
  Index dim = 10;
  double h_min = 1.0;
  double h_max = 100.0;
  double noise = 0.1;
  std::string dataset = "moons";
  Index samples = 200;
  Index per_class = 20;
  double data_noise = 0.1;
  std::vector<Index> hidden{8};
  Activation activation = Activation::tanh;
  double init_std = 0.05;
};

struct OptimizerSpec {
  std::string name = "adasecant";
  OptimizerConfig adasecant;
  SgdParams sgd;
  AdagradParams adagrad;
  RmspropParams rmsprop;
  AdadeltaParams adadelta;
};

struct ExperimentConfig {
  ProblemSpec problem;
  OptimizerSpec optimizer;
  std::int64_t steps = 2000;
  Index batch_size = 64;
  std::uint64_t seed = 1;
  std::int64_t log_every = 1;
  std::string out;
};

const std::vector<std::string>& known_problems();
const std::vector<std::string>& known_optimizers();
/// Hyperparameter names accepted after "optimizer." for the given optimizer.
std::vector<std::string> optimizer_keys(const std::string& optimizer);

/// Sets one key. Throws std::invalid_argument naming the key on an unknown
/// key or a malformed value.
void set_param(ExperimentConfig& config, const std::string& key, const std::string& value);

/// Applies key/value pairs. The `problem` and `optimizer` selectors are
/// applied first so their parameters may appear in any order.
void apply_params(ExperimentConfig& config,
                  const std::vector<std::pair<std::string, std::string>>& params);

std::vector<std::pair<std::string, std::string>> parse_key_values(std::istream& in);
ExperimentConfig parse_config(std::istream& in);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Every key relevant to the selected problem and optimizer, in a form that
/// parse_config reads back to the same configuration.
std::vector<std::pair<std::string, std::string>> snapshot(const ExperimentConfig& config);
std::string to_text(const ExperimentConfig& config);

/// Registry and range checks; throws std::invalid_argument.
void validate(const ExperimentConfig& config);

std::unique_ptr<Problem> make_problem(const ProblemSpec& spec, std::uint64_t seed);
std::unique_ptr<Optimizer<double>> make_optimizer(const OptimizerSpec& spec,
                                                  const BlockLayout& layout);

struct RunRow {
  std::int64_t step = 0;
  double epoch = 0;
  double train_loss = 0;  // full-batch loss after the step
  double grad_norm = 0;   // full-batch gradient norm after the step
  double mean_applied_rate = 0;
  double wallclock_ms = 0;
};

struct RunRecord {
  ExperimentConfig config;
  std::vector<RunRow> rows;

  std::uint64_t seed() const { return config.seed; }
  std::string label() const { return config.optimizer.name; }
  /// Loss of the last row, or NaN for an empty record.
  double final_loss() const;
};

/// Raised when a run produces a non-finite value. `record` holds the rows up
/// to the last good step.
class RunAborted : public std::runtime_error {
 public:
  RunAborted(const std::string& what, RunRecord partial, std::int64_t last_good)
      : std::runtime_error(what), record(std::move(partial)), last_good_step(last_good) {}
  RunRecord record;
  std::int64_t last_good_step;
};

/// Rows are written every `log_every` steps and after the final step.
/// Epoch is step * batch_size / N for data problems and step otherwise.
RunRecord run_experiment(const ExperimentConfig& config);

/// Parses "a,b,c", "logspace:lo:hi:n" (n points, log-uniform, inclusive) or
/// "linspace:lo:hi:n". Numbers are formatted with 17 significant digits.
std::vector<std::string> parse_values(const std::string& spec);

struct GridAxis {
  std::string param;
  std::vector<std::string> values;
};

struct GridCell {
  std::vector<std::pair<std::string, std::string>> assignment;
  std::vector<RunRecord> runs;  // one per seed, completed runs only
  bool failed = false;
  std::string error;
  double score = 0;  // mean final loss over seeds; +inf when failed
};

struct GridResult {
  std::vector<GridCell> cells;
  std::optional<std::size_t> best;

  const RunRecord& best_record() const;
};

/// Runs the Cartesian product of `axes` on every seed (default: the base
/// seed) and selects the cell with the lowest mean final loss. Aborted runs
/// mark their cell failed.
GridResult grid_search(const ExperimentConfig& base, const std::vector<GridAxis>& axes,
                       std::vector<std::uint64_t> seeds = {});

void write_grid_table(const GridResult& result, std::ostream& out);

std::string format_real(double v);
inline constexpr const char* kCsvHeader =
    "step,epoch,train_loss,grad_norm,mean_applied_rate,wallclock_ms";

void write_csv(const RunRecord& record, std::ostream& out);
void write_csv(const RunRecord& record, const std::filesystem::path& path);
std::vector<RunRow> read_csv(std::istream& in);
std::vector<RunRow> read_csv(const std::filesystem::path& path);

/// Column layout: `step` followed by one train_loss column per record,
/// headed by its label, rows aligned on step; missing entries are "nan".
void emit_plot_data(const std::vector<RunRecord>& records, std::ostream& out);
void emit_plot_data(const std::vector<RunRecord>& records,
                    const std::filesystem::path& path);

}  // namespace adasecant
