#include "adasecant/harness.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>

namespace adasecant {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, sep)) out.push_back(trim(item));
  return out;
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value,
                            const std::string& expected) {
  throw std::invalid_argument("config key '" + key + "': cannot parse '" + value +
                              "' as " + expected);
}

double to_real(const std::string& key, const std::string& value) {
  double v = 0;
  const char* end = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(value.data(), end, v);
  if (ec != std::errc() || ptr != end || value.empty()) {
    // from_chars rejects a leading '+' and "inf"/"nan" spelled with a sign.
    if (value == "nan" || value == "inf" || value == "-inf") return std::stod(value);
    bad_value(key, value, "a real number");
  }
  return v;
}

template <typename Int>
Int to_int(const std::string& key, const std::string& value) {
  Int v = 0;
  const char* end = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(value.data(), end, v);
  if (ec != std::errc() || ptr != end || value.empty()) bad_value(key, value, "an integer");
  return v;
}

bool to_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes" || value == "on") return true;
  if (value == "false" || value == "0" || value == "no" || value == "off") return false;
  bad_value(key, value, "a boolean");
}

CurvatureSignal to_curvature(const std::string& key, const std::string& value) {
  if (value == "raw") return CurvatureSignal::raw;
  if (value == "direction") return CurvatureSignal::direction;
  if (value == "scaled_raw") return CurvatureSignal::scaled_raw;
  bad_value(key, value, "raw, direction or scaled_raw");
}

std::string to_string(CurvatureSignal c) {
  switch (c) {
    case CurvatureSignal::raw: return "raw";
    case CurvatureSignal::direction: return "direction";
    case CurvatureSignal::scaled_raw: return "scaled_raw";
  }
  return "?";
}

std::string join(const std::vector<Index>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(v[i]);
  }
  return out;
}

bool contains(const std::vector<std::string>& v, const std::string& s) {
  return std::find(v.begin(), v.end(), s) != v.end();
}

void set_optimizer_param(OptimizerSpec& o, const std::string& key, const std::string& sub,
                         const std::string& value) {
  const auto real = [&] { return to_real(key, value); };
  if (o.name == "adasecant") {
    auto& c = o.adasecant;
    if (sub == "gamma_cap") c.gamma_cap = real();
    else if (sub == "tau_reset") c.tau_reset = real();
    else if (sub == "outlier_sigma") c.outlier_sigma = real();
    else if (sub == "eps") c.eps = real();
    else if (sub == "eta_min") c.eta_min = real();
    else if (sub == "delta_eps") c.delta_eps = real();
    else if (sub == "bootstrap_rate") c.bootstrap_rate = real();
    else if (sub == "use_cov_form") c.use_cov_form = to_bool(key, value);
    else if (sub == "adagrad_guard") c.enable_adagrad_guard = to_bool(key, value);
    else if (sub == "variance_reduction") c.enable_variance_reduction = to_bool(key, value);
    else if (sub == "curvature") c.curvature = to_curvature(key, value);
    else throw std::invalid_argument("unknown adasecant key '" + key + "'");
  } else if (o.name == "sgd") {
    if (sub == "lr") o.sgd.lr = real();
    else if (sub == "momentum") o.sgd.momentum = real();
    else if (sub == "decay_steps") o.sgd.decay_steps = to_int<std::int64_t>(key, value);
    else if (sub == "final_fraction") o.sgd.final_fraction = real();
    else throw std::invalid_argument("unknown sgd key '" + key + "'");
  } else if (o.name == "adagrad") {
    if (sub == "lr") o.adagrad.lr = real();
    else if (sub == "eps") o.adagrad.eps = real();
    else throw std::invalid_argument("unknown adagrad key '" + key + "'");
  } else if (o.name == "rmsprop") {
    if (sub == "lr") o.rmsprop.lr = real();
    else if (sub == "decay") o.rmsprop.decay = real();
    else if (sub == "eps") o.rmsprop.eps = real();
    else throw std::invalid_argument("unknown rmsprop key '" + key + "'");
  } else if (o.name == "adadelta") {
    if (sub == "lr") o.adadelta.lr = real();
    else if (sub == "decay") o.adadelta.decay = real();
    else if (sub == "eps") o.adadelta.eps = real();
    else throw std::invalid_argument("unknown adadelta key '" + key + "'");
  } else {
    throw std::invalid_argument("unknown optimizer '" + o.name + "'");
  }
}

}  // namespace

const std::vector<std::string>& known_problems() {
  static const std::vector<std::string> names{"quadratic", "rosenbrock", "logistic", "mlp"};
  return names;
}

const std::vector<std::string>& known_optimizers() {
  static const std::vector<std::string> names{"adasecant", "sgd", "adagrad", "rmsprop",
                                              "adadelta"};
  return names;
}

std::vector<std::string> optimizer_keys(const std::string& optimizer) {
  if (optimizer == "adasecant")
    return {"gamma_cap", "tau_reset",      "outlier_sigma", "eps",
            "eta_min",   "delta_eps",      "bootstrap_rate", "use_cov_form",
            "adagrad_guard", "variance_reduction", "curvature"};
  if (optimizer == "sgd") return {"lr", "momentum", "decay_steps", "final_fraction"};
  if (optimizer == "adagrad") return {"lr", "eps"};
  if (optimizer == "rmsprop" || optimizer == "adadelta") return {"lr", "decay", "eps"};
  throw std::invalid_argument("unknown optimizer '" + optimizer + "'");
}

void set_param(ExperimentConfig& c, const std::string& key, const std::string& raw) {
  const std::string value = trim(raw);
  auto& p = c.problem;
  const auto real = [&] { return to_real(key, value); };
  const auto index = [&] { return to_int<Index>(key, value); };

  if (key == "problem") {
    if (!contains(known_problems(), value))
      throw std::invalid_argument("unknown problem '" + value + "'");
    p.name = value;
  } else if (key == "optimizer") {
    if (!contains(known_optimizers(), value))
      throw std::invalid_argument("unknown optimizer '" + value + "'");
    c.optimizer.name = value;
  } else if (key == "problem.dim") p.dim = index();
  else if (key == "problem.h_min") p.h_min = real();
  else if (key == "problem.h_max") p.h_max = real();
  else if (key == "problem.noise") p.noise = real();
  else if (key == "problem.dataset") {
    if (value != "moons" && value != "digits")
      throw std::invalid_argument("unknown dataset '" + value + "'");
    p.dataset = value;
  } else if (key == "problem.samples") p.samples = index();
  else if (key == "problem.per_class") p.per_class = index();
  else if (key == "problem.data_noise") p.data_noise = real();
  else if (key == "problem.hidden") {
    p.hidden.clear();
    if (!value.empty() && value != "none")
      for (const auto& w : split(value, ',')) p.hidden.push_back(to_int<Index>(key, w));
  } else if (key == "problem.activation") p.activation = parse_activation(value);
  else if (key == "problem.init_std") p.init_std = real();
  else if (key.rfind("optimizer.", 0) == 0)
    set_optimizer_param(c.optimizer, key, key.substr(10), value);
  else if (key == "steps") c.steps = to_int<std::int64_t>(key, value);
  else if (key == "batch_size") c.batch_size = index();
  else if (key == "seed") c.seed = to_int<std::uint64_t>(key, value);
  else if (key == "log_every") c.log_every = to_int<std::int64_t>(key, value);
  else if (key == "out") c.out = value;
  else throw std::invalid_argument("unknown config key '" + key + "'");
}

void apply_params(ExperimentConfig& c,
                  const std::vector<std::pair<std::string, std::string>>& params) {
  for (const auto& [k, v] : params)
    if (k == "problem" || k == "optimizer") set_param(c, k, v);
  for (const auto& [k, v] : params)
    if (k != "problem" && k != "optimizer") set_param(c, k, v);
}

std::vector<std::pair<std::string, std::string>> parse_key_values(std::istream& in) {
  std::vector<std::pair<std::string, std::string>> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config line " + std::to_string(lineno) +
                                  ": expected key = value");
    out.emplace_back(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return out;
}

ExperimentConfig parse_config(std::istream& in) {
  ExperimentConfig c;
  apply_params(c, parse_key_values(in));
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file " + path.string());
  try {
    return parse_config(in);
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument(path.string() + ": " + e.what());
  }
}

std::string format_real(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<std::pair<std::string, std::string>> snapshot(const ExperimentConfig& c) {
  std::vector<std::pair<std::string, std::string>> kv;
  const auto add = [&](std::string k, std::string v) { kv.emplace_back(std::move(k), std::move(v)); };
  const auto& p = c.problem;
  add("problem", p.name);
  if (p.name == "quadratic" || p.name == "rosenbrock") {
    add("problem.dim", std::to_string(p.dim));
    if (p.name == "quadratic") {
      add("problem.h_min", format_real(p.h_min));
      add("problem.h_max", format_real(p.h_max));
    }
    add("problem.noise", format_real(p.noise));
  } else {
    add("problem.dataset", p.dataset);
    if (p.dataset == "moons") {
      add("problem.samples", std::to_string(p.samples));
      add("problem.data_noise", format_real(p.data_noise));
    } else {
      add("problem.per_class", std::to_string(p.per_class));
    }
    if (p.name == "mlp") {
      add("problem.hidden", p.hidden.empty() ? "none" : join(p.hidden));
      add("problem.activation", to_string(p.activation));
    }
    add("problem.init_std", format_real(p.init_std));
  }

  const auto& o = c.optimizer;
  add("optimizer", o.name);
  const auto opt = [&](const char* k, std::string v) { add(std::string("optimizer.") + k, std::move(v)); };
  const auto flag = [](bool b) { return std::string(b ? "true" : "false"); };
  if (o.name == "adasecant") {
    const auto& a = o.adasecant;
    opt("gamma_cap", format_real(a.gamma_cap));
    opt("tau_reset", format_real(a.tau_reset));
    opt("outlier_sigma", format_real(a.outlier_sigma));
    opt("eps", format_real(a.eps));
    opt("eta_min", format_real(a.eta_min));
    opt("delta_eps", format_real(a.delta_eps));
    opt("bootstrap_rate", format_real(a.bootstrap_rate));
    opt("use_cov_form", flag(a.use_cov_form));
    opt("adagrad_guard", flag(a.enable_adagrad_guard));
    opt("variance_reduction", flag(a.enable_variance_reduction));
    opt("curvature", to_string(a.curvature));
  } else if (o.name == "sgd") {
    opt("lr", format_real(o.sgd.lr));
    opt("momentum", format_real(o.sgd.momentum));
    opt("decay_steps", std::to_string(o.sgd.decay_steps));
    opt("final_fraction", format_real(o.sgd.final_fraction));
  } else if (o.name == "adagrad") {
    opt("lr", format_real(o.adagrad.lr));
    opt("eps", format_real(o.adagrad.eps));
  } else if (o.name == "rmsprop") {
    opt("lr", format_real(o.rmsprop.lr));
    opt("decay", format_real(o.rmsprop.decay));
    opt("eps", format_real(o.rmsprop.eps));
  } else if (o.name == "adadelta") {
    opt("lr", format_real(o.adadelta.lr));
    opt("decay", format_real(o.adadelta.decay));
    opt("eps", format_real(o.adadelta.eps));
  }

  add("steps", std::to_string(c.steps));
  add("batch_size", std::to_string(c.batch_size));
  add("seed", std::to_string(c.seed));
  add("log_every", std::to_string(c.log_every));
  if (!c.out.empty()) add("out", c.out);
  return kv;
}

std::string to_text(const ExperimentConfig& c) {
  std::string out;
  for (const auto& [k, v] : snapshot(c)) out += k + " = " + v + "\n";
  return out;
}

void validate(const ExperimentConfig& c) {
  const auto fail = [](const std::string& msg) { throw std::invalid_argument(msg); };
  const auto& p = c.problem;
  if (!contains(known_problems(), p.name)) fail("unknown problem '" + p.name + "'");
  if (!contains(known_optimizers(), c.optimizer.name))
    fail("unknown optimizer '" + c.optimizer.name + "'");
  if (p.name == "quadratic") {
    if (p.dim < 1) fail("problem.dim must be >= 1");
    if (!(p.h_min > 0) || !(p.h_max >= p.h_min) || !std::isfinite(p.h_max))
      fail("problem.h_min/h_max must satisfy 0 < h_min <= h_max");
  }
  if (p.name == "rosenbrock" && p.dim < 2) fail("problem.dim must be >= 2 for rosenbrock");
  if (!(p.noise >= 0) || !std::isfinite(p.noise)) fail("problem.noise must be >= 0");
  if (p.name == "logistic" || p.name == "mlp") {
    if (p.dataset != "moons" && p.dataset != "digits")
      fail("unknown dataset '" + p.dataset + "'");
    if (p.samples < 2) fail("problem.samples must be >= 2");
    if (p.per_class < 1) fail("problem.per_class must be >= 1");
    if (!(p.data_noise >= 0) || !std::isfinite(p.data_noise))
      fail("problem.data_noise must be >= 0");
    if (!(p.init_std >= 0) || !std::isfinite(p.init_std)) fail("problem.init_std must be >= 0");
    for (Index w : p.hidden)
      if (w < 1) fail("problem.hidden widths must be >= 1");
  }
  if (c.steps < 0) fail("steps must be >= 0");
  if (c.batch_size < 1) fail("batch_size must be >= 1");
  if (c.log_every < 1) fail("log_every must be >= 1");
  // Optimizer constructors check their own hyperparameters.
  make_optimizer(c.optimizer, BlockLayout::single(1));
}

std::unique_ptr<Problem> make_problem(const ProblemSpec& spec, std::uint64_t seed) {
  if (spec.name == "quadratic")
    return quadratic_problem(log_spaced(spec.h_min, spec.h_max, spec.dim), spec.noise);
  if (spec.name == "rosenbrock") return rosenbrock_problem(spec.dim, spec.noise);

  std::shared_ptr<const Dataset> data;
  if (spec.dataset == "moons")
    data = std::make_shared<Dataset>(two_moons_data(seed, spec.samples, spec.data_noise));
  else if (spec.dataset == "digits")
    data = std::make_shared<Dataset>(digits8x8_subset(seed, spec.per_class));
  else
    throw std::invalid_argument("unknown dataset '" + spec.dataset + "'");

  if (spec.name == "logistic") return logistic_problem(data, spec.init_std);
  if (spec.name == "mlp") {
    std::vector<Index> arch{data->features()};
    arch.insert(arch.end(), spec.hidden.begin(), spec.hidden.end());
    arch.push_back(data->num_classes);
    return mlp_problem(std::move(arch), spec.activation, data, spec.init_std);
  }
  throw std::invalid_argument("unknown problem '" + spec.name + "'");
}

std::unique_ptr<Optimizer<double>> make_optimizer(const OptimizerSpec& spec,
                                                  const BlockLayout& layout) {
  if (spec.name == "adasecant")
    return std::make_unique<AdasecantOptimizer<double>>(layout, spec.adasecant);
  if (spec.name == "sgd") return std::make_unique<SgdOptimizer<double>>(spec.sgd);
  if (spec.name == "adagrad") return std::make_unique<AdagradOptimizer<double>>(spec.adagrad);
  if (spec.name == "rmsprop") return std::make_unique<RmspropOptimizer<double>>(spec.rmsprop);
  if (spec.name == "adadelta")
    return std::make_unique<AdadeltaOptimizer<double>>(spec.adadelta);
  throw std::invalid_argument("unknown optimizer '" + spec.name + "'");
}

double RunRecord::final_loss() const {
  return rows.empty() ? std::numeric_limits<double>::quiet_NaN() : rows.back().train_loss;
}

RunRecord run_experiment(const ExperimentConfig& config) {
  validate(config);
  RunRecord record{config, {}};
  const auto problem = make_problem(config.problem, config.seed);
  auto optimizer = make_optimizer(config.optimizer, problem->layout());

  const Rng root(config.seed);
  Rng init_rng = root.fork(0);
  Rng batch_rng = root.fork(1);
  Vector theta = problem->initial_point(init_rng);

  const Dataset* data = problem->dataset();
  const double epoch_scale =
      data ? static_cast<double>(std::min<Index>(config.batch_size, data->rows())) /
                 static_cast<double>(data->rows())
           : 1.0;

  const auto start = std::chrono::steady_clock::now();
  std::int64_t last_good = 0;
  const auto abort = [&](std::int64_t step, const std::string& what) {
    throw RunAborted("run aborted at step " + std::to_string(step) + ": " + what +
                         " (last good step " + std::to_string(last_good) + ")",
                     record, last_good);
  };

  for (std::int64_t step = 1; step <= config.steps; ++step) {
    const Evaluation batch = problem->sample(theta, batch_rng, config.batch_size);
    if (!std::isfinite(batch.loss) || !batch.grad.allFinite())
      abort(step, "non-finite minibatch loss or gradient");
    try {
      optimizer->step(theta, batch.grad);
    } catch (const NumericalError& e) {
      abort(step, e.what());
    }
    if (!theta.allFinite()) abort(step, "non-finite parameters");

    const bool log = step % config.log_every == 0 || step == config.steps;
    if (!log) {
      last_good = step;
      continue;
    }
    const Evaluation full = problem->evaluate(theta);
    const double rate = optimizer->mean_applied_rate();
    const double gnorm = full.grad.norm();
    if (!std::isfinite(full.loss) || !std::isfinite(gnorm) || !std::isfinite(rate))
      abort(step, "non-finite metrics");
    const double ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
            .count();
    record.rows.push_back(RunRow{step, static_cast<double>(step) * epoch_scale, full.loss,
                                 gnorm, rate, ms});
    last_good = step;
  }
  return record;
}

std::vector<std::string> parse_values(const std::string& spec) {
  const std::string s = trim(spec);
  for (const char* kind : {"logspace:", "linspace:"}) {
    if (s.rfind(kind, 0) != 0) continue;
    const auto parts = split(s.substr(9), ':');
    if (parts.size() != 3)
      throw std::invalid_argument("values '" + s + "': expected " + kind + "lo:hi:n");
    const double lo = to_real("values", parts[0]);
    const double hi = to_real("values", parts[1]);
    const Index n = to_int<Index>("values", parts[2]);
    if (n < 1) throw std::invalid_argument("values '" + s + "': n must be >= 1");
    std::vector<std::string> out;
    if (kind[1] == 'o') {
      for (double v : log_spaced(lo, hi, n)) out.push_back(format_real(v));
    } else {
      for (Index i = 0; i < n; ++i)
        out.push_back(format_real(n == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) /
                                                         static_cast<double>(n - 1)));
    }
    return out;
  }
  std::vector<std::string> out;
  for (auto& v : split(s, ','))
    if (!v.empty()) out.push_back(v);
  if (out.empty()) throw std::invalid_argument("values '" + s + "': empty list");
  return out;
}

const RunRecord& GridResult::best_record() const {
  if (!best) throw std::runtime_error("grid_search: every cell failed");
  return cells[*best].runs.front();
}

GridResult grid_search(const ExperimentConfig& base, const std::vector<GridAxis>& axes,
                       std::vector<std::uint64_t> seeds) {
  if (axes.empty()) throw std::invalid_argument("grid_search: no axes");
  for (const auto& a : axes)
    if (a.values.empty())
      throw std::invalid_argument("grid_search: axis '" + a.param + "' has no values");
  if (seeds.empty()) seeds.push_back(base.seed);

  GridResult result;
  std::vector<std::size_t> pos(axes.size(), 0);
  for (;;) {
    GridCell cell;
    for (std::size_t i = 0; i < axes.size(); ++i)
      cell.assignment.emplace_back(axes[i].param, axes[i].values[pos[i]]);

    double total = 0;
    try {
      ExperimentConfig cfg = base;
      apply_params(cfg, cell.assignment);
      for (std::uint64_t s : seeds) {
        cfg.seed = s;
        cell.runs.push_back(run_experiment(cfg));
        total += cell.runs.back().final_loss();
      }
      cell.score = total / static_cast<double>(seeds.size());
      if (!std::isfinite(cell.score)) {
        cell.failed = true;
        cell.error = "no rows recorded";
      }
    } catch (const std::exception& e) {
      cell.failed = true;
      cell.error = e.what();
    }
    if (cell.failed) cell.score = std::numeric_limits<double>::infinity();
    result.cells.push_back(std::move(cell));

    std::size_t k = 0;
    while (k < axes.size() && ++pos[k] == axes[k].values.size()) pos[k++] = 0;
    if (k == axes.size()) break;
  }

  for (std::size_t i = 0; i < result.cells.size(); ++i)
    if (!result.cells[i].failed &&
        (!result.best || result.cells[i].score < result.cells[*result.best].score))
      result.best = i;
  return result;
}

void write_grid_table(const GridResult& result, std::ostream& out) {
  if (result.cells.empty()) return;
  for (const auto& [k, v] : result.cells.front().assignment) out << k << '\t';
  out << "final_loss\tstatus\n";
  for (std::size_t i = 0; i < result.cells.size(); ++i) {
    const auto& cell = result.cells[i];
    for (const auto& [k, v] : cell.assignment) out << v << '\t';
    out << format_real(cell.score) << '\t';
    if (cell.failed) out << "failed: " << cell.error;
    else out << (result.best == i ? "best" : "ok");
    out << '\n';
  }
}

void write_csv(const RunRecord& record, std::ostream& out) {
  out << kCsvHeader << '\n';
  for (const auto& r : record.rows)
    out << r.step << ',' << format_real(r.epoch) << ',' << format_real(r.train_loss) << ','
        << format_real(r.grad_norm) << ',' << format_real(r.mean_applied_rate) << ','
        << format_real(r.wallclock_ms) << '\n';
}

namespace {

std::ofstream open_output(const std::filesystem::path& path) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  return out;
}

void finish_output(std::ofstream& out, const std::filesystem::path& path) {
  out.close();
  if (!out) throw std::runtime_error("error writing " + path.string());
}

}  // namespace

void write_csv(const RunRecord& record, const std::filesystem::path& path) {
  auto out = open_output(path);
  write_csv(record, out);
  finish_output(out, path);
}

std::vector<RunRow> read_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || trim(line) != kCsvHeader)
    throw std::runtime_error("read_csv: missing or unexpected header");
  std::vector<RunRow> rows;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    const auto f = split(line, ',');
    if (f.size() != 6) throw std::runtime_error("read_csv: expected 6 fields in '" + line + "'");
    rows.push_back(RunRow{to_int<std::int64_t>("step", f[0]), to_real("epoch", f[1]),
                          to_real("train_loss", f[2]), to_real("grad_norm", f[3]),
                          to_real("mean_applied_rate", f[4]), to_real("wallclock_ms", f[5])});
  }
  return rows;
}

std::vector<RunRow> read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return read_csv(in);
}

void emit_plot_data(const std::vector<RunRecord>& records, std::ostream& out) {
  std::map<std::int64_t, std::vector<double>> table;
  for (std::size_t j = 0; j < records.size(); ++j)
    for (const auto& r : records[j].rows) {
      auto& row = table[r.step];
      row.resize(records.size(), std::numeric_limits<double>::quiet_NaN());
      row[j] = r.train_loss;
    }

  constexpr int kWidth = 24;
  out << std::left << std::setw(10) << "# step";
  for (const auto& rec : records) out << ' ' << std::setw(kWidth) << rec.label();
  out << '\n';
  for (auto& [step, values] : table) {
    values.resize(records.size(), std::numeric_limits<double>::quiet_NaN());
    out << std::setw(10) << step;
    for (double v : values) out << ' ' << std::setw(kWidth) << format_real(v);
    out << '\n';
  }
}

void emit_plot_data(const std::vector<RunRecord>& records,
                    const std::filesystem::path& path) {
  auto out = open_output(path);
  emit_plot_data(records, out);
  finish_output(out, path);
}

}  // namespace adasecant
