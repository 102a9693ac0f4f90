#include "adasecant/problems.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <numbers>
#include <numeric>
#include <sstream>
#include <stdexcept>

#ifndef ADASECANT_DATA_DIR
#define ADASECANT_DATA_DIR "data"
#endif

namespace adasecant {

void Problem::check_dim(const Vector& theta) const {
  if (theta.size() != dim())
    throw std::invalid_argument(name() + ": expected " + std::to_string(dim()) +
                                " parameters, got " + std::to_string(theta.size()));
}

Evaluation Problem::evaluate_batch(const Vector& theta, std::span<const Index>) const {
  return evaluate(theta);
}

Evaluation Problem::sample(const Vector& theta, Rng&, Index) const {
  return evaluate(theta);
}

std::vector<double> log_spaced(double lo, double hi, Index n) {
  if (n < 1 || !(lo > 0) || !(hi >= lo))
    throw std::invalid_argument("log_spaced: need n >= 1 and 0 < lo <= hi");
  std::vector<double> out(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    const double frac = n == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(n - 1);
    out[static_cast<std::size_t>(i)] = std::exp(std::log(lo) + frac * (std::log(hi) - std::log(lo)));
  }
  out.back() = hi;
  return out;
}

namespace {

class AnalyticNoisyProblem : public Problem {
 public:
  AnalyticNoisyProblem(std::string name, BlockLayout layout, double noise_std)
      : Problem(std::move(name), std::move(layout)), noise_std_(noise_std) {
    if (!(noise_std >= 0)) throw std::invalid_argument("noise_std must be >= 0");
  }

  Evaluation sample(const Vector& theta, Rng& rng, Index) const override {
    Evaluation e = evaluate(theta);
    if (noise_std_ > 0)
      for (Index i = 0; i < e.grad.size(); ++i) e.grad[i] += rng.gaussian(0.0, noise_std_);
    return e;
  }

 private:
  double noise_std_;
};

class QuadraticProblem final : public AnalyticNoisyProblem {
 public:
  QuadraticProblem(Vector h, double noise_std)
      : AnalyticNoisyProblem("quadratic", BlockLayout::single(h.size()), noise_std),
        h_(std::move(h)) {}

  Evaluation evaluate(const Vector& theta) const override {
    check_dim(theta);
    return {0.5 * (h_.array() * theta.array().square()).sum(),
            (h_.array() * theta.array()).matrix()};
  }

  Vector initial_point(Rng&) const override { return Vector::Ones(dim()); }

 private:
  Vector h_;
};

class RosenbrockProblem final : public AnalyticNoisyProblem {
 public:
  RosenbrockProblem(Index dim, double noise_std)
      : AnalyticNoisyProblem("rosenbrock", BlockLayout::single(dim, "x"), noise_std) {}

  Evaluation evaluate(const Vector& x) const override {
    check_dim(x);
    Evaluation e{0.0, Vector::Zero(dim())};
    for (Index i = 0; i + 1 < dim(); ++i) {
      const double a = x[i + 1] - x[i] * x[i];
      const double b = 1.0 - x[i];
      e.loss += 100.0 * a * a + b * b;
      e.grad[i] += -400.0 * x[i] * a - 2.0 * b;
      e.grad[i + 1] += 200.0 * a;
    }
    return e;
  }

  Vector initial_point(Rng&) const override {
    Vector x(dim());
    for (Index i = 0; i < dim(); ++i) x[i] = i % 2 == 0 ? -1.2 : 1.0;
    return x;
  }
};

class MlpProblem final : public Problem {
 public:
  MlpProblem(std::string name, BlockLayout layout, std::vector<Index> arch,
             Activation activation, std::shared_ptr<const Dataset> data, double init_std)
      : Problem(std::move(name), std::move(layout)),
        arch_(std::move(arch)),
        activation_(activation),
        data_(std::move(data)),
        init_std_(init_std) {}

  const Dataset* dataset() const override { return data_.get(); }

  Evaluation evaluate(const Vector& theta) const override {
    std::vector<Index> all(static_cast<std::size_t>(data_->rows()));
    std::iota(all.begin(), all.end(), Index{0});
    return evaluate_batch(theta, all);
  }

  Evaluation evaluate_batch(const Vector& theta, std::span<const Index> batch) const override {
    check_dim(theta);
    if (batch.empty()) throw std::invalid_argument(name() + ": empty minibatch");
    const Index rows = static_cast<Index>(batch.size());
    const std::size_t layers = arch_.size() - 1;

    RowMatrix x(rows, data_->features());
    for (Index r = 0; r < rows; ++r) {
      const Index idx = batch[static_cast<std::size_t>(r)];
      if (idx < 0 || idx >= data_->rows())
        throw std::out_of_range(name() + ": example index out of range");
      x.row(r) = data_->inputs.row(idx);
    }

    // Forward pass; keeps pre-activations of hidden layers for backprop.
    std::vector<RowMatrix> activations{x};
    std::vector<RowMatrix> pre;
    Index offset = 0;
    std::vector<Index> offsets;
    for (std::size_t l = 0; l < layers; ++l) {
      const Index in = arch_[l], out = arch_[l + 1];
      offsets.push_back(offset);
      Eigen::Map<const RowMatrix> w(theta.data() + offset, out, in);
      Eigen::Map<const Vector> b(theta.data() + offset + out * in, out);
      offset += out * in + out;
      RowMatrix z = activations.back() * w.transpose();
      z.rowwise() += b.transpose();
      if (l + 1 < layers) {
        pre.push_back(z);
        activations.push_back(activate(z));
      } else {
        activations.push_back(std::move(z));
      }
    }

    RowMatrix& logits = activations.back();
    Evaluation e{0.0, Vector::Zero(dim())};
    RowMatrix delta(rows, logits.cols());
    for (Index r = 0; r < rows; ++r) {
      const double top = logits.row(r).maxCoeff();
      const double log_norm = top + std::log((logits.row(r).array() - top).exp().sum());
      const int label = data_->labels[static_cast<std::size_t>(batch[static_cast<std::size_t>(r)])];
      e.loss += log_norm - logits(r, label);
      delta.row(r) = (logits.row(r).array() - log_norm).exp();
      delta(r, label) -= 1.0;
    }
    e.loss /= static_cast<double>(rows);
    delta /= static_cast<double>(rows);

    for (std::size_t l = layers; l-- > 0;) {
      const Index in = arch_[l], out = arch_[l + 1];
      Eigen::Map<RowMatrix> dw(e.grad.data() + offsets[l], out, in);
      Eigen::Map<Vector> db(e.grad.data() + offsets[l] + out * in, out);
      dw.noalias() = delta.transpose() * activations[l];
      db = delta.colwise().sum().transpose();
      if (l > 0) {
        Eigen::Map<const RowMatrix> w(theta.data() + offsets[l], out, in);
        RowMatrix back = delta * w;
        delta = (back.array() * derivative(pre[l - 1], activations[l]).array()).matrix();
      }
    }
    return e;
  }

  Evaluation sample(const Vector& theta, Rng& rng, Index batch_size) const override {
    const Index n = data_->rows();
    const Index k = std::clamp<Index>(batch_size, 1, n);
    // Partial Fisher-Yates: first k entries form a uniform subset.
    std::vector<Index> idx(static_cast<std::size_t>(n));
    std::iota(idx.begin(), idx.end(), Index{0});
    for (Index i = 0; i < k; ++i) {
      const auto j = i + static_cast<Index>(rng.below(static_cast<std::uint64_t>(n - i)));
      std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
    }
    return evaluate_batch(theta, std::span<const Index>(idx.data(), static_cast<std::size_t>(k)));
  }

  Vector initial_point(Rng& rng) const override {
    Vector theta = Vector::Zero(dim());
    for (const auto& b : layout().blocks())
      if (b.name.front() == 'W')
        theta.segment(b.offset, b.length) = gaussian_fill(rng, b.length, 0.0, init_std_);
    return theta;
  }

 private:
  RowMatrix activate(const RowMatrix& z) const {
    switch (activation_) {
      case Activation::tanh: return z.array().tanh().matrix();
      case Activation::relu: return z.cwiseMax(0.0);
      case Activation::sigmoid: return (1.0 / (1.0 + (-z.array()).exp())).matrix();
    }
    throw std::logic_error("unknown activation");
  }

  RowMatrix derivative(const RowMatrix& z, const RowMatrix& a) const {
    switch (activation_) {
      case Activation::tanh: return (1.0 - a.array().square()).matrix();
      case Activation::relu: return (z.array() > 0.0).cast<double>().matrix();
      case Activation::sigmoid: return (a.array() * (1.0 - a.array())).matrix();
    }
    throw std::logic_error("unknown activation");
  }

  std::vector<Index> arch_;
  Activation activation_;
  std::shared_ptr<const Dataset> data_;
  double init_std_;
};

}  // namespace

std::unique_ptr<Problem> quadratic_problem(std::vector<double> h_diag, double noise_std) {
  if (h_diag.empty()) throw std::invalid_argument("quadratic_problem: empty curvature list");
  for (double h : h_diag)
    if (!(h > 0) || !std::isfinite(h))
      throw std::invalid_argument("quadratic_problem: curvatures must be positive");
  Vector h = Eigen::Map<const Vector>(h_diag.data(), static_cast<Index>(h_diag.size()));
  return std::make_unique<QuadraticProblem>(std::move(h), noise_std);
}

std::unique_ptr<Problem> rosenbrock_problem(Index dim, double noise_std) {
  if (dim < 2) throw std::invalid_argument("rosenbrock_problem: dim must be >= 2");
  return std::make_unique<RosenbrockProblem>(dim, noise_std);
}

Activation parse_activation(const std::string& name) {
  if (name == "tanh") return Activation::tanh;
  if (name == "relu") return Activation::relu;
  if (name == "sigmoid") return Activation::sigmoid;
  throw std::invalid_argument("unknown activation '" + name + "'");
}

std::string to_string(Activation a) {
  switch (a) {
    case Activation::tanh: return "tanh";
    case Activation::relu: return "relu";
    case Activation::sigmoid: return "sigmoid";
  }
  return "?";
}

std::unique_ptr<Problem> mlp_problem(std::vector<Index> arch, Activation activation,
                                     std::shared_ptr<const Dataset> dataset,
                                     double init_std) {
  if (!dataset || dataset->rows() < 1)
    throw std::invalid_argument("mlp_problem: dataset must have at least one row");
  if (arch.size() < 2) throw std::invalid_argument("mlp_problem: need input and output widths");
  for (Index w : arch)
    if (w < 1) throw std::invalid_argument("mlp_problem: layer widths must be >= 1");
  if (arch.front() != dataset->features())
    throw std::invalid_argument("mlp_problem: input width " + std::to_string(arch.front()) +
                                " does not match " + std::to_string(dataset->features()) +
                                " features");
  if (arch.back() != dataset->num_classes)
    throw std::invalid_argument("mlp_problem: output width does not match class count");
  if (static_cast<Index>(dataset->labels.size()) != dataset->rows())
    throw std::invalid_argument("mlp_problem: label count does not match rows");

  std::vector<std::pair<std::string, Index>> parts;
  for (std::size_t l = 0; l + 1 < arch.size(); ++l) {
    parts.emplace_back("W" + std::to_string(l), arch[l + 1] * arch[l]);
    parts.emplace_back("b" + std::to_string(l), arch[l + 1]);
  }
  const std::string name = arch.size() == 2 ? "logistic" : "mlp";
  return std::make_unique<MlpProblem>(name, BlockLayout::sequential(parts), std::move(arch),
                                      activation, std::move(dataset), init_std);
}

std::unique_ptr<Problem> logistic_problem(std::shared_ptr<const Dataset> dataset,
                                          double init_std) {
  if (!dataset) throw std::invalid_argument("logistic_problem: null dataset");
  const Index features = dataset->features();
  const Index classes = dataset->num_classes;
  return mlp_problem({features, classes}, Activation::tanh, std::move(dataset), init_std);
}

Vector finite_diff_grad(const Problem& problem, const Vector& theta, double h) {
  if (!(h > 0)) throw std::invalid_argument("finite_diff_grad: h must be > 0");
  Vector grad(theta.size());
  Vector probe = theta;
  for (Index i = 0; i < theta.size(); ++i) {
    probe[i] = theta[i] + h;
    const double up = problem.loss(probe);
    probe[i] = theta[i] - h;
    const double down = problem.loss(probe);
    probe[i] = theta[i];
    grad[i] = (up - down) / (2.0 * h);
  }
  return grad;
}

Dataset two_moons_data(std::uint64_t seed, Index n, double noise_std) {
  if (n < 2) throw std::invalid_argument("two_moons_data: n must be >= 2");
  if (!(noise_std >= 0)) throw std::invalid_argument("two_moons_data: noise_std must be >= 0");
  Dataset d;
  d.name = "moons";
  d.seed = seed;
  d.num_classes = 2;
  d.inputs.resize(n, 2);
  d.labels.resize(static_cast<std::size_t>(n));
  Rng rng(seed);
  const Index upper = (n + 1) / 2;
  for (Index i = 0; i < n; ++i) {
    const double t = std::numbers::pi * rng.uniform();
    const bool outer = i < upper;
    double x = outer ? std::cos(t) : 1.0 - std::cos(t);
    double y = outer ? std::sin(t) : 0.5 - std::sin(t);
    if (noise_std > 0) {
      x += rng.gaussian(0.0, noise_std);
      y += rng.gaussian(0.0, noise_std);
    }
    d.inputs(i, 0) = x;
    d.inputs(i, 1) = y;
    d.labels[static_cast<std::size_t>(i)] = outer ? 0 : 1;
  }
  return d;
}

std::filesystem::path default_data_dir() {
  if (const char* env = std::getenv("ADASECANT_DATA_DIR")) return env;
  return ADASECANT_DATA_DIR;
}

Dataset load_digits(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open digits file " + path.string());
  std::string line;
  Index rows = -1, cols = -1;
  while (std::getline(in, line)) {
    if (line.empty() || line.front() == '#') continue;
    std::istringstream header(line);
    std::string k_rows, k_cols, k_dtype, dtype;
    header >> k_rows >> rows >> k_cols >> cols >> k_dtype >> dtype;
    if (k_rows != "rows" || k_cols != "cols" || k_dtype != "dtype" || dtype != "uint8" ||
        rows < 1 || cols < 1)
      throw std::runtime_error(path.string() + ": malformed header '" + line + "'");
    break;
  }
  if (rows < 1) throw std::runtime_error(path.string() + ": missing header");
  Dataset d;
  d.name = "digits";
  d.num_classes = 10;
  d.inputs.resize(rows, cols);
  d.labels.resize(static_cast<std::size_t>(rows));
  for (Index r = 0; r < rows; ++r) {
    int label = -1;
    if (!(in >> label) || label < 0 || label > 9)
      throw std::runtime_error(path.string() + ": bad label in row " + std::to_string(r));
    d.labels[static_cast<std::size_t>(r)] = label;
    for (Index c = 0; c < cols; ++c) {
      int v = -1;
      if (!(in >> v) || v < 0 || v > 255)
        throw std::runtime_error(path.string() + ": bad pixel in row " + std::to_string(r));
      d.inputs(r, c) = v;
    }
  }
  return d;
}

Dataset digits8x8_subset(std::uint64_t seed, Index n_per_class) {
  return digits8x8_subset(seed, n_per_class, default_data_dir() / "digits8x8.txt");
}

Dataset digits8x8_subset(std::uint64_t seed, Index n_per_class,
                         const std::filesystem::path& path) {
  if (n_per_class < 1) throw std::invalid_argument("digits8x8_subset: n_per_class must be >= 1");
  const Dataset all = load_digits(path);
  std::vector<std::vector<Index>> by_class(10);
  for (Index r = 0; r < all.rows(); ++r)
    by_class[static_cast<std::size_t>(all.labels[static_cast<std::size_t>(r)])].push_back(r);

  Rng rng(seed);
  std::vector<Index> chosen;
  for (auto& rows : by_class) {
    if (static_cast<Index>(rows.size()) < n_per_class)
      throw std::invalid_argument("digits8x8_subset: only " + std::to_string(rows.size()) +
                                  " examples available per class");
    for (Index i = 0; i < n_per_class; ++i) {
      const auto j = i + static_cast<Index>(rng.below(rows.size() - static_cast<std::size_t>(i)));
      std::swap(rows[static_cast<std::size_t>(i)], rows[static_cast<std::size_t>(j)]);
      chosen.push_back(rows[static_cast<std::size_t>(i)]);
    }
  }

  Dataset d;
  d.name = "digits";
  d.seed = seed;
  d.num_classes = 10;
  d.inputs.resize(static_cast<Index>(chosen.size()), all.features());
  d.labels.resize(chosen.size());
  for (std::size_t r = 0; r < chosen.size(); ++r) {
    d.inputs.row(static_cast<Index>(r)) = all.inputs.row(chosen[r]) / 16.0;
    d.labels[r] = all.labels[static_cast<std::size_t>(chosen[r])];
  }
  return d;
}

}  // namespace adasecant
