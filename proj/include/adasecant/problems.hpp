#pragma once

// Desk-scale benchmark objectives with analytic gradients.

#include "adasecant/numerics.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace adasecant {

using Vector = ParamVector<double>;
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Classification data: one example per row of `inputs`, labels in
/// [0, num_classes).
struct Dataset {
  std::string name;
  RowMatrix inputs;
  std::vector<int> labels;
  int num_classes = 0;
  std::uint64_t seed = 0;

  Index rows() const { return inputs.rows(); }
  Index features() const { return inputs.cols(); }
};

struct Evaluation {
  double loss = 0;
  Vector grad;
};

class Problem {
 public:
  Problem(std::string name, BlockLayout layout)
      : name_(std::move(name)), layout_(std::move(layout)) {}
  virtual ~Problem() = default;

  const std::string& name() const { return name_; }
  Index dim() const { return layout_.size(); }
  const BlockLayout& layout() const { return layout_; }
  virtual const Dataset* dataset() const { return nullptr; }

  /// Full-batch, noise-free loss and gradient.
  virtual Evaluation evaluate(const Vector& theta) const = 0;

  /// Loss and gradient averaged over the listed examples. Problems without a
  /// dataset ignore `batch` and return `evaluate`.
  virtual Evaluation evaluate_batch(const Vector& theta,
                                    std::span<const Index> batch) const;

  /// Stochastic estimate: a uniformly drawn minibatch (without replacement)
  /// for data problems, additive gradient noise for analytic ones.
  virtual Evaluation sample(const Vector& theta, Rng& rng, Index batch_size) const;

  virtual Vector initial_point(Rng& rng) const = 0;

  double loss(const Vector& theta) const { return evaluate(theta).loss; }

 protected:
  void check_dim(const Vector& theta) const;

 private:
  std::string name_;
  BlockLayout layout_;
};

/// f(theta) = 1/2 sum h_i theta_i^2; stochastic gradients add N(0, noise_std^2)
/// per coordinate. Starts from all ones.
std::unique_ptr<Problem> quadratic_problem(std::vector<double> h_diag,
                                           double noise_std = 0.0);

/// `n` curvatures log-spaced from h_min to h_max inclusive.
std::vector<double> log_spaced(double lo, double hi, Index n);

/// Chained Rosenbrock sum 100 (x_{i+1} - x_i^2)^2 + (1 - x_i)^2, minimum at
/// all ones. Starts from (-1.2, 1, -1.2, 1, ...).
std::unique_ptr<Problem> rosenbrock_problem(Index dim, double noise_std = 0.0);

enum class Activation { tanh, relu, sigmoid };
Activation parse_activation(const std::string& name);
std::string to_string(Activation a);

/// Fully connected softmax classifier with widths `arch` (input, hidden...,
/// classes) and mean cross-entropy loss. Parameters are laid out as blocks
/// W0, b0, W1, b1, ... with each weight matrix row-major (out x in).
/// Weights start from N(0, init_std^2), biases from zero.
std::unique_ptr<Problem> mlp_problem(std::vector<Index> arch, Activation activation,
                                     std::shared_ptr<const Dataset> dataset,
                                     double init_std = 0.05);

/// Multinomial logistic regression: an MLP without hidden layers.
std::unique_ptr<Problem> logistic_problem(std::shared_ptr<const Dataset> dataset,
                                          double init_std = 0.05);

/// Central differences (f(theta + h e_i) - f(theta - h e_i)) / 2h, full batch.
Vector finite_diff_grad(const Problem& problem, const Vector& theta, double h = 1e-5);

/// Two interleaved half circles: class 0 on (cos t, sin t), class 1 on
/// (1 - cos t, 1/2 - sin t), t ~ U[0, pi], plus isotropic N(0, noise_std^2).
Dataset two_moons_data(std::uint64_t seed, Index n, double noise_std);

/// Directory holding bundled data files (env ADASECANT_DATA_DIR overrides the
/// build-time location).
std::filesystem::path default_data_dir();

/// Reads the bundled digits file. Layout: '#' comment lines, then a header
/// line "rows R cols C dtype uint8", then R rows of "label p_0 ... p_{C-1}".
Dataset load_digits(const std::filesystem::path& path);

/// `n_per_class` examples of each digit drawn with the seed; pixels scaled to
/// [0, 1].
Dataset digits8x8_subset(std::uint64_t seed, Index n_per_class);
Dataset digits8x8_subset(std::uint64_t seed, Index n_per_class,
                         const std::filesystem::path& path);

}  // namespace adasecant
