#include "adasecant/problems.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>

using namespace adasecant;

namespace {

Vector vec(std::initializer_list<double> xs) {
  Vector v(static_cast<Index>(xs.size()));
  Index i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

class LinearProblem final : public Problem {
 public:
  LinearProblem() : Problem("linear", BlockLayout::single(1)) {}
  Evaluation evaluate(const Vector& theta) const override { return {3 * theta[0], vec({3})}; }
  Vector initial_point(Rng&) const override { return vec({0}); }
};

double max_rel_error(const Vector& a, const Vector& b) {
  const double scale = std::max(1e-8, b.cwiseAbs().maxCoeff());
  return (a - b).cwiseAbs().maxCoeff() / scale;
}

std::shared_ptr<const Dataset> moons(std::uint64_t seed, Index n = 60) {
  return std::make_shared<Dataset>(two_moons_data(seed, n, 0.1));
}

void expect_gradient_matches_fd(const Problem& p, std::uint64_t seed, double spread, double tol) {
  Rng rng(seed);
  for (int point = 0; point < 5; ++point) {
    Vector theta = p.initial_point(rng);
    for (Index i = 0; i < theta.size(); ++i) theta[i] += rng.gaussian(0, spread);
    const Vector analytic = p.evaluate(theta).grad;
    EXPECT_LT(max_rel_error(analytic, finite_diff_grad(p, theta)), tol)
        << p.name() << " seed " << seed << " point " << point;
  }
}

}  // namespace

TEST(Quadratic, Examples) {
  auto p = quadratic_problem({2.0});
  const auto e = p->evaluate(vec({3}));
  EXPECT_EQ(e.loss, 9);
  EXPECT_EQ(e.grad, vec({6}));
  auto q = quadratic_problem(log_spaced(1, 100, 10));
  const auto zero = q->evaluate(Vector::Zero(10));
  EXPECT_EQ(zero.loss, 0);
  EXPECT_TRUE(zero.grad.isZero(0));
}

TEST(Quadratic, GradientMatchesFiniteDifferences) {
  auto p = quadratic_problem(log_spaced(1, 100, 10));
  for (std::uint64_t seed : {1, 2, 3}) expect_gradient_matches_fd(*p, seed, 1.0, 1e-5);
}

TEST(Quadratic, RejectsNonPositiveCurvatureAndNegativeNoise) {
  EXPECT_THROW(quadratic_problem({1.0, 0.0}), std::invalid_argument);
  EXPECT_THROW(quadratic_problem({1.0, -2.0}), std::invalid_argument);
  EXPECT_THROW(quadratic_problem({}), std::invalid_argument);
  EXPECT_THROW(quadratic_problem({1.0}, -0.1), std::invalid_argument);
  EXPECT_THROW(quadratic_problem({1.0})->evaluate(vec({1, 2})), std::invalid_argument);
}

TEST(Quadratic, NoiselessSamplingIsDeterministic) {
  auto p = quadratic_problem({1.0, 3.0}, 0.0);
  Rng a(1), b(2);
  const Vector theta = vec({0.5, -0.25});
  EXPECT_EQ(p->sample(theta, a, 8).grad, p->sample(theta, b, 8).grad);
  EXPECT_EQ(p->evaluate(theta).grad, p->evaluate(theta).grad);
}

TEST(Quadratic, NoiseHasRequestedSpread) {
  auto p = quadratic_problem({1.0}, 0.3);
  Rng rng(4);
  double s = 0, s2 = 0;
  const int n = 50000;
  for (int k = 0; k < n; ++k) {
    const double g = p->sample(vec({2.0}), rng, 1).grad[0] - 2.0;
    s += g;
    s2 += g * g;
  }
  EXPECT_NEAR(std::sqrt(s2 / n - (s / n) * (s / n)), 0.3, 0.01);
  EXPECT_LT(std::abs(s / n), 4 * 0.3 / std::sqrt(n));
}

TEST(Rosenbrock, Examples) {
  auto p = rosenbrock_problem(2);
  const auto ones = p->evaluate(vec({1, 1}));
  EXPECT_EQ(ones.loss, 0);
  EXPECT_TRUE(ones.grad.isZero(0));
  const auto origin = p->evaluate(vec({0, 0}));
  EXPECT_EQ(origin.loss, 1);
  EXPECT_EQ(origin.grad, vec({-2, 0}));
  auto p5 = rosenbrock_problem(5);
  EXPECT_EQ(p5->loss(Vector::Ones(5)), 0);
  Rng rng(1);
  EXPECT_EQ(p5->initial_point(rng), vec({-1.2, 1, -1.2, 1, -1.2}));
}

TEST(Rosenbrock, GradientMatchesFiniteDifferences) {
  for (Index dim : {2, 5}) {
    auto p = rosenbrock_problem(dim);
    for (std::uint64_t seed : {1, 2, 3}) expect_gradient_matches_fd(*p, seed, 0.5, 1e-5);
  }
}

TEST(Rosenbrock, RejectsSmallDimension) {
  EXPECT_THROW(rosenbrock_problem(1), std::invalid_argument);
}

TEST(Logistic, ZeroWeightsGiveLogTwo) {
  auto p = logistic_problem(moons(3, 40), 0.0);
  Rng rng(1);
  const Vector theta = p->initial_point(rng);
  EXPECT_TRUE(theta.isZero(0));
  EXPECT_NEAR(p->loss(theta), std::numbers::ln2, 1e-10);
  EXPECT_EQ(p->name(), "logistic");
  EXPECT_EQ(p->dim(), 2 * 2 + 2);
}

TEST(Logistic, GradientMatchesFiniteDifferences) {
  auto p = logistic_problem(moons(5));
  for (std::uint64_t seed : {1, 2, 3}) expect_gradient_matches_fd(*p, seed, 1.0, 1e-5);
}

TEST(Mlp, GradientMatchesFiniteDifferences) {
  auto data = moons(7, 10);
  for (auto act : {Activation::tanh, Activation::sigmoid, Activation::relu}) {
    auto p = mlp_problem({2, 4, 2}, act, data, 0.5);
    for (std::uint64_t seed : {1, 2, 3}) expect_gradient_matches_fd(*p, seed, 0.3, 1e-4);
  }
  auto deep = mlp_problem({2, 5, 3, 2}, Activation::tanh, data, 0.5);
  expect_gradient_matches_fd(*deep, 4, 0.3, 1e-4);
}

TEST(Mlp, BlockLayoutHasOneBlockPerWeightAndBias) {
  auto p = mlp_problem({2, 4, 2}, Activation::tanh, std::make_shared<Dataset>(two_moons_data(1, 20, 0.1)));
  const auto& blocks = p->layout().blocks();
  ASSERT_EQ(blocks.size(), 0u + 4);
  EXPECT_EQ(blocks[0].name, "W0");
  EXPECT_EQ(blocks[0].length, 8);
  EXPECT_EQ(blocks[1].name, "b0");
  EXPECT_EQ(blocks[1].length, 4);
  EXPECT_EQ(blocks[2].name, "W1");
  EXPECT_EQ(blocks[2].length, 8);
  EXPECT_EQ(blocks[3].length, 2);
}

TEST(Mlp, FullBatchIsMeanOfPerExampleGradients) {
  auto data = moons(9, 30);
  auto p = mlp_problem({2, 5, 2}, Activation::tanh, data, 0.3);
  Rng rng(2);
  const Vector theta = p->initial_point(rng);
  const auto full = p->evaluate(theta);
  Vector sum = Vector::Zero(p->dim());
  double loss = 0;
  for (Index i = 0; i < data->rows(); ++i) {
    const Index idx[] = {i};
    const auto e = p->evaluate_batch(theta, idx);
    sum += e.grad;
    loss += e.loss;
  }
  EXPECT_LT((sum / 30.0 - full.grad).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_NEAR(loss / 30.0, full.loss, 1e-10);
}

TEST(Mlp, DisjointMinibatchesAverageToFullBatch) {
  auto data = moons(10, 48);
  auto p = mlp_problem({2, 6, 2}, Activation::relu, data, 0.3);
  Rng rng(3);
  const Vector theta = p->initial_point(rng);
  std::vector<Index> order(48);
  std::iota(order.begin(), order.end(), Index{0});
  for (std::size_t i = 47; i > 0; --i) std::swap(order[i], order[rng.below(i + 1)]);
  Vector sum = Vector::Zero(p->dim());
  for (std::size_t b = 0; b < 6; ++b)
    sum += p->evaluate_batch(theta, std::span<const Index>(order).subspan(b * 8, 8)).grad;
  EXPECT_LT((sum / 6.0 - p->evaluate(theta).grad).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Mlp, SampledMinibatchDrawsDistinctExamples) {
  auto data = moons(11, 20);
  auto p = logistic_problem(data, 0.0);
  Rng rng(1);
  const Vector theta = p->initial_point(rng);
  // A batch as large as the data set is the full batch, in some order.
  EXPECT_NEAR(p->sample(theta, rng, 20).loss, p->evaluate(theta).loss, 1e-12);
  EXPECT_LT((p->sample(theta, rng, 50).grad - p->evaluate(theta).grad).norm(), 1e-12);
}

TEST(Mlp, ShapeErrors) {
  auto data = moons(1, 10);
  EXPECT_THROW(mlp_problem({3, 4, 2}, Activation::tanh, data), std::invalid_argument);
  EXPECT_THROW(mlp_problem({2, 4, 3}, Activation::tanh, data), std::invalid_argument);
  EXPECT_THROW(mlp_problem({2}, Activation::tanh, data), std::invalid_argument);
  EXPECT_THROW(mlp_problem({2, 0, 2}, Activation::tanh, data), std::invalid_argument);
  EXPECT_THROW(logistic_problem(nullptr), std::invalid_argument);
  auto p = logistic_problem(data);
  const Index bad[] = {10};
  EXPECT_THROW(p->evaluate_batch(Vector::Zero(p->dim()), bad), std::out_of_range);
  EXPECT_THROW(p->evaluate_batch(Vector::Zero(p->dim()), {}), std::invalid_argument);
}

TEST(Activation, ParseAndPrint) {
  for (auto a : {Activation::tanh, Activation::relu, Activation::sigmoid})
    EXPECT_EQ(parse_activation(to_string(a)), a);
  EXPECT_THROW(parse_activation("softplus"), std::invalid_argument);
}

TEST(FiniteDiff, ExactForLinearAndQuadratic) {
  const LinearProblem linear;
  for (double h : {1e-5, 0.1, 2.0}) EXPECT_NEAR(finite_diff_grad(linear, vec({1.7}), h)[0], 3, 1e-9);
  auto quad = quadratic_problem({2.0});
  EXPECT_NEAR(finite_diff_grad(*quad, vec({1.0}), 1e-5)[0], 2, 1e-8);
  EXPECT_THROW(finite_diff_grad(*quad, vec({1.0}), 0.0), std::invalid_argument);
}

TEST(TwoMoons, SameSeedSameData) {
  const auto a = two_moons_data(5, 101, 0.2), b = two_moons_data(5, 101, 0.2);
  EXPECT_EQ(a.inputs, b.inputs);
  EXPECT_EQ(a.labels, b.labels);
  EXPECT_NE(a.inputs, two_moons_data(6, 101, 0.2).inputs);
}

TEST(TwoMoons, NoiselessPointsLieOnArcs) {
  const auto d = two_moons_data(3, 200, 0.0);
  for (Index i = 0; i < d.rows(); ++i) {
    const double x = d.inputs(i, 0), y = d.inputs(i, 1);
    if (d.labels[static_cast<std::size_t>(i)] == 0) {
      EXPECT_NEAR(x * x + y * y, 1.0, 1e-12);
      EXPECT_GE(y, -1e-12);
    } else {
      EXPECT_NEAR((1 - x) * (1 - x) + (0.5 - y) * (0.5 - y), 1.0, 1e-12);
      EXPECT_LE(y, 0.5 + 1e-12);
    }
  }
}

TEST(TwoMoons, ClassesBalanced) {
  for (Index n : {2, 7, 200, 201}) {
    const auto d = two_moons_data(1, n, 0.1);
    const auto ones = std::count(d.labels.begin(), d.labels.end(), 1);
    EXPECT_LE(std::abs(static_cast<long>(n - 2 * ones)), 1) << n;
  }
  EXPECT_THROW(two_moons_data(1, 1, 0.1), std::invalid_argument);
  EXPECT_THROW(two_moons_data(1, 10, -1), std::invalid_argument);
}

TEST(Digits, BundledFileHeaderAndContents) {
  const auto all = load_digits(default_data_dir() / "digits8x8.txt");
  EXPECT_EQ(all.rows(), 500);
  EXPECT_EQ(all.features(), 64);
  EXPECT_GE(all.inputs.minCoeff(), 0);
  EXPECT_LE(all.inputs.maxCoeff(), 16);
  for (int c = 0; c < 10; ++c) EXPECT_EQ(std::count(all.labels.begin(), all.labels.end(), c), 50);
}

TEST(Digits, SubsetIsReproducibleBalancedAndScaled) {
  const auto a = digits8x8_subset(4, 12), b = digits8x8_subset(4, 12);
  EXPECT_EQ(a.inputs, b.inputs);
  EXPECT_EQ(a.labels, b.labels);
  EXPECT_EQ(a.rows(), 120);
  EXPECT_GE(a.inputs.minCoeff(), 0);
  EXPECT_LE(a.inputs.maxCoeff(), 1);
  for (int c = 0; c < 10; ++c) EXPECT_EQ(std::count(a.labels.begin(), a.labels.end(), c), 12);
  EXPECT_NE(a.inputs, digits8x8_subset(5, 12).inputs);
  EXPECT_THROW(digits8x8_subset(1, 51), std::invalid_argument);
  EXPECT_THROW(digits8x8_subset(1, 0), std::invalid_argument);
}

TEST(Digits, MalformedFilesAreReported) {
  const auto path = std::filesystem::temp_directory_path() / "adasecant_bad_digits.txt";
  {
    std::ofstream out(path);
    out << "# comment\nrows 2 cols 3 dtype float32\n";
  }
  EXPECT_THROW(load_digits(path), std::runtime_error);
  {
    std::ofstream out(path);
    out << "rows 2 cols 3 dtype uint8\n1 0 0 0\n12 0 0 0\n";
  }
  EXPECT_THROW(load_digits(path), std::runtime_error);
  std::filesystem::remove(path);
  EXPECT_THROW(load_digits(path), std::runtime_error);
}

TEST(Digits, MlpGradientMatchesFiniteDifferences) {
  auto p = mlp_problem({64, 8, 10}, Activation::tanh,
                       std::make_shared<Dataset>(digits8x8_subset(1, 2)), 0.3);
  for (std::uint64_t seed : {1, 2, 3}) expect_gradient_matches_fd(*p, seed, 0.1, 1e-4);
}
