#pragma once

// Adasecant step orchestration and the baseline first-order optimizers.

#include "adasecant/numerics.hpp"
#include "adasecant/secant.hpp"
#include "adasecant/stats.hpp"
#include "adasecant/variance.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

namespace adasecant {

/// Which difference of gradients pairs with the previous step as alpha.
enum class CurvatureSignal {
  raw,         // grad - prev_grad
  direction,   // d - prev_d, both block-normalised
  scaled_raw,  // (grad - prev_grad) / ||prev_grad|| per block
};

struct OptimizerConfig {
  double gamma_cap = kGammaCap;
  double tau_reset = kTauReset;
  double outlier_sigma = 2.0;
  double eps = kEps;
  double eta_min = kEtaMin;
  double delta_eps = 1e-5;  // added to E[Delta^2] under the rate's square root
  double bootstrap_rate = 1e-3;
  bool use_cov_form = false;
  bool enable_adagrad_guard = true;
  bool enable_variance_reduction = true;
  CurvatureSignal curvature = CurvatureSignal::scaled_raw;
};

inline void validate(const OptimizerConfig& c) {
  auto positive = [](double v, const char* name) {
    if (!(v > 0) || !std::isfinite(v))
      throw std::invalid_argument(std::string("OptimizerConfig: ") + name +
                                  " must be positive and finite");
  };
  positive(c.gamma_cap, "gamma_cap");
  positive(c.outlier_sigma, "outlier_sigma");
  positive(c.eps, "eps");
  positive(c.eta_min, "eta_min");
  positive(c.bootstrap_rate, "bootstrap_rate");
  if (!(c.delta_eps >= 0) || !std::isfinite(c.delta_eps))
    throw std::invalid_argument("OptimizerConfig: delta_eps must be >= 0");
  if (!(c.tau_reset >= 1) || !std::isfinite(c.tau_reset))
    throw std::invalid_argument("OptimizerConfig: tau_reset must be >= 1");
}

/// Thresholded Adagrad divisor: accum' = accum + g~^2, rho = max(1, sqrt(accum')).
/// Dividing by rho can only shrink the secant rate.
template <typename Scalar>
std::pair<Scalar, Scalar> adagrad_guard(Scalar accum, Scalar g_tilde) {
  if (!(accum >= 0)) throw std::invalid_argument("adagrad_guard: accum must be >= 0");
  const Scalar next = accum + g_tilde * g_tilde;
  return {next, std::max(Scalar(1), std::sqrt(next))};
}

template <typename Scalar>
struct ParameterStats {
  MovingAverage<Scalar> grad;       // raw gradient, for the outlier test
  MovingAverage<Scalar> direction;  // block-normalised gradient
  GammaStats<Scalar> gamma;
  SecantStats<Scalar> secant;
  Scalar tau = Scalar(kTauReset);
  Scalar adagrad_accum = 0;
};

template <typename Scalar>
struct AdasecantState {
  BlockLayout layout;
  std::vector<ParameterStats<Scalar>> params;
  ParamVector<Scalar> prev_grad;       // raw gradient of the previous step
  ParamVector<Scalar> prev_direction;  // its block-normalised form
  ParamVector<Scalar> prev_delta;      // update subtracted from theta last step
  std::int64_t step_count = 0;

  AdasecantState() = default;
  AdasecantState(BlockLayout l, const OptimizerConfig& config)
      : layout(std::move(l)), params(static_cast<std::size_t>(layout.size())) {
    for (auto& p : params) {
      p.tau = static_cast<Scalar>(config.tau_reset);
      p.gamma.gamma_cap = static_cast<Scalar>(config.gamma_cap);
    }
  }

  Index size() const { return layout.size(); }
};

/// Per-parameter internals of one step, for diagnostics and tests.
template <typename Scalar>
struct StepTrace {
  ParamVector<Scalar> direction;
  ParamVector<Scalar> gamma;
  ParamVector<Scalar> corrected;
  ParamVector<Scalar> alpha;     // curvature signal; zero on the first step
  ParamVector<Scalar> tau_used;  // time constant the EMAs were updated with
  ParamVector<Scalar> eta;
  ParamVector<Scalar> rho;
  ParamVector<Scalar> delta;     // theta' = theta - delta
  Eigen::Array<bool, Eigen::Dynamic, 1> outlier;

  void resize(Index n) {
    for (auto* v : {&direction, &gamma, &corrected, &alpha, &tau_used, &eta, &rho, &delta})
      v->setZero(n);
    outlier.setConstant(n, false);
  }
};

namespace detail {
[[noreturn]] inline void non_finite(const char* stage, Index i) {
  throw NumericalError(std::string("adasecant_step: non-finite ") + stage +
                       " at parameter " + std::to_string(i));
}
}  // namespace detail

/// One Adasecant update of `theta` given the minibatch gradient `grad`.
///
/// Per parameter, in order: variance-correct the block-normalised gradient
/// with gamma estimated from past statistics; reset tau on a gradient or
/// curvature outlier; update every moving average; take the secant rate;
/// update tau from the previous step statistics; divide by the Adagrad guard;
/// and step. The first step has no curvature pair and moves by
/// bootstrap_rate along the normalised gradient.
template <typename Scalar>
void adasecant_step(ParamVector<Scalar>& theta, const ParamVector<Scalar>& grad,
                    AdasecantState<Scalar>& state, const OptimizerConfig& config,
                    StepTrace<Scalar>* trace = nullptr) {
  const Index n = state.size();
  if (theta.size() != n || grad.size() != n)
    throw std::invalid_argument("adasecant_step: length mismatch");
  if (!grad.allFinite())
    throw std::invalid_argument("adasecant_step: non-finite gradient");

  const Scalar eps = static_cast<Scalar>(config.eps);
  const Scalar eta_min = static_cast<Scalar>(config.eta_min);
  const Scalar delta_eps = static_cast<Scalar>(config.delta_eps);
  const Scalar sigmas = static_cast<Scalar>(config.outlier_sigma);
  const Scalar tau_reset = static_cast<Scalar>(config.tau_reset);
  const bool first = state.step_count == 0;

  const ParamVector<Scalar> d = block_normalize(grad, state.layout);
  ParamVector<Scalar> delta(n);
  if (trace) trace->resize(n);
  ParamVector<Scalar> prev_scale = ParamVector<Scalar>::Zero(n);
  if (!first)
    for (const auto& b : state.layout.blocks()) {
      const Scalar norm = l2_norm(state.prev_grad.segment(b.offset, b.length));
      prev_scale.segment(b.offset, b.length).setConstant(norm > 0 ? 1 / norm : 0);
    }

  for (Index i = 0; i < n; ++i) {
    auto& p = state.params[static_cast<std::size_t>(i)];
    p.gamma.gamma_cap = static_cast<Scalar>(config.gamma_cap);

    const Scalar gamma =
        config.enable_variance_reduction ? gamma_estimate(p.gamma, eps) : Scalar(0);
    if (!std::isfinite(gamma)) detail::non_finite("gamma", i);
    const Scalar mean_d = first ? d[i] : p.direction.mean;
    const Scalar g_tilde = corrected_gradient(d[i], mean_d, gamma);
    if (!std::isfinite(g_tilde)) detail::non_finite("corrected gradient", i);

    Scalar alpha = 0;
    Scalar tau = p.tau;
    bool outlier = false;
    if (!first) {
      switch (config.curvature) {
        case CurvatureSignal::raw: alpha = grad[i] - state.prev_grad[i]; break;
        case CurvatureSignal::direction: alpha = d[i] - state.prev_direction[i]; break;
        case CurvatureSignal::scaled_raw:
          alpha = (grad[i] - state.prev_grad[i]) * prev_scale[i];
          break;
      }
      outlier = is_outlier(grad[i], p.grad, sigmas) ||
                (p.secant.initialized && is_outlier(alpha, p.secant.alpha, sigmas));
      if (outlier) tau = tau_reset;
    }

    const MovingAverage<Scalar> delta_before = p.secant.delta;
    const bool had_delta_stats = p.secant.initialized;
    if (first) {
      p.grad = seeded(grad[i], tau);
      p.direction = seeded(d[i], tau);
    } else {
      p.gamma = update_gamma_stats(p.gamma, d[i], state.prev_direction[i], mean_d, tau);
      p.grad = ema_update(p.grad, grad[i], tau);
      p.direction = ema_update(p.direction, d[i], tau);
      p.secant = update_secant_stats(p.secant, state.prev_delta[i], alpha, tau);
    }

    const auto rate = config.use_cov_form
                          ? expected_rate_cov(p.secant, eps, eta_min, delta_eps)
                          : expected_rate(p.secant, eps, eta_min, delta_eps);
    const Scalar eta = rate ? *rate : static_cast<Scalar>(config.bootstrap_rate);
    if (!std::isfinite(eta)) detail::non_finite("rate", i);

    if (had_delta_stats) {
      MovingAverage<Scalar> prior = delta_before;
      prior.tau = tau;
      // A nonzero mean with E[Delta^2] == 0 means the squares underflowed;
      // take the ratio-one limit instead of the degenerate-state error.
      p.tau = prior.second_moment > 0 || prior.mean == 0 ? tau_update(prior) : Scalar(1);
    } else {
      p.tau = tau;
    }

    Scalar rho = 1;
    if (config.enable_adagrad_guard)
      std::tie(p.adagrad_accum, rho) = adagrad_guard(p.adagrad_accum, g_tilde);

    delta[i] = eta / rho * g_tilde;
    if (!std::isfinite(delta[i]) || !std::isfinite(theta[i] - delta[i]))
      detail::non_finite("update", i);

    if (trace) {
      trace->direction[i] = d[i];
      trace->gamma[i] = gamma;
      trace->corrected[i] = g_tilde;
      trace->alpha[i] = alpha;
      trace->tau_used[i] = tau;
      trace->eta[i] = eta;
      trace->rho[i] = rho;
      trace->delta[i] = delta[i];
      trace->outlier[i] = outlier;
    }
  }

  theta -= delta;
  state.prev_grad = grad;
  state.prev_direction = d;
  state.prev_delta = std::move(delta);
  ++state.step_count;
}

// ---------------------------------------------------------------------------
// Baselines

struct SgdParams {
  double lr = 0.01;
  double momentum = 0.0;
  // Linear decay to lr * final_fraction over decay_steps; 0 disables.
  std::int64_t decay_steps = 0;
  double final_fraction = 0.0;
};

template <typename Scalar>
struct SgdState {
  ParamVector<Scalar> velocity;
  std::int64_t step_count = 0;
};

template <typename Scalar>
Scalar sgd_rate(const SgdParams& hp, std::int64_t step) {
  if (hp.decay_steps <= 0) return static_cast<Scalar>(hp.lr);
  const double frac = std::min(1.0, static_cast<double>(step) /
                                        static_cast<double>(hp.decay_steps));
  return static_cast<Scalar>(hp.lr * (1.0 - (1.0 - hp.final_fraction) * frac));
}

/// v' = mu v - lr_t g; theta' = theta + v'.
template <typename Scalar>
void sgd_momentum_step(ParamVector<Scalar>& theta, const ParamVector<Scalar>& grad,
                       SgdState<Scalar>& state, const SgdParams& hp) {
  if (state.velocity.size() != theta.size()) state.velocity.setZero(theta.size());
  const Scalar lr = sgd_rate<Scalar>(hp, state.step_count);
  state.velocity = static_cast<Scalar>(hp.momentum) * state.velocity - lr * grad;
  theta += state.velocity;
  ++state.step_count;
  if (!theta.allFinite()) throw NumericalError("sgd_momentum_step: non-finite parameter");
}

struct AdagradParams {
  double lr = 0.01;
  double eps = 1e-7;
};

template <typename Scalar>
struct AccumulatorState {
  ParamVector<Scalar> accum;
  ParamVector<Scalar> accum_update;  // Adadelta only
  std::int64_t step_count = 0;
};

/// G' = G + g^2; theta' = theta - lr g / (sqrt(G') + eps).
template <typename Scalar>
void adagrad_step(ParamVector<Scalar>& theta, const ParamVector<Scalar>& grad,
                  AccumulatorState<Scalar>& state, const AdagradParams& hp) {
  if (state.accum.size() != theta.size()) state.accum.setZero(theta.size());
  state.accum.array() += grad.array().square();
  theta.array() -= static_cast<Scalar>(hp.lr) * grad.array() /
                   (state.accum.array().sqrt() + static_cast<Scalar>(hp.eps));
  ++state.step_count;
  if (!theta.allFinite()) throw NumericalError("adagrad_step: non-finite parameter");
}

struct RmspropParams {
  double lr = 0.001;
  double decay = 0.9;
  double eps = 1e-7;
};

/// E' = decay E + (1 - decay) g^2; theta' = theta - lr g / (sqrt(E') + eps).
template <typename Scalar>
void rmsprop_step(ParamVector<Scalar>& theta, const ParamVector<Scalar>& grad,
                  AccumulatorState<Scalar>& state, const RmspropParams& hp) {
  if (state.accum.size() != theta.size()) state.accum.setZero(theta.size());
  const Scalar rho = static_cast<Scalar>(hp.decay);
  state.accum = rho * state.accum + (1 - rho) * grad.cwiseAbs2();
  theta.array() -= static_cast<Scalar>(hp.lr) * grad.array() /
                   (state.accum.array().sqrt() + static_cast<Scalar>(hp.eps));
  ++state.step_count;
  if (!theta.allFinite()) throw NumericalError("rmsprop_step: non-finite parameter");
}

struct AdadeltaParams {
  double decay = 0.95;
  double eps = 1e-6;
  double lr = 1.0;
};

/// Eg' = decay Eg + (1 - decay) g^2
/// dx  = -sqrt(Edx + eps) / sqrt(Eg' + eps) g
/// Edx' = decay Edx + (1 - decay) dx^2;  theta' = theta + lr dx
template <typename Scalar>
void adadelta_step(ParamVector<Scalar>& theta, const ParamVector<Scalar>& grad,
                   AccumulatorState<Scalar>& state, const AdadeltaParams& hp) {
  if (state.accum.size() != theta.size()) {
    state.accum.setZero(theta.size());
    state.accum_update.setZero(theta.size());
  }
  const Scalar rho = static_cast<Scalar>(hp.decay);
  const Scalar eps = static_cast<Scalar>(hp.eps);
  state.accum = rho * state.accum + (1 - rho) * grad.cwiseAbs2();
  const ParamVector<Scalar> dx =
      (-(state.accum_update.array() + eps).sqrt() / (state.accum.array() + eps).sqrt() *
       grad.array())
          .matrix();
  state.accum_update = rho * state.accum_update + (1 - rho) * dx.cwiseAbs2();
  theta += static_cast<Scalar>(hp.lr) * dx;
  ++state.step_count;
  if (!theta.allFinite()) throw NumericalError("adadelta_step: non-finite parameter");
}

// ---------------------------------------------------------------------------
// Uniform interface used by the experiment harness.

template <typename Scalar>
class Optimizer {
 public:
  virtual ~Optimizer() = default;
  virtual std::string name() const = 0;
  virtual void step(ParamVector<Scalar>& theta, const ParamVector<Scalar>& grad) = 0;
  /// Mean over parameters of the effective step multiplier applied to the
  /// incoming (or, for Adasecant, corrected) gradient in the last step.
  virtual Scalar mean_applied_rate() const = 0;
};

template <typename Scalar>
class AdasecantOptimizer final : public Optimizer<Scalar> {
 public:
  AdasecantOptimizer(BlockLayout layout, OptimizerConfig config)
      : config_(config), state_(std::move(layout), config) {
    validate(config_);
  }

  std::string name() const override { return "adasecant"; }

  void step(ParamVector<Scalar>& theta, const ParamVector<Scalar>& grad) override {
    adasecant_step(theta, grad, state_, config_, &trace_);
  }

  Scalar mean_applied_rate() const override {
    if (trace_.eta.size() == 0) return 0;
    return (trace_.eta.array() / trace_.rho.array()).mean();
  }

  const AdasecantState<Scalar>& state() const { return state_; }
  const StepTrace<Scalar>& last_trace() const { return trace_; }
  const OptimizerConfig& config() const { return config_; }

 private:
  OptimizerConfig config_;
  AdasecantState<Scalar> state_;
  StepTrace<Scalar> trace_;
};

template <typename Scalar>
class SgdOptimizer final : public Optimizer<Scalar> {
 public:
  explicit SgdOptimizer(SgdParams hp) : hp_(hp) {
    if (!(hp.lr > 0) || hp.momentum < 0 || hp.momentum >= 1)
      throw std::invalid_argument("sgd: lr must be > 0 and momentum in [0, 1)");
  }
  std::string name() const override { return "sgd"; }
  void step(ParamVector<Scalar>& theta, const ParamVector<Scalar>& grad) override {
    rate_ = sgd_rate<Scalar>(hp_, state_.step_count);
    sgd_momentum_step(theta, grad, state_, hp_);
  }
  Scalar mean_applied_rate() const override { return rate_; }

 private:
  SgdParams hp_;
  SgdState<Scalar> state_;
  Scalar rate_ = 0;
};

template <typename Scalar>
class AdagradOptimizer final : public Optimizer<Scalar> {
 public:
  explicit AdagradOptimizer(AdagradParams hp) : hp_(hp) {
    if (!(hp.lr > 0) || !(hp.eps > 0)) throw std::invalid_argument("adagrad: lr, eps must be > 0");
  }
  std::string name() const override { return "adagrad"; }
  void step(ParamVector<Scalar>& theta, const ParamVector<Scalar>& grad) override {
    adagrad_step(theta, grad, state_, hp_);
  }
  Scalar mean_applied_rate() const override {
    if (state_.accum.size() == 0) return 0;
    return (static_cast<Scalar>(hp_.lr) /
            (state_.accum.array().sqrt() + static_cast<Scalar>(hp_.eps)))
        .mean();
  }

 private:
  AdagradParams hp_;
  AccumulatorState<Scalar> state_;
};

template <typename Scalar>
class RmspropOptimizer final : public Optimizer<Scalar> {
 public:
  explicit RmspropOptimizer(RmspropParams hp) : hp_(hp) {
    if (!(hp.lr > 0) || !(hp.eps > 0) || !(hp.decay > 0 && hp.decay < 1))
      throw std::invalid_argument("rmsprop: lr, eps must be > 0 and decay in (0, 1)");
  }
  std::string name() const override { return "rmsprop"; }
  void step(ParamVector<Scalar>& theta, const ParamVector<Scalar>& grad) override {
    rmsprop_step(theta, grad, state_, hp_);
  }
  Scalar mean_applied_rate() const override {
    if (state_.accum.size() == 0) return 0;
    return (static_cast<Scalar>(hp_.lr) /
            (state_.accum.array().sqrt() + static_cast<Scalar>(hp_.eps)))
        .mean();
  }

 private:
  RmspropParams hp_;
  AccumulatorState<Scalar> state_;
};

template <typename Scalar>
class AdadeltaOptimizer final : public Optimizer<Scalar> {
 public:
  explicit AdadeltaOptimizer(AdadeltaParams hp) : hp_(hp) {
    if (!(hp.lr > 0) || !(hp.eps > 0) || !(hp.decay > 0 && hp.decay < 1))
      throw std::invalid_argument("adadelta: lr, eps must be > 0 and decay in (0, 1)");
  }
  std::string name() const override { return "adadelta"; }
  void step(ParamVector<Scalar>& theta, const ParamVector<Scalar>& grad) override {
    ParamVector<Scalar> before = state_.accum_update;
    if (before.size() != theta.size()) before.setZero(theta.size());
    adadelta_step(theta, grad, state_, hp_);
    const Scalar eps = static_cast<Scalar>(hp_.eps);
    rate_ = (static_cast<Scalar>(hp_.lr) * (before.array() + eps).sqrt() /
             (state_.accum.array() + eps).sqrt())
                .mean();
  }
  Scalar mean_applied_rate() const override { return rate_; }

 private:
  AdadeltaParams hp_;
  AccumulatorState<Scalar> state_;
  Scalar rate_ = 0;
};

}  // namespace adasecant
