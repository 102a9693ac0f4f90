#pragma once

// Directional secant step sizes.
//
// Deterministically, the per-parameter rate along a unit direction d is
// t_i = d_i / (h_i . d), and near a quadratic minimum the finite difference
// alpha = grad(theta + Delta) - grad(theta) ~ H Delta recovers it as
// t_i = Delta_i / alpha_i without forming or inverting H. In the stochastic
// setting the rate is the expectation of Delta/alpha over recent minibatches,
// approximated from moving averages of Delta, alpha and their product.

#include "adasecant/numerics.hpp"
#include "adasecant/stats.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>

namespace adasecant {

inline constexpr double kEtaMin = 1e-8;

/// Divides every block of `g` by its own L2 norm; zero blocks stay zero.
template <typename Derived>
ParamVector<typename Derived::Scalar> block_normalize(
    const Eigen::MatrixBase<Derived>& g, const BlockLayout& layout) {
  using Scalar = typename Derived::Scalar;
  if (g.size() != layout.size())
    throw std::invalid_argument("block_normalize: length does not match layout");
  ParamVector<Scalar> d = g;
  for (const auto& b : layout.blocks()) {
    auto slice = d.segment(b.offset, b.length);
    const Scalar norm = l2_norm(slice);
    if (norm > 0)
      slice /= norm;
    else
      slice.setZero();
  }
  return d;
}

/// t = delta / alpha; nullopt when |alpha| <= eps (no curvature signal).
template <typename Scalar>
std::optional<Scalar> secant_rate_deterministic(Scalar delta, Scalar alpha,
                                                Scalar eps = Scalar(0)) {
  if (!(std::abs(alpha) > eps)) return std::nullopt;
  return delta / alpha;
}

/// Delta_i = -d_i grad_i / (h_i . d), where `hess_dir_prod` holds H d.
template <typename Scalar>
ParamVector<Scalar> directional_newton_step(const ParamVector<Scalar>& grad,
                                            const ParamVector<Scalar>& hess_dir_prod,
                                            const ParamVector<Scalar>& d) {
  if (grad.size() != d.size() || hess_dir_prod.size() != d.size())
    throw std::invalid_argument("directional_newton_step: length mismatch");
  if ((hess_dir_prod.array() == 0).any())
    throw std::domain_error("directional_newton_step: zero curvature component");
  return -(d.array() * grad.array() / hess_dir_prod.array()).matrix();
}

template <typename Derived1, typename Derived2>
ParamVector<typename Derived1::Scalar> alpha_update(
    const Eigen::MatrixBase<Derived1>& g_curr,
    const Eigen::MatrixBase<Derived2>& g_prev) {
  if (g_curr.size() != g_prev.size())
    throw std::invalid_argument("alpha_update: length mismatch");
  return g_curr - g_prev;
}

template <typename Scalar>
struct SecantStats {
  MovingAverage<Scalar> delta;  // Delta and Delta^2
  MovingAverage<Scalar> alpha;  // alpha and alpha^2
  MovingAverage<Scalar> cross;  // alpha * Delta (second moment unused)
  bool initialized = false;
};

template <typename Scalar>
SecantStats<Scalar> update_secant_stats(SecantStats<Scalar> stats, Scalar delta,
                                        Scalar alpha, Scalar tau) {
  if (!stats.initialized) {
    stats.delta = seeded(delta, tau);
    stats.alpha = seeded(alpha, tau);
    stats.cross = seeded(alpha * delta, tau);
    stats.initialized = true;
  } else {
    stats.delta = ema_update(stats.delta, delta, tau);
    stats.alpha = ema_update(stats.alpha, alpha, tau);
    stats.cross = ema_update(stats.cross, alpha * delta, tau);
  }
  return stats;
}

/// sqrt(E[Delta^2]) / sqrt(E[alpha^2]) - E[alpha Delta] / E[alpha^2], floored at
/// eta_min. nullopt when the alpha statistics are empty or all zero.
/// `delta_eps` is added under the first square root; a positive value keeps
/// the rate from collapsing once steps become small relative to the noise in
/// alpha.
template <typename Scalar>
std::optional<Scalar> expected_rate(const SecantStats<Scalar>& stats,
                                    Scalar eps = Scalar(kEps),
                                    Scalar eta_min = Scalar(kEtaMin),
                                    Scalar delta_eps = 0) {
  const Scalar a2 = stats.alpha.second_moment;
  if (!stats.initialized || !(a2 > 0)) return std::nullopt;
  const Scalar eta = std::sqrt(stats.delta.second_moment + delta_eps) / (std::sqrt(a2) + eps) -
                     stats.cross.mean / (a2 + eps);
  return std::max(eta, eta_min);
}

/// Covariance form: replaces E[alpha Delta] with E[alpha Delta] - E[alpha]E[Delta].
template <typename Scalar>
std::optional<Scalar> expected_rate_cov(const SecantStats<Scalar>& stats,
                                        Scalar eps = Scalar(kEps),
                                        Scalar eta_min = Scalar(kEtaMin),
                                    Scalar delta_eps = 0) {
  const Scalar a2 = stats.alpha.second_moment;
  if (!stats.initialized || !(a2 > 0)) return std::nullopt;
  const Scalar cov = stats.cross.mean - stats.alpha.mean * stats.delta.mean;
  const Scalar eta =
      std::sqrt(stats.delta.second_moment + delta_eps) / (std::sqrt(a2) + eps) - cov / (a2 + eps);
  return std::max(eta, eta_min);
}

}  // namespace adasecant
