#pragma once

// Variance-reduced gradients: g~ = (g + gamma E[g]) / (1 + gamma).
//
// For an exact mean, E[g~] = E[g] and var(g~) = var(g) / (1 + gamma)^2.
// The blend coefficient is estimated online from root-mean-square statistics
// of (g - g')(g - E[g]) and (g - E[g])(g' - E[g]), where g' is the paired
// gradient from the neighbouring minibatch, and clipped to [0, gamma_cap].

#include "adasecant/stats.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <stdexcept>
#include <utility>

namespace adasecant {

inline constexpr double kGammaCap = 1.8;

template <typename Scalar>
Scalar corrected_gradient(Scalar g, Scalar mean_g, Scalar gamma) {
  if (!(gamma >= 0))
    throw std::invalid_argument("corrected_gradient: gamma must be >= 0");
  return (g + gamma * mean_g) / (1 + gamma);
}

template <typename Scalar>
struct GradientPair {
  Scalar g;
  Scalar g_next;
};

/// Minimiser over beta of mean[(beta g + (1 - beta) mean - g')^2], i.e.
/// mean[(g - mean)(g' - mean)] / mean[(g - mean)^2]. Returns nullopt when g
/// has zero spread about `mean` (the gradient is deterministic and the caller
/// should use beta = 1).
template <typename Scalar>
std::optional<Scalar> optimal_beta(std::span<const GradientPair<Scalar>> samples,
                                   Scalar mean) {
  Scalar cross = 0;
  Scalar var = 0;
  for (const auto& s : samples) {
    cross += (s.g - mean) * (s.g_next - mean);
    var += (s.g - mean) * (s.g - mean);
  }
  if (samples.empty() || !(var > 0)) return std::nullopt;
  return cross / var;
}

template <typename Scalar>
Scalar gamma_from_beta(Scalar beta) {
  return Scalar(1) / beta - 1;
}

template <typename Scalar>
struct GammaStats {
  MovingAverage<Scalar> num;  // tracks (g - g')(g - E[g])
  MovingAverage<Scalar> den;  // tracks (g - E[g])(g' - E[g])
  Scalar gamma_cap = Scalar(kGammaCap);
  bool initialized = false;
};

/// sqrt(EMA[num^2]) / sqrt(EMA[den^2] + eps), clipped to [0, gamma_cap].
template <typename Scalar>
Scalar gamma_estimate(const GammaStats<Scalar>& stats, Scalar eps = Scalar(kEps)) {
  if (!stats.initialized) return 0;
  const Scalar gamma = std::sqrt(stats.num.second_moment) /
                       std::sqrt(stats.den.second_moment + eps);
  return std::clamp<Scalar>(gamma, Scalar(0), stats.gamma_cap);
}

template <typename Scalar>
std::pair<Scalar, Scalar> gamma_terms(Scalar g, Scalar g_prev, Scalar mean_g) {
  return {(g - g_prev) * (g - mean_g), (g - mean_g) * (g_prev - mean_g)};
}

/// Pushes the numerator and denominator products into their EMAs with time
/// constant `tau`. The first push seeds both averages.
template <typename Scalar>
GammaStats<Scalar> update_gamma_stats(GammaStats<Scalar> stats, Scalar g,
                                      Scalar g_prev, Scalar mean_g, Scalar tau) {
  const auto [num, den] = gamma_terms(g, g_prev, mean_g);
  if (!std::isfinite(num) || !std::isfinite(den))
    throw std::invalid_argument("update_gamma_stats: non-finite input");
  if (!stats.initialized) {
    stats.num = seeded(num, tau);
    stats.den = seeded(den, tau);
    stats.initialized = true;
  } else {
    stats.num = ema_update(stats.num, num, tau);
    stats.den = ema_update(stats.den, den, tau);
  }
  return stats;
}

template <typename Scalar>
GammaStats<Scalar> update_gamma_stats(GammaStats<Scalar> stats, Scalar g,
                                      Scalar g_prev, Scalar mean_g) {
  return update_gamma_stats(stats, g, g_prev, mean_g, stats.num.tau);
}

}  // namespace adasecant
