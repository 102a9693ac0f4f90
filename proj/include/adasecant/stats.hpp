#pragma once

// Exponential moving averages with a per-parameter adaptive time constant.
//
//   mean'   = (1 - 1/tau) mean   + (1/tau) x
//   second' = (1 - 1/tau) second + (1/tau) x^2
//   tau'    = (1 - mean^2 / second) tau + 1
//
// The time constant shrinks towards 1 when successive samples agree and grows
// by one per step when they carry no consistent sign.

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace adasecant {

template <typename Scalar>
struct MovingAverage {
  Scalar mean = 0;
  Scalar second_moment = 0;
  Scalar tau = 1;
};

/// Time constant an outlier resets to; 1/2.2 gives the current sample roughly
/// the same weight as the accumulated history.
inline constexpr double kTauReset = 2.2;

/// Initial state whose history is the single observation `x`.
template <typename Scalar>
MovingAverage<Scalar> seeded(Scalar x, Scalar tau) {
  return MovingAverage<Scalar>{x, x * x, tau};
}

/// EMA update with an explicit time constant; the returned state carries `tau`.
template <typename Scalar>
MovingAverage<Scalar> ema_update(const MovingAverage<Scalar>& state, Scalar sample,
                                 Scalar tau) {
  if (!std::isfinite(sample))
    throw std::invalid_argument("ema_update: non-finite sample");
  if (!(tau >= 1)) throw std::invalid_argument("ema_update: tau must be >= 1");
  const Scalar w = Scalar(1) / tau;
  return MovingAverage<Scalar>{(1 - w) * state.mean + w * sample,
                               (1 - w) * state.second_moment + w * sample * sample,
                               tau};
}

template <typename Scalar>
MovingAverage<Scalar> ema_update(const MovingAverage<Scalar>& state, Scalar sample) {
  return ema_update(state, sample, state.tau);
}

/// New time constant from the step statistics in `state` (taken before the
/// current step's update). An all-zero history lengthens memory by one.
/// The ratio mean^2/second is capped at 1 so rounding cannot push tau below 1.
template <typename Scalar>
Scalar tau_update(const MovingAverage<Scalar>& state) {
  if (state.second_moment <= 0) {
    if (state.mean != 0 || state.second_moment < 0)
      throw std::domain_error("tau_update: inconsistent moving-average state");
    return state.tau + 1;
  }
  const Scalar ratio =
      std::min<Scalar>(Scalar(1), state.mean * state.mean / state.second_moment);
  return (1 - ratio) * state.tau + 1;
}

/// sqrt(max(0, E[x^2] - E[x]^2)).
template <typename Scalar>
Scalar stddev(const MovingAverage<Scalar>& state) {
  return std::sqrt(std::max<Scalar>(
      Scalar(0), state.second_moment - state.mean * state.mean));
}

/// Strict test |x - mean| > sigmas * stddev.
template <typename Scalar>
bool is_outlier(Scalar sample, const MovingAverage<Scalar>& state,
                Scalar sigmas = Scalar(2)) {
  return std::abs(sample - state.mean) > sigmas * stddev(state);
}

template <typename Scalar>
MovingAverage<Scalar> reset_tau(MovingAverage<Scalar> state,
                                Scalar value = Scalar(kTauReset)) {
  state.tau = value;
  return state;
}

}  // namespace adasecant
