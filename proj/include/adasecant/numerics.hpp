#pragma once

// Flat parameter storage, block layouts, and the seedable generator shared by
// every other module.

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace adasecant {

using Index = Eigen::Index;

/// Denominator guard used throughout.
inline constexpr double kEps = 1e-7;

template <typename Scalar>
using ParamVector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

/// Thrown when a computation produces NaN or Inf.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Block {
  std::string name;
  Index offset = 0;
  Index length = 0;
};

/// Partition of a flat parameter vector into named contiguous slices
/// (one per weight matrix or bias vector). Blocks cover [0, size) exactly.
class BlockLayout {
 public:
  BlockLayout() = default;

  explicit BlockLayout(std::vector<Block> blocks) : blocks_(std::move(blocks)) {
    Index next = 0;
    for (const auto& b : blocks_) {
      if (b.length < 1)
        throw std::invalid_argument("block '" + b.name + "' has length < 1");
      if (b.offset != next)
        throw std::invalid_argument("block '" + b.name +
                                    "' is not contiguous with its predecessor");
      for (const auto& other : blocks_)
        if (&other != &b && other.name == b.name)
          throw std::invalid_argument("duplicate block name '" + b.name + "'");
      next += b.length;
    }
    size_ = next;
  }

  /// Single block spanning the whole vector.
  static BlockLayout single(Index n, std::string name = "theta") {
    return BlockLayout({Block{std::move(name), 0, n}});
  }

  /// Builds a layout from (name, length) pairs laid out back to back.
  static BlockLayout sequential(
      const std::vector<std::pair<std::string, Index>>& parts) {
    std::vector<Block> blocks;
    Index offset = 0;
    for (const auto& [name, length] : parts) {
      blocks.push_back(Block{name, offset, length});
      offset += length;
    }
    return BlockLayout(std::move(blocks));
  }

  Index size() const { return size_; }
  const std::vector<Block>& blocks() const { return blocks_; }

  const Block& find(std::string_view name) const {
    for (const auto& b : blocks_)
      if (b.name == name) return b;
    throw std::out_of_range("unknown block '" + std::string(name) + "'");
  }

 private:
  std::vector<Block> blocks_;
  Index size_ = 0;
};

/// Writable slice of `v` for the named block.
template <typename Derived>
auto block_view(Eigen::MatrixBase<Derived>& v, const BlockLayout& layout,
                std::string_view name) {
  if (v.size() != layout.size())
    throw std::invalid_argument("vector length does not match layout");
  const Block& b = layout.find(name);
  return v.derived().segment(b.offset, b.length);
}

template <typename Derived>
auto block_view(const Eigen::MatrixBase<Derived>& v, const BlockLayout& layout,
                std::string_view name) {
  if (v.size() != layout.size())
    throw std::invalid_argument("vector length does not match layout");
  const Block& b = layout.find(name);
  return v.derived().segment(b.offset, b.length);
}

template <typename Derived>
typename Derived::Scalar l2_norm(const Eigen::MatrixBase<Derived>& v) {
  return v.norm();
}

template <typename Derived>
bool all_finite(const Eigen::MatrixBase<Derived>& v) {
  return v.allFinite();
}

/// xoshiro256** seeded through splitmix64. Gaussians use the Box–Muller
/// transform: z = sqrt(-2 ln u1) cos(2 pi u2), with the paired sine variate
/// cached for the next call. Streams are bit-reproducible given the seed;
/// Gaussian values additionally depend on the platform's log/cos/sin.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : seed_(seed) {
    std::uint64_t x = seed;
    for (auto& s : state_) s = splitmix64(x);
  }

  std::uint64_t seed() const { return seed_; }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) {
    if (n == 0) throw std::invalid_argument("Rng::below(0)");
    // Lemire's rejection keeps the draw unbiased.
    const std::uint64_t threshold = (0 - n) % n;
    for (;;) {
      const std::uint64_t r = next_u64();
      if (r >= threshold) return r % n;
    }
  }

  double gaussian() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

  double gaussian(double mean, double std) { return mean + std * gaussian(); }

  /// Independent child stream; `stream` selects which one.
  Rng fork(std::uint64_t stream) const {
    std::uint64_t x = seed_ ^ (0x9E3779B97F4A7C15ull * (stream + 1));
    return Rng(splitmix64(x));
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }
  static std::uint64_t splitmix64(std::uint64_t& x) {
    std::uint64_t z = (x += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  std::uint64_t seed_;
  std::uint64_t state_[4];
  double spare_ = 0.0;
  bool has_spare_ = false;
};

template <typename Scalar = double>
ParamVector<Scalar> gaussian_fill(Rng& rng, Index n, Scalar mean, Scalar std) {
  if (!std::isfinite(mean) || !std::isfinite(std))
    throw std::invalid_argument("gaussian_fill: mean and std must be finite");
  if (std < 0) throw std::invalid_argument("gaussian_fill: std must be >= 0");
  if (n < 1) throw std::invalid_argument("gaussian_fill: n must be >= 1");
  ParamVector<Scalar> out(n);
  for (Index i = 0; i < n; ++i)
    out[i] = mean + std * static_cast<Scalar>(rng.gaussian());
  return out;
}

}  // namespace adasecant
