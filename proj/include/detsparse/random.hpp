#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace detsparse {

using Rng = std::mt19937_64;

/// Derives an independent child seed from (parent, index) with a splitmix64
/// finaliser. Used for per-trial and per-branch streams so that results are
/// reproducible regardless of evaluation order.
std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t index) noexcept;

inline Rng make_rng(std::uint64_t seed) { return Rng{seed}; }

inline Rng child_rng(std::uint64_t parent, std::uint64_t index) {
  return Rng{derive_seed(parent, index)};
}

/// Uniform draw in [0, 1).
inline double uniform01(Rng& rng) {
  // Top 53 bits: uniform on the grid k / 2^53, never 1.
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Walker alias table: O(m) build, O(1) draws from a fixed categorical
/// distribution. Weights need not be normalised.
class AliasTable {
 public:
  AliasTable() = default;
  explicit AliasTable(std::span<const double> weights);

  std::size_t draw(Rng& rng) const;
  std::size_t size() const noexcept { return prob_.size(); }
  /// Normalised probability of outcome i.
  double probability(std::size_t i) const { return p_[i]; }
  double total_weight() const noexcept { return total_; }

 private:
  std::vector<double> prob_;
  std::vector<std::size_t> alias_;
  std::vector<double> p_;
  double total_ = 0.0;
};

}  // namespace detsparse
