#include "detsparse/random.hpp"

#include <cmath>

#include "detsparse/errors.hpp"

namespace detsparse {

std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t index) noexcept {
  std::uint64_t z = parent ^ (index + 0x9e3779b97f4a7c15ULL + (parent << 6) + (parent >> 2));
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

AliasTable::AliasTable(std::span<const double> weights)
    : prob_(weights.size()), alias_(weights.size()), p_(weights.size()) {
  if (weights.empty()) throw ContractViolation("alias table: no outcomes");
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw ContractViolation("alias table: bad weight");
    total_ += w;
  }
  if (!(total_ > 0.0)) throw ContractViolation("alias table: zero total weight");
  const std::size_t m = weights.size();
  std::vector<double> scaled(m);
  std::vector<std::size_t> small, large;
  for (std::size_t i = 0; i < m; ++i) {
    p_[i] = weights[i] / total_;
    scaled[i] = p_[i] * static_cast<double>(m);
    (scaled[i] < 1.0 ? small : large).push_back(i);
  }
  while (!small.empty() && !large.empty()) {
    const std::size_t s = small.back(), l = large.back();
    small.pop_back();
    prob_[s] = scaled[s];
    alias_[s] = l;
    scaled[l] -= 1.0 - scaled[s];
    if (scaled[l] < 1.0) {
      large.pop_back();
      small.push_back(l);
    }
  }
  for (std::size_t i : large) {
    prob_[i] = 1.0;
    alias_[i] = i;
  }
  for (std::size_t i : small) {
    prob_[i] = 1.0;
    alias_[i] = i;
  }
}

std::size_t AliasTable::draw(Rng& rng) const {
  const double x = uniform01(rng) * static_cast<double>(prob_.size());
  auto i = static_cast<std::size_t>(x);
  if (i >= prob_.size()) i = prob_.size() - 1;
  return (x - static_cast<double>(i)) < prob_[i] ? i : alias_[i];
}

}  // namespace detsparse
