#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "detsparse/exact_oracles.hpp"
#include "detsparse/graph.hpp"
#include "detsparse/log_weight.hpp"
#include "detsparse/random.hpp"

namespace detsparse {

// ---- test graphs ----

WeightedMultiGraph complete_graph(std::size_t n, double w = 1.0);
WeightedMultiGraph path_graph(std::size_t n, double w = 1.0);
WeightedMultiGraph cycle_graph(std::size_t n, double w = 1.0);
/// Centre 0 and `leaves` leaves.
WeightedMultiGraph star_graph(std::size_t leaves, double w = 1.0);
/// n vertices in total: hub 0 joined to the cycle 1..n-1.
WeightedMultiGraph wheel_graph(std::size_t n, double w = 1.0);
/// C6 plus the chords (0,3) and (1,4).
WeightedMultiGraph cycle6_with_chords();
/// G(n, p) with unit weights, redrawn until connected.
WeightedMultiGraph gnp_graph(std::size_t n, double p, Rng& rng);
/// Random spanning tree plus each remaining pair with probability p;
/// weights uniform in [w_lo, w_hi].
WeightedMultiGraph random_connected_graph(std::size_t n, double p, double w_lo, double w_hi,
                                          Rng& rng);

// ---- moment statistics ----

/// Statistics of X_i = T(H_i) / prediction, computed from log T(H_i) with a
/// max shift so nothing overflows.
struct MomentReport {
  std::size_t trials = 0;
  double log_prediction = 0.0;
  double mean_ratio = 0.0;           // E[X]
  double mean_ratio_se = 0.0;        // standard error of E[X]
  double second_moment_ratio = 0.0;  // E[X^2] / E[X]^2
  double second_moment_se = 0.0;     // jackknife
  std::size_t zero_trials = 0;       // T(H) = 0
  bool exact = false;                // every outcome enumerated with equal weight
  bool flagged = false;              // run outside the regime its bound assumes
  std::string note;
  std::uint64_t seed = 0;
};

MomentReport summarize_moments(std::span<const double> log_values, double log_prediction);

/// Runs `trial(rng)` with rng seeded by derive_seed(seed, i) for each trial.
MomentReport moment_experiment(std::size_t trials, std::uint64_t seed, double log_prediction,
                               const std::function<LogWeight(Rng&)>& trial);

/// log((s)_k / (m)_k), the probability that a fixed k-set survives a uniform
/// s-subset of m items.
double log_falling_ratio(std::size_t s, std::size_t m, std::size_t k);

/// Uniform s-subsets of the edges (no reweighting) against the prediction
/// T(G) (s)_{n-1} / (m)_{n-1}.
MomentReport uniform_subset_moment_experiment(const WeightedMultiGraph& g, std::size_t s,
                                              std::size_t trials, std::uint64_t seed);

/// The same statistics over all C(m, s) subsets. Throws if C(m, s) > 1e5.
MomentReport uniform_subset_moment_enumeration(const WeightedMultiGraph& g, std::size_t s);

/// s-subsets forced to contain t_hat (the other s - n + 1 edges uniform among
/// the rest) against T(G) p^{n-1} with p = s / m. Flags s < 4 n^2; clamps
/// s > m to m with a note.
MomentReport conditional_moment_experiment(const WeightedMultiGraph& g,
                                           std::span<const EdgeId> t_hat, std::size_t s,
                                           std::size_t trials, std::uint64_t seed);

/// Exact E[T(H | t_hat)] by enumerating trees: sum_T w(T) Pr[T \ t_hat survives].
double conditional_exact_log_mean(const WeightedMultiGraph& g, std::span<const EdgeId> t_hat,
                                  std::size_t s);

// ---- distribution tests ----

struct TVReport {
  std::vector<SpanningTree> support;
  std::vector<double> exact;
  std::vector<std::uint64_t> counts;
  std::vector<double> empirical;
  std::size_t draws = 0;
  double tv = 0.0;
  double mc_error = 0.0;  // sqrt(|support| / draws)
  std::uint64_t seed = 0;
};

/// Total variation between `sampler` and the enumerated w-uniform
/// distribution. A sampled tree outside the support throws.
TVReport tv_estimate(const std::function<SpanningTree(Rng&)>& sampler, const WeightedMultiGraph& g,
                     std::size_t draws, std::uint64_t seed);

struct ChiSquareResult {
  double statistic = 0.0;
  double dof = 0.0;
  double critical = 0.0;
  bool pass = false;
  bool impossible_outcome = false;
  std::size_t cells = 0;
};

/// Pearson test; cells with expected count below 5 are pooled. The critical
/// value uses the Wilson-Hilferty approximation of the chi-square quantile.
ChiSquareResult chi_square_test(std::span<const std::uint64_t> observed,
                                std::span<const double> expected_prob, double significance = 1e-3);

double chi_square_quantile(double dof, double p);

// ---- enumerated tree-intersection profiles ----

/// Entry k: log of sum over ordered pairs (T1, T2) with |T1 n T2| = k of
/// w(T1) w(T2). Requires m <= 64.
std::vector<LogWeight> intersection_pair_profile(const WeightedMultiGraph& g);

/// Entry k: log of sum over trees T with |T n t_hat| = k of w(T). Requires m <= 64.
std::vector<LogWeight> tree_intersection_profile(const WeightedMultiGraph& g,
                                                 std::span<const EdgeId> t_hat);

}  // namespace detsparse
