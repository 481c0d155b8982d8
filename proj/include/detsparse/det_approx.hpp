#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "detsparse/exact_oracles.hpp"
#include "detsparse/graph.hpp"
#include "detsparse/log_weight.hpp"
#include "detsparse/schur.hpp"

namespace detsparse {

/// Completes an SDDM matrix to a Laplacian with one extra vertex (last) that
/// absorbs each row's excess. det_+ of the result equals det(m).
DenseLaplacian add_row_column(const Eigen::MatrixXd& m);

struct DetApproxOptions {
  /// delta' = delta^2 / (c_delta * ceil(log2 n)^3) at the top of the recursion.
  double c_delta = 8.0;
  /// Graphs with at most this many vertices are finished by exact Cholesky.
  /// The smallest meaningful value is 2 (return the single edge weight).
  std::size_t exact_threshold = 16;
  double alpha = 0.1;
  SchurSparseOptions schur;
};

struct DetTraceLevel {
  std::size_t calls = 0;
  std::size_t exact_leaves = 0;
  double budget_sum = 0.0;
  std::size_t vertex_sum = 0;
};

struct DetTrace {
  std::vector<DetTraceLevel> levels;
  std::size_t schur_calls = 0;
  std::size_t disconnected_events = 0;
  std::uint64_t proposals = 0;
  std::uint64_t samples = 0;
};

struct DetEstimate {
  LogWeight log_value;
  double delta = 0.0;
  double delta_prime = 0.0;
  DetTrace trace;
};

/// Recursive estimate of det_+(L) = T(G). Each call on k vertices uses the
/// Schur-sparsification budget delta' * k / n, so the budgets within one
/// level of the recursion sum to about delta'. A disconnected sparsifier
/// makes that branch (and the estimate) zero; this is reported, not raised.
/// Child seeds are derive_seed(parent, branch), so the result depends only
/// on `seed`.
DetEstimate det_approx(const DenseLaplacian& l, double delta, std::uint64_t seed,
                       const DetApproxOptions& options = {});
DetEstimate det_approx(const WeightedMultiGraph& g, double delta, std::uint64_t seed,
                       const DetApproxOptions& options = {});

struct BoostedEstimate {
  LogWeight log_value;  // median over runs
  std::vector<DetEstimate> runs;
};

/// Median of k independent runs with seeds derive_seed(seed, i).
BoostedEstimate det_approx_boosted(const WeightedMultiGraph& g, double delta, std::size_t k,
                                   std::uint64_t seed, const DetApproxOptions& options = {});

}  // namespace detsparse
