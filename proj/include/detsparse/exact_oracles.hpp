#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "detsparse/graph.hpp"
#include "detsparse/log_weight.hpp"

namespace detsparse {

/// Dense Laplacian. Construction from a raw matrix validates symmetry
/// (1e-12 relative), zero row sums (1e-9 of the largest diagonal) and
/// nonpositive off-diagonals.
class DenseLaplacian {
 public:
  DenseLaplacian() = default;
  explicit DenseLaplacian(Eigen::MatrixXd m);

  /// Skips validation. For matrices built by code in this library.
  static DenseLaplacian trusted(Eigen::MatrixXd m);

  const Eigen::MatrixXd& matrix() const noexcept { return m_; }
  std::size_t size() const noexcept { return static_cast<std::size_t>(m_.rows()); }
  double operator()(std::size_t i, std::size_t j) const { return m_(i, j); }

 private:
  Eigen::MatrixXd m_;
};

DenseLaplacian laplacian(const WeightedMultiGraph& g);

/// log det of a symmetric positive (semi)definite matrix by diagonally
/// pivoted Cholesky. A pivot below 1e-12 of the largest diagonal entry means
/// singular and yields the zero marker.
LogWeight log_det_spd(const Eigen::MatrixXd& m);

/// Matrix-tree theorem: log of det(L) with the last row and column removed,
/// i.e. log T(G). Zero marker for disconnected graphs.
LogWeight log_det_plus(const DenseLaplacian& l);
inline LogWeight log_tree_weight(const WeightedMultiGraph& g) { return log_det_plus(laplacian(g)); }

/// Sc(L, V1) = L11 - L12 L22^{-1} L21, rows in the order of `v1`. Tiny
/// positive off-diagonals from roundoff are clipped and the diagonal rebuilt
/// so the result is an exact Laplacian. Throws if L22 is singular.
DenseLaplacian exact_schur(const DenseLaplacian& l, std::span<const Vertex> v1);
DenseLaplacian exact_schur(const WeightedMultiGraph& g, std::span<const Vertex> v1);

/// Simple graph with one edge per negative off-diagonal. Entries with
/// magnitude at most `drop_rel` times the largest diagonal are dropped.
WeightedMultiGraph graph_from_laplacian(const DenseLaplacian& l, double drop_rel = 0.0);

/// Inverse of the Laplacian grounded at the last vertex, padded with a zero
/// row/column. For zero-sum vectors x, y this gives x^T L^+ y exactly, which
/// is all effective resistances and transfer currents need.
class GroundedInverse {
 public:
  /// Throws DisconnectedGraph if g is not connected.
  explicit GroundedInverse(const WeightedMultiGraph& g);
  explicit GroundedInverse(const DenseLaplacian& l);

  double resistance(Vertex u, Vertex v) const {
    return x_(u, u) + x_(v, v) - 2.0 * x_(u, v);
  }
  /// (chi_ab)^T L^+ (chi_cd)
  double transfer(Vertex a, Vertex b, Vertex c, Vertex d) const {
    return x_(a, c) - x_(a, d) - x_(b, c) + x_(b, d);
  }
  std::size_t size() const noexcept { return static_cast<std::size_t>(x_.rows()); }
  const Eigen::MatrixXd& matrix() const noexcept { return x_; }

 private:
  Eigen::MatrixXd x_;
};

/// Throws DisconnectedGraph when u and v lie in different components.
double exact_effective_resistance(const WeightedMultiGraph& g, Vertex u, Vertex v);

/// tau_e = w_e * ER(u, v), indexed by edge id. Requires a connected graph.
std::vector<double> exact_leverage_scores(const WeightedMultiGraph& g);

struct SpanningTree {
  std::vector<EdgeId> edges;  // sorted ascending
  LogWeight log_weight;
};

/// Sorts the ids and attaches log w(T). Does not check the tree property.
SpanningTree make_tree(const WeightedMultiGraph& g, std::vector<EdgeId> edges);
bool is_spanning_tree(const WeightedMultiGraph& g, std::span<const EdgeId> edges);

/// All spanning trees by deletion/contraction. Throws ContractViolation if
/// the (unweighted) tree count exceeds `max_trees`. A disconnected graph has
/// none; a single vertex has one empty tree.
std::vector<SpanningTree> enumerate_spanning_trees(const WeightedMultiGraph& g,
                                                   double max_trees = 1e7);

/// Pr[F subset of T] for T w-uniform, via the transfer-current determinant.
/// Zero if F contains a cycle, one if F is empty. Requires a connected graph.
double subset_marginal(const WeightedMultiGraph& g, std::span<const EdgeId> f);

}  // namespace detsparse
