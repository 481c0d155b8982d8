#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "detsparse/det_sparsify.hpp"
#include "detsparse/graph.hpp"
#include "detsparse/random.hpp"
#include "detsparse/resistance.hpp"

namespace detsparse {

/// V2 in which every vertex sends at least deg_u / (1 + alpha) of its weight
/// outside V2.
struct DDSubset {
  std::vector<Vertex> v2;  // sorted
  double alpha = 0.0;
};

bool is_dd_subset(const WeightedMultiGraph& g, std::span<const Vertex> v2, double alpha);

/// Randomised search for a large (1+alpha)-DD subset: take a random prefix of
/// size ceil(n / (2(1+alpha))), peel the worst violators, then greedily refill
/// from the rest of the permutation. Repeats until at least n / (8(1+alpha))
/// vertices survive, and otherwise returns the largest subset seen (never
/// empty: a single vertex is always valid).
DDSubset almost_independent(const WeightedMultiGraph& g, double alpha, Rng& rng);

/// A walk u_0 .. u_k through eliminated vertices, read as one multi-edge of
/// the Schur complement between u_0 and u_k.
struct WalkEdge {
  std::vector<Vertex> vertices;
  std::vector<EdgeId> edges;
  double weight = 0.0;
  double probability = 0.0;
  EdgeOrigin origin = EdgeOrigin::Original;
};

/// Samples multi-edges of Sc(G, V1) implicitly: a start edge e ~ tau_e, then
/// independent random walks (step u -> v with probability w_uv / deg_u) from
/// both endpoints until each reaches V1. The walk's weight is
/// prod w / prod deg(interior).
class SchurWalkSampler {
 public:
  static constexpr std::size_t kMaxWalkSteps = 1000000;

  SchurWalkSampler(const WeightedMultiGraph& g, std::span<const Vertex> v1,
                   std::span<const double> tau);

  /// Endpoints are vertices of g. parent is the g edge for length-1 walks.
  SampledEdge draw(Rng& rng);
  /// The walk behind the most recent draw().
  WalkEdge last_walk() const;

  /// Probability that draw() produces this walk (or its reversal), via
  /// prefix/suffix products over the possible start edges.
  double walk_probability(std::span<const Vertex> vertices, std::span<const EdgeId> edges) const;
  double walk_weight(std::span<const Vertex> vertices, std::span<const EdgeId> edges) const;

  bool in_v1(Vertex v) const { return in_v1_[v] != 0; }
  double total_tau() const noexcept { return total_tau_; }
  std::size_t v1_size() const noexcept { return v1_size_; }
  /// Oversampling bound implied by the triangle inequality for resistances
  /// when tau is (1 +- oracle_eps)-accurate: (1 + eps) sum(tau) / (|V1| - 1).
  double rho_bound(double oracle_eps) const;

 private:
  // Appends the walk from `start` (already in walk_v_) until it hits V1.
  void walk_until_v1(Vertex start, Rng& rng);
  double walk_probability_unchecked(std::span<const Vertex> vertices,
                                    std::span<const EdgeId> edges) const;
  Vertex other(EdgeId id, Vertex x) const { return end_u_[id] == x ? end_v_[id] : end_u_[id]; }

  const WeightedMultiGraph* g_;
  std::vector<char> in_v1_;
  std::size_t v1_size_ = 0;
  std::vector<double> tau_;
  double total_tau_ = 0.0;
  AliasTable start_;
  // Per eliminated vertex: alias table over its incident edges, whose ids
  // are stored in CSR order.
  std::vector<std::size_t> offset_;
  std::vector<EdgeId> step_edge_;
  std::vector<AliasTable> step_;

  // Flat copies of the edge endpoints, weights and degrees.
  std::vector<Vertex> end_u_, end_v_;
  std::vector<double> weight_, inv_degree_;

  std::vector<Vertex> walk_v_;
  std::vector<EdgeId> walk_e_;
  mutable std::vector<double> prefix_;
};

/// One draw from a freshly built sampler.
WalkEdge sample_edge_schur(const WeightedMultiGraph& g, std::span<const Vertex> v1,
                           std::span<const double> tau2, Rng& rng);

struct SchurSparseOptions {
  double eps = 0.1;
  EmbeddingBackend backend = EmbeddingBackend::Exact;
  /// Oversampling bound handed to the rejection sampler. Unset: the bound
  /// from SchurWalkSampler::rho_bound.
  std::optional<double> rho;
  /// The eliminated set must be (1 + dd_alpha)-DD.
  double dd_alpha = 0.1;
};

struct SchurSparseResult {
  /// Vertices are indices into v1.
  WeightedMultiGraph graph;
  std::vector<Vertex> v1;  // sorted, local -> vertex of g
  SparsifyStats stats;
  std::size_t samples = 0;
  double rho = 0.0;
};

/// Determinant-preserving sparsifier of Sc(G, V1) with s = ceil(|V1|^2 / delta)
/// multi-edges, built from walks without forming the Schur complement.
/// Length-1 walks are tagged Original (parent = g edge), longer ones
/// SchurGenerated.
SchurSparseResult schur_sparse(const WeightedMultiGraph& g, std::span<const Vertex> v1, double delta,
                               Rng& rng, const SchurSparseOptions& options = {});

struct MergedSchurSparse {
  /// Simple graph on indices into v1.
  WeightedMultiGraph graph;
  /// Per edge of graph: the part of its weight contributed by length-1 walks.
  std::vector<double> original_weight;
  std::vector<Vertex> v1;
  SparsifyStats stats;
  std::size_t samples = 0;
  double rho = 0.0;
};

/// Same distribution as schur_sparse with parallel edges summed on the fly;
/// memory is O(|V1|^2) instead of O(s).
MergedSchurSparse schur_sparse_merged(const WeightedMultiGraph& g, std::span<const Vertex> v1,
                                      double delta, Rng& rng,
                                      const SchurSparseOptions& options = {});

}  // namespace detsparse
