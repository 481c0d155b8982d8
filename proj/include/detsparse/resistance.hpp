#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <vector>

#include "detsparse/exact_oracles.hpp"
#include "detsparse/graph.hpp"
#include "detsparse/random.hpp"

namespace detsparse {

enum class EmbeddingBackend { Exact, Sketch };

/// Effective-resistance oracle. The Sketch backend stores a d-dimensional
/// point z_u per vertex with ER(u,v) ~ ||z_u - z_v||^2; the Exact backend
/// answers from the grounded inverse and behaves like a sketch with eps = 0.
class ResistanceEmbedding {
 public:
  static ResistanceEmbedding exact(const WeightedMultiGraph& g);
  /// d = ceil(c_jl * eps^-2 * ln m) random +-1/sqrt(d) projections of
  /// W^{1/2} B, each pushed through one Laplacian solve.
  static ResistanceEmbedding sketch(const WeightedMultiGraph& g, double eps, Rng& rng,
                                    double c_jl = 4.0);

  /// Touches only the rows of u and v.
  double query(Vertex u, Vertex v) const {
    if (backend_ == EmbeddingBackend::Exact) return exact_->resistance(u, v);
    const double* a = z_.data() + static_cast<std::size_t>(u) * dim_;
    const double* b = z_.data() + static_cast<std::size_t>(v) * dim_;
    double acc = 0.0;
    for (std::size_t r = 0; r < dim_; ++r) {
      const double diff = a[r] - b[r];
      acc += diff * diff;
    }
    return acc;
  }

  EmbeddingBackend backend() const noexcept { return backend_; }
  double eps() const noexcept { return eps_; }
  std::size_t dimension() const noexcept { return dim_; }
  std::size_t num_vertices() const noexcept { return n_; }
  /// Sketch coordinates of u (empty for the Exact backend).
  std::span<const double> coordinates(Vertex u) const;

 private:
  EmbeddingBackend backend_ = EmbeddingBackend::Exact;
  double eps_ = 0.0;
  std::size_t n_ = 0;
  std::size_t dim_ = 0;
  std::vector<double> z_;  // n x dim, row-major
  std::shared_ptr<const GroundedInverse> exact_;
};

/// Dispatches on backend; eps is ignored by the Exact backend.
ResistanceEmbedding build_embedding(const WeightedMultiGraph& g, double eps, Rng& rng,
                                    EmbeddingBackend backend = EmbeddingBackend::Sketch,
                                    double c_jl = 4.0);

/// w_e * ER~(u, v).
double approx_leverage(const ResistanceEmbedding& emb, const WeightedMultiGraph& g, EdgeId e);
std::vector<double> approx_leverage_scores(const ResistanceEmbedding& emb,
                                           const WeightedMultiGraph& g);

}  // namespace detsparse
