#pragma once

#include <cmath>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "detsparse/errors.hpp"
#include "detsparse/exact_oracles.hpp"
#include "detsparse/graph.hpp"
#include "detsparse/random.hpp"
#include "detsparse/resistance.hpp"

namespace detsparse {

struct SampleConfig {
  std::size_t s = 0;
  double eps = 0.1;
  /// Oversampling bound of the proposal distribution:
  /// tau_e / (n-1) <= rho * p_e for every e.
  double rho = 1.0;
};

/// One proposal from an edge sampler: a (possibly implicit) multi-edge and
/// its probability under the sampler's distribution.
struct SampledEdge {
  Vertex u = 0;
  Vertex v = 0;
  double weight = 0.0;
  double probability = 0.0;
  EdgeOrigin origin = EdgeOrigin::Original;
  std::optional<EdgeId> parent;
};

template <class S>
concept EdgeSampler = requires(S& s, Rng& rng) {
  { s.draw(rng) } -> std::convertible_to<SampledEdge>;
};

struct SparsifyStats {
  std::uint64_t proposals = 0;
  std::uint64_t stage1_accepts = 0;  // = calls to the eps-accurate oracle
  std::uint64_t accepted = 0;
};

/// Leverage estimates for arbitrary (u, v, w) multi-edges of a graph whose
/// resistances are known through embeddings: a 0.1-accurate one and an
/// eps-accurate one. With the Exact backend both are the same object.
class LeverageOracle {
 public:
  LeverageOracle(std::shared_ptr<const ResistanceEmbedding> coarse,
                 std::shared_ptr<const ResistanceEmbedding> fine);

  static LeverageOracle build(const WeightedMultiGraph& g, double eps, EmbeddingBackend backend,
                              Rng& rng);

  double coarse(Vertex u, Vertex v, double w) const { return w * coarse_->query(u, v); }
  double fine(Vertex u, Vertex v, double w) const { return w * fine_->query(u, v); }
  const ResistanceEmbedding& coarse_embedding() const { return *coarse_; }
  const ResistanceEmbedding& fine_embedding() const { return *fine_; }

 private:
  std::shared_ptr<const ResistanceEmbedding> coarse_;
  std::shared_ptr<const ResistanceEmbedding> fine_;
};

/// Proposals drawn from a fixed distribution over the edges of g.
class GraphEdgeSampler {
 public:
  GraphEdgeSampler(const WeightedMultiGraph& g, std::span<const double> weights);

  static GraphEdgeSampler uniform(const WeightedMultiGraph& g);
  /// p_e proportional to the coarse leverage estimates. With 0.1-accurate
  /// estimates the realised oversampling is about 1.25, so rho = 4 is safe.
  static GraphEdgeSampler crude(const WeightedMultiGraph& g, const LeverageOracle& lev);

  SampledEdge draw(Rng& rng) const;
  double probability(EdgeId e) const { return table_.probability(e); }

 private:
  const WeightedMultiGraph* g_;
  AliasTable table_;
};

inline constexpr double kCrudeSamplerRho = 4.0;

namespace detail {
inline double expectation_correction(std::size_t n, std::size_t s) {
  const double nn = static_cast<double>(n);
  return std::exp(nn * nn / (2.0 * (nn - 1.0) * static_cast<double>(s)));
}
void check_sample_config(std::size_t n, const SampleConfig& cfg);
[[noreturn]] void throw_keep_probability(int stage, double q);
}  // namespace detail

/// Two-stage rejection sampling on top of an arbitrary proposal sampler.
/// The first stage thins proposals to p'_e = 2 tau~_e(0.1) / (n-1), the second
/// to p''_e = tau~_e(eps) / (n-1); accepted edges are reweighted by
/// w_e / (p''_e s) * exp(n^2 / (2 (n-1) s)) and handed to
/// `sink(edge, new_weight)` until s have been accepted.
template <EdgeSampler Sampler, class Sink>
SparsifyStats det_sparsify_into(Sampler& sampler, const LeverageOracle& lev, std::size_t n,
                                const SampleConfig& cfg, Rng& rng, Sink&& sink) {
  detail::check_sample_config(n, cfg);
  const double nm1 = static_cast<double>(n) - 1.0;
  const double scale = detail::expectation_correction(n, cfg.s) / static_cast<double>(cfg.s);
  const double four_rho = 4.0 * cfg.rho;
  const std::uint64_t max_proposals =
      static_cast<std::uint64_t>(1000.0 * cfg.rho * static_cast<double>(cfg.s)) + 1000000;
  constexpr double kSlack = 1e-9;

  SparsifyStats stats;
  while (stats.accepted < cfg.s) {
    if (stats.proposals >= max_proposals) {
      throw ContractViolation("det_sparsify: proposal budget exhausted");
    }
    ++stats.proposals;
    const SampledEdge e = sampler.draw(rng);
    // Closed walks have zero leverage and can never be kept.
    if (e.u == e.v) continue;
    const double p1 = 2.0 * lev.coarse(e.u, e.v, e.weight) / nm1;
    double q1 = p1 / (four_rho * e.probability);
    if (q1 > 1.0) {
      if (q1 > 1.0 + kSlack) detail::throw_keep_probability(1, q1);
      q1 = 1.0;
    }
    if (!(uniform01(rng) < q1)) continue;
    ++stats.stage1_accepts;
    const double p2 = lev.fine(e.u, e.v, e.weight) / nm1;
    double q2 = p2 / p1;
    if (q2 > 1.0) {
      if (q2 > 1.0 + kSlack) detail::throw_keep_probability(2, q2);
      q2 = 1.0;
    }
    if (!(uniform01(rng) < q2)) continue;
    ++stats.accepted;
    sink(e, e.weight / p2 * scale);
  }
  return stats;
}

struct SparsifyResult {
  WeightedMultiGraph graph;
  SparsifyStats stats;
};

/// Draws s edges with replacement, e ~ tau~_e, each reweighted to
/// w_e (n-1) / (tau~_e s) * exp(n^2 / (2 (n-1) s)). parent = source edge.
WeightedMultiGraph ideal_sparsify(const WeightedMultiGraph& g, std::span<const double> tau_tilde,
                                  std::size_t s, Rng& rng);

/// Rejection-sampled sparsifier of g; exactly cfg.s multi-edges, parent = source edge.
SparsifyResult det_sparsify(const WeightedMultiGraph& g, const SampleConfig& cfg,
                            const GraphEdgeSampler& sampler, const LeverageOracle& lev, Rng& rng);

struct OneShotOptions {
  double c_s = 8.0;
  EmbeddingBackend backend = EmbeddingBackend::Exact;
  /// Replaces ceil(n^1.5 / delta^2) * c_s when set.
  std::optional<std::size_t> samples;
  std::size_t retry_budget = 100;
};

struct OneShotResult {
  SpanningTree tree;
  std::size_t retries = 0;
  std::size_t samples = 0;
  double eps = 0.0;
};

/// Sparsify once with s = ceil(n^1.5 / delta^2) * c_s and eps = n^(-1/4)
/// (capped below 1/2), then draw an exact w-uniform tree of the sparsifier
/// and map it back to g. A disconnected sparsifier is redrawn.
OneShotResult one_shot_tree_pipeline(const WeightedMultiGraph& g, double delta, Rng& rng,
                                     const OneShotOptions& options = {});

}  // namespace detsparse
