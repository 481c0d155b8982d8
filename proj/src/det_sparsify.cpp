#include "detsparse/det_sparsify.hpp"

#include <algorithm>
#include <cmath>

#include "detsparse/tree_sampling.hpp"

namespace detsparse {

namespace detail {

void check_sample_config(std::size_t n, const SampleConfig& cfg) {
  if (n < 2) throw ContractViolation("det_sparsify: need at least two vertices");
  if (cfg.s < n) throw ContractViolation("det_sparsify: sample count s must be at least n");
  if (!(cfg.eps > 0.0 && cfg.eps < 0.5)) throw ContractViolation("det_sparsify: eps must lie in (0, 1/2)");
  if (!(cfg.rho >= 1.0)) throw ContractViolation("det_sparsify: rho must be at least 1");
}

void throw_keep_probability(int stage, double q) {
  throw ContractViolation("det_sparsify stage " + std::to_string(stage) + ": keep probability " +
                          std::to_string(q) + " exceeds 1 (sampler/oracle contract broken)");
}

}  // namespace detail

LeverageOracle::LeverageOracle(std::shared_ptr<const ResistanceEmbedding> coarse,
                               std::shared_ptr<const ResistanceEmbedding> fine)
    : coarse_(std::move(coarse)), fine_(std::move(fine)) {
  if (!coarse_ || !fine_) throw ContractViolation("LeverageOracle: missing embedding");
}

LeverageOracle LeverageOracle::build(const WeightedMultiGraph& g, double eps,
                                     EmbeddingBackend backend, Rng& rng) {
  if (backend == EmbeddingBackend::Exact) {
    auto emb = std::make_shared<const ResistanceEmbedding>(ResistanceEmbedding::exact(g));
    return LeverageOracle(emb, emb);
  }
  auto coarse = std::make_shared<const ResistanceEmbedding>(ResistanceEmbedding::sketch(g, 0.1, rng));
  if (eps >= 0.1) return LeverageOracle(coarse, coarse);
  auto fine = std::make_shared<const ResistanceEmbedding>(ResistanceEmbedding::sketch(g, eps, rng));
  return LeverageOracle(coarse, fine);
}

GraphEdgeSampler::GraphEdgeSampler(const WeightedMultiGraph& g, std::span<const double> weights)
    : g_(&g), table_(weights) {
  if (weights.size() != g.num_edges()) {
    throw ContractViolation("GraphEdgeSampler: one weight per edge required");
  }
}

GraphEdgeSampler GraphEdgeSampler::uniform(const WeightedMultiGraph& g) {
  const std::vector<double> ones(g.num_edges(), 1.0);
  return GraphEdgeSampler(g, ones);
}

GraphEdgeSampler GraphEdgeSampler::crude(const WeightedMultiGraph& g, const LeverageOracle& lev) {
  std::vector<double> tau(g.num_edges());
  for (const auto& e : g.edges()) tau[e.id] = lev.coarse(e.u, e.v, e.weight);
  return GraphEdgeSampler(g, tau);
}

SampledEdge GraphEdgeSampler::draw(Rng& rng) const {
  const auto id = static_cast<EdgeId>(table_.draw(rng));
  const auto& e = g_->edge(id);
  return SampledEdge{e.u, e.v, e.weight, table_.probability(id), EdgeOrigin::Original, id};
}

WeightedMultiGraph ideal_sparsify(const WeightedMultiGraph& g, std::span<const double> tau_tilde,
                                  std::size_t s, Rng& rng) {
  const std::size_t n = g.num_vertices();
  if (tau_tilde.empty() || tau_tilde.size() != g.num_edges()) {
    throw ContractViolation("ideal_sparsify: need one leverage estimate per edge");
  }
  for (double t : tau_tilde) {
    if (!(t > 0.0) || !std::isfinite(t)) throw ContractViolation("ideal_sparsify: non-positive leverage estimate");
  }
  if (s == 0 || s < n) throw ContractViolation("ideal_sparsify: sample count s must be at least n");
  const AliasTable table(tau_tilde);
  const double factor = static_cast<double>(n - 1) * detail::expectation_correction(n, s) /
                        static_cast<double>(s);
  WeightedMultiGraph h(n);
  h.reserve_edges(s);
  for (std::size_t i = 0; i < s; ++i) {
    const auto id = static_cast<EdgeId>(table.draw(rng));
    const auto& e = g.edge(id);
    h.add_edge(e.u, e.v, e.weight * factor / tau_tilde[id], EdgeOrigin::Original, id);
  }
  return h;
}

SparsifyResult det_sparsify(const WeightedMultiGraph& g, const SampleConfig& cfg,
                            const GraphEdgeSampler& sampler, const LeverageOracle& lev, Rng& rng) {
  SparsifyResult out{WeightedMultiGraph(g.num_vertices()), {}};
  out.graph.reserve_edges(cfg.s);
  out.stats = det_sparsify_into(sampler, lev, g.num_vertices(), cfg, rng,
                                [&](const SampledEdge& e, double w) {
                                  out.graph.add_edge(e.u, e.v, w, EdgeOrigin::Original, e.parent);
                                });
  return out;
}

OneShotResult one_shot_tree_pipeline(const WeightedMultiGraph& g, double delta, Rng& rng,
                                     const OneShotOptions& options) {
  if (!is_connected(g)) throw DisconnectedGraph("one_shot_tree_pipeline: graph is disconnected");
  if (!(delta > 0.0 && delta <= 1.0)) throw ContractViolation("one_shot_tree_pipeline: delta must lie in (0, 1]");
  const std::size_t n = g.num_vertices();
  OneShotResult result;
  if (n == 1) {
    result.tree = make_tree(g, {});
    return result;
  }
  const double nd = static_cast<double>(n);
  result.samples = options.samples.value_or(static_cast<std::size_t>(
      std::ceil(std::pow(nd, 1.5) / (delta * delta)) * options.c_s));
  result.samples = std::max(result.samples, n);
  result.eps = std::min(std::pow(nd, -0.25), 0.45);

  const auto lev = LeverageOracle::build(g, result.eps, options.backend, rng);
  const auto sampler = GraphEdgeSampler::crude(g, lev);
  const SampleConfig cfg{result.samples, result.eps, kCrudeSamplerRho};

  // Only the total weight per source edge matters for the tree distribution
  // of H, so parallel copies are summed as they arrive.
  std::vector<double> acc(g.num_edges());
  for (std::size_t attempt = 0; attempt <= options.retry_budget; ++attempt) {
    std::fill(acc.begin(), acc.end(), 0.0);
    det_sparsify_into(sampler, lev, n, cfg, rng,
                      [&](const SampledEdge& e, double w) { acc[*e.parent] += w; });
    WeightedMultiGraph h(n);
    for (const auto& e : g.edges()) {
      if (acc[e.id] > 0.0) h.add_edge(e.u, e.v, acc[e.id], EdgeOrigin::Original, e.id);
    }
    if (!is_connected(h)) {
      ++result.retries;
      continue;
    }
    const auto t = exact_tree(h, rng);
    std::vector<EdgeId> ids;
    ids.reserve(t.edges.size());
    for (EdgeId id : t.edges) ids.push_back(*h.edge(id).parent);
    result.tree = make_tree(g, std::move(ids));
    return result;
  }
  throw ContractViolation("one_shot_tree_pipeline: sparsifier stayed disconnected after " +
                          std::to_string(options.retry_budget) + " retries");
}

}  // namespace detsparse
