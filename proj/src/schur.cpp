#include "detsparse/schur.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "detsparse/errors.hpp"

namespace detsparse {

namespace {

constexpr double kDDTol = 1e-12;

double inside_limit(const WeightedMultiGraph& g, Vertex u, double alpha) {
  return g.degree(u) * alpha / (1.0 + alpha) + kDDTol * g.degree(u);
}

}  // namespace

bool is_dd_subset(const WeightedMultiGraph& g, std::span<const Vertex> v2, double alpha) {
  std::vector<char> in(g.num_vertices(), 0);
  for (Vertex v : v2) {
    if (v >= g.num_vertices()) throw ContractViolation("is_dd_subset: unknown vertex");
    in[v] = 1;
  }
  for (Vertex u : v2) {
    double outside = 0.0;
    for (EdgeId id : g.incident(u)) {
      if (!in[g.edge(id).other(u)]) outside += g.edge(id).weight;
    }
    if (outside < g.degree(u) / (1.0 + alpha) - kDDTol * g.degree(u)) return false;
  }
  return true;
}

DDSubset almost_independent(const WeightedMultiGraph& g, double alpha, Rng& rng) {
  const std::size_t n = g.num_vertices();
  if (!(alpha >= 0.0)) throw ContractViolation("almost_independent: alpha must be nonnegative");
  if (n < 2) throw ContractViolation("almost_independent: need at least two vertices");
  const auto cap = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::ceil(static_cast<double>(n) / (2.0 * (1.0 + alpha)))));
  const double floor_size = static_cast<double>(n) / (8.0 * (1.0 + alpha));
  constexpr int kRounds = 64;

  std::vector<Vertex> perm(n);
  std::iota(perm.begin(), perm.end(), Vertex{0});
  std::vector<char> in(n);
  std::vector<double> inside(n);
  std::vector<Vertex> best;

  const auto add = [&](Vertex v) {
    in[v] = 1;
    for (EdgeId id : g.incident(v)) inside[g.edge(id).other(v)] += g.edge(id).weight;
  };
  const auto remove = [&](Vertex v) {
    in[v] = 0;
    for (EdgeId id : g.incident(v)) inside[g.edge(id).other(v)] -= g.edge(id).weight;
  };

  for (int round = 0; round < kRounds; ++round) {
    std::shuffle(perm.begin(), perm.end(), rng);
    std::fill(in.begin(), in.end(), 0);
    std::fill(inside.begin(), inside.end(), 0.0);
    std::vector<Vertex> set(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(cap));
    for (Vertex v : set) add(v);

    // Peel the worst violator until the set is DD.
    while (true) {
      double worst = 0.0;
      std::size_t worst_pos = set.size();
      for (std::size_t i = 0; i < set.size(); ++i) {
        const Vertex u = set[i];
        const double excess = inside[u] - inside_limit(g, u, alpha);
        if (excess > worst) {
          worst = excess;
          worst_pos = i;
        }
      }
      if (worst_pos == set.size()) break;
      remove(set[worst_pos]);
      set[worst_pos] = set.back();
      set.pop_back();
    }

    // Refill greedily from the rest of the permutation.
    for (std::size_t i = 0; i < n && set.size() < cap; ++i) {
      const Vertex v = perm[i];
      if (in[v] || inside[v] > inside_limit(g, v, alpha)) continue;
      bool ok = true;
      for (EdgeId id : g.incident(v)) {
        const Vertex x = g.edge(id).other(v);
        if (in[x] && inside[x] + g.edge(id).weight > inside_limit(g, x, alpha)) {
          ok = false;
          break;
        }
      }
      if (!ok) continue;
      add(v);
      set.push_back(v);
    }
    if (set.size() > best.size()) best = set;
    if (static_cast<double>(best.size()) >= floor_size) break;
  }
  if (best.empty()) best.push_back(perm.front());
  std::sort(best.begin(), best.end());
  return DDSubset{std::move(best), alpha};
}

SchurWalkSampler::SchurWalkSampler(const WeightedMultiGraph& g, std::span<const Vertex> v1,
                                   std::span<const double> tau)
    : g_(&g), in_v1_(g.num_vertices(), 0), tau_(tau.begin(), tau.end()) {
  if (tau.size() != g.num_edges()) throw ContractViolation("SchurWalkSampler: one leverage per edge required");
  for (Vertex v : v1) {
    if (v >= g.num_vertices()) throw ContractViolation("SchurWalkSampler: unknown vertex");
    if (!in_v1_[v]) ++v1_size_;
    in_v1_[v] = 1;
  }
  if (v1_size_ == 0) throw ContractViolation("SchurWalkSampler: V1 is empty");
  total_tau_ = std::accumulate(tau_.begin(), tau_.end(), 0.0);
  start_ = AliasTable(tau_);

  for (const auto& e : g.edges()) {
    end_u_.push_back(e.u);
    end_v_.push_back(e.v);
    weight_.push_back(e.weight);
  }
  for (Vertex v = 0; v < g.num_vertices(); ++v) inv_degree_.push_back(1.0 / g.degree(v));

  offset_.assign(g.num_vertices() + 1, 0);
  for (Vertex v = 0; v < g.num_vertices(); ++v) {
    offset_[v + 1] = offset_[v] + (in_v1_[v] ? 0 : g.incident(v).size());
    if (!in_v1_[v] && g.incident(v).empty()) {
      throw DisconnectedGraph("SchurWalkSampler: eliminated vertex has no edges");
    }
  }
  step_edge_.resize(offset_.back());
  step_.resize(g.num_vertices());
  std::vector<double> w;
  for (Vertex v = 0; v < g.num_vertices(); ++v) {
    if (in_v1_[v]) continue;
    w.clear();
    std::size_t k = offset_[v];
    for (EdgeId id : g.incident(v)) {
      w.push_back(g.edge(id).weight);
      step_edge_[k++] = id;
    }
    step_[v] = AliasTable(w);
  }
}

void SchurWalkSampler::walk_until_v1(Vertex start, Rng& rng) {
  Vertex x = start;
  std::size_t steps = 0;
  while (!in_v1_[x]) {
    if (++steps > kMaxWalkSteps) {
      throw ContractViolation("Schur walk exceeded " + std::to_string(kMaxWalkSteps) +
                              " steps; eliminated set is not diagonally dominant");
    }
    const EdgeId id = step_edge_[offset_[x] + step_[x].draw(rng)];
    x = other(id, x);
    walk_e_.push_back(id);
    walk_v_.push_back(x);
  }
}

SampledEdge SchurWalkSampler::draw(Rng& rng) {
  const auto start = static_cast<EdgeId>(start_.draw(rng));
  const Vertex u = end_u_[start], v = end_v_[start];
  walk_v_.clear();
  walk_e_.clear();
  walk_v_.push_back(u);
  if (in_v1_[u] && in_v1_[v]) {
    walk_v_.push_back(v);
    walk_e_.push_back(start);
    return SampledEdge{u, v, weight_[start], tau_[start] / total_tau_, EdgeOrigin::Original, start};
  }
  walk_until_v1(u, rng);
  std::reverse(walk_v_.begin(), walk_v_.end());
  std::reverse(walk_e_.begin(), walk_e_.end());
  walk_e_.push_back(start);
  walk_v_.push_back(v);
  walk_until_v1(v, rng);

  SampledEdge out;
  out.u = walk_v_.front();
  out.v = walk_v_.back();
  out.weight = walk_weight(walk_v_, walk_e_);
  out.probability = walk_probability_unchecked(walk_v_, walk_e_);
  out.origin = EdgeOrigin::SchurGenerated;
  return out;
}

WalkEdge SchurWalkSampler::last_walk() const {
  WalkEdge w;
  w.vertices = walk_v_;
  w.edges = walk_e_;
  w.weight = walk_weight(walk_v_, walk_e_);
  w.probability = walk_probability(walk_v_, walk_e_);
  w.origin = walk_e_.size() == 1 ? EdgeOrigin::Original : EdgeOrigin::SchurGenerated;
  return w;
}

double SchurWalkSampler::walk_weight(std::span<const Vertex> vertices,
                                     std::span<const EdgeId> edges) const {
  double w = 1.0;
  for (EdgeId id : edges) w *= weight_[id];
  for (std::size_t i = 1; i + 1 < vertices.size(); ++i) w *= inv_degree_[vertices[i]];
  return w;
}

double SchurWalkSampler::walk_probability(std::span<const Vertex> vertices,
                                          std::span<const EdgeId> edges) const {
  if (edges.empty() || vertices.size() != edges.size() + 1) {
    throw ContractViolation("walk_probability: malformed walk");
  }
  for (std::size_t i = 0; i < edges.size(); ++i) {
    if (edges[i] >= tau_.size() || vertices[i] >= in_v1_.size() ||
        other(edges[i], vertices[i]) != vertices[i + 1] ||
        (end_u_[edges[i]] != vertices[i] && end_v_[edges[i]] != vertices[i])) {
      throw ContractViolation("walk_probability: not a walk in the graph");
    }
  }
  return walk_probability_unchecked(vertices, edges);
}

double SchurWalkSampler::walk_probability_unchecked(std::span<const Vertex> vertices,
                                                    std::span<const EdgeId> edges) const {
  const std::size_t k = edges.size();
  // prefix_i: probability that a walk from u_i retraces u_i .. u_0.
  // suffix_i: probability that a walk from u_{i+1} follows u_{i+1} .. u_k.
  auto& prefix = prefix_;
  prefix.resize(k);
  prefix[0] = 1.0;
  for (std::size_t i = 1; i < k; ++i) {
    prefix[i] = prefix[i - 1] * weight_[edges[i - 1]] * inv_degree_[vertices[i]];
  }
  double suffix = 1.0;
  double acc = 0.0;
  for (std::size_t i = k; i-- > 0;) {
    acc += tau_[edges[i]] * prefix[i] * suffix;
    if (i > 0) suffix *= weight_[edges[i]] * inv_degree_[vertices[i]];
  }
  double p = acc / total_tau_;
  // A walk equal to its own reversal is produced by mirrored start positions
  // through the same event, which the sum above counts twice.
  if (vertices.front() == vertices.back() && std::equal(edges.begin(), edges.end(), edges.rbegin())) {
    p *= 0.5;
  }
  return p;
}

double SchurWalkSampler::rho_bound(double oracle_eps) const {
  if (v1_size_ < 2) return 1.0;
  return std::max(1.0, (1.0 + oracle_eps) * total_tau_ / static_cast<double>(v1_size_ - 1));
}

WalkEdge sample_edge_schur(const WeightedMultiGraph& g, std::span<const Vertex> v1,
                           std::span<const double> tau2, Rng& rng) {
  SchurWalkSampler sampler(g, v1, tau2);
  sampler.draw(rng);
  return sampler.last_walk();
}

namespace {

struct SchurSetup {
  std::vector<Vertex> v1;
  std::vector<Vertex> local;  // g vertex -> index into v1 (or -1)
  std::size_t samples = 0;
  double rho = 0.0;
};

template <class Sink>
SparsifyStats run_schur_sparse(const WeightedMultiGraph& g, std::span<const Vertex> v1_in,
                               double delta, Rng& rng, const SchurSparseOptions& options,
                               SchurSetup& setup, Sink&& sink) {
  if (!(delta > 0.0)) throw ContractViolation("schur_sparse: delta must be positive");
  setup.v1.assign(v1_in.begin(), v1_in.end());
  std::sort(setup.v1.begin(), setup.v1.end());
  const auto part = VertexPartition::from_v1(g.num_vertices(), setup.v1);
  if (!is_connected(g)) throw DisconnectedGraph("schur_sparse: graph is disconnected");
  if (!is_dd_subset(g, part.v2, options.dd_alpha)) {
    throw ContractViolation("schur_sparse: eliminated vertices are not diagonally dominant");
  }
  setup.local.assign(g.num_vertices(), static_cast<Vertex>(-1));
  for (Vertex i = 0; i < setup.v1.size(); ++i) setup.local[setup.v1[i]] = i;
  const std::size_t n1 = setup.v1.size();
  if (n1 < 2) return {};

  const auto lev = LeverageOracle::build(g, options.eps, options.backend, rng);
  std::vector<double> tau(g.num_edges());
  for (const auto& e : g.edges()) tau[e.id] = lev.coarse(e.u, e.v, e.weight);
  SchurWalkSampler sampler(g, setup.v1, tau);

  const double n1d = static_cast<double>(n1);
  setup.samples = static_cast<std::size_t>(std::ceil(n1d * n1d / delta));
  setup.rho = options.rho.value_or(sampler.rho_bound(lev.coarse_embedding().eps()));
  const SampleConfig cfg{setup.samples, options.eps, setup.rho};
  return det_sparsify_into(sampler, lev, n1, cfg, rng, sink);
}

}  // namespace

SchurSparseResult schur_sparse(const WeightedMultiGraph& g, std::span<const Vertex> v1, double delta,
                               Rng& rng, const SchurSparseOptions& options) {
  SchurSetup setup;
  SchurSparseResult result;
  result.graph = WeightedMultiGraph(v1.size());
  result.stats = run_schur_sparse(g, v1, delta, rng, options, setup,
                                  [&](const SampledEdge& e, double w) {
                                    result.graph.add_edge(setup.local[e.u], setup.local[e.v], w,
                                                          e.origin, e.parent);
                                  });
  result.v1 = std::move(setup.v1);
  result.samples = setup.samples;
  result.rho = setup.rho;
  return result;
}

MergedSchurSparse schur_sparse_merged(const WeightedMultiGraph& g, std::span<const Vertex> v1,
                                      double delta, Rng& rng, const SchurSparseOptions& options) {
  SchurSetup setup;
  const std::size_t n1 = v1.size();
  std::vector<double> total(n1 * n1, 0.0), original(n1 * n1, 0.0);
  MergedSchurSparse result;
  result.stats = run_schur_sparse(g, v1, delta, rng, options, setup,
                                  [&](const SampledEdge& e, double w) {
                                    Vertex a = setup.local[e.u], b = setup.local[e.v];
                                    if (a > b) std::swap(a, b);
                                    total[a * n1 + b] += w;
                                    if (e.origin == EdgeOrigin::Original) original[a * n1 + b] += w;
                                  });
  result.graph = WeightedMultiGraph(n1);
  for (Vertex a = 0; a < n1; ++a) {
    for (Vertex b = a + 1; b < n1; ++b) {
      if (total[a * n1 + b] > 0.0) {
        result.graph.add_edge(a, b, total[a * n1 + b]);
        result.original_weight.push_back(original[a * n1 + b]);
      }
    }
  }
  result.v1 = std::move(setup.v1);
  result.samples = setup.samples;
  result.rho = setup.rho;
  return result;
}

}  // namespace detsparse
