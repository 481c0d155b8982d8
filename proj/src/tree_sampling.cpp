#include "detsparse/tree_sampling.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "detsparse/errors.hpp"
#include "detsparse/union_find.hpp"

namespace detsparse {

namespace {

constexpr auto kNone = static_cast<Vertex>(-1);

EdgeId pick_by_weight(const WeightedMultiGraph& g, std::span<const EdgeId> ids, Rng& rng) {
  if (ids.empty()) throw ContractViolation("no edge to choose from");
  double total = 0.0;
  for (EdgeId id : ids) total += g.edge(id).weight;
  double r = uniform01(rng) * total;
  for (EdgeId id : ids) {
    r -= g.edge(id).weight;
    if (r < 0.0) return id;
  }
  return ids.back();
}

std::vector<EdgeId> edges_between(const WeightedMultiGraph& g, Vertex x, Vertex y) {
  std::vector<EdgeId> out;
  for (EdgeId id : g.incident(x)) {
    if (g.edge(id).other(x) == y) out.push_back(id);
  }
  return out;
}

/// g with the edges of f contracted and every other edge inside V1 deleted.
/// parent = edge id in g.
struct Reduced {
  WeightedMultiGraph graph;
  std::vector<Vertex> map;  // g vertex -> reduced vertex
};

Reduced contract_and_drop(const WeightedMultiGraph& g, const std::vector<char>& in_v1,
                          std::span<const EdgeId> f) {
  UnionFind uf(g.num_vertices());
  for (EdgeId id : f) uf.unite(g.edge(id).u, g.edge(id).v);
  Reduced r;
  r.map.assign(g.num_vertices(), kNone);
  std::vector<Vertex> label(g.num_vertices(), kNone);
  Vertex next = 0;
  for (Vertex v = 0; v < g.num_vertices(); ++v) {
    const auto root = uf.find(v);
    if (label[root] == kNone) label[root] = next++;
    r.map[v] = label[root];
  }
  r.graph = WeightedMultiGraph(next);
  for (const auto& e : g.edges()) {
    if (in_v1[e.u] && in_v1[e.v]) continue;
    r.graph.add_edge(r.map[e.u], r.map[e.v], e.weight, e.origin, e.id);
  }
  return r;
}

std::vector<EdgeId> prolongate_ids(const WeightedMultiGraph& g, const std::vector<char>& in_v1,
                                   std::span<const VertexPair> t2, Rng& rng) {
  const std::size_t n = g.num_vertices();
  for (const auto& e : g.edges()) {
    if (in_v1[e.u] && in_v1[e.v]) throw ContractViolation("prolongate_tree: V1 is not independent");
  }
  // Summed weights between each eliminated vertex and its neighbours.
  std::vector<std::vector<std::pair<Vertex, double>>> nbr(n);
  for (Vertex v = 0; v < n; ++v) {
    if (!in_v1[v]) continue;
    for (EdgeId id : g.incident(v)) {
      const Vertex x = g.edge(id).other(v);
      auto it = std::find_if(nbr[v].begin(), nbr[v].end(), [&](const auto& p) { return p.first == x; });
      if (it == nbr[v].end()) {
        nbr[v].emplace_back(x, g.edge(id).weight);
      } else {
        it->second += g.edge(id).weight;
      }
    }
  }
  const auto weight_to = [&](Vertex v, Vertex x) {
    for (const auto& [y, w] : nbr[v]) {
      if (y == x) return w;
    }
    return 0.0;
  };

  std::vector<EdgeId> out;
  std::vector<std::vector<std::size_t>> clique(n);  // K(v): indices into t2
  std::vector<Vertex> cand;
  std::vector<double> mass;
  for (std::size_t i = 0; i < t2.size(); ++i) {
    const auto [x, y] = t2[i];
    if (x >= n || y >= n || in_v1[x] || in_v1[y] || x == y) {
      throw ContractViolation("prolongate_tree: T2 edge outside V2");
    }
    const auto direct = edges_between(g, x, y);
    cand.assign(1, kNone);
    mass.assign(1, 0.0);
    for (EdgeId id : direct) mass[0] += g.edge(id).weight;
    // Common eliminated neighbours of x and y.
    for (EdgeId id : g.incident(x)) {
      const Vertex v = g.edge(id).other(x);
      if (!in_v1[v] || std::find(cand.begin(), cand.end(), v) != cand.end()) continue;
      const double wy = weight_to(v, y);
      if (wy > 0.0) {
        cand.push_back(v);
        mass.push_back(weight_to(v, x) * wy / g.degree(v));
      }
    }
    const double total = std::accumulate(mass.begin(), mass.end(), 0.0);
    if (!(total > 0.0)) throw ContractViolation("prolongate_tree: T2 edge has no preimage in g");
    double r = uniform01(rng) * total;
    std::size_t pick = mass.size() - 1;
    for (std::size_t k = 0; k < mass.size(); ++k) {
      r -= mass[k];
      if (r < 0.0 && mass[k] > 0.0) {
        pick = k;
        break;
      }
    }
    if (cand[pick] == kNone) {
      out.push_back(pick_by_weight(g, direct, rng));
    } else {
      clique[cand[pick]].push_back(i);
    }
  }

  // Replace the cliques one eliminated vertex at a time. For v, everything
  // else currently in the tree (direct edges, stars already placed, cliques
  // not yet replaced) is contracted, and v joins each resulting component
  // through one edge chosen by weight.
  std::vector<Vertex> owner(t2.size(), kNone);
  for (Vertex v = 0; v < n; ++v) {
    for (std::size_t i : clique[v]) owner[i] = v;
  }
  std::vector<char> done(n, 0);
  std::vector<double> comp_total(n);
  std::vector<EdgeId> comp_pick(n);
  std::vector<std::size_t> touched;
  for (Vertex v = 0; v < n; ++v) {
    if (!in_v1[v]) continue;
    UnionFind uf(n);
    for (EdgeId id : out) uf.unite(g.edge(id).u, g.edge(id).v);
    for (std::size_t i = 0; i < t2.size(); ++i) {
      if (owner[i] != kNone && owner[i] != v && !done[owner[i]]) uf.unite(t2[i].first, t2[i].second);
    }
    touched.clear();
    for (EdgeId id : g.incident(v)) {
      const auto c = uf.find(g.edge(id).other(v));
      const double w = g.edge(id).weight;
      if (comp_total[c] == 0.0) touched.push_back(c);
      comp_total[c] += w;
      if (uniform01(rng) * comp_total[c] < w) comp_pick[c] = id;
    }
    for (auto c : touched) {
      out.push_back(comp_pick[c]);
      comp_total[c] = 0.0;
    }
    done[v] = 1;
  }
  return out;
}

std::vector<EdgeId> exact_rec(const WeightedMultiGraph& g, Rng& rng) {
  const std::size_t n = g.num_vertices();
  if (n == 1) return {};
  if (n == 2) {
    std::vector<EdgeId> all(g.num_edges());
    std::iota(all.begin(), all.end(), EdgeId{0});
    return {pick_by_weight(g, all, rng)};
  }
  const std::size_t k = (n + 1) / 2;
  std::vector<Vertex> v1(k);
  std::iota(v1.begin(), v1.end(), Vertex{0});
  std::vector<char> in_v1(n, 0);
  std::fill(in_v1.begin(), in_v1.begin() + static_cast<std::ptrdiff_t>(k), 1);

  const auto sc1 = exact_schur(g, v1);
  const auto h1 = graph_from_laplacian(sc1, 1e-14);
  const auto t1 = exact_rec(h1, rng);

  // Keep a Schur edge as a real edge of G[V1] with probability w_G / w_Sc.
  std::vector<EdgeId> f;
  for (EdgeId id : t1) {
    const auto& e = h1.edge(id);
    const auto direct = edges_between(g, e.u, e.v);
    double w_g = 0.0;
    for (EdgeId d : direct) w_g += g.edge(d).weight;
    if (w_g > 0.0 && uniform01(rng) * e.weight < w_g) f.push_back(pick_by_weight(g, direct, rng));
  }

  const auto red = contract_and_drop(g, in_v1, f);
  if (!is_connected(red.graph)) throw ContractViolation("exact_tree: reduced graph is disconnected");
  std::vector<Vertex> v2;
  std::vector<char> blob(red.graph.num_vertices(), 0);
  for (Vertex v = 0; v < n; ++v) {
    if (in_v1[v]) {
      blob[red.map[v]] = 1;
    } else {
      v2.push_back(red.map[v]);
    }
  }
  std::sort(v2.begin(), v2.end());

  std::vector<VertexPair> pairs;
  if (v2.size() > 1) {
    const auto sc2 = exact_schur(red.graph, v2);
    const auto h2 = graph_from_laplacian(sc2, 1e-14);
    for (EdgeId id : exact_rec(h2, rng)) {
      pairs.emplace_back(v2[h2.edge(id).u], v2[h2.edge(id).v]);
    }
  }
  for (EdgeId id : prolongate_ids(red.graph, blob, pairs, rng)) {
    f.push_back(*red.graph.edge(id).parent);
  }
  return f;
}

class ApproxRecursion {
 public:
  ApproxRecursion(double delta, std::size_t n_bar, const ApproxTreeOptions& options,
                  ApproxTreeStats& stats)
      : delta_(delta), n_bar_(static_cast<double>(n_bar)), options_(options), stats_(stats) {}

  std::vector<EdgeId> run(const WeightedMultiGraph& g, Rng& rng, std::size_t depth) {
    stats_.levels = std::max(stats_.levels, depth + 1);
    const std::size_t n = g.num_vertices();
    if (n == 1) return {};
    if (n == 2) {
      std::vector<EdgeId> all(g.num_edges());
      std::iota(all.begin(), all.end(), EdgeId{0});
      return {pick_by_weight(g, all, rng)};
    }

    auto v2_set = almost_independent(g, options_.alpha, rng).v2;
    if (v2_set.size() > n - 2) v2_set.resize(n - 2);
    std::vector<char> in_v1(n, 1);
    for (Vertex v : v2_set) in_v1[v] = 0;
    std::vector<Vertex> v1;
    for (Vertex v = 0; v < n; ++v) {
      if (in_v1[v]) v1.push_back(v);
    }

    const auto h1 = sparsify(g, v1, rng);
    const auto t1 = run(h1.graph, rng, depth + 1);

    std::vector<EdgeId> f;
    for (EdgeId id : t1) {
      const auto& e = h1.graph.edge(id);
      const double ori = h1.original_weight[id];
      if (ori > 0.0 && uniform01(rng) * e.weight < ori) {
        f.push_back(pick_by_weight(g, edges_between(g, h1.v1[e.u], h1.v1[e.v]), rng));
      }
    }

    const auto red = contract_and_drop(g, in_v1, f);
    if (!is_connected(red.graph)) throw ContractViolation("approx_tree: reduced graph is disconnected");
    std::vector<Vertex> v2;
    std::vector<char> blob(red.graph.num_vertices(), 0);
    for (Vertex v = 0; v < n; ++v) {
      if (in_v1[v]) {
        blob[red.map[v]] = 1;
      } else {
        v2.push_back(red.map[v]);
      }
    }
    std::sort(v2.begin(), v2.end());

    std::vector<VertexPair> pairs;
    if (v2.size() > 1) {
      const auto h2 = sparsify(red.graph, v2, rng);
      for (EdgeId id : run(h2.graph, rng, depth + 1)) {
        const auto& e = h2.graph.edge(id);
        pairs.emplace_back(h2.v1[e.u], h2.v1[e.v]);
      }
    }
    for (EdgeId id : prolongate_ids(red.graph, blob, pairs, rng)) {
      f.push_back(*red.graph.edge(id).parent);
    }
    return f;
  }

 private:
  MergedSchurSparse sparsify(const WeightedMultiGraph& g, const std::vector<Vertex>& keep, Rng& rng) {
    const double budget = delta_ * static_cast<double>(keep.size()) / n_bar_;
    for (std::size_t attempt = 0; attempt <= options_.retry_budget; ++attempt) {
      ++stats_.schur_calls;
      auto h = schur_sparse_merged(g, keep, budget, rng, options_.schur);
      if (is_connected(h.graph)) return h;
      ++stats_.disconnected_retries;
    }
    throw ContractViolation("approx_tree: sparsifier stayed disconnected after " +
                            std::to_string(options_.retry_budget) + " retries");
  }

  double delta_;
  double n_bar_;
  const ApproxTreeOptions& options_;
  ApproxTreeStats& stats_;
};

}  // namespace

SpanningTree unsplit_tree(const WeightedMultiGraph& g, const MergeResult& merged,
                          const SpanningTree& t, Rng& rng) {
  std::vector<EdgeId> ids;
  ids.reserve(t.edges.size());
  for (EdgeId id : t.edges) {
    if (id >= merged.members.size()) throw ContractViolation("unsplit_tree: unknown merged edge");
    ids.push_back(pick_by_weight(g, merged.members[id], rng));
  }
  return make_tree(g, std::move(ids));
}

SpanningTree prolongate_tree(const WeightedMultiGraph& g, const VertexPartition& part,
                             std::span<const VertexPair> t2, Rng& rng) {
  std::vector<char> in_v1(g.num_vertices(), 0);
  for (Vertex v : part.v1) in_v1.at(v) = 1;
  if (t2.size() + 1 != part.v2.size()) throw ContractViolation("prolongate_tree: T2 does not span V2");
  return make_tree(g, prolongate_ids(g, in_v1, t2, rng));
}

SpanningTree exact_tree(const WeightedMultiGraph& g, Rng& rng) {
  if (g.num_vertices() == 0) throw ContractViolation("exact_tree: empty graph");
  if (!is_connected(g)) throw DisconnectedGraph("exact_tree: graph is disconnected");
  return make_tree(g, exact_rec(g, rng));
}

SpanningTree wilson_tree(const WeightedMultiGraph& g, Rng& rng) {
  const std::size_t n = g.num_vertices();
  if (n == 0) throw ContractViolation("wilson_tree: empty graph");
  if (!is_connected(g)) throw DisconnectedGraph("wilson_tree: graph is disconnected");
  std::vector<char> in_tree(n, 0);
  std::vector<EdgeId> next(n);
  in_tree[0] = 1;
  std::vector<EdgeId> out;
  out.reserve(n - 1);
  for (Vertex start = 1; start < n; ++start) {
    Vertex u = start;
    while (!in_tree[u]) {
      next[u] = pick_by_weight(g, g.incident(u), rng);
      u = g.edge(next[u]).other(u);
    }
    u = start;
    while (!in_tree[u]) {
      in_tree[u] = 1;
      out.push_back(next[u]);
      u = g.edge(next[u]).other(u);
    }
  }
  return make_tree(g, std::move(out));
}

SpanningTree approx_tree(const WeightedMultiGraph& g, double delta, Rng& rng,
                         ApproxTreeStats* stats, const ApproxTreeOptions& options) {
  if (g.num_vertices() == 0) throw ContractViolation("approx_tree: empty graph");
  if (!(delta > 0.0 && delta <= 1.0)) throw ContractViolation("approx_tree: delta must lie in (0, 1]");
  if (!is_connected(g)) throw DisconnectedGraph("approx_tree: graph is disconnected");
  ApproxTreeStats local;
  ApproxRecursion rec(delta, g.num_vertices(), options, stats ? *stats : local);
  return make_tree(g, rec.run(g, rng, 0));
}

}  // namespace detsparse
