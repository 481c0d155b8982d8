// Acceptance checks. `acceptance N` runs check N, no argument runs all ten.
// Each prints one PASS/FAIL line; the exit status is nonzero if any failed.

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <sstream>
#include <string>

#include "detsparse/det_approx.hpp"
#include "detsparse/det_sparsify.hpp"
#include "detsparse/harness.hpp"
#include "detsparse/schur.hpp"
#include "detsparse/tree_sampling.hpp"
#include "support/reference.hpp"

using namespace detsparse;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [failed: " << what << "]";
    }
  }
};

double rel_gap(double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

// 1. Oracle equivalence on 200 small random graphs.
void oracle_equivalence(Outcome& out) {
  Rng rng = make_rng(1001);
  double worst_det = 0.0, worst_marginal = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + trial % 5;
    const auto g = random_connected_graph(n, 0.5, 0.1, 10.0, rng);
    const auto trees = ref::trees_by_subsets(g);
    long double total = 0.0L;
    for (const auto& t : trees) total += t.weight;
    worst_det = std::max(worst_det, rel_gap(log_tree_weight(g).log(), std::log(static_cast<double>(total))));

    // A few random edge subsets, including ones that contain cycles.
    std::uniform_int_distribution<std::size_t> size_dist(1, std::min<std::size_t>(g.num_edges(), n));
    for (int k = 0; k < 5; ++k) {
      std::vector<EdgeId> ids(g.num_edges());
      std::iota(ids.begin(), ids.end(), EdgeId{0});
      std::shuffle(ids.begin(), ids.end(), rng);
      ids.resize(size_dist(rng));
      std::sort(ids.begin(), ids.end());
      long double with = 0.0L;
      for (const auto& t : trees) {
        if (std::includes(t.edges.begin(), t.edges.end(), ids.begin(), ids.end())) with += t.weight;
      }
      const double expect = static_cast<double>(with / total);
      const double got = subset_marginal(g, ids);
      const double err = expect > 0.0 ? std::abs(got - expect) / expect : std::abs(got);
      worst_marginal = std::max(worst_marginal, err);
    }
  }
  out.detail << "max rel error log_det_plus " << worst_det << ", subset_marginal " << worst_marginal;
  out.require(worst_det <= 1e-9, "log_det_plus");
  out.require(worst_marginal <= 1e-9, "subset_marginal");
}

// 2. Foster's theorem, resistance invariance under elimination, det multiplicativity.
void foster_and_schur(Outcome& out) {
  Rng rng = make_rng(1002);
  double worst_foster = 0.0;
  for (std::size_t n : {5u, 20u, 50u, 100u}) {
    const auto g = random_connected_graph(n, 0.1, 0.1, 10.0, rng);
    double sum = 0.0;
    for (double t : exact_leverage_scores(g)) sum += t;
    worst_foster = std::max(worst_foster, std::abs(sum - static_cast<double>(n - 1)));
  }

  const auto g = random_connected_graph(20, 0.3, 0.5, 2.0, rng);
  std::vector<Vertex> perm(20);
  std::iota(perm.begin(), perm.end(), Vertex{0});
  std::shuffle(perm.begin(), perm.end(), rng);
  const std::vector<Vertex> keep(perm.begin(), perm.begin() + 12);
  const std::vector<Vertex> elim(perm.begin() + 12, perm.end());
  const auto sc = exact_schur(g, keep);
  const auto h = graph_from_laplacian(sc);
  double worst_er = 0.0;
  for (std::size_t i = 0; i < keep.size(); ++i) {
    for (std::size_t j = i + 1; j < keep.size(); ++j) {
      const double a = exact_effective_resistance(h, static_cast<Vertex>(i), static_cast<Vertex>(j));
      const double b = exact_effective_resistance(g, keep[i], keep[j]);
      worst_er = std::max(worst_er, std::abs(a - b) / b);
    }
  }
  const auto l = laplacian(g);
  Eigen::MatrixXd minor(8, 8);
  for (int i = 0; i < 8; ++i) {
    for (int j = 0; j < 8; ++j) minor(i, j) = l(elim[i], elim[j]);
  }
  const double mult = rel_gap(log_tree_weight(h).log() + log_det_spd(minor).log(), log_tree_weight(g).log());
  out.detail << "Foster gap " << worst_foster << ", ER rel gap " << worst_er << ", det_+ rel gap " << mult;
  out.require(worst_foster <= 1e-8, "Foster");
  out.require(worst_er <= 1e-8, "ER invariance");
  out.require(mult <= 1e-8, "multiplicativity");
}

// 3. Expectation of T over uniform edge subsets.
void subset_expectation(Outcome& out) {
  const auto k10 = complete_graph(10);
  const auto sampled = uniform_subset_moment_experiment(k10, 30, 2000, 1003);
  const auto enumerated = uniform_subset_moment_enumeration(complete_graph(5), 6);
  const double z = std::abs(sampled.mean_ratio - 1.0) / sampled.mean_ratio_se;
  out.detail << "K10 s=30 mean ratio " << sampled.mean_ratio << " (" << z << " sigma); K5 s=6 enumerated "
             << std::abs(enumerated.mean_ratio - 1.0) << " from 1";
  out.require(z <= 5.0, "sampled mean");
  out.require(std::abs(enumerated.mean_ratio - 1.0) <= 1e-12, "enumeration");
}

// 4. Concentration of T(H) for leverage sampling on K16.
void concentration(Outcome& out) {
  const auto g = complete_graph(16);
  const auto tau = exact_leverage_scores(g);
  const auto s = static_cast<std::size_t>(std::ceil(8.0 * std::pow(16.0, 1.5)));
  const auto r = moment_experiment(1000, 1004, log_tree_weight(g).log(),
                                   [&](Rng& rng) { return log_tree_weight(ideal_sparsify(g, tau, s, rng)); });
  out.detail << "s=" << s << " E[T(H)]/T(G) " << r.mean_ratio << " (se " << r.mean_ratio_se << "), E[T^2]/E[T]^2 "
             << r.second_moment_ratio << " (se " << r.second_moment_se << ")";
  out.require(r.mean_ratio >= 0.9 && r.mean_ratio <= 1.1, "mean");
  out.require(r.second_moment_ratio <= 1.1, "second moment");
}

// 5. Two-stage rejection sampler on K4.
void rejection_sampler(Outcome& out) {
  const auto g = complete_graph(4);
  Rng rng = make_rng(1005);
  const auto lev = LeverageOracle::build(g, 0.1, EmbeddingBackend::Exact, rng);
  const auto sampler = GraphEdgeSampler::uniform(g);
  const double rho = 1.0;
  const auto r = det_sparsify(g, {26000, 0.1, rho}, sampler, lev, rng);
  const double proposals = static_cast<double>(r.stats.proposals);
  const double accept = static_cast<double>(r.stats.accepted) / proposals;
  const double calls = static_cast<double>(r.stats.stage1_accepts) / proposals;
  const double sigma = std::sqrt(calls * (1.0 - calls) / proposals);

  std::vector<std::uint64_t> counts(g.num_edges(), 0);
  for (const auto& e : r.graph.edges()) ++counts[*e.parent];
  const auto tau = exact_leverage_scores(g);
  const auto chi = chi_square_test(counts, tau);

  // Same comparison on a weighted K4 with the leverage-proportional sampler.
  WeightedMultiGraph w(4);
  const double weights[] = {1.0, 2.0, 0.5, 3.0, 1.5, 0.25};
  int k = 0;
  for (Vertex a = 0; a < 4; ++a) {
    for (Vertex b = a + 1; b < 4; ++b) w.add_edge(a, b, weights[k++]);
  }
  const auto wlev = LeverageOracle::build(w, 0.1, EmbeddingBackend::Exact, rng);
  const auto crude = GraphEdgeSampler::crude(w, wlev);
  const auto rw = det_sparsify(w, {100000, 0.1, kCrudeSamplerRho}, crude, wlev, rng);
  std::vector<std::uint64_t> wcounts(w.num_edges(), 0);
  for (const auto& e : rw.graph.edges()) ++wcounts[*e.parent];
  const auto wchi = chi_square_test(wcounts, exact_leverage_scores(w));

  out.detail << r.stats.proposals << " proposals, acceptance " << accept << " (floor " << 1.0 / (8.0 * rho)
             << "), eps-oracle rate " << calls << " (cap " << 1.0 / rho + 3.0 * sigma << "), chi2 " << chi.statistic
             << "/" << chi.critical << ", weighted chi2 " << wchi.statistic << "/" << wchi.critical;
  out.require(r.stats.proposals >= 100000, "proposal count");
  out.require(accept >= 1.0 / (8.0 * rho), "acceptance rate");
  out.require(calls <= 1.0 / rho + 3.0 * sigma, "oracle call rate");
  out.require(chi.pass, "edge distribution");
  out.require(wchi.pass, "weighted edge distribution");
}

// Walks V1 -> V1 through eliminated vertices, one per walk/reversal pair.
void enumerate_walks(const WeightedMultiGraph& g, const std::vector<char>& in_v1, std::size_t max_len,
                     const std::function<void(const std::vector<Vertex>&, const std::vector<EdgeId>&)>& visit) {
  std::vector<Vertex> vs;
  std::vector<EdgeId> es;
  const auto dfs = [&](auto&& self, Vertex x) -> void {
    if (es.size() >= max_len) return;
    for (EdgeId id : g.incident(x)) {
      const Vertex y = g.edge(id).other(x);
      es.push_back(id);
      vs.push_back(y);
      if (in_v1[y]) {
        std::vector<Vertex> rv(vs.rbegin(), vs.rend());
        std::vector<EdgeId> re(es.rbegin(), es.rend());
        if (std::tie(vs, es) <= std::tie(rv, re)) visit(vs, es);
      } else {
        self(self, y);
      }
      es.pop_back();
      vs.pop_back();
    }
  };
  for (Vertex x = 0; x < g.num_vertices(); ++x) {
    if (!in_v1[x]) continue;
    vs.assign(1, x);
    es.clear();
    dfs(dfs, x);
  }
}

// 6. Schur sparsification moments and the walk measure.
void schur_moments(Outcome& out) {
  const auto g = wheel_graph(6);
  const std::vector<Vertex> v1{0, 2, 4, 5};
  const double log_sc = log_tree_weight(graph_from_laplacian(exact_schur(g, v1))).log();
  const auto r = moment_experiment(500, 1006, log_sc, [&](Rng& rng) {
    return log_tree_weight(schur_sparse(g, v1, 0.25, rng).graph);
  });
  const double lo = std::exp(-0.25) - 5.0 * r.mean_ratio_se;
  const double hi = std::exp(0.25) + 5.0 * r.mean_ratio_se;
  const double second_cap = std::exp(0.25) + 5.0 * r.second_moment_se;

  // Enumerated walk measure on small graphs with eliminated sets that have
  // internal edges. Walks longer than 30 edges carry negligible mass.
  Rng rng = make_rng(2006);
  double worst_sum = 0.0, worst_entry = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 4 + trial % 2;
    const auto h = random_connected_graph(n, 0.7, 0.5, 2.0, rng);
    const auto dd = almost_independent(h, 0.1, rng);
    std::vector<Vertex> keep;
    std::vector<char> in(n, 1);
    for (Vertex v : dd.v2) in[v] = 0;
    for (Vertex v = 0; v < n; ++v) {
      if (in[v]) keep.push_back(v);
    }
    if (keep.size() < 2) continue;
    SchurWalkSampler sampler(h, keep, exact_leverage_scores(h));
    double total = 0.0;
    std::map<std::pair<Vertex, Vertex>, double> entry;
    enumerate_walks(h, in, 30, [&](const std::vector<Vertex>& vs, const std::vector<EdgeId>& es) {
      total += sampler.walk_probability(vs, es);
      if (vs.front() != vs.back()) {
        entry[{std::min(vs.front(), vs.back()), std::max(vs.front(), vs.back())}] += sampler.walk_weight(vs, es);
      }
    });
    worst_sum = std::max(worst_sum, std::abs(total - 1.0));
    const auto sc = exact_schur(h, keep);
    for (std::size_t i = 0; i < keep.size(); ++i) {
      for (std::size_t j = i + 1; j < keep.size(); ++j) {
        worst_entry = std::max(worst_entry, std::abs(entry[{keep[i], keep[j]}] + sc(i, j)));
      }
    }
  }
  out.detail << "mean T(H)/T(Sc) " << r.mean_ratio << " in [" << lo << ", " << hi << "], second moment "
             << r.second_moment_ratio << " <= " << second_cap << "; walk measure gap " << worst_sum
             << ", entry gap " << worst_entry;
  out.require(r.mean_ratio >= lo && r.mean_ratio <= hi, "mean band");
  out.require(r.second_moment_ratio <= second_cap, "second moment");
  out.require(worst_sum <= 1e-9, "walk measure");
  out.require(worst_entry <= 1e-6, "Schur entries");
}

// 7. Determinant estimation on G(40, 0.5).
void det_estimation(Outcome& out) {
  Rng rng = make_rng(1007);
  const auto g = gnp_graph(40, 0.5, rng);
  const double truth = log_tree_weight(g).log();
  const auto start = std::chrono::steady_clock::now();
  int good = 0;
  double worst = 0.0;
  for (std::uint64_t i = 0; i < 20; ++i) {
    const auto est = det_approx(g, 0.5, derive_seed(1007, i));
    const double gap = std::abs(est.log_value.log() - truth);
    worst = std::max(worst, gap);
    good += gap <= std::log(1.5) ? 1 : 0;
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  out.detail << good << "/20 within ln 1.5 (worst log gap " << worst << "), " << secs << " s";
  out.require(good >= 16, "accuracy");
  out.require(secs < 300.0, "runtime");
}

struct Support {
  std::vector<SpanningTree> trees;
  std::vector<double> p;
  std::map<std::vector<EdgeId>, std::size_t> index;
};

Support support_of(const WeightedMultiGraph& g) {
  Support s;
  s.trees = enumerate_spanning_trees(g);
  const double log_t = log_tree_weight(g).log();
  for (std::size_t i = 0; i < s.trees.size(); ++i) {
    s.p.push_back(std::exp(s.trees[i].log_weight.log() - log_t));
    s.index[s.trees[i].edges] = i;
  }
  return s;
}

struct SamplerCheck {
  bool chi_pass = false;
  bool marginals_pass = false;
  double worst_z = 0.0;
};

SamplerCheck check_sampler(const WeightedMultiGraph& g, std::size_t draws, std::uint64_t seed,
                           const std::function<SpanningTree(Rng&)>& sampler) {
  const auto s = support_of(g);
  std::vector<std::uint64_t> counts(s.trees.size(), 0);
  std::vector<double> hits(g.num_edges(), 0.0);
  Rng rng = make_rng(seed);
  bool valid = true;
  for (std::size_t i = 0; i < draws; ++i) {
    const auto t = sampler(rng);
    const auto it = s.index.find(t.edges);
    if (it == s.index.end()) {
      valid = false;
      continue;
    }
    ++counts[it->second];
    for (EdgeId e : t.edges) hits[e] += 1.0;
  }
  SamplerCheck c;
  c.chi_pass = valid && chi_square_test(counts, s.p).pass;
  c.marginals_pass = valid;
  for (EdgeId e = 0; e < g.num_edges(); ++e) {
    const std::vector<EdgeId> f{e};
    const double p = subset_marginal(g, f);
    const double sd = std::sqrt(p * (1.0 - p) / static_cast<double>(draws));
    const double gap = std::abs(hits[e] / static_cast<double>(draws) - p);
    if (sd > 0.0) c.worst_z = std::max(c.worst_z, gap / sd);
    if (gap > 4.0 * sd + 1e-12) c.marginals_pass = false;
  }
  return c;
}

// 8. Exact samplers against enumeration.
void exact_samplers(Outcome& out) {
  Rng rng = make_rng(1008);
  const std::size_t draws = 200000;
  int chi_ok = 0, marg_ok = 0;
  double worst_z = 0.0;
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t n = 3 + trial % 3;
    const auto g = random_connected_graph(n, 0.6, 0.5, 3.0, rng);
    for (int which = 0; which < 2; ++which) {
      const auto c = check_sampler(g, draws, derive_seed(1008, 2 * trial + which), [&](Rng& r) {
        return which == 0 ? exact_tree(g, r) : wilson_tree(g, r);
      });
      chi_ok += c.chi_pass ? 1 : 0;
      marg_ok += c.marginals_pass ? 1 : 0;
      worst_z = std::max(worst_z, c.worst_z);
    }
  }
  const auto w5 = wheel_graph(5);
  const std::vector<Vertex> hub{0};
  const auto part = VertexPartition::from_v1(5, hub);
  const auto sc = graph_from_laplacian(exact_schur(w5, part.v2));
  const auto sc_support = support_of(sc);
  const auto prolong = check_sampler(w5, draws, 3008, [&](Rng& r) {
    std::discrete_distribution<std::size_t> pick(sc_support.p.begin(), sc_support.p.end());
    std::vector<VertexPair> pairs;
    for (EdgeId id : sc_support.trees[pick(r)].edges) {
      pairs.emplace_back(part.v2[sc.edge(id).u], part.v2[sc.edge(id).v]);
    }
    return prolongate_tree(w5, part, pairs, r);
  });
  out.detail << "chi-square passes " << chi_ok << "/20, marginal checks " << marg_ok << "/20 (worst z " << worst_z
             << "), prolongation on W5 " << (prolong.chi_pass ? "passes" : "fails");
  out.require(chi_ok == 20, "chi-square");
  out.require(marg_ok == 20, "marginals");
  out.require(prolong.chi_pass, "prolongation");
}

// 9. Approximate sampler total variation on C6 with two chords.
void approx_sampler(Outcome& out) {
  const auto g = cycle6_with_chords();
  const double delta = 0.05;
  ApproxTreeStats stats;
  std::size_t max_levels = 0;
  const auto report = tv_estimate(
      [&](Rng& rng) {
        ApproxTreeStats one;
        auto t = approx_tree(g, delta, rng, &one);
        stats.schur_calls += one.schur_calls;
        stats.disconnected_retries += one.disconnected_retries;
        max_levels = std::max(max_levels, one.levels);
        return t;
      },
      g, 200000, 1009);
  const double budget = 0.25 + 3.0 * report.mc_error;
  const double retry_rate = static_cast<double>(stats.disconnected_retries) / static_cast<double>(stats.schur_calls);
  out.detail << "TV " << report.tv << " <= " << budget << ", levels " << max_levels << ", retries "
             << stats.disconnected_retries << "/" << stats.schur_calls;
  out.require(report.tv <= budget, "TV");
  out.require(retry_rate <= 0.01, "retry rate");
}

// 10. Enumerated intersection bounds on K_n, n <= 7.
void enumerated_bounds(Outcome& out) {
  bool pair_ok = true, floor_ok = true, per_k_ok = true;
  double tightest_pair = -std::numeric_limits<double>::infinity();
  for (std::size_t n = 3; n <= 7; ++n) {
    const auto g = complete_graph(n);
    const double m = static_cast<double>(g.num_edges());
    const double nn = static_cast<double>(n);
    const double log_t = log_tree_weight(g).log();

    const auto pair = intersection_pair_profile(g);
    double fact = 1.0;
    for (std::size_t k = 0; k < pair.size(); ++k) {
      if (k > 0) fact *= static_cast<double>(k);
      if (pair[k].is_zero()) continue;
      const double log_bound = 2.0 * log_t + static_cast<double>(k) * std::log(nn * nn / m) - std::log(fact);
      tightest_pair = std::max(tightest_pair, pair[k].log() - log_bound);
      if (pair[k].log() > log_bound + 1e-12) pair_ok = false;
    }

    const auto trees = enumerate_spanning_trees(g);
    for (const auto& hat : {trees.front(), trees.back()}) {
      const auto prof = tree_intersection_profile(g, hat.edges);
      const double ratio = 2.0 * nn * nn / m;
      double series = 0.0;
      for (std::size_t k = 1; k < n; ++k) series += std::pow(ratio, static_cast<double>(k));
      const double disjoint = prof[0].is_zero() ? 0.0 : std::exp(prof[0].log() - log_t);
      if (disjoint < 1.0 - series - 1e-12) floor_ok = false;
      for (std::size_t k = 0; k < prof.size(); ++k) {
        if (prof[k].is_zero()) continue;
        const double bound = std::log(ref::binomial(n - 1, k)) + static_cast<double>(k) * std::log(2.0 * nn / m);
        if (prof[k].log() - log_t > bound + 1e-12) per_k_ok = false;
      }
    }
  }
  out.detail << "pair bound " << (pair_ok ? "holds" : "fails") << " (max log excess " << tightest_pair
             << "), no-intersection floor " << (floor_ok ? "holds" : "fails") << ", per-k bound "
             << (per_k_ok ? "holds" : "fails");
  out.require(pair_ok, "pair bound");
  out.require(floor_ok, "no-intersection floor");
  out.require(per_k_ok, "per-k bound");
}

struct Criterion {
  const char* name;
  void (*run)(Outcome&);
};

const Criterion kCriteria[] = {
    {"oracle equivalence", oracle_equivalence},
    {"Foster and Schur invariants", foster_and_schur},
    {"uniform subset expectation", subset_expectation},
    {"K16 concentration", concentration},
    {"rejection sampler", rejection_sampler},
    {"Schur sparsification moments", schur_moments},
    {"determinant estimation on G(40, 0.5)", det_estimation},
    {"exact tree samplers", exact_samplers},
    {"approximate tree sampler", approx_sampler},
    {"enumerated intersection bounds", enumerated_bounds},
};

bool run_one(int index) {
  const auto& c = kCriteria[index - 1];
  Outcome out;
  const auto start = std::chrono::steady_clock::now();
  try {
    c.run(out);
  } catch (const std::exception& e) {
    out.pass = false;
    out.detail << " [exception: " << e.what() << "]";
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::printf("%s %d %s: %s (%.1f s)\n", out.pass ? "PASS" : "FAIL", index, c.name, out.detail.str().c_str(), secs);
  std::fflush(stdout);
  return out.pass;
}

}  // namespace

int main(int argc, char** argv) {
  constexpr int kCount = static_cast<int>(std::size(kCriteria));
  if (argc > 2) {
    std::fprintf(stderr, "usage: acceptance [1-%d]\n", kCount);
    return 2;
  }
  if (argc == 2) {
    const int k = std::atoi(argv[1]);
    if (k < 1 || k > kCount) {
      std::fprintf(stderr, "usage: acceptance [1-%d]\n", kCount);
      return 2;
    }
    return run_one(k) ? 0 : 1;
  }
  bool all = true;
  for (int k = 1; k <= kCount; ++k) all = run_one(k) && all;
  return all ? 0 : 1;
}
