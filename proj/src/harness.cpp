#include "detsparse/harness.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include <boost/math/distributions/normal.hpp>

#include "detsparse/errors.hpp"

namespace detsparse {

WeightedMultiGraph complete_graph(std::size_t n, double w) {
  WeightedMultiGraph g(n);
  for (Vertex u = 0; u < n; ++u) {
    for (Vertex v = u + 1; v < n; ++v) g.add_edge(u, v, w);
  }
  return g;
}

WeightedMultiGraph path_graph(std::size_t n, double w) {
  WeightedMultiGraph g(n);
  for (Vertex u = 0; u + 1 < n; ++u) g.add_edge(u, u + 1, w);
  return g;
}

WeightedMultiGraph cycle_graph(std::size_t n, double w) {
  if (n < 3) throw ContractViolation("cycle_graph: need at least three vertices");
  auto g = path_graph(n, w);
  g.add_edge(static_cast<Vertex>(n - 1), 0, w);
  return g;
}

WeightedMultiGraph star_graph(std::size_t leaves, double w) {
  WeightedMultiGraph g(leaves + 1);
  for (Vertex v = 1; v <= leaves; ++v) g.add_edge(0, v, w);
  return g;
}

WeightedMultiGraph wheel_graph(std::size_t n, double w) {
  if (n < 4) throw ContractViolation("wheel_graph: need at least four vertices");
  WeightedMultiGraph g(n);
  for (Vertex v = 1; v < n; ++v) g.add_edge(0, v, w);
  for (Vertex v = 1; v < n; ++v) g.add_edge(v, v + 1 < n ? v + 1 : 1, w);
  return g;
}

WeightedMultiGraph cycle6_with_chords() {
  auto g = cycle_graph(6);
  g.add_edge(0, 3, 1.0);
  g.add_edge(1, 4, 1.0);
  return g;
}

WeightedMultiGraph gnp_graph(std::size_t n, double p, Rng& rng) {
  std::bernoulli_distribution coin(p);
  for (int attempt = 0; attempt < 1000; ++attempt) {
    WeightedMultiGraph g(n);
    for (Vertex u = 0; u < n; ++u) {
      for (Vertex v = u + 1; v < n; ++v) {
        if (coin(rng)) g.add_edge(u, v, 1.0);
      }
    }
    if (is_connected(g)) return g;
  }
  throw ContractViolation("gnp_graph: could not draw a connected graph");
}

WeightedMultiGraph random_connected_graph(std::size_t n, double p, double w_lo, double w_hi,
                                          Rng& rng) {
  std::uniform_real_distribution<double> weight(w_lo, w_hi);
  std::bernoulli_distribution coin(p);
  std::vector<Vertex> order(n);
  std::iota(order.begin(), order.end(), Vertex{0});
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<char> used(n * n, 0);
  WeightedMultiGraph g(n);
  for (std::size_t i = 1; i < n; ++i) {
    const Vertex u = order[i];
    const Vertex v = order[std::uniform_int_distribution<std::size_t>(0, i - 1)(rng)];
    g.add_edge(std::min(u, v), std::max(u, v), weight(rng));
    used[std::min(u, v) * n + std::max(u, v)] = 1;
  }
  for (Vertex u = 0; u < n; ++u) {
    for (Vertex v = u + 1; v < n; ++v) {
      if (!used[u * n + v] && coin(rng)) g.add_edge(u, v, weight(rng));
    }
  }
  return g;
}

MomentReport summarize_moments(std::span<const double> log_values, double log_prediction) {
  MomentReport r;
  r.trials = log_values.size();
  r.log_prediction = log_prediction;
  if (r.trials == 0) throw ContractViolation("summarize_moments: no trials");
  double hi = -std::numeric_limits<double>::infinity();
  for (double x : log_values) {
    if (std::isfinite(x)) {
      hi = std::max(hi, x);
    } else {
      ++r.zero_trials;
    }
  }
  if (!std::isfinite(hi)) {
    r.second_moment_ratio = std::numeric_limits<double>::quiet_NaN();
    return r;
  }
  // Y_i = T_i / max T; ratios below are invariant to that scale.
  const double n = static_cast<double>(r.trials);
  double s1 = 0.0, s2 = 0.0;
  std::vector<double> y(r.trials);
  for (std::size_t i = 0; i < r.trials; ++i) {
    y[i] = std::isfinite(log_values[i]) ? std::exp(log_values[i] - hi) : 0.0;
    s1 += y[i];
    s2 += y[i] * y[i];
  }
  const double mean_y = s1 / n;
  r.mean_ratio = std::exp(std::log(mean_y) + hi - log_prediction);
  r.second_moment_ratio = (s2 / n) / (mean_y * mean_y);
  if (r.trials > 1) {
    const double var_y = std::max(0.0, (s2 - n * mean_y * mean_y) / (n - 1.0));
    r.mean_ratio_se = r.mean_ratio * std::sqrt(var_y / n) / mean_y;
    std::vector<double> loo(r.trials);
    double loo_mean = 0.0;
    for (std::size_t i = 0; i < r.trials; ++i) {
      const double a = (s2 - y[i] * y[i]) / (n - 1.0);
      const double b = (s1 - y[i]) / (n - 1.0);
      loo[i] = b > 0.0 ? a / (b * b) : 0.0;
      loo_mean += loo[i] / n;
    }
    double acc = 0.0;
    for (double v : loo) acc += (v - loo_mean) * (v - loo_mean);
    r.second_moment_se = std::sqrt((n - 1.0) / n * acc);
  }
  return r;
}

MomentReport moment_experiment(std::size_t trials, std::uint64_t seed, double log_prediction,
                               const std::function<LogWeight(Rng&)>& trial) {
  std::vector<double> logs(trials);
  for (std::size_t i = 0; i < trials; ++i) {
    Rng rng = child_rng(seed, i);
    logs[i] = trial(rng).log();
  }
  auto r = summarize_moments(logs, log_prediction);
  r.seed = seed;
  return r;
}

double log_falling_ratio(std::size_t s, std::size_t m, std::size_t k) {
  if (k > m) throw ContractViolation("log_falling_ratio: k exceeds m");
  if (k > s) return -std::numeric_limits<double>::infinity();
  double acc = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    acc += std::log(static_cast<double>(s - i)) - std::log(static_cast<double>(m - i));
  }
  return acc;
}

namespace {

WeightedMultiGraph edge_subgraph(const WeightedMultiGraph& g, std::span<const EdgeId> ids) {
  WeightedMultiGraph h(g.num_vertices());
  for (EdgeId id : ids) {
    const auto& e = g.edge(id);
    h.add_edge(e.u, e.v, e.weight, e.origin, id);
  }
  return h;
}

double subset_prediction(const WeightedMultiGraph& g, std::size_t s) {
  return log_tree_weight(g).log() + log_falling_ratio(s, g.num_edges(), g.num_vertices() - 1);
}

}  // namespace

MomentReport uniform_subset_moment_experiment(const WeightedMultiGraph& g, std::size_t s,
                                              std::size_t trials, std::uint64_t seed) {
  const std::size_t m = g.num_edges();
  if (s == 0 || s > m) throw ContractViolation("uniform_subset_moment_experiment: need 0 < s <= m");
  std::vector<EdgeId> ids(m);
  std::iota(ids.begin(), ids.end(), EdgeId{0});
  return moment_experiment(trials, seed, subset_prediction(g, s), [&](Rng& rng) {
    auto pool = ids;
    // Partial Fisher-Yates: the first s entries are a uniform s-subset.
    for (std::size_t i = 0; i < s; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, m - 1);
      std::swap(pool[i], pool[pick(rng)]);
    }
    return log_tree_weight(edge_subgraph(g, std::span(pool).first(s)));
  });
}

MomentReport uniform_subset_moment_enumeration(const WeightedMultiGraph& g, std::size_t s) {
  const std::size_t m = g.num_edges();
  if (s == 0 || s > m) throw ContractViolation("uniform_subset_moment_enumeration: need 0 < s <= m");
  double count = 1.0;
  for (std::size_t i = 0; i < s; ++i) count = count * static_cast<double>(m - i) / static_cast<double>(i + 1);
  if (count > 1e5) throw ContractViolation("uniform_subset_moment_enumeration: more than 1e5 subsets");
  std::vector<char> mask(m, 0);
  std::fill(mask.begin(), mask.begin() + static_cast<std::ptrdiff_t>(s), 1);
  std::vector<double> logs;
  std::vector<EdgeId> chosen;
  // prev_permutation on a 1..10..0 mask visits every s-subset once.
  do {
    chosen.clear();
    for (EdgeId i = 0; i < m; ++i) {
      if (mask[i]) chosen.push_back(i);
    }
    logs.push_back(log_tree_weight(edge_subgraph(g, chosen)).log());
  } while (std::prev_permutation(mask.begin(), mask.end()));
  auto r = summarize_moments(logs, subset_prediction(g, s));
  r.exact = true;
  r.mean_ratio_se = 0.0;
  r.second_moment_se = 0.0;
  return r;
}

MomentReport conditional_moment_experiment(const WeightedMultiGraph& g,
                                           std::span<const EdgeId> t_hat, std::size_t s,
                                           std::size_t trials, std::uint64_t seed) {
  const std::size_t n = g.num_vertices();
  const std::size_t m = g.num_edges();
  if (!is_spanning_tree(g, t_hat)) throw ContractViolation("conditional_moment_experiment: t_hat is not a spanning tree");
  std::string note;
  if (s > m) {
    note = "s clamped from " + std::to_string(s) + " to m = " + std::to_string(m);
    s = m;
  }
  if (s + 1 < n) throw ContractViolation("conditional_moment_experiment: s < n - 1");
  const bool flagged = static_cast<double>(s) < 4.0 * static_cast<double>(n * n);
  if (flagged) {
    if (!note.empty()) note += "; ";
    note += "s < 4n^2: outside the regime of the conditional bounds";
  }
  std::vector<char> in_tree(m, 0);
  for (EdgeId id : t_hat) in_tree[id] = 1;
  std::vector<EdgeId> rest;
  for (EdgeId id = 0; id < m; ++id) {
    if (!in_tree[id]) rest.push_back(id);
  }
  const std::size_t extra = s - (n - 1);
  const double p = static_cast<double>(s) / static_cast<double>(m);
  const double prediction = log_tree_weight(g).log() + static_cast<double>(n - 1) * std::log(p);
  auto r = moment_experiment(trials, seed, prediction, [&](Rng& rng) {
    auto pool = rest;
    for (std::size_t i = 0; i < extra; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, pool.size() - 1);
      std::swap(pool[i], pool[pick(rng)]);
    }
    std::vector<EdgeId> chosen(t_hat.begin(), t_hat.end());
    chosen.insert(chosen.end(), pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(extra));
    return log_tree_weight(edge_subgraph(g, chosen));
  });
  r.flagged = flagged;
  r.note = note;
  return r;
}

double conditional_exact_log_mean(const WeightedMultiGraph& g, std::span<const EdgeId> t_hat,
                                  std::size_t s) {
  const std::size_t n = g.num_vertices();
  const std::size_t m = g.num_edges();
  s = std::min(s, m);
  std::vector<char> in_tree(m, 0);
  for (EdgeId id : t_hat) in_tree[id] = 1;
  std::vector<double> terms;
  for (const auto& t : enumerate_spanning_trees(g)) {
    std::size_t outside = 0;
    for (EdgeId id : t.edges) outside += in_tree[id] ? 0 : 1;
    terms.push_back(t.log_weight.log() + log_falling_ratio(s - (n - 1), m - (n - 1), outside));
  }
  return log_sum_exp(terms);
}

namespace {

struct TreeKey {
  bool operator()(const std::vector<EdgeId>& a, const std::vector<EdgeId>& b) const { return a < b; }
};

}  // namespace

TVReport tv_estimate(const std::function<SpanningTree(Rng&)>& sampler, const WeightedMultiGraph& g,
                     std::size_t draws, std::uint64_t seed) {
  if (draws == 0) throw ContractViolation("tv_estimate: draws must be positive");
  TVReport r;
  r.seed = seed;
  r.draws = draws;
  r.support = enumerate_spanning_trees(g, 1e5);
  if (r.support.empty()) throw ContractViolation("tv_estimate: graph has no spanning tree");
  std::vector<double> logs;
  for (const auto& t : r.support) logs.push_back(t.log_weight.log());
  const double total = log_sum_exp(logs);
  std::map<std::vector<EdgeId>, std::size_t, TreeKey> index;
  for (std::size_t i = 0; i < r.support.size(); ++i) {
    index.emplace(r.support[i].edges, i);
    r.exact.push_back(std::exp(logs[i] - total));
  }
  r.counts.assign(r.support.size(), 0);
  Rng rng = make_rng(seed);
  for (std::size_t d = 0; d < draws; ++d) {
    const auto t = sampler(rng);
    auto it = index.find(t.edges);
    if (it == index.end()) throw ContractViolation("tv_estimate: sampled tree is not a spanning tree of g");
    ++r.counts[it->second];
  }
  double tv = 0.0;
  for (std::size_t i = 0; i < r.support.size(); ++i) {
    r.empirical.push_back(static_cast<double>(r.counts[i]) / static_cast<double>(draws));
    tv += std::abs(r.empirical[i] - r.exact[i]);
  }
  r.tv = 0.5 * tv;
  r.mc_error = std::sqrt(static_cast<double>(r.support.size()) / static_cast<double>(draws));
  return r;
}

double chi_square_quantile(double dof, double p) {
  if (!(dof > 0.0)) throw ContractViolation("chi_square_quantile: dof must be positive");
  const double z = boost::math::quantile(boost::math::normal(), p);
  const double c = 2.0 / (9.0 * dof);
  const double t = 1.0 - c + z * std::sqrt(c);
  return dof * t * t * t;
}

ChiSquareResult chi_square_test(std::span<const std::uint64_t> observed,
                                std::span<const double> expected_prob, double significance) {
  if (observed.size() != expected_prob.size() || observed.empty()) {
    throw ContractViolation("chi_square_test: observed and expected sizes differ");
  }
  ChiSquareResult r;
  double total = 0.0;
  for (auto o : observed) total += static_cast<double>(o);
  if (!(total > 0.0)) throw ContractViolation("chi_square_test: no observations");
  double prob_sum = 0.0;
  for (double p : expected_prob) prob_sum += p;

  std::vector<double> obs, exp;
  double pooled_obs = 0.0, pooled_exp = 0.0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    const double e = total * expected_prob[i] / prob_sum;
    const double o = static_cast<double>(observed[i]);
    if (e <= 0.0) {
      if (o > 0.0) r.impossible_outcome = true;
      continue;
    }
    if (e < 5.0) {
      pooled_obs += o;
      pooled_exp += e;
    } else {
      obs.push_back(o);
      exp.push_back(e);
    }
  }
  if (pooled_exp > 0.0) {
    if (pooled_exp < 5.0 && !exp.empty()) {
      // Still too small on its own: fold it into the smallest regular cell.
      const auto k = static_cast<std::size_t>(std::min_element(exp.begin(), exp.end()) - exp.begin());
      obs[k] += pooled_obs;
      exp[k] += pooled_exp;
    } else {
      obs.push_back(pooled_obs);
      exp.push_back(pooled_exp);
    }
  }
  r.cells = obs.size();
  for (std::size_t i = 0; i < obs.size(); ++i) {
    r.statistic += (obs[i] - exp[i]) * (obs[i] - exp[i]) / exp[i];
  }
  r.dof = static_cast<double>(r.cells) - 1.0;
  if (r.dof < 1.0) {
    r.critical = 0.0;
    r.pass = !r.impossible_outcome;
    return r;
  }
  r.critical = chi_square_quantile(r.dof, 1.0 - significance);
  r.pass = !r.impossible_outcome && r.statistic <= r.critical;
  return r;
}

namespace {

std::vector<std::uint64_t> tree_masks(const std::vector<SpanningTree>& trees) {
  std::vector<std::uint64_t> out;
  out.reserve(trees.size());
  for (const auto& t : trees) {
    std::uint64_t mask = 0;
    for (EdgeId id : t.edges) mask |= std::uint64_t{1} << id;
    out.push_back(mask);
  }
  return out;
}

std::vector<LogWeight> to_log_profile(const std::vector<double>& linear, double log_scale) {
  std::vector<LogWeight> out;
  for (double v : linear) out.push_back(v > 0.0 ? LogWeight::from_log(std::log(v) + log_scale) : LogWeight::zero());
  return out;
}

}  // namespace

std::vector<LogWeight> intersection_pair_profile(const WeightedMultiGraph& g) {
  if (g.num_edges() > 64) throw ContractViolation("intersection_pair_profile: at most 64 edges");
  const auto trees = enumerate_spanning_trees(g);
  const auto masks = tree_masks(trees);
  std::vector<double> logs;
  for (const auto& t : trees) logs.push_back(t.log_weight.log());
  const double log_t = log_sum_exp(logs);
  std::vector<double> p(trees.size());
  for (std::size_t i = 0; i < trees.size(); ++i) p[i] = std::exp(logs[i] - log_t);
  const std::size_t n = g.num_vertices();
  std::vector<double> acc(n, 0.0);
  for (std::size_t i = 0; i < trees.size(); ++i) {
    for (std::size_t j = 0; j < trees.size(); ++j) {
      acc[std::popcount(masks[i] & masks[j])] += p[i] * p[j];
    }
  }
  return to_log_profile(acc, 2.0 * log_t);
}

std::vector<LogWeight> tree_intersection_profile(const WeightedMultiGraph& g,
                                                 std::span<const EdgeId> t_hat) {
  if (g.num_edges() > 64) throw ContractViolation("tree_intersection_profile: at most 64 edges");
  std::uint64_t hat = 0;
  for (EdgeId id : t_hat) hat |= std::uint64_t{1} << id;
  const auto trees = enumerate_spanning_trees(g);
  const auto masks = tree_masks(trees);
  std::vector<double> logs;
  for (const auto& t : trees) logs.push_back(t.log_weight.log());
  const double log_t = log_sum_exp(logs);
  std::vector<double> acc(g.num_vertices(), 0.0);
  for (std::size_t i = 0; i < trees.size(); ++i) {
    acc[std::popcount(masks[i] & hat)] += std::exp(logs[i] - log_t);
  }
  return to_log_profile(acc, log_t);
}

}  // namespace detsparse
