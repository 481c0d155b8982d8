#include "detsparse/det_approx.hpp"

#include <algorithm>
#include <cmath>

#include "detsparse/errors.hpp"
#include "detsparse/random.hpp"

namespace detsparse {

DenseLaplacian add_row_column(const Eigen::MatrixXd& m) {
  const Eigen::Index n = m.rows();
  if (n == 0 || m.cols() != n) throw ContractViolation("add_row_column: matrix must be square and nonempty");
  const double scale = m.cwiseAbs().maxCoeff();
  const double tol = 1e-12 * scale;
  Eigen::VectorXd excess(n);
  bool strict = false;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      if (std::abs(m(i, j) - m(j, i)) > tol) throw ContractViolation("add_row_column: matrix is not symmetric");
      if (i != j && m(i, j) > tol) throw ContractViolation("add_row_column: positive off-diagonal, not SDDM");
    }
    excess(i) = m.row(i).sum();
    if (excess(i) < -1e-9 * scale) throw ContractViolation("add_row_column: row is not diagonally dominant");
    excess(i) = std::max(excess(i), 0.0);
    if (excess(i) > tol) strict = true;
  }
  if (!strict) throw ContractViolation("add_row_column: no strictly dominant row, matrix is singular");
  Eigen::MatrixXd l(n + 1, n + 1);
  l.topLeftCorner(n, n) = m;
  l.block(0, n, n, 1) = -excess;
  l.block(n, 0, 1, n) = -excess.transpose();
  l(n, n) = excess.sum();
  return DenseLaplacian::trusted(std::move(l));
}

namespace {

class DetRecursion {
 public:
  DetRecursion(const DetApproxOptions& options, std::size_t n_bar, double delta_prime)
      : options_(options), n_bar_(static_cast<double>(n_bar)), delta_prime_(delta_prime) {}

  LogWeight run(const WeightedMultiGraph& g, std::uint64_t seed, std::size_t depth) {
    const std::size_t n = g.num_vertices();
    const double budget = delta_prime_ * static_cast<double>(n) / n_bar_;
    auto& level = level_at(depth);
    ++level.calls;
    level.budget_sum += budget;
    level.vertex_sum += n;

    if (n <= std::max<std::size_t>(options_.exact_threshold, 2)) {
      ++level.exact_leaves;
      if (n == 2) {
        double w = 0.0;
        for (const auto& e : g.edges()) w += e.weight;
        return LogWeight::from_linear(w);
      }
      return log_tree_weight(g);
    }

    Rng rng = make_rng(seed);
    auto v2 = almost_independent(g, options_.alpha, rng).v2;
    // Both sides must be nonempty and the V1 side must actually shrink.
    if (v2.size() > n - 2) v2.resize(n - 2);
    const auto part = VertexPartition::from_v1(n, complement(n, v2));

    ++trace_.schur_calls;
    auto h = schur_sparse_merged(g, part.v1, budget, rng, options_.schur);
    trace_.proposals += h.stats.proposals;
    trace_.samples += h.stats.accepted;
    if (!is_connected(h.graph)) {
      ++trace_.disconnected_events;
      return LogWeight::zero();
    }

    const auto v2_graph = graph_from_laplacian(add_row_column(minor(g, part.v2)));

    const LogWeight left = run(h.graph, derive_seed(seed, 1), depth + 1);
    if (left.is_zero()) return left;
    return left * run(v2_graph, derive_seed(seed, 2), depth + 1);
  }

  DetTrace take_trace() { return std::move(trace_); }

 private:
  static std::vector<Vertex> complement(std::size_t n, const std::vector<Vertex>& v2) {
    std::vector<char> in(n, 0);
    for (Vertex v : v2) in[v] = 1;
    std::vector<Vertex> out;
    for (Vertex v = 0; v < n; ++v) {
      if (!in[v]) out.push_back(v);
    }
    return out;
  }

  static Eigen::MatrixXd minor(const WeightedMultiGraph& g, const std::vector<Vertex>& v2) {
    const auto l = laplacian(g);
    const auto k = static_cast<Eigen::Index>(v2.size());
    Eigen::MatrixXd m(k, k);
    for (Eigen::Index i = 0; i < k; ++i) {
      for (Eigen::Index j = 0; j < k; ++j) m(i, j) = l(v2[i], v2[j]);
    }
    return m;
  }

  DetTraceLevel& level_at(std::size_t depth) {
    if (trace_.levels.size() <= depth) trace_.levels.resize(depth + 1);
    return trace_.levels[depth];
  }

  const DetApproxOptions& options_;
  double n_bar_;
  double delta_prime_;
  DetTrace trace_;
};

}  // namespace

DetEstimate det_approx(const WeightedMultiGraph& g_in, double delta, std::uint64_t seed,
                       const DetApproxOptions& options) {
  if (!(delta > 0.0 && delta <= 1.0)) throw ContractViolation("det_approx: delta must lie in (0, 1]");
  if (g_in.num_vertices() < 2) throw ContractViolation("det_approx: need at least two vertices");
  if (!is_connected(g_in)) throw DisconnectedGraph("det_approx: graph is disconnected");
  const auto g = merge_parallel(g_in).graph;
  const std::size_t n = g.num_vertices();
  const double log_n = std::ceil(std::log2(static_cast<double>(n)));
  const double delta_prime = delta * delta / (options.c_delta * std::max(1.0, log_n * log_n * log_n));

  DetRecursion rec(options, n, delta_prime);
  DetEstimate est;
  est.delta = delta;
  est.delta_prime = delta_prime;
  est.log_value = rec.run(g, seed, 0);
  est.trace = rec.take_trace();
  return est;
}

DetEstimate det_approx(const DenseLaplacian& l, double delta, std::uint64_t seed,
                       const DetApproxOptions& options) {
  return det_approx(graph_from_laplacian(l), delta, seed, options);
}

BoostedEstimate det_approx_boosted(const WeightedMultiGraph& g, double delta, std::size_t k,
                                   std::uint64_t seed, const DetApproxOptions& options) {
  if (k == 0) throw ContractViolation("det_approx_boosted: need at least one run");
  BoostedEstimate out;
  for (std::size_t i = 0; i < k; ++i) {
    out.runs.push_back(det_approx(g, delta, k == 1 ? seed : derive_seed(seed, i), options));
  }
  std::vector<double> logs;
  for (const auto& r : out.runs) logs.push_back(r.log_value.log());
  std::sort(logs.begin(), logs.end());
  const double med = logs[(logs.size() - 1) / 2];
  out.log_value = std::isfinite(med) ? LogWeight::from_log(med) : LogWeight::zero();
  return out;
}

}  // namespace detsparse
