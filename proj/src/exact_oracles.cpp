#include "detsparse/exact_oracles.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "detsparse/errors.hpp"
#include "detsparse/union_find.hpp"

namespace detsparse {

DenseLaplacian::DenseLaplacian(Eigen::MatrixXd m) : m_(std::move(m)) {
  const auto n = m_.rows();
  if (m_.cols() != n) throw ContractViolation("Laplacian must be square");
  const double scale = n == 0 ? 0.0 : m_.cwiseAbs().maxCoeff();
  const double max_diag = n == 0 ? 0.0 : m_.diagonal().maxCoeff();
  for (Eigen::Index i = 0; i < n; ++i) {
    double row = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (std::abs(m_(i, j) - m_(j, i)) > 1e-12 * scale) {
        throw ContractViolation("non-symmetric input");
      }
      if (i != j && m_(i, j) > 1e-12 * scale) {
        throw ContractViolation("Laplacian has a positive off-diagonal entry");
      }
      row += m_(i, j);
    }
    if (std::abs(row) > 1e-9 * std::max(max_diag, 1e-300)) {
      throw ContractViolation("Laplacian row " + std::to_string(i) + " does not sum to zero");
    }
  }
}

DenseLaplacian DenseLaplacian::trusted(Eigen::MatrixXd m) {
  DenseLaplacian l;
  l.m_ = std::move(m);
  return l;
}

DenseLaplacian laplacian(const WeightedMultiGraph& g) {
  const auto n = static_cast<Eigen::Index>(g.num_vertices());
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
  for (const auto& e : g.edges()) {
    m(e.u, e.v) -= e.weight;
    m(e.v, e.u) -= e.weight;
    m(e.u, e.u) += e.weight;
    m(e.v, e.v) += e.weight;
  }
  return DenseLaplacian::trusted(std::move(m));
}

namespace {

LogWeight pivoted_cholesky_log_det(Eigen::MatrixXd a, double max_diag) {
  const Eigen::Index n = a.rows();
  if (n == 0) return LogWeight::one();
  const double tol = 1e-12 * max_diag;
  double acc = 0.0;
  for (Eigen::Index k = 0; k < n; ++k) {
    Eigen::Index p = 0;
    const double piv = a.diagonal().tail(n - k).maxCoeff(&p);
    p += k;
    if (!(piv > tol)) return LogWeight::zero();
    if (p != k) {
      a.row(k).swap(a.row(p));
      a.col(k).swap(a.col(p));
    }
    acc += std::log(piv);
    const Eigen::Index r = n - k - 1;
    if (r > 0) {
      const Eigen::VectorXd col = a.col(k).tail(r);
      a.bottomRightCorner(r, r).noalias() -= (col / piv) * col.transpose();
    }
  }
  return LogWeight::from_log(acc);
}

}  // namespace

LogWeight log_det_spd(const Eigen::MatrixXd& m) {
  if (m.rows() != m.cols()) throw ContractViolation("log_det_spd: matrix must be square");
  if (m.rows() == 0) return LogWeight::one();
  if (!m.isApprox(m.transpose(), 1e-12)) throw ContractViolation("non-symmetric input");
  return pivoted_cholesky_log_det(m, m.diagonal().maxCoeff());
}

LogWeight log_det_plus(const DenseLaplacian& l) {
  const auto n = static_cast<Eigen::Index>(l.size());
  if (n == 0) throw ContractViolation("log_det_plus: empty matrix");
  if (n == 1) return LogWeight::one();
  const double max_diag = l.matrix().diagonal().maxCoeff();
  if (!(max_diag > 0.0)) return LogWeight::zero();
  return pivoted_cholesky_log_det(l.matrix().topLeftCorner(n - 1, n - 1), max_diag);
}

DenseLaplacian exact_schur(const DenseLaplacian& l, std::span<const Vertex> v1) {
  const auto part = VertexPartition::from_v1(l.size(), v1);
  const auto n1 = static_cast<Eigen::Index>(v1.size());
  const auto n2 = static_cast<Eigen::Index>(part.v2.size());
  const auto& m = l.matrix();
  Eigen::MatrixXd a(n1, n1), b(n1, n2), c(n2, n2);
  for (Eigen::Index i = 0; i < n1; ++i) {
    for (Eigen::Index j = 0; j < n1; ++j) a(i, j) = m(v1[i], v1[j]);
    for (Eigen::Index j = 0; j < n2; ++j) b(i, j) = m(v1[i], part.v2[j]);
  }
  for (Eigen::Index i = 0; i < n2; ++i) {
    for (Eigen::Index j = 0; j < n2; ++j) c(i, j) = m(part.v2[i], part.v2[j]);
  }
  Eigen::LLT<Eigen::MatrixXd> llt(c);
  if (llt.info() != Eigen::Success) {
    throw ContractViolation("exact_schur: eliminated block is singular");
  }
  const double max_diag = c.diagonal().maxCoeff();
  if (llt.matrixLLT().diagonal().minCoeff() <= std::sqrt(1e-12 * max_diag)) {
    throw ContractViolation("exact_schur: eliminated block is singular");
  }
  Eigen::MatrixXd s = a - b * llt.solve(b.transpose());

  for (Eigen::Index i = 0; i < n1; ++i) {
    double off = 0.0;
    for (Eigen::Index j = 0; j < n1; ++j) {
      if (i == j) continue;
      const double v = std::min(0.5 * (s(i, j) + s(j, i)), 0.0);
      s(i, j) = v;
      off += v;
    }
    s(i, i) = -off;
  }
  return DenseLaplacian::trusted(std::move(s));
}

DenseLaplacian exact_schur(const WeightedMultiGraph& g, std::span<const Vertex> v1) {
  return exact_schur(laplacian(g), v1);
}

WeightedMultiGraph graph_from_laplacian(const DenseLaplacian& l, double drop_rel) {
  const auto n = static_cast<Eigen::Index>(l.size());
  WeightedMultiGraph g(l.size());
  if (n == 0) return g;
  const double cut = drop_rel * l.matrix().diagonal().maxCoeff();
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double w = -l(i, j);
      if (w > cut && w > 0.0) g.add_edge(static_cast<Vertex>(i), static_cast<Vertex>(j), w);
    }
  }
  return g;
}

GroundedInverse::GroundedInverse(const WeightedMultiGraph& g)
    : GroundedInverse(laplacian(g)) {
  if (!is_connected(g)) throw DisconnectedGraph("graph is disconnected");
}

GroundedInverse::GroundedInverse(const DenseLaplacian& l) {
  const auto n = static_cast<Eigen::Index>(l.size());
  if (n == 0) throw ContractViolation("GroundedInverse: empty graph");
  x_ = Eigen::MatrixXd::Zero(n, n);
  if (n == 1) return;
  const Eigen::MatrixXd grounded = l.matrix().topLeftCorner(n - 1, n - 1);
  Eigen::LLT<Eigen::MatrixXd> llt(grounded);
  const double max_diag = l.matrix().diagonal().maxCoeff();
  if (llt.info() != Eigen::Success ||
      llt.matrixLLT().diagonal().minCoeff() <= std::sqrt(1e-12 * max_diag)) {
    throw DisconnectedGraph("graph is disconnected");
  }
  x_.topLeftCorner(n - 1, n - 1) = llt.solve(Eigen::MatrixXd::Identity(n - 1, n - 1));
}

double exact_effective_resistance(const WeightedMultiGraph& g, Vertex u, Vertex v) {
  if (u >= g.num_vertices() || v >= g.num_vertices()) {
    throw ContractViolation("effective resistance: unknown vertex");
  }
  if (u == v) return 0.0;
  const auto label = connected_components(g);
  if (label[u] != label[v]) throw DisconnectedGraph("vertices lie in different components");
  std::vector<Vertex> comp;
  for (Vertex x = 0; x < g.num_vertices(); ++x) {
    if (label[x] == label[u]) comp.push_back(x);
  }
  const auto sub = induced_subgraph(g, comp);
  const auto local = [&](Vertex x) {
    return static_cast<Vertex>(std::lower_bound(comp.begin(), comp.end(), x) - comp.begin());
  };
  return GroundedInverse(sub.graph).resistance(local(u), local(v));
}

std::vector<double> exact_leverage_scores(const WeightedMultiGraph& g) {
  const GroundedInverse x(g);
  std::vector<double> tau(g.num_edges());
  for (const auto& e : g.edges()) tau[e.id] = e.weight * x.resistance(e.u, e.v);
  return tau;
}

SpanningTree make_tree(const WeightedMultiGraph& g, std::vector<EdgeId> edges) {
  std::sort(edges.begin(), edges.end());
  double acc = 0.0;
  for (EdgeId id : edges) acc += std::log(g.edge(id).weight);
  return SpanningTree{std::move(edges), LogWeight::from_log(acc)};
}

bool is_spanning_tree(const WeightedMultiGraph& g, std::span<const EdgeId> edges) {
  if (g.num_vertices() == 0 || edges.size() + 1 != g.num_vertices()) return false;
  UnionFind uf(g.num_vertices());
  for (EdgeId id : edges) {
    if (id >= g.num_edges()) return false;
    if (!uf.unite(g.edge(id).u, g.edge(id).v)) return false;
  }
  return uf.components() == 1;
}

namespace {

// Component labels are small (n <= ~10 in practice), so copying the label
// vector at each branch is cheaper than an undoable union-find.
class TreeEnumerator {
 public:
  explicit TreeEnumerator(const WeightedMultiGraph& g) : g_(g) {}

  std::vector<SpanningTree> run() {
    std::vector<Vertex> comp(g_.num_vertices());
    for (Vertex v = 0; v < comp.size(); ++v) comp[v] = v;
    recurse(0, comp, g_.num_vertices());
    return std::move(out_);
  }

 private:
  static void merge(std::vector<Vertex>& comp, Vertex a, Vertex b) {
    const Vertex from = std::max(a, b), to = std::min(a, b);
    for (auto& c : comp) {
      if (c == from) c = to;
    }
  }

  // Can the current components still be joined using edges idx..m-1?
  bool completable(std::size_t idx, const std::vector<Vertex>& comp, std::size_t parts) const {
    if (parts <= 1) return true;
    UnionFind uf(comp.size());
    std::size_t remaining = parts;
    for (std::size_t i = idx; i < g_.num_edges() && remaining > 1; ++i) {
      const auto& e = g_.edge(static_cast<EdgeId>(i));
      if (uf.unite(comp[e.u], comp[e.v])) --remaining;
    }
    return remaining == 1;
  }

  void recurse(std::size_t idx, const std::vector<Vertex>& comp, std::size_t parts) {
    if (parts == 1) {
      out_.push_back(make_tree(g_, chosen_));
      return;
    }
    if (idx == g_.num_edges() || !completable(idx, comp, parts)) return;
    const auto& e = g_.edge(static_cast<EdgeId>(idx));
    if (comp[e.u] != comp[e.v]) {
      auto next = comp;
      merge(next, comp[e.u], comp[e.v]);
      chosen_.push_back(e.id);
      recurse(idx + 1, next, parts - 1);
      chosen_.pop_back();
    }
    recurse(idx + 1, comp, parts);
  }

  const WeightedMultiGraph& g_;
  std::vector<EdgeId> chosen_;
  std::vector<SpanningTree> out_;
};

}  // namespace

std::vector<SpanningTree> enumerate_spanning_trees(const WeightedMultiGraph& g, double max_trees) {
  if (g.num_vertices() == 0) throw ContractViolation("enumerate_spanning_trees: empty graph");
  if (!is_connected(g)) return {};
  WeightedMultiGraph unit(g.num_vertices());
  for (const auto& e : g.edges()) unit.add_edge(e.u, e.v, 1.0);
  const double count = log_tree_weight(unit).linear();
  if (count > max_trees * (1.0 + 1e-9)) {
    throw ContractViolation("enumerate_spanning_trees: " + std::to_string(count) +
                            " trees exceeds the enumeration guard");
  }
  return TreeEnumerator(g).run();
}

double subset_marginal(const WeightedMultiGraph& g, std::span<const EdgeId> f) {
  std::vector<EdgeId> ids(f.begin(), f.end());
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  UnionFind uf(g.num_vertices());
  for (EdgeId id : ids) {
    if (!uf.unite(g.edge(id).u, g.edge(id).v)) return 0.0;
  }
  if (ids.empty()) return 1.0;
  const GroundedInverse x(g);
  const auto k = static_cast<Eigen::Index>(ids.size());
  Eigen::MatrixXd m(k, k);
  for (Eigen::Index i = 0; i < k; ++i) {
    const auto& a = g.edge(ids[i]);
    for (Eigen::Index j = 0; j < k; ++j) {
      const auto& b = g.edge(ids[j]);
      m(i, j) = std::sqrt(a.weight * b.weight) * x.transfer(a.u, a.v, b.u, b.v);
    }
  }
  return m.determinant();
}

}  // namespace detsparse
