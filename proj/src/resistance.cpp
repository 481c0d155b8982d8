#include "detsparse/resistance.hpp"

#include <cmath>

#include "detsparse/errors.hpp"

namespace detsparse {

ResistanceEmbedding ResistanceEmbedding::exact(const WeightedMultiGraph& g) {
  ResistanceEmbedding emb;
  emb.backend_ = EmbeddingBackend::Exact;
  emb.n_ = g.num_vertices();
  emb.exact_ = std::make_shared<const GroundedInverse>(g);
  return emb;
}

ResistanceEmbedding ResistanceEmbedding::sketch(const WeightedMultiGraph& g, double eps, Rng& rng,
                                                double c_jl) {
  if (!(eps > 0.0 && eps <= 1.0)) throw ContractViolation("sketch: eps must lie in (0, 1]");
  if (!is_connected(g)) throw DisconnectedGraph("sketch: graph is disconnected");
  const auto n = static_cast<Eigen::Index>(g.num_vertices());
  const double m = static_cast<double>(std::max<std::size_t>(g.num_edges(), 2));
  const auto d = static_cast<Eigen::Index>(std::ceil(c_jl * std::log(m) / (eps * eps)));

  ResistanceEmbedding emb;
  emb.backend_ = EmbeddingBackend::Sketch;
  emb.eps_ = eps;
  emb.n_ = g.num_vertices();
  emb.dim_ = static_cast<std::size_t>(d);

  // Y = Q W^{1/2} B, stored transposed (n x d). Every column sums to zero, so
  // solving on the grounded system reproduces L^+ up to a constant shift.
  Eigen::MatrixXd yt = Eigen::MatrixXd::Zero(n, d);
  const double scale = 1.0 / std::sqrt(static_cast<double>(d));
  std::bernoulli_distribution coin(0.5);
  for (const auto& e : g.edges()) {
    const double sw = std::sqrt(e.weight) * scale;
    for (Eigen::Index r = 0; r < d; ++r) {
      const double q = coin(rng) ? sw : -sw;
      yt(e.u, r) += q;
      yt(e.v, r) -= q;
    }
  }
  Eigen::MatrixXd zt = Eigen::MatrixXd::Zero(n, d);
  if (n > 1) {
    const auto l = laplacian(g);
    Eigen::LLT<Eigen::MatrixXd> llt(l.matrix().topLeftCorner(n - 1, n - 1));
    zt.topRows(n - 1) = llt.solve(yt.topRows(n - 1));
  }
  emb.z_.resize(static_cast<std::size_t>(n * d));
  for (Eigen::Index u = 0; u < n; ++u) {
    for (Eigen::Index r = 0; r < d; ++r) emb.z_[static_cast<std::size_t>(u * d + r)] = zt(u, r);
  }
  return emb;
}

std::span<const double> ResistanceEmbedding::coordinates(Vertex u) const {
  if (backend_ == EmbeddingBackend::Exact) return {};
  return {z_.data() + static_cast<std::size_t>(u) * dim_, dim_};
}

ResistanceEmbedding build_embedding(const WeightedMultiGraph& g, double eps, Rng& rng,
                                    EmbeddingBackend backend, double c_jl) {
  if (backend == EmbeddingBackend::Exact) return ResistanceEmbedding::exact(g);
  return ResistanceEmbedding::sketch(g, eps, rng, c_jl);
}

double approx_leverage(const ResistanceEmbedding& emb, const WeightedMultiGraph& g, EdgeId e) {
  const auto& rec = g.edge(e);
  return rec.weight * emb.query(rec.u, rec.v);
}

std::vector<double> approx_leverage_scores(const ResistanceEmbedding& emb,
                                           const WeightedMultiGraph& g) {
  std::vector<double> tau(g.num_edges());
  for (const auto& e : g.edges()) tau[e.id] = e.weight * emb.query(e.u, e.v);
  return tau;
}

}  // namespace detsparse
