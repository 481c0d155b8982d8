#include <cmath>

#include "doctest.h"
#include "detsparse/errors.hpp"
#include "detsparse/harness.hpp"
#include "detsparse/resistance.hpp"

using namespace detsparse;

TEST_CASE("exact embedding answers exact resistances") {
  Rng rng = make_rng(1);
  const auto g = random_connected_graph(9, 0.4, 0.5, 2.0, rng);
  const auto emb = build_embedding(g, 0.3, rng, EmbeddingBackend::Exact);
  CHECK(emb.backend() == EmbeddingBackend::Exact);
  CHECK(emb.eps() == 0.0);
  CHECK(emb.coordinates(0).empty());
  for (Vertex u = 0; u < 9; ++u) {
    for (Vertex v = 0; v < 9; ++v) {
      CHECK(emb.query(u, v) == doctest::Approx(u == v ? 0.0 : exact_effective_resistance(g, u, v)));
    }
  }
  const auto tau = approx_leverage_scores(emb, g);
  const auto exact = exact_leverage_scores(g);
  for (EdgeId e = 0; e < g.num_edges(); ++e) {
    CHECK(tau[e] == doctest::Approx(exact[e]));
    CHECK(approx_leverage(emb, g, e) == doctest::Approx(exact[e]));
  }
}

TEST_CASE("sketch dimension follows the JL formula") {
  Rng rng = make_rng(2);
  const auto g = complete_graph(10);
  const auto emb = ResistanceEmbedding::sketch(g, 0.25, rng, 4.0);
  CHECK(emb.backend() == EmbeddingBackend::Sketch);
  CHECK(emb.dimension() ==
        static_cast<std::size_t>(std::ceil(4.0 * std::log(45.0) / (0.25 * 0.25))));
  CHECK(emb.coordinates(3).size() == emb.dimension());
  CHECK_THROWS_AS(ResistanceEmbedding::sketch(g, 0.0, rng), ContractViolation);
  CHECK_THROWS_AS(ResistanceEmbedding::sketch(g, 1.5, rng), ContractViolation);
}

// A single sketch can fail with small probability, so each property is
// required for a majority of independent seeds.
TEST_CASE("sketch resistances are eps-accurate for most seeds") {
  Rng graph_rng = make_rng(3);
  const auto g = random_connected_graph(30, 0.2, 0.5, 2.0, graph_rng);
  const auto exact = exact_leverage_scores(g);
  const double eps = 0.3;
  int good = 0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    Rng rng = make_rng(seed);
    const auto emb = ResistanceEmbedding::sketch(g, eps, rng);
    const auto tau = approx_leverage_scores(emb, g);
    bool ok = true;
    double sum = 0.0;
    for (EdgeId e = 0; e < g.num_edges(); ++e) {
      ok = ok && std::abs(tau[e] / exact[e] - 1.0) <= eps;
      sum += tau[e];
    }
    // Foster's theorem survives up to the same relative error.
    ok = ok && std::abs(sum / 29.0 - 1.0) <= eps;
    good += ok ? 1 : 0;
  }
  CHECK(good >= 3);
}

TEST_CASE("exact backend rejects disconnected graphs") {
  WeightedMultiGraph g(3);
  g.add_edge(0, 1, 1.0);
  CHECK_THROWS_AS(ResistanceEmbedding::exact(g), DisconnectedGraph);
}
