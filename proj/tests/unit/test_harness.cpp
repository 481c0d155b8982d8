#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>

#include "doctest.h"
#include "detsparse/errors.hpp"
#include "detsparse/harness.hpp"
#include "support/reference.hpp"

using namespace detsparse;

TEST_CASE("generators") {
  CHECK(complete_graph(6).num_edges() == 15);
  CHECK(path_graph(6).num_edges() == 5);
  CHECK(cycle_graph(6).num_edges() == 6);
  CHECK(star_graph(4).num_vertices() == 5);
  CHECK(wheel_graph(6).num_edges() == 10);
  const auto c = cycle6_with_chords();
  CHECK(c.num_edges() == 8);
  CHECK(c.edge(6).u == 0);
  CHECK(c.edge(6).v == 3);
  Rng rng = make_rng(1);
  for (int i = 0; i < 10; ++i) {
    CHECK(is_connected(gnp_graph(12, 0.2, rng)));
    const auto g = random_connected_graph(12, 0.1, 0.5, 2.0, rng);
    CHECK(is_connected(g));
    for (const auto& e : g.edges()) CHECK((e.weight >= 0.5 && e.weight <= 2.0));
  }
}

TEST_CASE("moments computed in the log domain match direct arithmetic") {
  const std::vector<double> x{0.5, 1.2, 0.9, 1.7, 0.3, 1.1};
  std::vector<double> logs;
  for (double v : x) logs.push_back(std::log(v) + 700.0);
  const auto r = summarize_moments(logs, 700.0);
  const double mean = std::accumulate(x.begin(), x.end(), 0.0) / 6.0;
  double sq = 0.0;
  for (double v : x) sq += v * v;
  CHECK(r.mean_ratio == doctest::Approx(mean).epsilon(1e-9));
  CHECK(r.second_moment_ratio == doctest::Approx(sq / 6.0 / (mean * mean)).epsilon(1e-9));
  CHECK(r.mean_ratio_se > 0.0);
  CHECK(r.second_moment_se > 0.0);

  std::vector<double> with_zero = logs;
  with_zero.push_back(-std::numeric_limits<double>::infinity());
  const auto z = summarize_moments(with_zero, 700.0);
  CHECK(z.zero_trials == 1);
  CHECK(z.mean_ratio == doctest::Approx(mean * 6.0 / 7.0).epsilon(1e-9));
}

TEST_CASE("moment_experiment seeds trials independently of order") {
  const auto a = moment_experiment(5, 9, 0.0, [](Rng& rng) { return LogWeight::from_linear(uniform01(rng) + 0.5); });
  const auto b = moment_experiment(5, 9, 0.0, [](Rng& rng) { return LogWeight::from_linear(uniform01(rng) + 0.5); });
  CHECK(a.mean_ratio == b.mean_ratio);
  CHECK(a.trials == 5);
  CHECK(a.seed == 9);
}

TEST_CASE("log_falling_ratio") {
  CHECK(log_falling_ratio(6, 10, 4) == doctest::Approx(std::log(6.0 * 5 * 4 * 3 / (10.0 * 9 * 8 * 7))));
  CHECK(log_falling_ratio(10, 10, 4) == 0.0);
  CHECK(std::isinf(log_falling_ratio(3, 10, 4)));
  CHECK_THROWS_AS(log_falling_ratio(3, 3, 4), ContractViolation);
}

TEST_CASE("subset enumeration matches an independent computation") {
  const auto g = complete_graph(5);
  const std::size_t s = 6;
  const auto r = uniform_subset_moment_enumeration(g, s);
  CHECK(r.exact);
  CHECK(r.trials == 210);

  // Brute force over all 6-subsets of the 10 edges with reference determinants.
  long double sum = 0.0L, sum_sq = 0.0L;
  std::size_t count = 0;
  for (unsigned mask = 0; mask < (1u << 10); ++mask) {
    if (std::popcount(mask) != 6) continue;
    WeightedMultiGraph h(5);
    for (EdgeId e = 0; e < 10; ++e) {
      if (mask >> e & 1u) h.add_edge(g.edge(e).u, g.edge(e).v, 1.0);
    }
    const long double t = ref::tree_weight_by_det(h);
    sum += t;
    sum_sq += t * t;
    ++count;
  }
  const long double mean = sum / count;
  const long double prediction = 125.0L * (6.0L * 5 * 4 * 3) / (10.0L * 9 * 8 * 7);
  CHECK(r.mean_ratio == doctest::Approx(static_cast<double>(mean / prediction)).epsilon(1e-12));
  CHECK(r.second_moment_ratio ==
        doctest::Approx(static_cast<double>(sum_sq / count / (mean * mean))).epsilon(1e-12));
  // The expectation identity is exact.
  CHECK(r.mean_ratio == doctest::Approx(1.0).epsilon(1e-12));
  CHECK_THROWS_AS(uniform_subset_moment_enumeration(complete_graph(9), 18), ContractViolation);
}

TEST_CASE("sampled subsets agree with the enumeration") {
  const auto g = complete_graph(5);
  const auto r = uniform_subset_moment_experiment(g, 6, 20000, 4);
  CHECK_FALSE(r.exact);
  CHECK(std::abs(r.mean_ratio - 1.0) <= 4.0 * r.mean_ratio_se);
}

TEST_CASE("conditional expectations") {
  const auto g = complete_graph(5);
  const std::vector<EdgeId> star{0, 1, 2, 3};  // edges at vertex 0
  const double log_t = log_tree_weight(g).log();
  CHECK(conditional_exact_log_mean(g, star, 10) == doctest::Approx(log_t));

  // Independent: sum over trees of Pr[the edges outside the star survive].
  const std::size_t s = 7;
  long double expect = 0.0L;
  for (const auto& t : ref::trees_by_subsets(g)) {
    std::size_t extra = 0;
    for (EdgeId e : t.edges) extra += std::find(star.begin(), star.end(), e) == star.end() ? 1 : 0;
    long double p = 1.0L;
    for (std::size_t i = 0; i < extra; ++i) p *= static_cast<long double>(s - 4 - i) / (6 - i);
    expect += t.weight * p;
  }
  CHECK(conditional_exact_log_mean(g, star, s) == doctest::Approx(std::log(static_cast<double>(expect))));

  const auto full = conditional_moment_experiment(g, star, 10, 20, 3);
  CHECK(full.mean_ratio == doctest::Approx(1.0));
  CHECK(full.second_moment_ratio == doctest::Approx(1.0));
  CHECK(full.flagged);  // 10 < 4 n^2
  const auto clamped = conditional_moment_experiment(g, star, 50, 5, 3);
  CHECK_FALSE(clamped.note.empty());
  CHECK(clamped.mean_ratio == doctest::Approx(1.0));
}

TEST_CASE("chi-square machinery") {
  CHECK(chi_square_quantile(10.0, 0.999) == doctest::Approx(29.588).epsilon(0.01));
  CHECK(chi_square_quantile(1.0, 0.95) == doctest::Approx(3.841).epsilon(0.03));

  const std::vector<double> p{0.25, 0.25, 0.25, 0.25};
  const std::vector<std::uint64_t> fair{250, 251, 249, 250};
  const auto ok = chi_square_test(fair, p);
  CHECK(ok.pass);
  CHECK(ok.dof == 3.0);
  const std::vector<std::uint64_t> skew{400, 200, 200, 200};
  CHECK_FALSE(chi_square_test(skew, p).pass);

  // Small cells are pooled together.
  const std::vector<double> tail{0.5, 0.49, 0.004, 0.003, 0.003};
  const std::vector<std::uint64_t> tail_counts{500, 490, 4, 3, 3};
  const auto pooled = chi_square_test(tail_counts, tail);
  CHECK(pooled.pass);
  CHECK(pooled.cells == 3);

  const std::vector<double> zero{0.5, 0.5, 0.0};
  const std::vector<std::uint64_t> bad{50, 49, 1};
  const auto imp = chi_square_test(bad, zero);
  CHECK(imp.impossible_outcome);
  CHECK_FALSE(imp.pass);
}

TEST_CASE("total variation estimates") {
  const auto g = complete_graph(3);
  const auto constant = tv_estimate([&](Rng&) { return make_tree(g, {0, 1}); }, g, 100, 1);
  CHECK(constant.support.size() == 3);
  CHECK(constant.tv == doctest::Approx(2.0 / 3.0));
  CHECK(constant.mc_error == doctest::Approx(std::sqrt(3.0 / 100.0)));
  const auto not_tree = [&](Rng&) { return make_tree(g, {0}); };
  CHECK_THROWS_AS(tv_estimate(not_tree, g, 10, 1), ContractViolation);
}

TEST_CASE("intersection profiles sum to the right totals") {
  Rng rng = make_rng(12);
  const auto g = random_connected_graph(5, 0.6, 0.5, 2.0, rng);
  const auto trees = ref::trees_by_subsets(g);
  long double total = 0.0L, squares = 0.0L;
  for (const auto& t : trees) {
    total += t.weight;
    squares += t.weight * t.weight;
  }
  const auto pair = intersection_pair_profile(g);
  REQUIRE(pair.size() == 5);
  long double pair_sum = 0.0L;
  for (const auto& x : pair) pair_sum += x.is_zero() ? 0.0L : std::exp(static_cast<long double>(x.log()));
  CHECK(static_cast<double>(pair_sum) == doctest::Approx(static_cast<double>(total * total)).epsilon(1e-10));
  CHECK(pair[4].linear() == doctest::Approx(static_cast<double>(squares)).epsilon(1e-10));

  const std::vector<EdgeId> t_hat = trees.front().edges;
  const auto prof = tree_intersection_profile(g, t_hat);
  long double prof_sum = 0.0L;
  for (const auto& x : prof) prof_sum += x.is_zero() ? 0.0L : std::exp(static_cast<long double>(x.log()));
  CHECK(static_cast<double>(prof_sum) == doctest::Approx(static_cast<double>(total)).epsilon(1e-10));
  CHECK(prof[4].linear() == doctest::Approx(static_cast<double>(trees.front().weight)).epsilon(1e-10));
}
