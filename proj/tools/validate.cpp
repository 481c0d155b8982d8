#include <cmath>
#include <functional>
#include <thread>

#include "cli.hpp"
#include "detsparse/det_sparsify.hpp"
#include "detsparse/errors.hpp"
#include "detsparse/harness.hpp"
#include "detsparse/tree_sampling.hpp"

namespace detsparse::cli {

namespace {

using json = nlohmann::json;

constexpr double kSigmas = 5.0;

struct Check {
  std::string name;
  std::function<json(std::uint64_t)> run;  // returns {"pass", "statistics"}
};

json moment_stats(const MomentReport& r) {
  json j{{"trials", r.trials},
         {"log_prediction", r.log_prediction},
         {"mean_ratio", r.mean_ratio},
         {"mean_ratio_se", r.mean_ratio_se},
         {"second_moment_ratio", r.second_moment_ratio},
         {"second_moment_se", r.second_moment_se},
         {"zero_trials", r.zero_trials},
         {"exact", r.exact},
         {"flagged", r.flagged}};
  if (!r.note.empty()) j["note"] = r.note;
  return j;
}

json chi_stats(const ChiSquareResult& c) {
  return json{{"statistic", c.statistic}, {"dof", c.dof}, {"critical", c.critical}, {"cells", c.cells},
              {"impossible_outcome", c.impossible_outcome}};
}

json sampler_chi_square(const WeightedMultiGraph& g, const std::function<SpanningTree(Rng&)>& sampler,
                        std::size_t draws, std::uint64_t seed) {
  const auto report = tv_estimate(sampler, g, draws, seed);
  const auto chi = chi_square_test(report.counts, report.exact);
  json stats = chi_stats(chi);
  stats["draws"] = draws;
  stats["tv"] = report.tv;
  return json{{"pass", chi.pass}, {"statistics", stats}};
}

std::vector<Check> moment_checks() {
  std::vector<Check> checks;
  checks.push_back({"subset_mean_enumerated_K5_s6", [](std::uint64_t) {
                      const auto r = uniform_subset_moment_enumeration(complete_graph(5), 6);
                      return json{{"pass", std::abs(r.mean_ratio - 1.0) <= 1e-12}, {"statistics", moment_stats(r)}};
                    }});
  checks.push_back({"subset_mean_sampled_K10_s30", [](std::uint64_t seed) {
                      const auto r = uniform_subset_moment_experiment(complete_graph(10), 30, 500, seed);
                      const bool pass = std::abs(r.mean_ratio - 1.0) <= kSigmas * r.mean_ratio_se;
                      return json{{"pass", pass}, {"statistics", moment_stats(r)}};
                    }});
  checks.push_back({"ideal_sparsify_K10", [](std::uint64_t seed) {
                      const auto g = complete_graph(10);
                      const auto tau = exact_leverage_scores(g);
                      const auto s = static_cast<std::size_t>(std::ceil(8.0 * std::pow(10.0, 1.5)));
                      const auto r = moment_experiment(300, seed, log_tree_weight(g).log(), [&](Rng& rng) {
                        return log_tree_weight(ideal_sparsify(g, tau, s, rng));
                      });
                      const double slack = kSigmas * r.mean_ratio_se;
                      const bool pass = r.mean_ratio >= 0.9 - slack && r.mean_ratio <= 1.1 + slack &&
                                        r.second_moment_ratio <= 1.1 + kSigmas * r.second_moment_se;
                      auto stats = moment_stats(r);
                      stats["samples"] = s;
                      return json{{"pass", pass}, {"statistics", stats}};
                    }});
  checks.push_back({"intersection_pairs_K6", [](std::uint64_t) {
                      const auto g = complete_graph(6);
                      const auto profile = intersection_pair_profile(g);
                      const double log_t = log_tree_weight(g).log();
                      const double n = 6.0, m = 15.0;
                      bool pass = true;
                      json ratios = json::array();
                      double log_fact = 0.0;
                      for (std::size_t k = 0; k < profile.size(); ++k) {
                        if (k > 0) log_fact += std::log(static_cast<double>(k));
                        const double bound = 2.0 * log_t + static_cast<double>(k) * std::log(n * n / m) - log_fact;
                        const double ratio = profile[k].is_zero() ? 0.0 : std::exp(profile[k].log() - bound);
                        ratios.push_back(ratio);
                        pass = pass && ratio <= 1.0 + 1e-12;
                      }
                      return json{{"pass", pass}, {"statistics", {{"profile_over_bound", ratios}}}};
                    }});
  return checks;
}

std::vector<Check> tv_checks() {
  std::vector<Check> checks;
  checks.push_back({"wilson_K4_chi_square", [](std::uint64_t seed) {
                      const auto g = complete_graph(4);
                      return sampler_chi_square(g, [&](Rng& rng) { return wilson_tree(g, rng); }, 20000, seed);
                    }});
  checks.push_back({"exact_tree_weighted_chi_square", [](std::uint64_t seed) {
                      Rng graph_rng = make_rng(derive_seed(seed, 99));
                      const auto g = random_connected_graph(5, 0.6, 0.5, 2.0, graph_rng);
                      return sampler_chi_square(g, [&](Rng& rng) { return exact_tree(g, rng); }, 20000, seed);
                    }});
  checks.push_back({"approx_tree_C6_chords_tv", [](std::uint64_t seed) {
                      const auto g = cycle6_with_chords();
                      ApproxTreeStats stats;
                      const auto r = tv_estimate([&](Rng& rng) { return approx_tree(g, 0.05, rng, &stats); }, g,
                                                 20000, seed);
                      const bool pass = r.tv <= 0.25 + 3.0 * r.mc_error;
                      return json{{"pass", pass},
                                  {"statistics",
                                   {{"tv", r.tv},
                                    {"mc_error", r.mc_error},
                                    {"support", r.support.size()},
                                    {"schur_calls", stats.schur_calls},
                                    {"disconnected_retries", stats.disconnected_retries}}}};
                    }});
  return checks;
}

std::vector<Check> conditional_checks() {
  std::vector<Check> checks;
  checks.push_back({"conditional_mean_K6", [](std::uint64_t seed) {
                      const auto g = complete_graph(6);
                      // The star at vertex 0 occupies edge ids 0..4.
                      const std::vector<EdgeId> star{0, 1, 2, 3, 4};
                      const std::size_t s = 10;
                      const auto r = conditional_moment_experiment(g, star, s, 2000, seed);
                      const double exact = std::exp(conditional_exact_log_mean(g, star, s) - r.log_prediction);
                      const bool pass = std::abs(r.mean_ratio - exact) <= kSigmas * r.mean_ratio_se;
                      auto stats = moment_stats(r);
                      stats["exact_mean_ratio"] = exact;
                      return json{{"pass", pass}, {"statistics", stats}};
                    }});
  checks.push_back({"no_intersection_mass_K7", [](std::uint64_t) {
                      const auto g = complete_graph(7);
                      const std::vector<EdgeId> path{0, 6, 11, 15, 18, 20};  // 0-1-2-3-4-5-6
                      if (!is_spanning_tree(g, path)) throw ContractViolation("validate: bad reference tree");
                      const auto profile = tree_intersection_profile(g, path);
                      const double n = 7.0, m = 21.0;
                      const double log_t = log_tree_weight(g).log();
                      const double x = 2.0 * n * n / m;
                      double series = 0.0;
                      for (int k = 1; k <= 6; ++k) series += std::pow(x, k);
                      const double mass = std::exp(profile[0].log() - log_t);
                      // The floor 1 - series is negative here, so the check is
                      // informative only through the per-k bounds below.
                      bool pass = mass >= 1.0 - series;
                      json ratios = json::array();
                      double binom = 1.0;
                      for (std::size_t k = 1; k < profile.size(); ++k) {
                        binom = binom * (n - static_cast<double>(k)) / static_cast<double>(k);
                        const double bound = log_t + std::log(binom) + static_cast<double>(k) * std::log(2.0 * n / m);
                        const double ratio = profile[k].is_zero() ? 0.0 : std::exp(profile[k].log() - bound);
                        ratios.push_back(ratio);
                        pass = pass && ratio <= 1.0 + 1e-12;
                      }
                      return json{{"pass", pass},
                                  {"statistics",
                                   {{"disjoint_mass_fraction", mass}, {"floor", 1.0 - series}, {"profile_over_bound", ratios}}}};
                    }});
  return checks;
}

}  // namespace

json run_validation(const std::string& suite, std::uint64_t seed, unsigned threads) {
  std::vector<Check> checks;
  const auto append = [&](std::vector<Check> more) {
    for (auto& c : more) checks.push_back(std::move(c));
  };
  if (suite == "moments" || suite == "all") append(moment_checks());
  if (suite == "tv" || suite == "all") append(tv_checks());
  if (suite == "conditional" || suite == "all") append(conditional_checks());
  if (checks.empty()) throw ContractViolation("validate: unknown suite " + suite);

  std::vector<json> results(checks.size());
  std::vector<std::exception_ptr> errors(checks.size());
  const auto work = [&](std::size_t i) {
    try {
      const std::uint64_t test_seed = derive_seed(seed, i);
      json r = checks[i].run(test_seed);
      r["name"] = checks[i].name;
      r["seed"] = test_seed;
      results[i] = std::move(r);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  };
  const unsigned workers = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(checks.size())));
  std::vector<std::thread> pool;
  for (unsigned w = 1; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (std::size_t i = w; i < checks.size(); i += workers) work(i);
    });
  }
  for (std::size_t i = 0; i < checks.size(); i += workers) work(i);
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  bool all = true;
  for (const auto& r : results) all = all && r["pass"].get<bool>();
  return json{{"suite", suite}, {"tests", results}, {"pass", all}};
}

}  // namespace detsparse::cli
