#include "cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "detsparse/det_approx.hpp"
#include "detsparse/det_sparsify.hpp"
#include "detsparse/errors.hpp"
#include "detsparse/graph.hpp"
#include "detsparse/schur.hpp"
#include "detsparse/tree_sampling.hpp"
#include "detsparse/version.hpp"

namespace detsparse::cli {

namespace {

using json = nlohmann::json;
using Clock = std::chrono::steady_clock;

struct RunConfig {
  std::string input;
  std::string output;
  std::string report;
  std::string format = "json";
  std::uint64_t seed = 0;
  unsigned threads = 1;

  std::size_t samples = 0;
  double eps = 0.1;
  std::string backend = "exact";
  std::string v1;
  double delta = 0.5;
  std::optional<double> rho;
  std::size_t boost = 1;
  std::string mode = "exact";
  std::size_t count = 1;
  std::string suite = "all";
};

// Runs body(i) for i in [0, n) on up to `threads` workers. Each index writes
// only its own slot, so results do not depend on the thread count.
template <class Body>
void parallel_for(std::size_t n, unsigned threads, Body&& body) {
  const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(std::max(1u, threads), n));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < n; i += workers) body(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

json stamp(json j, const RunConfig& cfg, Clock::time_point start) {
  j["seed"] = cfg.seed;
  j["version"] = kVersion;
  j["elapsed_ms"] =
      std::chrono::duration<double, std::milli>(Clock::now() - start).count();
  return j;
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path + " for writing");
  f << text;
  if (!f) throw IoError("write to " + path + " failed");
}

void emit(const json& j, const RunConfig& cfg, std::ostream& out) {
  if (cfg.format == "text") {
    for (const auto& [key, value] : j.items()) out << key << ": " << value.dump() << '\n';
  } else {
    out << j.dump() << '\n';
  }
}

EmbeddingBackend parse_backend(const std::string& s) {
  return s == "sketch" ? EmbeddingBackend::Sketch : EmbeddingBackend::Exact;
}

std::vector<Vertex> parse_vertex_list(const std::string& s) {
  std::vector<Vertex> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    std::size_t used = 0;
    unsigned long v = 0;
    try {
      v = std::stoul(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != item.size()) throw ContractViolation("--v1: bad vertex id '" + item + "'");
    out.push_back(static_cast<Vertex>(v));
  }
  if (out.empty()) throw ContractViolation("--v1: empty vertex list");
  return out;
}

json stats_json(const SparsifyStats& s) {
  return json{{"proposals", s.proposals}, {"stage1_accepts", s.stage1_accepts}, {"accepted", s.accepted}};
}

int cmd_sparsify(const RunConfig& cfg, std::ostream& out) {
  const auto start = Clock::now();
  const auto g = read_graph_file(cfg.input);
  if (!is_connected(g)) throw DisconnectedGraph("sparsify: input graph is disconnected");
  Rng rng = make_rng(cfg.seed);
  const auto lev = LeverageOracle::build(g, cfg.eps, parse_backend(cfg.backend), rng);
  const auto sampler = GraphEdgeSampler::crude(g, lev);
  const auto result = det_sparsify(g, SampleConfig{cfg.samples, cfg.eps, kCrudeSamplerRho}, sampler, lev, rng);
  write_graph_file(cfg.output, result.graph);
  emit(stamp(json{{"command", "sparsify"},
                  {"n", g.num_vertices()},
                  {"m", g.num_edges()},
                  {"samples", cfg.samples},
                  {"eps", cfg.eps},
                  {"backend", cfg.backend},
                  {"stats", stats_json(result.stats)}},
             cfg, start),
       cfg, out);
  return kExitOk;
}

int cmd_schur_sparsify(const RunConfig& cfg, std::ostream& out) {
  const auto start = Clock::now();
  const auto g = read_graph_file(cfg.input);
  const auto v1 = parse_vertex_list(cfg.v1);
  Rng rng = make_rng(cfg.seed);
  SchurSparseOptions options;
  options.eps = cfg.eps;
  options.backend = parse_backend(cfg.backend);
  options.rho = cfg.rho;
  const auto result = schur_sparse(g, v1, cfg.delta, rng, options);
  write_graph_file(cfg.output, result.graph, true);
  std::size_t generated = 0;
  for (const auto& e : result.graph.edges()) generated += e.origin == EdgeOrigin::SchurGenerated ? 1 : 0;
  emit(stamp(json{{"command", "schur-sparsify"},
                  {"n", g.num_vertices()},
                  {"v1", result.v1},
                  {"delta", cfg.delta},
                  {"samples", result.samples},
                  {"rho", result.rho},
                  {"schur_generated", generated},
                  {"stats", stats_json(result.stats)}},
             cfg, start),
       cfg, out);
  return kExitOk;
}

json log_value_json(const LogWeight& w) {
  if (w.is_zero()) return "zero";
  return w.log();
}

json trace_json(const DetEstimate& e) {
  json levels = json::array();
  for (const auto& l : e.trace.levels) {
    levels.push_back(json{{"calls", l.calls},
                          {"exact_leaves", l.exact_leaves},
                          {"budget_sum", l.budget_sum},
                          {"vertex_sum", l.vertex_sum}});
  }
  return json{{"delta_prime", e.delta_prime},
              {"levels", levels},
              {"schur_calls", e.trace.schur_calls},
              {"disconnected_events", e.trace.disconnected_events},
              {"proposals", e.trace.proposals},
              {"samples", e.trace.samples}};
}

int cmd_det(const RunConfig& cfg, std::ostream& out) {
  const auto start = Clock::now();
  const auto g = read_graph_file(cfg.input);
  if (cfg.boost == 0) throw ContractViolation("det: --boost must be at least 1");
  if (!(cfg.delta > 0.0 && cfg.delta <= 1.0)) throw ContractViolation("det: --delta must lie in (0, 1]");
  std::vector<DetEstimate> runs(cfg.boost);
  parallel_for(cfg.boost, cfg.threads, [&](std::size_t i) {
    runs[i] = det_approx(g, cfg.delta, cfg.boost == 1 ? cfg.seed : derive_seed(cfg.seed, i));
  });
  std::vector<double> logs;
  for (const auto& r : runs) logs.push_back(r.log_value.log());
  std::sort(logs.begin(), logs.end());
  const double median = logs[(logs.size() - 1) / 2];
  json j{{"command", "det"},
         {"log_det_plus", std::isfinite(median) ? json(median) : json("zero")},
         {"delta", cfg.delta},
         {"boost", cfg.boost}};
  if (cfg.boost == 1) {
    j["trace"] = trace_json(runs.front());
  } else {
    json all = json::array();
    for (const auto& r : runs) all.push_back(json{{"log_det_plus", log_value_json(r.log_value)}, {"trace", trace_json(r)}});
    j["trace"] = json{{"runs", all}};
  }
  emit(stamp(std::move(j), cfg, start), cfg, out);
  return kExitOk;
}

std::string tree_line(const WeightedMultiGraph& g, const SpanningTree& t) {
  std::vector<std::pair<Vertex, Vertex>> pairs;
  for (EdgeId id : t.edges) {
    const auto& e = g.edge(id);
    pairs.emplace_back(std::min(e.u, e.v), std::max(e.u, e.v));
  }
  std::sort(pairs.begin(), pairs.end());
  std::string line;
  for (const auto& [u, v] : pairs) {
    if (!line.empty()) line += ' ';
    line += std::to_string(u) + '-' + std::to_string(v);
  }
  return line;
}

int cmd_sample_tree(const RunConfig& cfg, std::ostream& out) {
  const auto start = Clock::now();
  const auto g = read_graph_file(cfg.input);
  if (!is_connected(g)) throw DisconnectedGraph("sample-tree: input graph is disconnected");
  if (cfg.mode != "exact" && cfg.mode != "wilson" && cfg.mode != "approx" && cfg.mode != "oneshot") {
    throw ContractViolation("sample-tree: unknown mode " + cfg.mode);
  }
  std::vector<std::string> lines(cfg.count);
  std::vector<ApproxTreeStats> stats(cfg.count);
  std::vector<std::size_t> retries(cfg.count, 0);
  parallel_for(cfg.count, cfg.threads, [&](std::size_t i) {
    Rng rng = child_rng(cfg.seed, i);
    SpanningTree t;
    if (cfg.mode == "exact") {
      t = exact_tree(g, rng);
    } else if (cfg.mode == "wilson") {
      t = wilson_tree(g, rng);
    } else if (cfg.mode == "approx") {
      t = approx_tree(g, cfg.delta, rng, &stats[i]);
    } else {
      auto r = one_shot_tree_pipeline(g, cfg.delta, rng);
      retries[i] = r.retries;
      t = std::move(r.tree);
    }
    lines[i] = tree_line(g, t);
  });
  std::string text;
  for (const auto& l : lines) text += l + '\n';
  if (cfg.output.empty()) {
    out << text;
  } else {
    write_text_file(cfg.output, text);
  }
  json j{{"command", "sample-tree"}, {"mode", cfg.mode}, {"count", cfg.count}, {"n", g.num_vertices()}};
  if (cfg.mode == "approx" || cfg.mode == "oneshot") j["delta"] = cfg.delta;
  if (cfg.mode == "approx") {
    std::size_t calls = 0, disc = 0;
    for (const auto& s : stats) {
      calls += s.schur_calls;
      disc += s.disconnected_retries;
    }
    j["schur_calls"] = calls;
    j["disconnected_retries"] = disc;
  }
  if (cfg.mode == "oneshot") {
    std::size_t total = 0;
    for (auto r : retries) total += r;
    j["disconnected_retries"] = total;
  }
  emit(stamp(std::move(j), cfg, start), cfg, out);
  return kExitOk;
}

int cmd_validate(const RunConfig& cfg, std::ostream& out) {
  const auto start = Clock::now();
  json report = run_validation(cfg.suite, cfg.seed, cfg.threads);
  report = stamp(std::move(report), cfg, start);
  if (!cfg.report.empty()) write_text_file(cfg.report, report.dump(2) + '\n');
  if (cfg.format == "text") {
    for (const auto& t : report["tests"]) {
      out << (t["pass"].get<bool>() ? "PASS " : "FAIL ") << t["name"].get<std::string>() << '\n';
    }
  } else {
    out << report.dump() << '\n';
  }
  return report["pass"].get<bool>() ? kExitOk : kExitContract;
}

struct Cli {
  CLI::App app{"Determinant-preserving graph sparsification, determinant estimation and spanning tree sampling.",
               "detsparse"};
  RunConfig cfg;
  CLI::App* sparsify = nullptr;
  CLI::App* schur = nullptr;
  CLI::App* det = nullptr;
  CLI::App* sample = nullptr;
  CLI::App* validate = nullptr;

  Cli() {
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all", "Print help for every subcommand");
    app.set_version_flag("--version", std::string(kVersion));

    const auto common = [this](CLI::App* sub, bool needs_input) {
      auto* in = sub->add_option("--input", cfg.input, "Edge-list file: lines 'u v w', '#' starts a comment");
      if (needs_input) in->required();
      sub->add_option("--seed", cfg.seed, "64-bit seed; equal seeds give identical output")->default_val(0);
      sub->add_option("--threads", cfg.threads, "Worker threads")->default_val(1)->check(CLI::Range(1u, 1024u));
      sub->add_option("--format", cfg.format, "Summary format")->default_val("json")->check(CLI::IsMember({"json", "text"}));
    };

    sparsify = app.add_subcommand("sparsify", "Sample a determinant-preserving sparsifier of a graph");
    common(sparsify, true);
    sparsify->add_option("--samples", cfg.samples, "Number of sampled edges s (at least n)")->required();
    sparsify->add_option("--eps", cfg.eps, "Leverage oracle accuracy, in (0, 0.5)")->default_val(0.1);
    sparsify->add_option("--backend", cfg.backend, "Resistance oracle")->default_val("exact")->check(CLI::IsMember({"exact", "sketch"}));
    sparsify->add_option("--output", cfg.output, "Output edge-list file")->required();

    schur = app.add_subcommand("schur-sparsify", "Sparsify the Schur complement onto a vertex subset");
    common(schur, true);
    schur->add_option("--v1", cfg.v1, "Comma-separated vertices kept, e.g. 0,2,5")->required();
    schur->add_option("--delta", cfg.delta, "Accuracy parameter; s = ceil(|V1|^2 / delta)")->default_val(0.5);
    schur->add_option("--eps", cfg.eps, "Leverage oracle accuracy, in (0, 0.5)")->default_val(0.1);
    schur->add_option("--backend", cfg.backend, "Resistance oracle")->default_val("exact")->check(CLI::IsMember({"exact", "sketch"}));
    schur->add_option("--rho", cfg.rho, "Override the oversampling bound of the walk sampler");
    schur->add_option("--output", cfg.output, "Output edge-list file with an o/s origin column")->required();

    det = app.add_subcommand("det", "Estimate log det_+ of the Laplacian (log total tree weight)");
    common(det, true);
    det->add_option("--delta", cfg.delta, "Target accuracy, in (0, 1]")->default_val(0.5);
    det->add_option("--boost", cfg.boost, "Report the median of K independent runs")->default_val(1);

    sample = app.add_subcommand("sample-tree", "Sample spanning trees");
    common(sample, true);
    sample->add_option("--mode", cfg.mode, "Sampler")->default_val("exact")->check(CLI::IsMember({"exact", "approx", "wilson", "oneshot"}));
    sample->add_option("--delta", cfg.delta, "Accuracy for approx and oneshot, in (0, 1]")->default_val(0.1);
    sample->add_option("--count", cfg.count, "Number of trees")->default_val(1);
    sample->add_option("--output", cfg.output, "Write trees here instead of stdout");

    validate = app.add_subcommand("validate", "Run statistical validation suites");
    validate->add_option("--suite", cfg.suite, "Suite to run")->default_val("all")->check(CLI::IsMember({"moments", "tv", "conditional", "all"}));
    validate->add_option("--seed", cfg.seed, "64-bit seed; equal seeds give identical output")->default_val(0);
    validate->add_option("--threads", cfg.threads, "Worker threads")->default_val(1)->check(CLI::Range(1u, 1024u));
    validate->add_option("--format", cfg.format, "Summary format")->default_val("json")->check(CLI::IsMember({"json", "text"}));
    validate->add_option("--report", cfg.report, "Write the JSON report to this file");
  }

  int dispatch(std::ostream& out) {
    if (sparsify->parsed()) return cmd_sparsify(cfg, out);
    if (schur->parsed()) return cmd_schur_sparsify(cfg, out);
    if (det->parsed()) return cmd_det(cfg, out);
    if (sample->parsed()) return cmd_sample_tree(cfg, out);
    return cmd_validate(cfg, out);
  }
};

}  // namespace

std::string full_help() {
  Cli cli;
  return cli.app.help("", CLI::AppFormatMode::All);
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Cli cli;
  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    cli.app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    // Bare --help documents every subcommand; `<sub> --help` only that one.
    if (cli.app.get_subcommands().empty()) {
      out << full_help();
      return kExitOk;
    }
    return cli.app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    const int code = cli.app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitContract;
  }
  try {
    return cli.dispatch(out);
  } catch (const IoError& e) {
    err << "I/O error: " << e.what() << '\n';
    return kExitIo;
  } catch (const ParseError& e) {
    err << "input error: " << e.what() << '\n';
    return kExitIo;
  } catch (const ContractViolation& e) {
    err << "error: " << e.what() << '\n';
    return kExitContract;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitContract;
  }
}

}  // namespace detsparse::cli
