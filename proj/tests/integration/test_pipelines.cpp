// End-to-end runs of the command-line tool, checked against the library's
// exact oracles.

#include <sys/wait.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <sstream>

#include "doctest.h"
#include "json.hpp"
#include "detsparse/exact_oracles.hpp"
#include "detsparse/harness.hpp"

namespace fs = std::filesystem;
using namespace detsparse;
using nlohmann::json;

namespace {

struct Workspace {
  fs::path dir;
  Workspace() {
    dir = fs::temp_directory_path() / ("detsparse_it_" + std::to_string(std::random_device{}()));
    fs::create_directories(dir);
  }
  ~Workspace() { fs::remove_all(dir); }
  std::string path(const std::string& name) const { return (dir / name).string(); }
};

std::string slurp(const std::string& p) {
  std::ifstream f(p);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

// Runs the tool with stdout captured to `out`; returns the exit status.
int tool(const std::string& args, const std::string& out) {
  const std::string cmd = std::string("\"") + DETSPARSE_CLI_PATH + "\" " + args + " > \"" + out + "\" 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

json last_json_line(const std::string& text) {
  std::istringstream in(text);
  std::string line, last;
  while (std::getline(in, line)) {
    if (!line.empty() && line.front() == '{') last = line;
  }
  return json::parse(last);
}

}  // namespace

TEST_CASE("sparsify then det: the sparsifier keeps the tree weight") {
  Workspace ws;
  const auto g = complete_graph(10);
  write_graph_file(ws.path("g.txt"), g);
  const double truth = log_tree_weight(g).log();
  std::vector<double> gaps;
  for (int seed = 1; seed <= 5; ++seed) {
    const std::string h = ws.path("h" + std::to_string(seed) + ".txt");
    REQUIRE(tool("sparsify --input " + ws.path("g.txt") + " --samples 4000 --seed " + std::to_string(seed) +
                     " --output " + h,
                 ws.path("out.txt")) == 0);
    const auto sparse = read_graph_file(h);
    CHECK(sparse.num_edges() == 4000);
    REQUIRE(tool("det --input " + h + " --delta 0.5 --seed 1", ws.path("det.txt")) == 0);
    const auto j = last_json_line(slurp(ws.path("det.txt")));
    // Graphs this small are solved exactly by det.
    CHECK(j["log_det_plus"].get<double>() == doctest::Approx(log_tree_weight(sparse).log()).epsilon(1e-9));
    gaps.push_back(j["log_det_plus"].get<double>() - truth);
  }
  std::sort(gaps.begin(), gaps.end());
  CHECK(std::abs(gaps[2]) <= 0.25);
}

TEST_CASE("schur-sparsify output is a sparsifier of the Schur complement") {
  Workspace ws;
  const auto g = wheel_graph(6);
  write_graph_file(ws.path("w6.txt"), g);
  const std::vector<Vertex> v1{0, 2, 4, 5};
  const double truth = log_tree_weight(graph_from_laplacian(exact_schur(g, v1))).log();
  std::vector<double> logs;
  for (int seed = 0; seed < 200; ++seed) {
    REQUIRE(tool("schur-sparsify --input " + ws.path("w6.txt") + " --v1 0,2,4,5 --delta 0.25 --seed " +
                     std::to_string(seed) + " --output " + ws.path("h.txt"),
                 ws.path("out.txt")) == 0);
    const auto h = read_graph_file(ws.path("h.txt"));
    CHECK(h.num_vertices() <= 4);
    logs.push_back(h.num_vertices() == 4 ? log_tree_weight(h).log() : -INFINITY);
  }
  const auto r = summarize_moments(logs, truth);
  CHECK(r.mean_ratio >= std::exp(-0.25) - 5.0 * r.mean_ratio_se);
  CHECK(r.mean_ratio <= std::exp(0.25) + 5.0 * r.mean_ratio_se);
}

TEST_CASE("sample-tree output is w-uniform") {
  Workspace ws;
  WeightedMultiGraph g(4);
  g.add_edge(0, 1, 1.0);
  g.add_edge(1, 2, 2.0);
  g.add_edge(2, 3, 1.0);
  g.add_edge(3, 0, 3.0);
  g.add_edge(0, 2, 1.5);
  write_graph_file(ws.path("g.txt"), g);
  const auto trees = enumerate_spanning_trees(g);
  const double log_t = log_tree_weight(g).log();
  std::map<std::string, std::size_t> index;
  std::vector<double> p;
  for (std::size_t i = 0; i < trees.size(); ++i) {
    std::vector<std::pair<Vertex, Vertex>> pairs;
    for (EdgeId id : trees[i].edges) pairs.emplace_back(std::min(g.edge(id).u, g.edge(id).v), std::max(g.edge(id).u, g.edge(id).v));
    std::sort(pairs.begin(), pairs.end());
    std::string key;
    for (const auto& [u, v] : pairs) key += (key.empty() ? "" : " ") + std::to_string(u) + "-" + std::to_string(v);
    index[key] = i;
    p.push_back(std::exp(trees[i].log_weight.log() - log_t));
  }
  for (const std::string mode : {"exact", "wilson", "approx"}) {
    const std::string out = ws.path(mode + ".txt");
    REQUIRE(tool("sample-tree --input " + ws.path("g.txt") + " --mode " + mode +
                     " --count 20000 --seed 11 --threads 4 --output " + out,
                 ws.path("summary.txt")) == 0);
    std::ifstream in(out);
    std::string line;
    std::vector<std::uint64_t> counts(trees.size(), 0);
    std::size_t total = 0;
    while (std::getline(in, line)) {
      const auto it = index.find(line);
      REQUIRE_MESSAGE(it != index.end(), line);
      ++counts[it->second];
      ++total;
    }
    CHECK(total == 20000);
    const auto chi = chi_square_test(counts, p);
    if (mode == "approx") {
      CHECK(last_json_line(slurp(ws.path("summary.txt")))["schur_calls"].get<int>() > 0);
    } else {
      CHECK_MESSAGE(chi.pass, mode);
    }
  }
}

TEST_CASE("det with boosting on a larger graph") {
  Workspace ws;
  Rng rng = make_rng(4);
  const auto g = random_connected_graph(30, 0.2, 0.5, 2.0, rng);
  write_graph_file(ws.path("g.txt"), g);
  REQUIRE(tool("det --input " + ws.path("g.txt") + " --delta 0.5 --boost 3 --threads 3 --seed 9 --format json",
               ws.path("det.txt")) == 0);
  const auto j = last_json_line(slurp(ws.path("det.txt")));
  CHECK(std::abs(j["log_det_plus"].get<double>() - log_tree_weight(g).log()) <= 0.5);
  CHECK(j["trace"]["runs"].size() == 3);
}

TEST_CASE("validate suite through the binary") {
  Workspace ws;
  REQUIRE(tool("validate --suite moments --seed 1 --threads 4 --report " + ws.path("r.json"), ws.path("out.txt")) == 0);
  const auto j = json::parse(slurp(ws.path("r.json")));
  CHECK(j["pass"] == true);
  CHECK(j["tests"].size() == 4);
}

TEST_CASE("errors reach the exit status") {
  Workspace ws;
  CHECK(tool("det --input " + ws.path("nope.txt"), ws.path("out.txt")) == 2);
  CHECK(slurp(ws.path("out.txt")).find("nope.txt") != std::string::npos);
  CHECK(tool("det --input " + ws.path("nope.txt") + " --delta abc", ws.path("out.txt")) == 1);
}
