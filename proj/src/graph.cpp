#include "detsparse/graph.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <utility>

#include "detsparse/errors.hpp"
#include "detsparse/union_find.hpp"

namespace detsparse {

WeightedMultiGraph::WeightedMultiGraph(std::size_t num_vertices)
    : adjacency_(num_vertices), degree_(num_vertices, 0.0) {}

EdgeId WeightedMultiGraph::add_edge(Vertex u, Vertex v, double weight, EdgeOrigin origin,
                                    std::optional<EdgeId> parent) {
  if (u >= num_vertices() || v >= num_vertices()) {
    throw ContractViolation("add_edge: vertex out of range");
  }
  if (u == v) throw ContractViolation("add_edge: self-loop");
  if (!(weight > 0.0) || !std::isfinite(weight)) {
    throw ContractViolation("add_edge: weight must be positive and finite");
  }
  const auto id = static_cast<EdgeId>(edges_.size());
  edges_.push_back(EdgeRecord{id, u, v, weight, origin, parent});
  adjacency_[u].push_back(id);
  adjacency_[v].push_back(id);
  degree_[u] += weight;
  degree_[v] += weight;
  return id;
}

const EdgeRecord& WeightedMultiGraph::edge(EdgeId id) const {
  if (id >= edges_.size()) throw ContractViolation("unknown edge id " + std::to_string(id));
  return edges_[id];
}

VertexPartition VertexPartition::from_v1(std::size_t n, std::span<const Vertex> v1) {
  std::vector<char> in_v1(n, 0);
  for (Vertex v : v1) {
    if (v >= n) throw ContractViolation("partition: unknown vertex " + std::to_string(v));
    if (in_v1[v]) throw ContractViolation("partition: duplicate vertex " + std::to_string(v));
    in_v1[v] = 1;
  }
  VertexPartition p;
  for (Vertex v = 0; v < n; ++v) (in_v1[v] ? p.v1 : p.v2).push_back(v);
  if (p.v1.empty() || p.v2.empty()) throw ContractViolation("partition: both sides must be nonempty");
  return p;
}

namespace {

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    std::size_t j = i;
    while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

template <class T>
bool parse_number(std::string_view token, T& out) {
  const char* first = token.data();
  const char* last = first + token.size();
  if (first != last && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc{} && ptr == last;
}

struct ParsedEdge {
  std::uint64_t u, v;
  double w;
  EdgeOrigin origin;
};

}  // namespace

WeightedMultiGraph load_graph(std::string_view text) {
  std::vector<ParsedEdge> parsed;
  std::uint64_t max_vertex = 0;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t end = std::min(text.find('\n', pos), text.size());
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    const auto tokens = split_ws(line);
    if (tokens.empty()) {
      if (end == text.size()) break;
      continue;
    }
    if (tokens.size() != 3 && tokens.size() != 4) {
      throw ParseError(line_no, "expected \"u v w\", got " + std::to_string(tokens.size()) + " fields");
    }
    ParsedEdge e{};
    if (!parse_number(tokens[0], e.u) || !parse_number(tokens[1], e.v)) {
      throw ParseError(line_no, "vertex ids must be nonnegative integers");
    }
    if (!parse_number(tokens[2], e.w) || !std::isfinite(e.w)) {
      throw ParseError(line_no, "malformed weight '" + std::string(tokens[2]) + "'");
    }
    if (!(e.w > 0.0)) throw ParseError(line_no, "non-positive weight");
    if (e.u == e.v) throw ParseError(line_no, "self-loop");
    if (e.u > 0xfffffffeULL || e.v > 0xfffffffeULL) throw ParseError(line_no, "vertex id too large");
    e.origin = EdgeOrigin::Original;
    if (tokens.size() == 4) {
      if (tokens[3] == "o") {
        e.origin = EdgeOrigin::Original;
      } else if (tokens[3] == "s") {
        e.origin = EdgeOrigin::SchurGenerated;
      } else {
        throw ParseError(line_no, "origin tag must be 'o' or 's'");
      }
    }
    max_vertex = std::max({max_vertex, e.u, e.v});
    parsed.push_back(e);
    if (end == text.size()) break;
  }
  if (parsed.empty()) throw ParseError(line_no, "empty graph");

  WeightedMultiGraph g(static_cast<std::size_t>(max_vertex) + 1);
  g.reserve_edges(parsed.size());
  for (const auto& e : parsed) {
    g.add_edge(static_cast<Vertex>(e.u), static_cast<Vertex>(e.v), e.w, e.origin);
  }
  return g;
}

WeightedMultiGraph read_graph_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return load_graph(buf.str());
}

std::string save_graph(const WeightedMultiGraph& g, bool with_origin) {
  std::vector<EdgeId> order(g.num_edges());
  for (EdgeId i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](EdgeId a, EdgeId b) {
    const auto& ea = g.edge(a);
    const auto& eb = g.edge(b);
    const auto ka = std::tuple(std::min(ea.u, ea.v), std::max(ea.u, ea.v), a);
    const auto kb = std::tuple(std::min(eb.u, eb.v), std::max(eb.u, eb.v), b);
    return ka < kb;
  });

  std::string out;
  out.reserve(order.size() * 32);
  char buf[64];
  for (EdgeId id : order) {
    const auto& e = g.edge(id);
    out += std::to_string(std::min(e.u, e.v));
    out += ' ';
    out += std::to_string(std::max(e.u, e.v));
    out += ' ';
    auto res = std::to_chars(buf, buf + sizeof(buf), e.weight, std::chars_format::general, 17);
    out.append(buf, res.ptr);
    if (with_origin) out += e.origin == EdgeOrigin::Original ? " o" : " s";
    out += '\n';
  }
  return out;
}

void write_graph_file(const std::filesystem::path& path, const WeightedMultiGraph& g,
                      bool with_origin) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << save_graph(g, with_origin);
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

namespace {

std::vector<char> edge_mask(const WeightedMultiGraph& g, std::span<const EdgeId> edges) {
  std::vector<char> mask(g.num_edges(), 0);
  for (EdgeId id : edges) {
    if (id >= g.num_edges()) throw ContractViolation("unknown edge id " + std::to_string(id));
    mask[id] = 1;
  }
  return mask;
}

}  // namespace

ContractionResult contract_edges(const WeightedMultiGraph& g, std::span<const EdgeId> edges) {
  const auto mask = edge_mask(g, edges);
  UnionFind uf(g.num_vertices());
  for (EdgeId id = 0; id < g.num_edges(); ++id) {
    if (mask[id]) uf.unite(g.edge(id).u, g.edge(id).v);
  }
  ContractionResult result;
  result.vertex_map.assign(g.num_vertices(), 0);
  std::vector<Vertex> root_label(g.num_vertices(), static_cast<Vertex>(-1));
  Vertex next = 0;
  for (Vertex v = 0; v < g.num_vertices(); ++v) {
    const auto r = uf.find(v);
    if (root_label[r] == static_cast<Vertex>(-1)) root_label[r] = next++;
    result.vertex_map[v] = root_label[r];
  }
  result.graph = WeightedMultiGraph(next);
  for (const auto& e : g.edges()) {
    const Vertex a = result.vertex_map[e.u];
    const Vertex b = result.vertex_map[e.v];
    if (a == b) continue;
    result.graph.add_edge(a, b, e.weight, e.origin, e.id);
  }
  return result;
}

WeightedMultiGraph delete_edges(const WeightedMultiGraph& g, std::span<const EdgeId> edges) {
  const auto mask = edge_mask(g, edges);
  WeightedMultiGraph out(g.num_vertices());
  for (const auto& e : g.edges()) {
    if (!mask[e.id]) out.add_edge(e.u, e.v, e.weight, e.origin, e.id);
  }
  return out;
}

InducedSubgraph induced_subgraph(const WeightedMultiGraph& g, std::span<const Vertex> vertices) {
  if (vertices.empty()) throw ContractViolation("induced_subgraph: empty vertex set");
  InducedSubgraph result;
  result.vertices.assign(vertices.begin(), vertices.end());
  std::sort(result.vertices.begin(), result.vertices.end());
  result.vertices.erase(std::unique(result.vertices.begin(), result.vertices.end()),
                        result.vertices.end());
  constexpr auto kAbsent = static_cast<Vertex>(-1);
  std::vector<Vertex> local(g.num_vertices(), kAbsent);
  for (Vertex i = 0; i < result.vertices.size(); ++i) {
    const Vertex v = result.vertices[i];
    if (v >= g.num_vertices()) throw ContractViolation("induced_subgraph: unknown vertex " + std::to_string(v));
    local[v] = i;
  }
  result.graph = WeightedMultiGraph(result.vertices.size());
  for (const auto& e : g.edges()) {
    if (local[e.u] != kAbsent && local[e.v] != kAbsent) {
      result.graph.add_edge(local[e.u], local[e.v], e.weight, e.origin, e.id);
    }
  }
  return result;
}

MergeResult merge_parallel(const WeightedMultiGraph& g) {
  std::map<std::pair<Vertex, Vertex>, std::size_t> slot;
  std::vector<std::pair<Vertex, Vertex>> ends;
  std::vector<double> weight;
  MergeResult result;
  for (const auto& e : g.edges()) {
    const auto key = std::minmax(e.u, e.v);
    auto [it, inserted] = slot.try_emplace({key.first, key.second}, ends.size());
    if (inserted) {
      ends.emplace_back(key.first, key.second);
      weight.push_back(0.0);
      result.members.emplace_back();
    }
    weight[it->second] += e.weight;
    result.members[it->second].push_back(e.id);
  }
  result.graph = WeightedMultiGraph(g.num_vertices());
  for (std::size_t i = 0; i < ends.size(); ++i) {
    std::optional<EdgeId> parent;
    if (result.members[i].size() == 1) parent = result.members[i].front();
    result.graph.add_edge(ends[i].first, ends[i].second, weight[i], EdgeOrigin::Original, parent);
  }
  return result;
}

std::vector<std::size_t> connected_components(const WeightedMultiGraph& g) {
  UnionFind uf(g.num_vertices());
  for (const auto& e : g.edges()) uf.unite(e.u, e.v);
  std::vector<std::size_t> label(g.num_vertices());
  std::vector<std::size_t> root_label(g.num_vertices(), static_cast<std::size_t>(-1));
  std::size_t next = 0;
  for (Vertex v = 0; v < g.num_vertices(); ++v) {
    const auto r = uf.find(v);
    if (root_label[r] == static_cast<std::size_t>(-1)) root_label[r] = next++;
    label[v] = root_label[r];
  }
  return label;
}

bool is_connected(const WeightedMultiGraph& g) {
  if (g.num_vertices() <= 1) return true;
  UnionFind uf(g.num_vertices());
  for (const auto& e : g.edges()) uf.unite(e.u, e.v);
  return uf.components() == 1;
}

}  // namespace detsparse
