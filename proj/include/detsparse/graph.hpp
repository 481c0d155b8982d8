#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace detsparse {

using Vertex = std::uint32_t;
using EdgeId = std::uint32_t;

/// Whether a sampled multi-edge is a rescaled copy of an input edge or was
/// generated by eliminating vertices (a walk of length >= 2).
enum class EdgeOrigin : std::uint8_t { Original, SchurGenerated };

struct EdgeRecord {
  EdgeId id = 0;
  Vertex u = 0;
  Vertex v = 0;
  double weight = 0.0;
  EdgeOrigin origin = EdgeOrigin::Original;
  /// Edge id in the graph this one was derived from, if any.
  std::optional<EdgeId> parent;

  Vertex other(Vertex x) const noexcept { return x == u ? v : u; }
};

/// Undirected multigraph with strictly positive finite weights and no
/// self-loops. Edge ids are dense (0..m-1) and stable for the lifetime of a
/// value; operations that change structure return new graphs whose edges
/// carry `parent` links back to the source ids.
class WeightedMultiGraph {
 public:
  WeightedMultiGraph() = default;
  explicit WeightedMultiGraph(std::size_t num_vertices);

  /// Throws ContractViolation on a self-loop, unknown vertex, or weight that
  /// is not positive and finite.
  EdgeId add_edge(Vertex u, Vertex v, double weight,
                  EdgeOrigin origin = EdgeOrigin::Original,
                  std::optional<EdgeId> parent = std::nullopt);

  std::size_t num_vertices() const noexcept { return adjacency_.size(); }
  std::size_t num_edges() const noexcept { return edges_.size(); }

  const EdgeRecord& edge(EdgeId id) const;
  std::span<const EdgeRecord> edges() const noexcept { return edges_; }
  std::span<const EdgeId> incident(Vertex v) const { return adjacency_.at(v); }
  /// Weighted degree: sum of incident edge weights.
  double degree(Vertex v) const { return degree_.at(v); }

  void reserve_edges(std::size_t m) { edges_.reserve(m); }

 private:
  std::vector<EdgeRecord> edges_;
  std::vector<std::vector<EdgeId>> adjacency_;
  std::vector<double> degree_;
};

struct VertexPartition {
  std::vector<Vertex> v1;
  std::vector<Vertex> v2;

  /// Builds the partition with v1 as given and v2 its complement. Throws if
  /// either side would be empty or v1 names unknown/duplicate vertices.
  static VertexPartition from_v1(std::size_t n, std::span<const Vertex> v1);
};

// ---- edge-list text format ----

/// Parses '#'-comment / whitespace "u v w [o|s]" lines. Vertex count is max id + 1.
WeightedMultiGraph load_graph(std::string_view text);
WeightedMultiGraph read_graph_file(const std::filesystem::path& path);

/// Canonical order: (min endpoint, max endpoint, id); 17 significant digits.
/// With `with_origin`, a fourth column `o`/`s` records the origin tag.
std::string save_graph(const WeightedMultiGraph& g, bool with_origin = false);
void write_graph_file(const std::filesystem::path& path, const WeightedMultiGraph& g,
                      bool with_origin = false);

// ---- graph surgery ----

struct ContractionResult {
  WeightedMultiGraph graph;
  /// old vertex id -> new vertex id
  std::vector<Vertex> vertex_map;
};

/// Identifies the endpoints of every edge in `edges`, drops the self-loops
/// that result, and renumbers vertices densely. Surviving edges keep their
/// relative order; parent = id in `g`.
ContractionResult contract_edges(const WeightedMultiGraph& g, std::span<const EdgeId> edges);

/// Removes `edges`; the vertex set is unchanged. parent = id in `g`.
WeightedMultiGraph delete_edges(const WeightedMultiGraph& g, std::span<const EdgeId> edges);

struct InducedSubgraph {
  WeightedMultiGraph graph;
  /// new vertex id -> old vertex id (sorted ascending)
  std::vector<Vertex> vertices;
};

InducedSubgraph induced_subgraph(const WeightedMultiGraph& g, std::span<const Vertex> vertices);

struct MergeResult {
  WeightedMultiGraph graph;
  /// simple edge id -> ids of the parallel edges of `g` it replaces
  std::vector<std::vector<EdgeId>> members;
};

/// One edge per adjacent vertex pair, weight = sum over the parallel class.
MergeResult merge_parallel(const WeightedMultiGraph& g);

bool is_connected(const WeightedMultiGraph& g);
/// Component label per vertex, labels dense in order of first appearance.
std::vector<std::size_t> connected_components(const WeightedMultiGraph& g);

}  // namespace detsparse
