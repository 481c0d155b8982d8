#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "detsparse/exact_oracles.hpp"
#include "detsparse/graph.hpp"
#include "detsparse/random.hpp"
#include "detsparse/schur.hpp"

namespace detsparse {

using VertexPair = std::pair<Vertex, Vertex>;

/// Lifts a tree of merge_parallel(g).graph to g: each merged edge becomes
/// one of its parallel copies, chosen with probability w_copy / w_merged.
SpanningTree unsplit_tree(const WeightedMultiGraph& g, const MergeResult& merged,
                          const SpanningTree& t, Rng& rng);

/// Lifts a spanning tree T2 of Sc(g, part.v2), given as vertex pairs of g,
/// to a spanning tree of g. part.v1 must be independent in g.
///
/// Each T2 edge xy is attributed to the direct edge (mass w_xy) or to a
/// clique K(v) of an eliminated v (mass w_vx w_vy / deg_v). The cliques are
/// then replaced one v at a time: v joins, through one edge chosen
/// proportionally to weight, each component of the current tree minus the
/// edges attributed to v.
SpanningTree prolongate_tree(const WeightedMultiGraph& g, const VertexPartition& part,
                             std::span<const VertexPair> t2, Rng& rng);

/// Exact w-uniform tree by recursive Schur complements: split the vertices by
/// id halves, sample on Sc(G, V1), keep each returned edge as an edge of G
/// with probability w_G / w_Sc, contract the kept edges and delete the rest
/// of G[V1], recurse on the Schur complement onto V2 and prolongate.
SpanningTree exact_tree(const WeightedMultiGraph& g, Rng& rng);

/// Loop-erased random walks. Independent of the Schur machinery; used as a
/// reference sampler.
SpanningTree wilson_tree(const WeightedMultiGraph& g, Rng& rng);

struct ApproxTreeOptions {
  double alpha = 0.1;
  std::size_t retry_budget = 100;
  SchurSparseOptions schur;
};

struct ApproxTreeStats {
  std::size_t schur_calls = 0;
  std::size_t disconnected_retries = 0;
  std::size_t levels = 0;
};

/// The exact recursion with both Schur complements replaced by
/// schur_sparse outputs at budget delta * |V_i| / n. A disconnected
/// sparsifier is redrawn (counted in stats) up to retry_budget times.
SpanningTree approx_tree(const WeightedMultiGraph& g, double delta, Rng& rng,
                         ApproxTreeStats* stats = nullptr, const ApproxTreeOptions& options = {});

}  // namespace detsparse
