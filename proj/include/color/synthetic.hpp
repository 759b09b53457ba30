#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "color/graph.hpp"
#include "color/random.hpp"

// Seeded graph and query generators used by the tests, the acceptance suite
// and `color bench`.
namespace color::synthetic {

// Each ordered pair (u, v), u != v, is an edge with probability p.
inline PropertyGraph random_digraph(std::size_t n, double p, std::uint64_t seed) {
  Rng rng(seed);
  GraphBuilder b;
  b.add_vertices(n);
  for (VertexId u = 0; u < n; ++u) {
    for (VertexId v = 0; v < n; ++v) {
      if (u != v && rng.uniform01() < p) b.add_edge(u, v);
    }
  }
  return b.build();
}

// Random labels drawn from `num_labels` names ("l0", "l1", ...): each vertex
// and edge carries each label independently with probability `p_label`.
inline PropertyGraph random_labeled_digraph(std::size_t n, double p, std::size_t num_labels, double p_label,
                                            std::uint64_t seed) {
  Rng rng(seed);
  LabelDictionary dict;
  for (std::size_t i = 0; i < num_labels; ++i) dict.intern("l" + std::to_string(i));
  auto draw = [&] {
    LabelSet s;
    for (LabelId l = 0; l < num_labels; ++l) {
      if (rng.uniform01() < p_label) s.insert(l);
    }
    return s;
  };
  GraphBuilder b;
  for (std::size_t v = 0; v < n; ++v) b.add_vertex(draw());
  for (VertexId u = 0; u < n; ++u) {
    for (VertexId v = 0; v < n; ++v) {
      if (u != v && rng.uniform01() < p) b.add_edge(u, v, draw());
    }
  }
  return b.build(std::move(dict));
}

// Chung-Lu style power-law digraph: endpoint weights (i + 1)^(-1 / (beta - 1)),
// about n * avg_degree edges before duplicate removal, no self-loops.
inline PropertyGraph power_law_digraph(std::size_t n, double avg_degree, double beta, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> cum(n);
  double total = 0;
  for (std::size_t i = 0; i < n; ++i) {
    total += std::pow(static_cast<double>(i + 1), -1.0 / (beta - 1.0));
    cum[i] = total;
  }
  // Shuffle weights onto vertex ids so degree does not follow id order.
  std::vector<VertexId> perm(n);
  for (VertexId i = 0; i < n; ++i) perm[i] = i;
  for (std::size_t i = n; i > 1; --i) std::swap(perm[i - 1], perm[rng.uniform_index(i)]);
  auto pick = [&] {
    const double r = rng.uniform01() * total;
    const auto i = static_cast<std::size_t>(std::upper_bound(cum.begin(), cum.end(), r) - cum.begin());
    return perm[std::min(i, n - 1)];
  };
  GraphBuilder b;
  b.add_vertices(n);
  const auto m = static_cast<std::size_t>(avg_degree * static_cast<double>(n));
  for (std::size_t e = 0; e < m; ++e) {
    const auto u = pick(), v = pick();
    if (u != v) b.add_edge(u, v);
  }
  return b.build();
}

// Every ordered pair of distinct vertices is an edge.
inline PropertyGraph complete_digraph(std::size_t n) {
  GraphBuilder b;
  b.add_vertices(n);
  for (VertexId u = 0; u < n; ++u) {
    for (VertexId v = 0; v < n; ++v) {
      if (u != v) b.add_edge(u, v);
    }
  }
  return b.build();
}

inline PropertyGraph out_star(std::size_t leaves) {
  GraphBuilder b;
  b.add_vertices(leaves + 1);
  for (VertexId v = 1; v <= leaves; ++v) b.add_edge(0, v);
  return b.build();
}

inline PropertyGraph directed_cycle(std::size_t n) {
  GraphBuilder b;
  b.add_vertices(n);
  for (VertexId v = 0; v < n; ++v) b.add_edge(v, static_cast<VertexId>((v + 1) % n));
  return b.build();
}

// Disjoint union of a directed 2-regular graph on `ring` vertices
// (v -> v+1, v -> v+2) and a complete digraph on `clique` vertices.
inline PropertyGraph ring_plus_clique(std::size_t ring = 10000, std::size_t clique = 100) {
  GraphBuilder b;
  b.add_vertices(ring + clique);
  for (VertexId v = 0; v < ring; ++v) {
    b.add_edge(v, static_cast<VertexId>((v + 1) % ring));
    b.add_edge(v, static_cast<VertexId>((v + 2) % ring));
  }
  const auto base = static_cast<VertexId>(ring);
  for (VertexId u = 0; u < clique; ++u) {
    for (VertexId v = 0; v < clique; ++v) {
      if (u != v) b.add_edge(base + u, base + v);
    }
  }
  return b.build();
}

// 0 -> 1 -> ... -> k
inline QueryGraph path_query(std::size_t k) {
  std::vector<QueryEdge> edges;
  for (VertexId i = 0; i < k; ++i) edges.push_back({i, i + 1, {}});
  return QueryGraph(std::vector<LabelSet>(k + 1), std::move(edges));
}

// 0 -> 1 -> ... -> k-1 -> 0
inline QueryGraph cycle_query(std::size_t k) {
  std::vector<QueryEdge> edges;
  for (VertexId i = 0; i < k; ++i) edges.push_back({i, static_cast<VertexId>((i + 1) % k), {}});
  return QueryGraph(std::vector<LabelSet>(k), std::move(edges));
}

// Center 0 with edges 0 -> i.
inline QueryGraph star_query(std::size_t leaves) {
  std::vector<QueryEdge> edges;
  for (VertexId i = 1; i <= leaves; ++i) edges.push_back({0, i, {}});
  return QueryGraph(std::vector<LabelSet>(leaves + 1), std::move(edges));
}

// Random tree on num_edges + 1 vertices; each edge attaches a new vertex to a
// uniformly chosen earlier one with a random orientation.
inline QueryGraph random_tree_query(std::size_t num_edges, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<QueryEdge> edges;
  for (VertexId v = 1; v <= num_edges; ++v) {
    const auto u = static_cast<VertexId>(rng.uniform_index(v));
    if (rng.uniform_index(2)) {
      edges.push_back({u, v, {}});
    } else {
      edges.push_back({v, u, {}});
    }
  }
  return QueryGraph(std::vector<LabelSet>(num_edges + 1), std::move(edges));
}

// Random connected query: a random tree plus `extra` edges between distinct
// random vertices (parallel and antiparallel edges allowed).
inline QueryGraph random_query(std::size_t num_vertices, std::size_t extra, std::uint64_t seed) {
  Rng rng(mix64(seed, 0x71));
  const auto tree = random_tree_query(num_vertices - 1, seed);
  std::vector<QueryEdge> edges(tree.edges().begin(), tree.edges().end());
  for (std::size_t i = 0; i < extra && num_vertices > 1; ++i) {
    const auto u = static_cast<VertexId>(rng.uniform_index(num_vertices));
    auto v = static_cast<VertexId>(rng.uniform_index(num_vertices - 1));
    if (v >= u) ++v;
    edges.push_back({u, v, {}});
  }
  return QueryGraph(std::vector<LabelSet>(num_vertices), std::move(edges));
}

}  // namespace color::synthetic
