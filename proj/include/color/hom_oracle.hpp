#pragma once

#include <cstdint>
#include <span>
#include <unordered_map>
#include <vector>

#include "color/error.hpp"
#include "color/graph.hpp"

namespace color {

// Query edges in an order where every edge after the first touches a vertex
// covered by earlier edges. Tree edges are exactly those that cover a new
// vertex.
struct EdgeOrder {
  std::vector<std::size_t> edges;
  std::vector<bool> tree_flags;         // parallel to `edges`
  std::vector<VertexId> vertex_order;   // order in which vertices get covered

  std::size_t tree_edge_count() const {
    std::size_t n = 0;
    for (bool t : tree_flags) n += t;
    return n;
  }
};

inline bool is_acyclic(const QueryGraph& q) {
  // QueryGraph guarantees connectivity.
  return q.edge_count() + 1 == q.vertex_count();
}

// Deterministic order rooted at vertex 0. Among the edges touching the covered
// set, the one with the smallest covered endpoint id wins, then the smallest
// edge index.
inline EdgeOrder topological_edge_order(const QueryGraph& q) {
  const auto n = q.vertex_count();
  const auto m = q.edge_count();
  EdgeOrder order;
  std::vector<bool> covered(n, false), taken(m, false);
  covered[0] = true;
  order.vertex_order.push_back(0);
  for (std::size_t step = 0; step < m; ++step) {
    std::size_t best = m;
    VertexId best_key = UINT32_MAX;
    for (std::size_t i = 0; i < m; ++i) {
      if (taken[i]) continue;
      const auto& e = q.edge(i);
      VertexId key = UINT32_MAX;
      if (covered[e.src]) key = e.src;
      if (covered[e.dst]) key = std::min(key, e.dst);
      if (key < best_key) {
        best_key = key;
        best = i;
      }
    }
    // Connectivity guarantees a candidate exists.
    taken[best] = true;
    const auto& e = q.edge(best);
    const bool tree = !(covered[e.src] && covered[e.dst]);
    order.edges.push_back(best);
    order.tree_flags.push_back(tree);
    if (tree) {
      const VertexId fresh = covered[e.src] ? e.dst : e.src;
      covered[fresh] = true;
      order.vertex_order.push_back(fresh);
    }
  }
  return order;
}

// Edge order induced by a vertex processing order: edges are grouped by the
// step at which their later endpoint is processed (edge index breaks ties).
// The first edge of each group is the tree edge for that step's vertex. Every
// vertex after the first must be adjacent to an earlier one.
inline EdgeOrder topological_edge_order(const QueryGraph& q, std::span<const VertexId> vertex_order) {
  const auto n = q.vertex_count();
  if (vertex_order.size() != n) throw std::invalid_argument("vertex order must cover the query");
  std::vector<std::size_t> pos(n, n);
  for (std::size_t i = 0; i < n; ++i) pos[vertex_order[i]] = i;
  std::vector<std::vector<std::size_t>> by_step(n);
  for (std::size_t i = 0; i < q.edge_count(); ++i) {
    const auto& e = q.edge(i);
    by_step[std::max(pos[e.src], pos[e.dst])].push_back(i);
  }
  EdgeOrder order;
  order.vertex_order.assign(vertex_order.begin(), vertex_order.end());
  for (std::size_t s = 0; s < n; ++s) {
    auto& group = by_step[s];
    if (s > 0) {
      // A self-loop never introduces a vertex; the first linking edge does.
      auto link = std::find_if(group.begin(), group.end(),
                               [&](std::size_t i) { return q.edge(i).src != q.edge(i).dst; });
      if (link == group.end()) {
        throw std::invalid_argument("vertex order is not connected at step " + std::to_string(s));
      }
      std::rotate(group.begin(), link, link + 1);
    }
    for (std::size_t k = 0; k < group.size(); ++k) {
      order.edges.push_back(group[k]);
      order.tree_flags.push_back(s > 0 && k == 0);
    }
  }
  return order;
}

struct OracleOptions {
  // Candidate checks before giving up with BudgetExceeded.
  std::uint64_t max_expansions = std::uint64_t{1} << 34;
  // Memo entries kept across all depths; beyond this, results are recomputed.
  std::size_t memo_limit = std::size_t{1} << 22;
};

namespace detail {

struct KeyHash {
  std::size_t operator()(const std::vector<VertexId>& k) const noexcept {
    std::uint64_t h = 0x243f6a8885a308d3ULL;
    for (auto v : k) h = (h ^ v) * 0x100000001b3ULL + (h >> 29);
    return static_cast<std::size_t>(h);
  }
};

class HomCounter {
 public:
  HomCounter(const QueryGraph& q, const PropertyGraph& g, const OracleOptions& opts)
      : q_(q), g_(g), opts_(opts) {
    const auto n = q.vertex_count();
    order_ = topological_edge_order(q).vertex_order;
    pos_.assign(n, 0);
    for (std::size_t i = 0; i < n; ++i) pos_[order_[i]] = i;
    constraints_.resize(n);
    for (std::size_t i = 0; i < q.edge_count(); ++i) {
      const auto& e = q.edge(i);
      const auto later = std::max(pos_[e.src], pos_[e.dst]);
      constraints_[later].push_back(i);
    }
    // Anchor: a constraint edge with an endpoint assigned earlier.
    anchor_.assign(n, SIZE_MAX);
    for (std::size_t d = 1; d < n; ++d) {
      for (auto i : constraints_[d]) {
        if (q.edge(i).src != q.edge(i).dst) {
          anchor_[d] = i;
          break;
        }
      }
    }
    // frontier_[d]: vertices at positions <= d-1 with a neighbor at position >= d.
    frontier_.resize(n + 1);
    for (std::size_t d = 0; d <= n; ++d) {
      for (std::size_t j = 0; j < d; ++j) {
        const auto v = order_[j];
        bool open = false;
        for (const auto& e : q.edges()) {
          const VertexId other = e.src == v ? e.dst : (e.dst == v ? e.src : v);
          if (other != v && pos_[other] >= d) open = true;
        }
        if (open) frontier_[d].push_back(v);
      }
    }
    memo_.resize(n + 1);
    image_.assign(n, 0);
  }

  std::uint64_t run() { return count(0); }

 private:
  std::uint64_t count(std::size_t d) {
    const auto n = q_.vertex_count();
    if (d == n) return 1;
    std::vector<VertexId> key;
    key.reserve(frontier_[d].size());
    for (auto v : frontier_[d]) key.push_back(image_[v]);
    if (d > 0) {
      if (auto it = memo_[d].find(key); it != memo_[d].end()) return it->second;
    }

    const VertexId x = order_[d];
    std::uint64_t total = 0;
    auto try_candidate = [&](VertexId c) {
      if (++expansions_ > opts_.max_expansions) {
        throw BudgetExceeded("oracle budget exceeded after " + std::to_string(expansions_ - 1) +
                             " expansions");
      }
      if (!g_.vertex_labels(c).satisfies(q_.vertex_predicate(x))) return;
      image_[x] = c;
      for (auto i : constraints_[d]) {
        const auto& e = q_.edge(i);
        const auto id = g_.find_edge(image_[e.src], image_[e.dst]);
        if (!id || !g_.edge_labels(*id).satisfies(e.labels)) return;
      }
      const auto sub = count(d + 1);
      if (__builtin_add_overflow(total, sub, &total)) {
        throw CountOverflow("homomorphism count exceeds 64 bits");
      }
    };

    if (anchor_[d] == SIZE_MAX) {
      for (VertexId c = 0; c < g_.vertex_count(); ++c) try_candidate(c);
    } else {
      const auto& e = q_.edge(anchor_[d]);
      const bool from_src = e.dst == x;  // anchor is the earlier endpoint
      const VertexId anchor_img = image_[from_src ? e.src : e.dst];
      const auto cands = from_src ? g_.out_neighbors(anchor_img) : g_.in_neighbors(anchor_img);
      for (auto c : cands) try_candidate(c);
    }

    if (d > 0 && memo_entries_ < opts_.memo_limit) {
      memo_[d].emplace(std::move(key), total);
      ++memo_entries_;
    }
    return total;
  }

  const QueryGraph& q_;
  const PropertyGraph& g_;
  OracleOptions opts_;
  std::vector<VertexId> order_;
  std::vector<std::size_t> pos_;
  std::vector<std::vector<std::size_t>> constraints_;
  std::vector<std::size_t> anchor_;
  std::vector<std::vector<VertexId>> frontier_;
  std::vector<std::unordered_map<std::vector<VertexId>, std::uint64_t, KeyHash>> memo_;
  std::vector<VertexId> image_;
  std::uint64_t expansions_ = 0;
  std::size_t memo_entries_ = 0;
};

}  // namespace detail

// Exact |hom(Q, G)| under label-predicate semantics: vertex and edge label
// sets must contain the required labels. Backtracks along the topological
// edge order, memoizing on the images of the still-open frontier vertices.
inline std::uint64_t count_homomorphisms(const QueryGraph& q, const PropertyGraph& g,
                                         const OracleOptions& opts = {}) {
  return detail::HomCounter(q, g, opts).run();
}

}  // namespace color
