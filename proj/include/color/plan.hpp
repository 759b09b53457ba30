#pragma once

#include <algorithm>
#include <cstddef>
#include <set>
#include <vector>

#include "color/graph.hpp"

namespace color {

struct PlanStep {
  VertexId vertex;                 // v_i
  std::vector<std::size_t> edges;  // E_i: edges whose later-processed endpoint is v_i
  std::vector<VertexId> sum_out;   // V_S: live vertices with no unprocessed neighbor
  std::size_t live_after_extend;   // live vertex count once v_i is added
};

struct EliminationPlan {
  std::vector<VertexId> elimination_order;  // min-fill order
  std::vector<VertexId> vertex_order;       // processing order v_1 .. v_n
  std::vector<PlanStep> steps;
  std::size_t width = 0;
};

namespace detail {

inline std::vector<std::set<VertexId>> undirected_adjacency(const QueryGraph& q) {
  std::vector<std::set<VertexId>> adj(q.vertex_count());
  for (const auto& e : q.edges()) {
    if (e.src == e.dst) continue;
    adj[e.src].insert(e.dst);
    adj[e.dst].insert(e.src);
  }
  return adj;
}

}  // namespace detail

// Greedy min-fill elimination. Ties: smaller current degree, then smaller id.
inline std::vector<VertexId> min_fill_order(const QueryGraph& q) {
  auto adj = detail::undirected_adjacency(q);
  const auto n = q.vertex_count();
  std::vector<bool> gone(n, false);
  std::vector<VertexId> order;
  order.reserve(n);
  for (std::size_t round = 0; round < n; ++round) {
    VertexId best = 0;
    std::size_t best_fill = SIZE_MAX, best_deg = SIZE_MAX;
    for (VertexId v = 0; v < n; ++v) {
      if (gone[v]) continue;
      std::size_t fill = 0;
      for (auto a = adj[v].begin(); a != adj[v].end(); ++a) {
        for (auto b = std::next(a); b != adj[v].end(); ++b) fill += !adj[*a].count(*b);
      }
      const auto deg = adj[v].size();
      if (fill < best_fill || (fill == best_fill && deg < best_deg)) {
        best = v;
        best_fill = fill;
        best_deg = deg;
      }
    }
    for (auto a : adj[best]) {
      for (auto b : adj[best]) {
        if (a != b) adj[a].insert(b);
      }
      adj[a].erase(best);
    }
    adj[best].clear();
    gone[best] = true;
    order.push_back(best);
  }
  return order;
}

// Sequential (path-decomposition style) plan. Vertices are processed in
// reverse elimination order, except that the next vertex is always chosen
// among those adjacent to the processed set so every step after the first has
// a linking edge.
inline EliminationPlan plan_elimination(const QueryGraph& q) {
  const auto n = q.vertex_count();
  EliminationPlan plan;
  plan.elimination_order = min_fill_order(q);
  std::vector<std::size_t> elim_pos(n);
  for (std::size_t i = 0; i < n; ++i) elim_pos[plan.elimination_order[i]] = i;

  const auto adj = detail::undirected_adjacency(q);
  std::vector<bool> done(n, false), frontier(n, false);
  VertexId next = plan.elimination_order.back();
  for (std::size_t i = 0; i < n; ++i) {
    if (i > 0) {
      bool found = false;
      for (VertexId v = 0; v < n; ++v) {
        if (!frontier[v] || done[v]) continue;
        if (!found || elim_pos[v] > elim_pos[next]) next = v;
        found = true;
      }
    }
    done[next] = true;
    for (auto u : adj[next]) frontier[u] = true;
    plan.vertex_order.push_back(next);
  }

  std::vector<std::size_t> pos(n);
  for (std::size_t i = 0; i < n; ++i) pos[plan.vertex_order[i]] = i;
  plan.steps.resize(n);
  for (std::size_t i = 0; i < q.edge_count(); ++i) {
    const auto& e = q.edge(i);
    plan.steps[std::max(pos[e.src], pos[e.dst])].edges.push_back(i);
  }
  // last_needed[v]: the step after which v has no unprocessed neighbor.
  std::vector<std::size_t> last_needed(n, 0);
  for (VertexId v = 0; v < n; ++v) {
    last_needed[v] = pos[v];
    for (auto u : adj[v]) last_needed[v] = std::max(last_needed[v], pos[u]);
  }
  std::vector<VertexId> live;
  for (std::size_t i = 0; i < n; ++i) {
    auto& step = plan.steps[i];
    step.vertex = plan.vertex_order[i];
    live.push_back(step.vertex);
    step.live_after_extend = live.size();
    plan.width = std::max(plan.width, live.size());
    std::vector<VertexId> keep;
    for (auto v : live) (last_needed[v] <= i ? step.sum_out : keep).push_back(v);
    live = std::move(keep);
  }
  return plan;
}

}  // namespace color
