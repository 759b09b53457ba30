#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "color/error.hpp"
#include "color/graph.hpp"
#include "color/hom_oracle.hpp"
#include "color/lifted_graph.hpp"
#include "color/plan.hpp"
#include "color/weighted_sample.hpp"

namespace color {

enum class Inference : std::uint8_t { kNaive, kAggregate, kSample };
enum class Closure : std::uint8_t { kGamma, kUniformFallback };

inline std::string_view to_string(Inference i) {
  switch (i) {
    case Inference::kNaive: return "naive";
    case Inference::kAggregate: return "aggregate";
    case Inference::kSample: return "sample";
  }
  return "?";
}

inline std::optional<Inference> parse_inference(std::string_view s) {
  if (s == "naive") return Inference::kNaive;
  if (s == "aggregate") return Inference::kAggregate;
  if (s == "sample") return Inference::kSample;
  return std::nullopt;
}

inline std::string_view to_string(Closure c) {
  return c == Closure::kGamma ? "gamma" : "uniform_fallback";
}

inline std::optional<Closure> parse_closure(std::string_view s) {
  if (s == "gamma") return Closure::kGamma;
  if (s == "uniform_fallback") return Closure::kUniformFallback;
  return std::nullopt;
}

struct EstimateConfig {
  StatMode stat_mode = StatMode::kAvg;
  Inference inference = Inference::kSample;
  std::size_t sample_budget = 500;
  std::uint64_t seed = 0;
  Closure closure = Closure::kGamma;
  // Guards.
  std::size_t max_table_entries = std::size_t{1} << 24;
  double naive_cap = 1e9;  // max |C|^|V_Q| accepted by estimate_naive
  std::optional<std::chrono::steady_clock::time_point> deadline;

  void validate() const {
    if (sample_budget < 1) throw ValidationError("sample budget must be at least 1");
  }
};

struct EstimateResult {
  double estimate = 0;
  StatMode mode = StatMode::kAvg;
  Inference inference = Inference::kAggregate;
  std::size_t width = 0;
  std::uint64_t entries = 0;        // table entries materialized (naive: nonzero leaves)
  std::size_t peak_table = 0;
  bool truncated = false;           // sampling dropped entries at some step
};

// |V|^{|V_Q|} * (|E| / |V|^2)^{|E_Q|}
inline double traditional_estimate(const QueryGraph& q, std::uint64_t num_vertices, std::uint64_t num_edges) {
  if (num_vertices == 0) throw std::invalid_argument("traditional_estimate needs at least one vertex");
  const double v = static_cast<double>(num_vertices);
  const double p = static_cast<double>(num_edges) / (v * v);
  return std::pow(v, static_cast<double>(q.vertex_count())) * std::pow(p, static_cast<double>(q.edge_count()));
}

inline double relative_error(double estimate, double truth) {
  if (!(truth > 0)) throw std::domain_error("relative error undefined for non-positive truth");
  if (estimate == 0) return 0.0;
  return estimate / truth;
}

// One simple path between the endpoints of a non-tree edge, through edges
// processed before it.
struct ClosurePath {
  std::vector<std::size_t> edges;
  DirectionSequence seq;
};

struct EdgeRole {
  bool tree = false;
  VertexId parent = 0;  // tree edges: earlier-processed endpoint
  VertexId child = 0;
  std::vector<ClosurePath> paths;  // non-tree edges
};

struct PreparedQuery {
  QueryGraph query;
  EliminationPlan plan;
  EdgeOrder order;
  std::vector<EdgeRole> roles;  // indexed by query edge
  std::vector<std::size_t> step_of_edge;
};

inline constexpr std::size_t kMaxClosurePaths = 64;

// Simple paths from x to y in the undirected view of `usable` edges, of
// 1..max_len edges, shortest first and then lexicographic by edge index.
inline std::vector<ClosurePath> enumerate_closure_paths(const QueryGraph& q, const std::vector<bool>& usable,
                                                        VertexId x, VertexId y, std::size_t max_len,
                                                        std::size_t cap = kMaxClosurePaths) {
  std::vector<ClosurePath> out;
  if (x == y) return out;
  const auto inc = q.incident_edges();
  std::vector<bool> on_path(q.vertex_count(), false);
  ClosurePath cur;
  std::vector<Direction> dirs;
  for (std::size_t len = 1; len <= max_len && out.size() < cap; ++len) {
    // Depth-first with edges tried in index order yields lexicographic order.
    auto dfs = [&](auto&& self, VertexId v) -> void {
      if (out.size() >= cap) return;
      if (cur.edges.size() == len) {
        if (v == y) {
          ClosurePath p = cur;
          p.seq = DirectionSequence::from(dirs);
          out.push_back(std::move(p));
        }
        return;
      }
      for (auto i : inc[v]) {
        if (!usable[i]) continue;
        const auto& e = q.edge(i);
        if (e.src == e.dst) continue;
        const VertexId next = e.src == v ? e.dst : e.src;
        if (on_path[next]) continue;
        if (next == y && cur.edges.size() + 1 != len) continue;
        on_path[next] = true;
        cur.edges.push_back(i);
        dirs.push_back(e.src == v ? Direction::kOut : Direction::kIn);
        self(self, next);
        dirs.pop_back();
        cur.edges.pop_back();
        on_path[next] = false;
      }
    };
    on_path[x] = true;
    dfs(dfs, x);
    on_path[x] = false;
  }
  return out;
}

inline PreparedQuery prepare_query(const QueryGraph& q, std::uint32_t max_cycle_length = 6) {
  PreparedQuery p{q, plan_elimination(q), {}, {}, {}};
  p.order = topological_edge_order(q, p.plan.vertex_order);
  p.roles.resize(q.edge_count());
  p.step_of_edge.resize(q.edge_count());
  std::vector<std::size_t> pos(q.vertex_count());
  for (std::size_t i = 0; i < pos.size(); ++i) pos[p.plan.vertex_order[i]] = i;
  const std::size_t max_len = max_cycle_length > 1 ? max_cycle_length - 1 : 0;
  std::vector<bool> usable(q.edge_count(), false);
  for (std::size_t k = 0; k < p.order.edges.size(); ++k) {
    const auto i = p.order.edges[k];
    const auto& e = q.edge(i);
    auto& role = p.roles[i];
    p.step_of_edge[i] = std::max(pos[e.src], pos[e.dst]);
    role.tree = p.order.tree_flags[k];
    if (role.tree) {
      role.child = pos[e.src] > pos[e.dst] ? e.src : e.dst;
      role.parent = role.child == e.src ? e.dst : e.src;
    } else {
      role.paths = enumerate_closure_paths(q, usable, e.src, e.dst, max_len);
    }
    usable[i] = true;
  }
  return p;
}

// Root factor psi(c, P_root) for the plan's first vertex.
inline double root_weight(const PreparedQuery& p, ColorId c, const LiftedGraph& lg) {
  const auto root = p.plan.vertex_order.front();
  return static_cast<double>(psi_lookup(lg, c, p.query.vertex_predicate(root)));
}

// Factor of query edge `edge` when its source maps to c_src and its
// destination to c_dst. Tree edges read tau in the stat mode along the
// traversal direction; non-tree edges give the probability that the edge
// closes the paths already laid down between its endpoints.
inline double edge_weight(const PreparedQuery& p, std::size_t edge, ColorId c_src, ColorId c_dst,
                          const LiftedGraph& lg, const EstimateConfig& cfg) {
  const auto& e = p.query.edge(edge);
  const auto& role = p.roles.at(edge);
  if (role.tree) {
    if (role.parent == e.src) {
      return lg.tau_lookup(c_src, c_dst, e.labels, p.query.vertex_predicate(e.dst), Direction::kOut,
                           cfg.stat_mode);
    }
    return lg.tau_lookup(c_dst, c_src, e.labels, p.query.vertex_predicate(e.src), Direction::kIn,
                         cfg.stat_mode);
  }
  static const LabelSet kAny;
  switch (cfg.stat_mode) {
    case StatMode::kMin: return 0.0;
    case StatMode::kMax:
      return lg.tau_lookup(c_src, c_dst, e.labels, kAny, Direction::kOut, StatMode::kMax) > 0 ? 1.0 : 0.0;
    case StatMode::kAvg: break;
  }
  const double all = lg.tau_lookup(c_src, c_dst, kAny, kAny, Direction::kOut, StatMode::kAvg);
  if (all <= 0) return 0.0;
  const double selectivity =
      e.labels.empty() ? 1.0
                       : lg.tau_lookup(c_src, c_dst, e.labels, kAny, Direction::kOut, StatMode::kAvg) / all;
  const double uniform = lg.uniform_edge_probability();
  if (cfg.closure == Closure::kUniformFallback || role.paths.empty()) return uniform * selectivity;
  double open = 1.0;
  for (const auto& path : role.paths) {
    open *= 1.0 - lg.closure_probability(c_src, c_dst, path.seq).value_or(uniform);
  }
  return (1.0 - open) * selectivity;
}

// Same factor with endpoint colors read from a full assignment.
inline double edge_weight(const PreparedQuery& p, std::size_t edge, std::span<const ColorId> assignment,
                          const LiftedGraph& lg, const EstimateConfig& cfg) {
  const auto& e = p.query.edge(edge);
  if (e.src >= assignment.size() || e.dst >= assignment.size()) {
    throw std::logic_error("edge_weight: unassigned endpoint");
  }
  return edge_weight(p, edge, assignment[e.src], assignment[e.dst], lg, cfg);
}

// W(pi) for a complete assignment.
inline double assignment_weight(const PreparedQuery& p, std::span<const ColorId> assignment,
                                const LiftedGraph& lg, const EstimateConfig& cfg) {
  double w = root_weight(p, assignment[p.plan.vertex_order.front()], lg);
  for (auto i : p.order.edges) {
    if (w == 0) break;
    w *= edge_weight(p, i, assignment, lg, cfg);
  }
  return w;
}

namespace detail {

inline void check_deadline(const EstimateConfig& cfg) {
  if (cfg.deadline && std::chrono::steady_clock::now() > *cfg.deadline) {
    throw Timeout("estimate exceeded its deadline");
  }
}

// Lazily evaluated factor table of one query edge over color pairs.
class EdgeFactors {
 public:
  EdgeFactors(const PreparedQuery& p, std::size_t edge, const LiftedGraph& lg, const EstimateConfig& cfg)
      : p_(p), edge_(edge), lg_(lg), cfg_(cfg), k_(lg.num_colors()), rows_(k_), nz_(k_), nz_done_(k_, false) {}

  double value(ColorId c_src, ColorId c_dst) {
    auto& row = rows_[c_src];
    if (row.empty()) row.assign(k_, std::numeric_limits<double>::quiet_NaN());
    double& v = row[c_dst];
    if (std::isnan(v)) v = edge_weight(p_, edge_, c_src, c_dst, lg_, cfg_);
    return v;
  }

  // Nonzero factors with the tree parent fixed to `c`, over the child's color.
  const std::vector<std::pair<ColorId, double>>& from_parent(ColorId c) {
    if (!nz_done_[c]) {
      const bool parent_is_src = p_.roles[edge_].parent == p_.query.edge(edge_).src;
      for (ColorId o = 0; o < k_; ++o) {
        const double v = parent_is_src ? value(c, o) : value(o, c);
        if (v != 0) nz_[c].emplace_back(o, v);
      }
      nz_done_[c] = true;
    }
    return nz_[c];
  }

 private:
  const PreparedQuery& p_;
  std::size_t edge_;
  const LiftedGraph& lg_;
  const EstimateConfig& cfg_;
  std::uint32_t k_;
  std::vector<std::vector<double>> rows_;
  std::vector<std::vector<std::pair<ColorId, double>>> nz_;
  std::vector<bool> nz_done_;
};

// Partial coloring table: one row of colors per entry over `live`.
struct PartialColoringTable {
  std::vector<VertexId> live;
  std::vector<ColorId> keys;  // entries x live.size(), row-major
  std::vector<double> weights;
  double total_weight_before_sampling = 0;

  std::size_t size() const { return weights.size(); }
  const ColorId* row(std::size_t j) const { return keys.data() + j * live.size(); }
};

inline EstimateResult run_aggregation(const PreparedQuery& p, const LiftedGraph& lg, const EstimateConfig& cfg,
                                      bool sampling) {
  EstimateResult res;
  res.mode = cfg.stat_mode;
  res.inference = sampling ? Inference::kSample : Inference::kAggregate;
  res.width = p.plan.width;
  const auto k = lg.num_colors();
  if (k == 0) return res;

  std::vector<EdgeFactors> factors;
  factors.reserve(p.query.edge_count());
  for (std::size_t i = 0; i < p.query.edge_count(); ++i) factors.emplace_back(p, i, lg, cfg);

  // Edges of each step in processing order (tree edge first).
  std::vector<std::vector<std::size_t>> step_edges(p.plan.steps.size());
  for (auto i : p.order.edges) step_edges[p.step_of_edge[i]].push_back(i);

  PartialColoringTable t;
  std::vector<std::size_t> where(p.query.vertex_count(), SIZE_MAX);  // column of a live vertex
  for (std::size_t s = 0; s < p.plan.steps.size(); ++s) {
    check_deadline(cfg);
    const auto& step = p.plan.steps[s];
    const VertexId v = step.vertex;
    PartialColoringTable next;
    next.live = t.live;
    next.live.push_back(v);
    const std::size_t width = next.live.size();
    where[v] = width - 1;

    auto emit = [&](const ColorId* base, ColorId c, double w) {
      if (w == 0) return;
      next.keys.insert(next.keys.end(), base, base + (width - 1));
      next.keys.push_back(c);
      next.weights.push_back(w);
      if (next.weights.size() > cfg.max_table_entries) {
        throw ResourceLimit("partial coloring table exceeds " + std::to_string(cfg.max_table_entries) +
                            " entries");
      }
    };
    std::vector<ColorId> scratch(width);
    auto apply_edges = [&](const ColorId* base, ColorId c, double w, std::size_t first) {
      std::copy(base, base + (width - 1), scratch.begin());
      scratch[width - 1] = c;
      for (std::size_t j = first; j < step_edges[s].size() && w != 0; ++j) {
        const auto i = step_edges[s][j];
        const auto& e = p.query.edge(i);
        w *= factors[i].value(scratch[where[e.src]], scratch[where[e.dst]]);
      }
      return w;
    };

    if (s == 0) {
      for (ColorId c = 0; c < k; ++c) {
        const double w = root_weight(p, c, lg);
        if (w != 0) emit(nullptr, c, apply_edges(nullptr, c, w, 0));
      }
    } else {
      const auto tree = step_edges[s].front();
      const auto parent_col = where[p.roles[tree].parent];
      for (std::size_t j = 0; j < t.size(); ++j) {
        const ColorId* base = t.row(j);
        for (const auto& [c, f] : factors[tree].from_parent(base[parent_col])) {
          emit(base, c, apply_edges(base, c, t.weights[j] * f, 1));
        }
      }
    }
    res.entries += next.size();
    res.peak_table = std::max(res.peak_table, next.size());

    // Sum out V_S.
    std::vector<VertexId> keep;
    std::vector<std::size_t> keep_cols;
    for (std::size_t c = 0; c < width; ++c) {
      const auto u = next.live[c];
      if (std::find(step.sum_out.begin(), step.sum_out.end(), u) == step.sum_out.end()) {
        keep.push_back(u);
        keep_cols.push_back(c);
      }
    }
    PartialColoringTable merged;
    merged.live = keep;
    const std::size_t kw = keep.size();
    std::vector<ColorId> projected(next.size() * kw);
    for (std::size_t j = 0; j < next.size(); ++j) {
      for (std::size_t c = 0; c < kw; ++c) projected[j * kw + c] = next.keys[j * width + keep_cols[c]];
    }
    std::vector<std::size_t> idx(next.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    auto less = [&](std::size_t a, std::size_t b) {
      return std::lexicographical_compare(projected.begin() + a * kw, projected.begin() + (a + 1) * kw,
                                          projected.begin() + b * kw, projected.begin() + (b + 1) * kw);
    };
    std::stable_sort(idx.begin(), idx.end(), less);
    for (std::size_t a = 0; a < idx.size();) {
      std::size_t b = a;
      double w = 0;
      while (b < idx.size() && !less(idx[a], idx[b])) w += next.weights[idx[b++]];
      merged.keys.insert(merged.keys.end(), projected.begin() + idx[a] * kw,
                         projected.begin() + (idx[a] + 1) * kw);
      merged.weights.push_back(w);
      a = b;
    }
    std::fill(where.begin(), where.end(), SIZE_MAX);
    for (std::size_t c = 0; c < kw; ++c) where[keep[c]] = c;

    merged.total_weight_before_sampling = std::accumulate(merged.weights.begin(), merged.weights.end(), 0.0);
    if (sampling && merged.size() > cfg.sample_budget) {
      Rng rng(mix64(cfg.seed, s));
      const auto pick = sample_without_replacement(merged.weights, cfg.sample_budget, rng);
      PartialColoringTable sampled;
      sampled.live = merged.live;
      double total = 0;
      for (std::size_t m = 0; m < pick.indices.size(); ++m) {
        const auto j = pick.indices[m];
        sampled.keys.insert(sampled.keys.end(), merged.keys.begin() + j * kw, merged.keys.begin() + (j + 1) * kw);
        sampled.weights.push_back(merged.weights[j] / pick.inclusion[m]);
        total += sampled.weights.back();
      }
      if (total > 0) {
        const double scale = merged.total_weight_before_sampling / total;
        for (auto& w : sampled.weights) w *= scale;
      }
      sampled.total_weight_before_sampling = merged.total_weight_before_sampling;
      merged = std::move(sampled);
      res.truncated = true;
    }
    t = std::move(merged);
  }
  res.estimate = std::accumulate(t.weights.begin(), t.weights.end(), 0.0);
  return res;
}

}  // namespace detail

// Sum of W over every color assignment, enumerated one assignment at a time
// in plan order. Assignments with a zero factor are skipped together with
// their whole suffix; a tree edge's child is only tried on colors adjacent
// to its parent's color in F.
inline EstimateResult estimate_naive(const PreparedQuery& p, const LiftedGraph& lg, const EstimateConfig& cfg = {}) {
  EstimateResult res;
  res.mode = cfg.stat_mode;
  res.inference = Inference::kNaive;
  res.width = p.plan.width;
  const auto k = lg.num_colors();
  if (k == 0) return res;
  const double space = std::pow(static_cast<double>(k), static_cast<double>(p.query.vertex_count()));
  if (space > cfg.naive_cap) {
    throw ResourceLimit("naive enumeration over " + std::to_string(space) + " assignments exceeds cap");
  }
  const auto& order = p.plan.vertex_order;
  std::vector<std::vector<std::size_t>> step_edges(order.size());
  for (auto i : p.order.edges) step_edges[p.step_of_edge[i]].push_back(i);
  std::vector<ColorId> assignment(p.query.vertex_count(), 0);
  std::vector<ColorId> all_colors(k);
  std::iota(all_colors.begin(), all_colors.end(), ColorId{0});
  const auto out_adj = lg.color_graph();
  std::vector<std::vector<ColorId>> in_adj(k);
  for (ColorId a = 0; a < k; ++a) {
    for (auto b : out_adj[a]) in_adj[b].push_back(a);
  }
  // edge_weight values, memoized per (edge, color pair).
  std::vector<detail::EdgeFactors> factors;
  factors.reserve(p.query.edge_count());
  for (std::size_t i = 0; i < p.query.edge_count(); ++i) factors.emplace_back(p, i, lg, cfg);
  std::uint64_t visited = 0;
  double total = 0;
  auto dfs = [&](auto&& self, std::size_t depth, double w) -> void {
    if (depth == order.size()) {
      total += w;
      ++res.entries;
      return;
    }
    const std::vector<ColorId>* candidates = &all_colors;
    if (depth > 0) {
      // Colors outside the parent's F-neighborhood have a zero tree factor.
      const auto tree = step_edges[depth].front();
      const auto& role = p.roles[tree];
      const auto pc = assignment[role.parent];
      candidates = role.parent == p.query.edge(tree).src ? &out_adj[pc] : &in_adj[pc];
    }
    for (const ColorId c : *candidates) {
      if ((++visited & 0xffff) == 0) detail::check_deadline(cfg);
      assignment[order[depth]] = c;
      double x = depth == 0 ? root_weight(p, c, lg) : w;
      for (auto i : step_edges[depth]) {
        if (x == 0) break;
        const auto& e = p.query.edge(i);
        x *= factors[i].value(assignment[e.src], assignment[e.dst]);
      }
      if (x != 0) self(self, depth + 1, x);
    }
  };
  dfs(dfs, 0, 1.0);
  res.estimate = total;
  return res;
}

inline EstimateResult estimate_aggregate(const PreparedQuery& p, const LiftedGraph& lg,
                                         const EstimateConfig& cfg = {}) {
  return detail::run_aggregation(p, lg, cfg, false);
}

inline EstimateResult estimate_sampled(const PreparedQuery& p, const LiftedGraph& lg,
                                       const EstimateConfig& cfg = {}) {
  cfg.validate();
  return detail::run_aggregation(p, lg, cfg, true);
}

inline EstimateResult estimate(const PreparedQuery& p, const LiftedGraph& lg, const EstimateConfig& cfg = {}) {
  switch (cfg.inference) {
    case Inference::kNaive: return estimate_naive(p, lg, cfg);
    case Inference::kAggregate: return estimate_aggregate(p, lg, cfg);
    case Inference::kSample: return estimate_sampled(p, lg, cfg);
  }
  return estimate_aggregate(p, lg, cfg);
}

inline PreparedQuery prepare_query(const QueryGraph& q, const LiftedGraph& lg) {
  return prepare_query(q, lg.meta.gamma.max_cycle_length);
}

inline EstimateResult estimate(const QueryGraph& q, const LiftedGraph& lg, const EstimateConfig& cfg = {}) {
  return estimate(prepare_query(q, lg), lg, cfg);
}

}  // namespace color
