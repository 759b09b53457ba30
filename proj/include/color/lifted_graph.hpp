#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "color/coloring.hpp"
#include "color/graph.hpp"
#include "color/random.hpp"

namespace color {

enum class StatMode : std::uint8_t { kMin = 0, kAvg = 1, kMax = 2 };

inline std::string_view to_string(StatMode m) {
  switch (m) {
    case StatMode::kMin: return "min";
    case StatMode::kAvg: return "avg";
    case StatMode::kMax: return "max";
  }
  return "?";
}

inline std::optional<StatMode> parse_stat_mode(std::string_view s) {
  if (s == "min") return StatMode::kMin;
  if (s == "avg") return StatMode::kAvg;
  if (s == "max") return StatMode::kMax;
  return std::nullopt;
}

struct PsiKey {
  ColorId color;
  LabelId label;  // kWildcard for the color size
  friend bool operator==(const PsiKey&, const PsiKey&) = default;
  friend auto operator<=>(const PsiKey&, const PsiKey&) = default;
};

// (from, to, edge label, vertex label, direction). Direction kOut counts
// edges from -> to whose destination carries vertex_label; kIn counts edges
// to -> from whose source carries vertex_label. Both are normalized by |from|.
struct TauKey {
  ColorId from;
  ColorId to;
  LabelId edge_label;
  LabelId vertex_label;
  Direction dir;
  friend bool operator==(const TauKey&, const TauKey&) = default;
  friend auto operator<=>(const TauKey&, const TauKey&) = default;
};

struct TauStats {
  double min = 0;
  double avg = 0;
  double max = 0;

  double get(StatMode m) const {
    switch (m) {
      case StatMode::kMin: return min;
      case StatMode::kAvg: return avg;
      case StatMode::kMax: return max;
    }
    return avg;
  }
  friend bool operator==(const TauStats&, const TauStats&) = default;
};

// Step directions of a path relative to the edge orientation: bit i set means
// step i walks an edge backwards.
struct DirectionSequence {
  std::uint8_t length = 0;
  std::uint32_t backward_bits = 0;

  static constexpr std::uint8_t kMaxLength = 24;

  static DirectionSequence from(const std::vector<Direction>& steps) {
    DirectionSequence d;
    d.length = static_cast<std::uint8_t>(steps.size());
    for (std::size_t i = 0; i < steps.size(); ++i) {
      if (steps[i] == Direction::kIn) d.backward_bits |= 1u << i;
    }
    return d;
  }

  Direction step(std::size_t i) const {
    return (backward_bits >> i) & 1u ? Direction::kIn : Direction::kOut;
  }
  std::uint32_t code() const { return (std::uint32_t{length} << 24) | backward_bits; }
  static DirectionSequence from_code(std::uint32_t c) {
    return DirectionSequence{static_cast<std::uint8_t>(c >> 24), c & 0xffffffu};
  }
  std::string to_string() const {
    std::string s;
    for (std::size_t i = 0; i < length; ++i) s += step(i) == Direction::kOut ? '>' : '<';
    return s;
  }
  friend bool operator==(const DirectionSequence&, const DirectionSequence&) = default;
  friend auto operator<=>(const DirectionSequence&, const DirectionSequence&) = default;
};

struct GammaKey {
  ColorId from;
  ColorId to;
  DirectionSequence seq;
  friend bool operator==(const GammaKey&, const GammaKey&) = default;
  friend auto operator<=>(const GammaKey&, const GammaKey&) = default;
};

struct GammaEntry {
  double probability = 0;
  std::uint64_t samples = 0;  // walks observed for this key
  friend bool operator==(const GammaEntry&, const GammaEntry&) = default;
};

struct KeyHasher {
  std::size_t operator()(const PsiKey& k) const noexcept {
    return static_cast<std::size_t>(mix64((std::uint64_t{k.color} << 32) | k.label));
  }
  std::size_t operator()(const TauKey& k) const noexcept {
    const std::uint64_t a = (std::uint64_t{k.from} << 32) | k.to;
    const std::uint64_t b = (std::uint64_t{k.edge_label} << 32) | k.vertex_label;
    return static_cast<std::size_t>(mix64(a, b ^ static_cast<std::uint64_t>(k.dir)));
  }
  std::size_t operator()(const GammaKey& k) const noexcept {
    return static_cast<std::size_t>(mix64((std::uint64_t{k.from} << 32) | k.to, k.seq.code()));
  }
};

struct GammaConfig {
  std::uint64_t num_path_samples = 100000;
  std::uint32_t max_cycle_length = 6;  // walks of 1 .. L-1 steps
  std::uint64_t seed = 0;
  // Enumerate every walk instead of sampling. Only for small graphs.
  bool exhaustive = false;
  friend bool operator==(const GammaConfig&, const GammaConfig&) = default;
};

struct GammaTable {
  std::unordered_map<GammaKey, GammaEntry, KeyHasher> colored;
  std::unordered_map<std::uint32_t, GammaEntry> marginal;  // keyed by DirectionSequence::code
};

// gamma' = 1 - (1 - gamma)(1 - updates / |V|^2): probability that the path
// was closed at build time or is closed by one of the update edges.
inline double adjust_closure(double gamma, std::uint64_t edge_updates, std::uint64_t vertices) {
  if (edge_updates == 0) return gamma;
  const double v2 = std::max(1.0, static_cast<double>(vertices) * static_cast<double>(vertices));
  const double fresh = std::min(1.0, static_cast<double>(edge_updates) / v2);
  return std::clamp(1.0 - (1.0 - gamma) * (1.0 - fresh), 0.0, 1.0);
}

struct SummaryMeta {
  std::uint64_t num_vertices = 0;
  std::uint64_t num_edges = 0;
  std::uint32_t num_colors = 0;
  double epsilon = 1.0;
  double degree_range = 0.0;
  ColoringMethod coloring_method = ColoringMethod::kMixture;
  std::uint32_t target_colors = 0;
  std::uint64_t coloring_seed = 0;
  GammaConfig gamma;
  // Net edge insertions applied by the maintenance layer; drives gamma'.
  std::uint64_t applied_edge_updates = 0;
  friend bool operator==(const SummaryMeta&, const SummaryMeta&) = default;
};

// The summary (F, psi, tau) plus path-closure probabilities. Tables are
// sparse: an absent key means the statistic is 0 (gamma: unobserved).
struct LiftedGraph {
  LabelDictionary labels;
  std::unordered_map<PsiKey, std::uint64_t, KeyHasher> psi;
  std::unordered_map<TauKey, TauStats, KeyHasher> tau;
  GammaTable gamma;
  SummaryMeta meta;

  std::uint32_t num_colors() const noexcept { return meta.num_colors; }

  std::uint64_t psi_of(ColorId c, LabelId label = kWildcard) const {
    auto it = psi.find(PsiKey{c, label});
    return it == psi.end() ? 0 : it->second;
  }

  TauStats tau_of(const TauKey& k) const {
    auto it = tau.find(k);
    return it == tau.end() ? TauStats{} : it->second;
  }

  // Conjunctions of labels are answered with the minimum over the single-label
  // (or edge label, vertex label) statistics.
  double tau_lookup(ColorId from, ColorId to, const LabelSet& edge_pred, const LabelSet& vertex_pred,
                    Direction dir, StatMode mode) const {
    static const std::vector<LabelId> wc{kWildcard};
    const auto& els = edge_pred.empty() ? wc : edge_pred.ids();
    const auto& vls = vertex_pred.empty() ? wc : vertex_pred.ids();
    double best = std::numeric_limits<double>::infinity();
    for (auto el : els) {
      for (auto vl : vls) best = std::min(best, tau_of(TauKey{from, to, el, vl, dir}).get(mode));
    }
    return best;
  }

  bool has_color_edge(ColorId from, ColorId to) const {
    return tau_of(TauKey{from, to, kWildcard, kWildcard, Direction::kOut}).avg > 0;
  }

  // Out-adjacency of the color graph F.
  std::vector<std::vector<ColorId>> color_graph() const {
    std::vector<std::vector<ColorId>> adj(meta.num_colors);
    for (const auto& [k, s] : tau) {
      if (k.dir == Direction::kOut && k.edge_label == kWildcard && k.vertex_label == kWildcard &&
          s.avg > 0) {
        adj[k.from].push_back(k.to);
      }
    }
    for (auto& a : adj) std::sort(a.begin(), a.end());
    return adj;
  }

  std::optional<GammaEntry> raw_gamma(ColorId from, ColorId to, DirectionSequence seq) const {
    auto it = gamma.colored.find(GammaKey{from, to, seq});
    if (it == gamma.colored.end()) return std::nullopt;
    return it->second;
  }

  std::optional<GammaEntry> raw_marginal_gamma(DirectionSequence seq) const {
    auto it = gamma.marginal.find(seq.code());
    if (it == gamma.marginal.end()) return std::nullopt;
    return it->second;
  }

  // Closure probability seen by the estimator: colored key, else the
  // direction-only marginal, adjusted for applied edge updates.
  std::optional<double> closure_probability(ColorId from, ColorId to, DirectionSequence seq) const {
    auto e = raw_gamma(from, to, seq);
    if (!e) e = raw_marginal_gamma(seq);
    if (!e) return std::nullopt;
    return adjust_closure(e->probability, meta.applied_edge_updates, meta.num_vertices);
  }

  double uniform_edge_probability() const {
    if (meta.num_vertices == 0) return 0.0;
    const double v = static_cast<double>(meta.num_vertices);
    return std::min(1.0, static_cast<double>(meta.num_edges) / (v * v));
  }
};

// psi(c, P): vertices of c whose label set satisfies P. Conjunctions use the
// minimum over single labels.
inline std::uint64_t psi_lookup(const LiftedGraph& lg, ColorId c, const LabelSet& predicate) {
  if (predicate.empty()) return lg.psi_of(c);
  std::uint64_t best = UINT64_MAX;
  for (auto l : predicate) best = std::min(best, lg.psi_of(c, l));
  return best;
}

namespace detail {

struct GammaAccumulator {
  std::uint64_t samples = 0;
  double trials = 0;  // weighted walk mass
  double closed = 0;

  void add(double weight, bool is_closed, std::uint64_t count = 1) {
    samples += count;
    trials += weight;
    if (is_closed) closed += weight;
  }
  GammaEntry entry() const { return GammaEntry{trials > 0 ? closed / trials : 0.0, samples}; }
};

inline GammaTable finish_gamma(
    const std::unordered_map<GammaKey, GammaAccumulator, KeyHasher>& colored,
    const std::unordered_map<std::uint32_t, GammaAccumulator>& marginal) {
  GammaTable t;
  for (const auto& [k, a] : colored) {
    if (a.samples > 0) t.colored.emplace(k, a.entry());
  }
  for (const auto& [k, a] : marginal) {
    if (a.samples > 0) t.marginal.emplace(k, a.entry());
  }
  return t;
}

}  // namespace detail

// Path-closure probabilities gamma(c1, c2, D) over data-graph walks. A walk
// from s along direction sequence D ending at t is closed iff the edge s -> t
// exists. Sampling draws a uniform start, a uniform length in [1, L-1], a
// uniform sequence of that length and a uniform walk honoring it; each walk is
// weighted by the product of the branching degrees so the per-key ratio
// estimates closed walks / all walks. Walks that hit a dead end are discarded.
inline GammaTable estimate_gamma(const PropertyGraph& g, const Coloring& coloring, const GammaConfig& cfg) {
  std::unordered_map<GammaKey, detail::GammaAccumulator, KeyHasher> colored;
  std::unordered_map<std::uint32_t, detail::GammaAccumulator> marginal;
  const auto n = g.vertex_count();
  if (n == 0 || g.edge_count() == 0 || cfg.max_cycle_length < 2) return {};
  const auto max_len = std::min<std::uint32_t>(cfg.max_cycle_length - 1, DirectionSequence::kMaxLength);

  if (cfg.exhaustive) {
    // Walk counts per end vertex, extended one direction at a time.
    std::vector<std::uint64_t> scratch(n, 0);
    for (VertexId s = 0; s < n; ++s) {
      std::vector<std::pair<std::vector<std::pair<VertexId, std::uint64_t>>, DirectionSequence>> stack;
      stack.push_back({{{s, 1}}, DirectionSequence{}});
      while (!stack.empty()) {
        auto [ends, seq] = std::move(stack.back());
        stack.pop_back();
        if (seq.length == max_len) continue;
        for (auto d : kDirections) {
          std::vector<VertexId> touched;
          for (const auto& [v, c] : ends) {
            for (auto u : g.neighbors(v, d)) {
              if (scratch[u] == 0) touched.push_back(u);
              scratch[u] += c;
            }
          }
          DirectionSequence next = seq;
          if (d == Direction::kIn) next.backward_bits |= 1u << seq.length;
          ++next.length;
          std::sort(touched.begin(), touched.end());
          std::vector<std::pair<VertexId, std::uint64_t>> next_ends;
          next_ends.reserve(touched.size());
          for (auto u : touched) {
            const auto c = scratch[u];
            scratch[u] = 0;
            next_ends.emplace_back(u, c);
            const bool closed = g.has_edge(s, u);
            colored[GammaKey{coloring[s], coloring[u], next}].add(static_cast<double>(c), closed, c);
            marginal[next.code()].add(static_cast<double>(c), closed, c);
          }
          if (!next_ends.empty()) stack.push_back({std::move(next_ends), next});
        }
      }
    }
    return detail::finish_gamma(colored, marginal);
  }

  Rng rng(mix64(cfg.seed, 0x67616d6d61ULL));
  const std::uint64_t max_attempts = std::max<std::uint64_t>(cfg.num_path_samples * 20, 1000);
  std::uint64_t accepted = 0;
  for (std::uint64_t attempt = 0; attempt < max_attempts && accepted < cfg.num_path_samples; ++attempt) {
    const auto s = static_cast<VertexId>(rng.uniform_index(n));
    DirectionSequence seq;
    seq.length = static_cast<std::uint8_t>(1 + rng.uniform_index(max_len));
    seq.backward_bits = static_cast<std::uint32_t>(rng.uniform_index(std::uint64_t{1} << seq.length));
    VertexId cur = s;
    double weight = 1.0;
    bool dead = false;
    for (std::size_t i = 0; i < seq.length; ++i) {
      const auto nbrs = g.neighbors(cur, seq.step(i));
      if (nbrs.empty()) {
        dead = true;
        break;
      }
      weight *= static_cast<double>(nbrs.size());
      cur = nbrs[rng.uniform_index(nbrs.size())];
    }
    if (dead) continue;
    ++accepted;
    const bool closed = g.has_edge(s, cur);
    colored[GammaKey{coloring[s], coloring[cur], seq}].add(weight, closed);
    marginal[seq.code()].add(weight, closed);
  }
  return detail::finish_gamma(colored, marginal);
}

struct SummaryConfig {
  ColoringConfig coloring = ColoringConfig::mixture(32);
  GammaConfig gamma;
};

// Recomputes epsilon from the wildcard tau tables (both directions).
inline double tau_epsilon(const LiftedGraph& lg) {
  double eps = 1.0;
  for (const auto& [k, s] : lg.tau) {
    if (k.edge_label != kWildcard || k.vertex_label != kWildcard || s.max <= 0) continue;
    if (s.min <= 0) return std::numeric_limits<double>::infinity();
    eps = std::max(eps, s.max / s.min);
  }
  return eps;
}

inline LiftedGraph build_lifted_graph(const PropertyGraph& g, const Coloring& coloring,
                                      const SummaryConfig& cfg = {}) {
  LiftedGraph lg;
  lg.labels = g.labels();
  lg.meta.num_vertices = g.vertex_count();
  lg.meta.num_edges = g.edge_count();
  lg.meta.num_colors = coloring.num_colors;
  lg.meta.coloring_method = cfg.coloring.method;
  lg.meta.target_colors = cfg.coloring.target_colors;
  lg.meta.coloring_seed = cfg.coloring.seed;
  lg.meta.gamma = cfg.gamma;

  const auto sizes = coloring.sizes();
  for (VertexId v = 0; v < g.vertex_count(); ++v) {
    ++lg.psi[PsiKey{coloring[v], kWildcard}];
    for (auto l : g.vertex_labels(v)) ++lg.psi[PsiKey{coloring[v], l}];
  }

  // Per-vertex key counts, folded into per-key min/avg/max over the color.
  std::unordered_map<TauKey, detail::CountStats, KeyHasher> acc;
  std::vector<TauKey> local;
  for (VertexId v = 0; v < g.vertex_count(); ++v) {
    local.clear();
    const ColorId from = coloring[v];
    auto emit = [&](VertexId other, const LabelSet& elabels, Direction d) {
      const ColorId to = coloring[other];
      const auto& vlabels = g.vertex_labels(other);
      local.push_back(TauKey{from, to, kWildcard, kWildcard, d});
      for (auto vl : vlabels) local.push_back(TauKey{from, to, kWildcard, vl, d});
      for (auto el : elabels) {
        local.push_back(TauKey{from, to, el, kWildcard, d});
        for (auto vl : vlabels) local.push_back(TauKey{from, to, el, vl, d});
      }
    };
    const auto out = g.out_neighbors(v);
    const EdgeId first = g.first_out_edge(v);
    for (std::size_t i = 0; i < out.size(); ++i) {
      emit(out[i], g.edge_labels(first + static_cast<EdgeId>(i)), Direction::kOut);
    }
    const auto in = g.in_neighbors(v);
    const auto in_ids = g.in_edge_ids(v);
    for (std::size_t i = 0; i < in.size(); ++i) emit(in[i], g.edge_labels(in_ids[i]), Direction::kIn);

    std::sort(local.begin(), local.end());
    for (std::size_t i = 0; i < local.size();) {
      std::size_t j = i;
      while (j < local.size() && local[j] == local[i]) ++j;
      acc[local[i]].add(j - i);
      i = j;
    }
  }
  for (const auto& [k, s] : acc) {
    const auto size = sizes[k.from];
    lg.tau.emplace(k, TauStats{static_cast<double>(s.min(size)),
                               static_cast<double>(s.sum) / static_cast<double>(size),
                               static_cast<double>(s.max)});
  }

  lg.gamma = estimate_gamma(g, coloring, cfg.gamma);
  lg.meta.epsilon = tau_epsilon(lg);
  lg.meta.degree_range = degree_range_metric(g, coloring);
  return lg;
}

// Colors the graph per cfg.coloring, then builds the lifted graph.
inline LiftedGraph build_summary(const PropertyGraph& g, const SummaryConfig& cfg = {}) {
  return build_lifted_graph(g, build_coloring(g, cfg.coloring), cfg);
}

}  // namespace color
