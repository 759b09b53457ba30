#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "color/graph.hpp"
#include "color/random.hpp"

namespace color {

using ColorId = std::uint32_t;

enum class ColoringMethod : std::uint8_t {
  kQuasiStable = 0,
  kDegree = 1,
  kNeighborLabel = 2,
  kVertexLabel = 3,
  kMixture = 4,
  kHash = 5,
};

inline std::string_view to_string(ColoringMethod m) {
  switch (m) {
    case ColoringMethod::kQuasiStable: return "quasi_stable";
    case ColoringMethod::kDegree: return "degree";
    case ColoringMethod::kNeighborLabel: return "neighbor_label";
    case ColoringMethod::kVertexLabel: return "vertex_label";
    case ColoringMethod::kMixture: return "mixture";
    case ColoringMethod::kHash: return "hash";
  }
  return "?";
}

inline std::optional<ColoringMethod> parse_coloring_method(std::string_view s) {
  for (auto m : {ColoringMethod::kQuasiStable, ColoringMethod::kDegree,
                 ColoringMethod::kNeighborLabel, ColoringMethod::kVertexLabel,
                 ColoringMethod::kMixture, ColoringMethod::kHash}) {
    if (to_string(m) == s) return m;
  }
  return std::nullopt;
}

struct SplitRecord {
  ColoringMethod method;
  ColorId color;     // the color that was split; the new color is the next id
  double criterion;  // range, score or size that selected it
  friend bool operator==(const SplitRecord&, const SplitRecord&) = default;
};

struct Coloring {
  std::vector<ColorId> assignment;
  std::uint32_t num_colors = 0;
  std::vector<SplitRecord> split_log;

  static Coloring single(std::size_t vertex_count) {
    return Coloring{std::vector<ColorId>(vertex_count, 0), vertex_count > 0 ? 1u : 0u, {}};
  }

  static Coloring discrete(std::size_t vertex_count) {
    Coloring c;
    c.assignment.resize(vertex_count);
    for (std::size_t v = 0; v < vertex_count; ++v) c.assignment[v] = static_cast<ColorId>(v);
    c.num_colors = static_cast<std::uint32_t>(vertex_count);
    return c;
  }

  ColorId operator[](VertexId v) const { return assignment[v]; }

  std::vector<std::size_t> sizes() const {
    std::vector<std::size_t> s(num_colors, 0);
    for (auto c : assignment) ++s[c];
    return s;
  }

  std::vector<std::vector<VertexId>> members() const {
    std::vector<std::vector<VertexId>> m(num_colors);
    for (VertexId v = 0; v < assignment.size(); ++v) m[assignment[v]].push_back(v);
    return m;
  }

  // Total over V with every color id non-empty.
  bool valid_for(std::size_t vertex_count) const {
    if (assignment.size() != vertex_count) return false;
    std::vector<bool> seen(num_colors, false);
    for (auto c : assignment) {
      if (c >= num_colors) return false;
      seen[c] = true;
    }
    return std::all_of(seen.begin(), seen.end(), [](bool b) { return b; });
  }
};

struct ColoringConfig {
  ColoringMethod method = ColoringMethod::kMixture;
  std::uint32_t target_colors = 32;
  // Used when method == kMixture. Budgets must sum to target_colors - 1.
  std::vector<std::pair<ColoringMethod, std::uint32_t>> mixture_schedule;
  std::uint64_t seed = 0;

  // Degree, quasi-stable, neighbor-label and vertex-label splits in that
  // order, sharing target_colors - 1 splits as evenly as possible.
  static ColoringConfig mixture(std::uint32_t target_colors, std::uint64_t seed = 0) {
    ColoringConfig cfg;
    cfg.method = ColoringMethod::kMixture;
    cfg.target_colors = target_colors;
    cfg.seed = seed;
    const std::uint32_t splits = target_colors > 0 ? target_colors - 1 : 0;
    const ColoringMethod order[] = {ColoringMethod::kDegree, ColoringMethod::kQuasiStable,
                                    ColoringMethod::kNeighborLabel, ColoringMethod::kVertexLabel};
    for (std::uint32_t i = 0; i < 4; ++i) {
      cfg.mixture_schedule.emplace_back(order[i], splits / 4 + (i < splits % 4 ? 1 : 0));
    }
    return cfg;
  }

  static ColoringConfig single_method(ColoringMethod m, std::uint32_t target_colors,
                                      std::uint64_t seed = 0) {
    if (m == ColoringMethod::kMixture) return mixture(target_colors, seed);
    ColoringConfig cfg;
    cfg.method = m;
    cfg.target_colors = target_colors;
    cfg.seed = seed;
    return cfg;
  }

  void validate() const {
    if (target_colors < 1) throw std::invalid_argument("target_colors must be at least 1");
    if (method == ColoringMethod::kMixture) {
      std::uint64_t total = 0;
      for (const auto& [m, b] : mixture_schedule) {
        if (m == ColoringMethod::kMixture) throw std::invalid_argument("nested mixture schedule");
        total += b;
      }
      if (total != target_colors - 1) {
        throw std::invalid_argument("mixture budgets must sum to target_colors - 1");
      }
    }
  }
};

namespace detail {

// Per (source color, target color, direction) statistics of the number of
// edges a source-color vertex has into the target color. Stored sparsely:
// a pair appears only if at least one edge realizes it.
struct PairKey {
  ColorId from;
  ColorId to;
  Direction dir;
  friend bool operator==(const PairKey&, const PairKey&) = default;
  friend auto operator<=>(const PairKey&, const PairKey&) = default;
};

struct PairKeyHash {
  std::size_t operator()(const PairKey& k) const noexcept {
    return static_cast<std::size_t>(
        mix64((std::uint64_t{k.from} << 33) ^ (std::uint64_t{k.to} << 1) ^ static_cast<std::uint64_t>(k.dir)));
  }
};

struct CountStats {
  std::uint64_t vertices_with_edges = 0;
  std::uint64_t min_nonzero = std::numeric_limits<std::uint64_t>::max();
  std::uint64_t max = 0;
  std::uint64_t sum = 0;

  void add(std::uint64_t c) {
    ++vertices_with_edges;
    min_nonzero = std::min(min_nonzero, c);
    max = std::max(max, c);
    sum += c;
  }
  // Minimum over all `size` vertices of the color, zeros included.
  std::uint64_t min(std::size_t size) const { return vertices_with_edges == size ? min_nonzero : 0; }
  std::uint64_t range(std::size_t size) const { return max - min(size); }
};

using PairStatsMap = std::unordered_map<PairKey, CountStats, PairKeyHash>;

// Number of neighbors of v per (direction, neighbor color), sorted.
inline std::vector<std::pair<std::pair<Direction, ColorId>, std::uint64_t>> neighbor_color_counts(
    const PropertyGraph& g, const Coloring& coloring, VertexId v) {
  std::vector<std::pair<Direction, ColorId>> keys;
  keys.reserve(g.degree(v, Direction::kOut) + g.degree(v, Direction::kIn));
  for (auto d : kDirections) {
    for (auto u : g.neighbors(v, d)) keys.emplace_back(d, coloring[u]);
  }
  std::sort(keys.begin(), keys.end());
  std::vector<std::pair<std::pair<Direction, ColorId>, std::uint64_t>> out;
  for (const auto& k : keys) {
    if (!out.empty() && out.back().first == k) {
      ++out.back().second;
    } else {
      out.emplace_back(k, 1);
    }
  }
  return out;
}

inline PairStatsMap pair_stats(const PropertyGraph& g, const Coloring& coloring) {
  PairStatsMap stats;
  for (VertexId v = 0; v < g.vertex_count(); ++v) {
    for (const auto& [k, c] : neighbor_color_counts(g, coloring, v)) {
      stats[PairKey{coloring[v], k.second, k.first}].add(c);
    }
  }
  return stats;
}

inline std::uint64_t count_into(const PropertyGraph& g, const Coloring& coloring, VertexId v,
                                ColorId target, Direction d) {
  std::uint64_t n = 0;
  for (auto u : g.neighbors(v, d)) n += coloring[u] == target;
  return n;
}

// Moves the flagged members of `from` into a fresh color.
inline Coloring apply_split(const Coloring& base, ColorId from, const std::vector<VertexId>& moved,
                            ColoringMethod method, double criterion) {
  Coloring out = base;
  const ColorId fresh = out.num_colors++;
  for (auto v : moved) out.assignment[v] = fresh;
  out.split_log.push_back({method, from, criterion});
  return out;
}

struct Candidate {
  ColorId color = 0;
  std::uint64_t tiebreak = 0;  // target color / label / direction, smaller wins
  double score = 0;
  bool found = false;

  void offer(ColorId c, std::uint64_t tb, double s) {
    if (s <= 0) return;
    if (!found || s > score || (s == score && (c < color || (c == color && tb < tiebreak)))) {
      color = c;
      tiebreak = tb;
      score = s;
      found = true;
    }
  }
};

inline std::optional<Coloring> split_quasi_stable(const PropertyGraph& g, const Coloring& coloring) {
  const auto sizes = coloring.sizes();
  const auto stats = pair_stats(g, coloring);
  Candidate best;
  for (const auto& [k, s] : stats) {
    const double range = static_cast<double>(s.range(sizes[k.from]));
    best.offer(k.from, (std::uint64_t{k.to} << 1) | static_cast<std::uint64_t>(k.dir), range);
  }
  if (!best.found) return std::nullopt;
  const ColorId target = static_cast<ColorId>(best.tiebreak >> 1);
  const Direction dir = static_cast<Direction>(best.tiebreak & 1);
  const auto& s = stats.at(PairKey{best.color, target, dir});
  const double mean = static_cast<double>(s.sum) / static_cast<double>(sizes[best.color]);
  std::vector<VertexId> moved;
  for (VertexId v = 0; v < g.vertex_count(); ++v) {
    if (coloring[v] == best.color &&
        static_cast<double>(count_into(g, coloring, v, target, dir)) > mean) {
      moved.push_back(v);
    }
  }
  return apply_split(coloring, best.color, moved, ColoringMethod::kQuasiStable, best.score);
}

inline std::optional<Coloring> split_degree(const PropertyGraph& g, const Coloring& coloring) {
  const auto k = coloring.num_colors;
  std::vector<std::uint64_t> lo(2 * k, UINT64_MAX), hi(2 * k, 0), sum(2 * k, 0);
  for (VertexId v = 0; v < g.vertex_count(); ++v) {
    for (auto d : kDirections) {
      const auto idx = 2 * coloring[v] + static_cast<std::size_t>(d);
      const auto deg = g.degree(v, d);
      lo[idx] = std::min<std::uint64_t>(lo[idx], deg);
      hi[idx] = std::max<std::uint64_t>(hi[idx], deg);
      sum[idx] += deg;
    }
  }
  Candidate best;
  for (ColorId c = 0; c < k; ++c) {
    for (auto d : kDirections) {
      const auto idx = 2 * c + static_cast<std::size_t>(d);
      if (hi[idx] >= lo[idx]) {
        best.offer(c, static_cast<std::uint64_t>(d), static_cast<double>(hi[idx] - lo[idx]));
      }
    }
  }
  if (!best.found) return std::nullopt;
  const auto d = static_cast<Direction>(best.tiebreak);
  const auto sizes = coloring.sizes();
  const double mean = static_cast<double>(sum[2 * best.color + best.tiebreak]) /
                      static_cast<double>(sizes[best.color]);
  std::vector<VertexId> moved;
  for (VertexId v = 0; v < g.vertex_count(); ++v) {
    if (coloring[v] == best.color && static_cast<double>(g.degree(v, d)) > mean) moved.push_back(v);
  }
  return apply_split(coloring, best.color, moved, ColoringMethod::kDegree, best.score);
}

// Counts of out-neighbors carrying each vertex label.
inline std::vector<std::pair<LabelId, std::uint64_t>> neighbor_label_counts(const PropertyGraph& g,
                                                                            VertexId v) {
  std::vector<LabelId> labels;
  for (auto u : g.out_neighbors(v)) {
    for (auto l : g.vertex_labels(u)) labels.push_back(l);
  }
  std::sort(labels.begin(), labels.end());
  std::vector<std::pair<LabelId, std::uint64_t>> out;
  for (auto l : labels) {
    if (!out.empty() && out.back().first == l) {
      ++out.back().second;
    } else {
      out.emplace_back(l, 1);
    }
  }
  return out;
}

inline std::optional<Coloring> split_neighbor_label(const PropertyGraph& g, const Coloring& coloring) {
  const auto sizes = coloring.sizes();
  std::map<std::pair<ColorId, LabelId>, CountStats> stats;
  for (VertexId v = 0; v < g.vertex_count(); ++v) {
    for (const auto& [l, c] : neighbor_label_counts(g, v)) stats[{coloring[v], l}].add(c);
  }
  Candidate best;
  for (const auto& [k, s] : stats) {
    best.offer(k.first, k.second, static_cast<double>(s.range(sizes[k.first])));
  }
  if (!best.found) return std::nullopt;
  const auto label = static_cast<LabelId>(best.tiebreak);
  const auto& s = stats.at({best.color, label});
  const double mean = static_cast<double>(s.sum) / static_cast<double>(sizes[best.color]);
  std::vector<VertexId> moved;
  for (VertexId v = 0; v < g.vertex_count(); ++v) {
    if (coloring[v] != best.color) continue;
    std::uint64_t n = 0;
    for (auto u : g.out_neighbors(v)) n += g.vertex_labels(u).contains(label);
    if (static_cast<double>(n) > mean) moved.push_back(v);
  }
  return apply_split(coloring, best.color, moved, ColoringMethod::kNeighborLabel, best.score);
}

inline std::optional<Coloring> split_vertex_label(const PropertyGraph& g, const Coloring& coloring) {
  const auto sizes = coloring.sizes();
  std::map<std::pair<ColorId, LabelId>, std::uint64_t> carriers;
  for (VertexId v = 0; v < g.vertex_count(); ++v) {
    for (auto l : g.vertex_labels(v)) ++carriers[{coloring[v], l}];
  }
  Candidate best;
  for (const auto& [k, n] : carriers) {
    const double size = static_cast<double>(sizes[k.first]);
    const double p = static_cast<double>(n) / size;
    best.offer(k.first, k.second, size * p * (1.0 - p));
  }
  if (!best.found) return std::nullopt;
  const auto label = static_cast<LabelId>(best.tiebreak);
  std::vector<VertexId> moved;
  for (VertexId v = 0; v < g.vertex_count(); ++v) {
    if (coloring[v] == best.color && g.vertex_labels(v).contains(label)) moved.push_back(v);
  }
  return apply_split(coloring, best.color, moved, ColoringMethod::kVertexLabel, best.score);
}

inline std::optional<Coloring> split_hash(const Coloring& coloring, std::uint64_t seed) {
  const auto sizes = coloring.sizes();
  Candidate best;
  for (ColorId c = 0; c < coloring.num_colors; ++c) {
    if (sizes[c] >= 2) best.offer(c, 0, static_cast<double>(sizes[c]));
  }
  if (!best.found) return std::nullopt;
  std::vector<VertexId> members, moved;
  for (VertexId v = 0; v < coloring.assignment.size(); ++v) {
    if (coloring[v] != best.color) continue;
    members.push_back(v);
    if (mix64(v, seed ^ (std::uint64_t{coloring.num_colors} << 32)) & 1) moved.push_back(v);
  }
  // Keep both halves non-empty.
  if (moved.empty()) moved.push_back(members.back());
  if (moved.size() == members.size()) moved.erase(moved.begin());
  return apply_split(coloring, best.color, moved, ColoringMethod::kHash, best.score);
}

}  // namespace detail

struct SplitOutcome {
  Coloring coloring;
  bool split = false;  // false: no positive split criterion, coloring unchanged
};

inline SplitOutcome split_once(const PropertyGraph& g, const Coloring& coloring,
                               ColoringMethod method, std::uint64_t seed = 0) {
  std::optional<Coloring> next;
  switch (method) {
    case ColoringMethod::kQuasiStable: next = detail::split_quasi_stable(g, coloring); break;
    case ColoringMethod::kDegree: next = detail::split_degree(g, coloring); break;
    case ColoringMethod::kNeighborLabel: next = detail::split_neighbor_label(g, coloring); break;
    case ColoringMethod::kVertexLabel: next = detail::split_vertex_label(g, coloring); break;
    case ColoringMethod::kHash: next = detail::split_hash(coloring, seed); break;
    case ColoringMethod::kMixture:
      throw std::invalid_argument("mixture is a schedule, not a single split rule");
  }
  if (!next) return {coloring, false};
  return {std::move(*next), true};
}

// Divisive coloring: start from one color and split until target_colors is
// reached or the method has no positive split criterion left.
inline Coloring build_coloring(const PropertyGraph& g, const ColoringConfig& cfg) {
  cfg.validate();
  const auto n = g.vertex_count();
  if (cfg.method == ColoringMethod::kHash) {
    // Seeded hash into target buckets, then compacted so every id is used.
    std::vector<ColorId> bucket(n);
    for (VertexId v = 0; v < n; ++v) bucket[v] = static_cast<ColorId>(mix64(v, cfg.seed) % cfg.target_colors);
    std::vector<ColorId> remap(cfg.target_colors, UINT32_MAX);
    for (auto b : bucket) remap[b] = 0;
    ColorId next = 0;
    for (auto& r : remap) {
      if (r != UINT32_MAX) r = next++;
    }
    Coloring out;
    out.num_colors = next;
    out.assignment.resize(n);
    for (VertexId v = 0; v < n; ++v) out.assignment[v] = remap[bucket[v]];
    if (next > 1) out.split_log.push_back({ColoringMethod::kHash, 0, static_cast<double>(next)});
    return out;
  }

  Coloring current = Coloring::single(n);
  if (n == 0) return current;
  std::vector<std::pair<ColoringMethod, std::uint32_t>> schedule;
  if (cfg.method == ColoringMethod::kMixture) {
    schedule = cfg.mixture_schedule;
  } else {
    schedule.emplace_back(cfg.method, cfg.target_colors - 1);
  }
  // Budget a method cannot spend carries over to the next one.
  std::uint32_t carry = 0;
  for (const auto& [method, budget] : schedule) {
    std::uint32_t left = budget + carry;
    while (left > 0 && current.num_colors < cfg.target_colors) {
      auto outcome = split_once(g, current, method, cfg.seed);
      if (!outcome.split) break;
      current = std::move(outcome.coloring);
      --left;
    }
    carry = left;
  }
  return current;
}

// Every vertex of a color has the same number of neighbors in every color,
// for both edge directions.
inline bool is_stable(const PropertyGraph& g, const Coloring& coloring) {
  const auto sizes = coloring.sizes();
  for (const auto& [k, s] : detail::pair_stats(g, coloring)) {
    if (s.range(sizes[k.from]) != 0) return false;
  }
  return true;
}

// Color refinement to the coarsest stable coloring that refines `seed`.
inline Coloring refine_to_stable(const PropertyGraph& g, const Coloring& seed) {
  Coloring current = seed;
  const auto n = g.vertex_count();
  for (std::size_t round = 0; round <= n; ++round) {
    using Signature = std::pair<ColorId, std::vector<std::pair<std::pair<Direction, ColorId>, std::uint64_t>>>;
    std::map<Signature, ColorId> ids;
    std::vector<ColorId> next(n);
    for (VertexId v = 0; v < n; ++v) {
      Signature sig{current[v], detail::neighbor_color_counts(g, current, v)};
      auto it = ids.find(sig);
      if (it == ids.end()) it = ids.emplace(std::move(sig), static_cast<ColorId>(ids.size())).first;
      next[v] = it->second;
    }
    if (ids.size() == current.num_colors) break;
    current.assignment = std::move(next);
    current.num_colors = static_cast<std::uint32_t>(ids.size());
  }
  return current;
}

// Mean over ordered color pairs and both directions of (max - min) per-vertex
// edge count into the other color. Pairs without edges contribute 0.
inline double degree_range_metric(const PropertyGraph& g, const Coloring& coloring) {
  if (coloring.num_colors == 0) return 0.0;
  const auto sizes = coloring.sizes();
  double total = 0.0;
  for (const auto& [k, s] : detail::pair_stats(g, coloring)) {
    total += static_cast<double>(s.range(sizes[k.from]));
  }
  const double pairs = 2.0 * static_cast<double>(coloring.num_colors) * coloring.num_colors;
  return total / pairs;
}

// max over color pairs (both directions) with at least one edge of
// tau_max / tau_min; +infinity when some vertex of the source color has no
// edge into the target color while another has.
inline double epsilon_of(const PropertyGraph& g, const Coloring& coloring) {
  const auto sizes = coloring.sizes();
  double eps = 1.0;
  for (const auto& [k, s] : detail::pair_stats(g, coloring)) {
    const auto lo = s.min(sizes[k.from]);
    if (lo == 0) return std::numeric_limits<double>::infinity();
    eps = std::max(eps, static_cast<double>(s.max) / static_cast<double>(lo));
  }
  return eps;
}

}  // namespace color
