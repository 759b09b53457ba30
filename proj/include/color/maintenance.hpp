#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <istream>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "color/binary_io.hpp"
#include "color/coloring.hpp"
#include "color/cuckoo_filter.hpp"
#include "color/error.hpp"
#include "color/graph.hpp"
#include "color/lifted_graph.hpp"
#include "color/random.hpp"

namespace color {

enum class UpdateKind : std::uint8_t { kAddVertex = 0, kAddEdge = 1, kDeleteVertex = 2, kDeleteEdge = 3 };

struct UpdateOp {
  UpdateKind kind = UpdateKind::kAddVertex;
  std::uint64_t vertex = 0;  // vertex ops
  std::uint64_t src = 0;     // edge ops
  std::uint64_t dst = 0;
  LabelSet labels;  // vertex labels (av) or edge labels (ae / de)

  static UpdateOp add_vertex(std::uint64_t id, LabelSet labels = {}) {
    return {UpdateKind::kAddVertex, id, 0, 0, std::move(labels)};
  }
  static UpdateOp add_edge(std::uint64_t s, std::uint64_t d, LabelSet labels = {}) {
    return {UpdateKind::kAddEdge, 0, s, d, std::move(labels)};
  }
  static UpdateOp delete_vertex(std::uint64_t id) { return {UpdateKind::kDeleteVertex, id, 0, 0, {}}; }
  static UpdateOp delete_edge(std::uint64_t s, std::uint64_t d, LabelSet labels = {}) {
    return {UpdateKind::kDeleteEdge, 0, s, d, std::move(labels)};
  }
  friend bool operator==(const UpdateOp&, const UpdateOp&) = default;
};

// Inverse of an insertion. Deletions have no stateless inverse.
inline UpdateOp inverse(const UpdateOp& op) {
  switch (op.kind) {
    case UpdateKind::kAddVertex: return UpdateOp::delete_vertex(op.vertex);
    case UpdateKind::kAddEdge: return UpdateOp::delete_edge(op.src, op.dst, op.labels);
    default: throw std::invalid_argument("only insertions have a stateless inverse");
  }
}

//   av <id> [<label>...]
//   ae <src> <dst> [<label>...]
//   dv <id>
//   de <src> <dst> [<label>...]
// New label names are interned into `dict`.
inline std::vector<UpdateOp> parse_updates(std::istream& in, LabelDictionary& dict) {
  std::vector<UpdateOp> ops;
  std::string line;
  std::size_t lineno = 0;
  auto labels_from = [&](std::span<const std::string_view> toks) {
    LabelSet s;
    for (auto t : toks) {
      if (t != "-1") s.insert(dict.intern(t));
    }
    return s;
  };
  while (std::getline(in, line)) {
    ++lineno;
    const auto toks = detail::tokenize(line);
    if (toks.empty()) continue;
    const auto kind = toks[0];
    const std::span<const std::string_view> all(toks);
    if (kind == "av" || kind == "dv") {
      if (toks.size() < 2) throw ParseError(lineno, "expected a vertex id");
      const auto id = detail::parse_id(toks[1], lineno);
      if (kind == "dv") {
        if (toks.size() != 2) throw ParseError(lineno, "dv takes only a vertex id");
        ops.push_back(UpdateOp::delete_vertex(id));
      } else {
        ops.push_back(UpdateOp::add_vertex(id, labels_from(all.subspan(2))));
      }
    } else if (kind == "ae" || kind == "de") {
      if (toks.size() < 3) throw ParseError(lineno, "expected source and destination ids");
      const auto s = detail::parse_id(toks[1], lineno);
      const auto d = detail::parse_id(toks[2], lineno);
      auto labels = labels_from(all.subspan(3));
      ops.push_back(kind == "ae" ? UpdateOp::add_edge(s, d, std::move(labels))
                                 : UpdateOp::delete_edge(s, d, std::move(labels)));
    } else {
      throw ParseError(lineno, "unknown update record '" + std::string(kind) + "'");
    }
  }
  return ops;
}

inline std::vector<UpdateOp> load_updates(const std::filesystem::path& path, LabelDictionary& dict) {
  auto in = detail::open_input(path);
  return parse_updates(in, dict);
}

struct AddedVertex {
  ColorId color = 0;
  LabelSet labels;
  std::uint64_t incident_edges = 0;
  friend bool operator==(const AddedVertex&, const AddedVertex&) = default;
};

// Approximate vertex -> color map: one cuckoo filter per color over external
// vertex ids, an exact spill map for build-time vertices the filters would
// misreport, and exact records for vertices added by updates.
class VertexColorMap {
 public:
  VertexColorMap() = default;

  // Filters are sized so that the chance of an unknown id matching any
  // color's filter stays at or below `fpr`.
  static VertexColorMap build(const PropertyGraph& g, const Coloring& coloring, double fpr = 0.05,
                              std::uint64_t seed = 0) {
    VertexColorMap m;
    const auto k = coloring.num_colors;
    const unsigned bits = CuckooFilter::bits_for(fpr / std::max<std::uint32_t>(1, k));
    const auto sizes = coloring.sizes();
    m.filters_.reserve(k);
    for (ColorId c = 0; c < k; ++c) m.filters_.emplace_back(sizes[c], bits, mix64(seed, c));
    for (VertexId v = 0; v < g.vertex_count(); ++v) m.filters_[coloring[v]].insert(g.external_id(v));
    for (VertexId v = 0; v < g.vertex_count(); ++v) {
      const auto id = g.external_id(v);
      if (m.probe(id) != coloring[v]) m.spill_.emplace(id, coloring[v]);
    }
    m.label_dist_.resize(k);
    std::vector<std::map<LabelSet, std::uint64_t>> freq(k);
    for (VertexId v = 0; v < g.vertex_count(); ++v) ++freq[coloring[v]][g.vertex_labels(v)];
    for (ColorId c = 0; c < k; ++c) m.label_dist_[c].assign(freq[c].begin(), freq[c].end());
    return m;
  }

  std::optional<ColorId> find(std::uint64_t id) const {
    if (auto it = added_.find(id); it != added_.end()) return it->second.color;
    if (auto it = spill_.find(id); it != spill_.end()) return it->second;
    return probe(id);
  }

  ColorId lookup(std::uint64_t id) const {
    if (auto c = find(id)) return *c;
    throw ValidationError("unknown vertex " + std::to_string(id));
  }

  const AddedVertex* added(std::uint64_t id) const {
    auto it = added_.find(id);
    return it == added_.end() ? nullptr : &it->second;
  }
  AddedVertex* added(std::uint64_t id) {
    auto it = added_.find(id);
    return it == added_.end() ? nullptr : &it->second;
  }
  void record_added(std::uint64_t id, AddedVertex v) { added_[id] = std::move(v); }
  void erase_added(std::uint64_t id) { added_.erase(id); }
  std::size_t added_count() const noexcept { return added_.size(); }

  // Draws a label set from the color's build-time label-set frequencies.
  LabelSet sample_labels(ColorId c, Rng& rng) const {
    if (c >= label_dist_.size() || label_dist_[c].empty()) return {};
    std::uint64_t total = 0;
    for (const auto& [_, n] : label_dist_[c]) total += n;
    auto r = rng.uniform_index(total);
    for (const auto& [s, n] : label_dist_[c]) {
      if (r < n) return s;
      r -= n;
    }
    return label_dist_[c].back().first;
  }

  std::size_t num_colors() const noexcept { return filters_.size(); }
  std::size_t spill_size() const noexcept { return spill_.size(); }
  std::uint64_t collisions() const noexcept { return collisions_; }
  // Union bound over the per-color filters.
  double false_positive_bound() const {
    double p = 0;
    for (const auto& f : filters_) p += f.false_positive_bound();
    return std::min(1.0, p);
  }
  std::size_t memory_bytes() const {
    std::size_t b = 0;
    for (const auto& f : filters_) b += f.memory_bytes();
    return b;
  }

  friend bool operator==(const VertexColorMap& a, const VertexColorMap& b) {
    return a.filters_ == b.filters_ && a.spill_ == b.spill_ && a.added_ == b.added_ &&
           a.label_dist_ == b.label_dist_;
  }

  void write(ByteWriter& w) const {
    w.u64(filters_.size());
    for (const auto& f : filters_) f.write(w);
    w.u64(spill_.size());
    for (const auto& [id, c] : std::map<std::uint64_t, ColorId>(spill_.begin(), spill_.end())) {
      w.u64(id);
      w.u32(c);
    }
    w.u64(added_.size());
    for (const auto& [id, v] : std::map<std::uint64_t, AddedVertex>(added_.begin(), added_.end())) {
      w.u64(id);
      w.u32(v.color);
      write_labels(w, v.labels);
      w.u64(v.incident_edges);
    }
    w.u64(label_dist_.size());
    for (const auto& dist : label_dist_) {
      w.u64(dist.size());
      for (const auto& [s, n] : dist) {
        write_labels(w, s);
        w.u64(n);
      }
    }
    w.u64(collisions_);
  }

  static VertexColorMap read(ByteReader& r) {
    VertexColorMap m;
    const auto k = r.count(1);
    for (std::uint64_t c = 0; c < k; ++c) m.filters_.push_back(CuckooFilter::read(r));
    const auto spills = r.count(12);
    for (std::uint64_t i = 0; i < spills; ++i) {
      const auto id = r.u64();
      m.spill_.emplace(id, r.u32());
    }
    const auto added = r.count(20);
    for (std::uint64_t i = 0; i < added; ++i) {
      const auto id = r.u64();
      AddedVertex v;
      v.color = r.u32();
      v.labels = read_labels(r);
      v.incident_edges = r.u64();
      m.added_.emplace(id, std::move(v));
    }
    const auto dists = r.count(8);
    m.label_dist_.resize(dists);
    for (auto& dist : m.label_dist_) {
      const auto n = r.count(12);
      for (std::uint64_t i = 0; i < n; ++i) {
        auto s = read_labels(r);
        dist.emplace_back(std::move(s), r.u64());
      }
    }
    m.collisions_ = r.u64();
    return m;
  }

  static void write_labels(ByteWriter& w, const LabelSet& s) {
    w.u32(static_cast<std::uint32_t>(s.size()));
    for (auto l : s) w.u32(l);
  }
  static LabelSet read_labels(ByteReader& r) {
    const auto n = r.u32();
    if (n > r.remaining() / 4) throw FormatError("label set exceeds section size");
    std::vector<LabelId> ids(n);
    for (auto& l : ids) l = r.u32();
    return LabelSet(std::move(ids));
  }

 private:
  // Smallest color whose filter reports the id; multiple hits are counted.
  std::optional<ColorId> probe(std::uint64_t id) const {
    std::optional<ColorId> hit;
    for (ColorId c = 0; c < filters_.size(); ++c) {
      if (!filters_[c].contains(id)) continue;
      if (hit) {
        ++collisions_;
        break;
      }
      hit = c;
    }
    return hit;
  }

  std::vector<CuckooFilter> filters_;
  std::unordered_map<std::uint64_t, ColorId> spill_;
  std::unordered_map<std::uint64_t, AddedVertex> added_;
  std::vector<std::vector<std::pair<LabelSet, std::uint64_t>>> label_dist_;
  mutable std::uint64_t collisions_ = 0;
};

struct EdgeRecord {
  std::uint64_t src = 0;
  std::uint64_t dst = 0;
  ColorId c_src = 0;
  ColorId c_dst = 0;
  LabelSet edge_labels;
  LabelSet src_labels;
  LabelSet dst_labels;
  friend bool operator==(const EdgeRecord&, const EdgeRecord&) = default;
};

struct UpdateLog {
  std::uint64_t edge_adds = 0;    // net edges added by updates
  std::uint64_t vertex_adds = 0;  // net vertices added by updates
  std::uint64_t next_sequence = 0;
  std::vector<std::uint64_t> timestamps;  // logical sequence number per applied op
  std::vector<EdgeRecord> added_edges;    // live update-added edges, oldest first
  friend bool operator==(const UpdateLog&, const UpdateLog&) = default;
};

// Everything needed to keep updating a summary across runs.
struct MaintenanceState {
  VertexColorMap map;
  UpdateLog log;
  std::uint64_t seed = 0;
  // Build-time stats of every tau key touched by updates ({0,0,0} for keys
  // the updates created). min/max are re-derived from these after each op.
  std::unordered_map<TauKey, TauStats, KeyHasher> anchors;

  static MaintenanceState build(const PropertyGraph& g, const Coloring& coloring, double fpr = 0.05,
                                std::uint64_t seed = 0) {
    return MaintenanceState{VertexColorMap::build(g, coloring, fpr, seed), {}, seed, {}};
  }

  void write(ByteWriter& w) const {
    map.write(w);
    w.u64(log.edge_adds);
    w.u64(log.vertex_adds);
    w.u64(log.next_sequence);
    w.u64(log.timestamps.size());
    for (auto t : log.timestamps) w.u64(t);
    w.u64(log.added_edges.size());
    for (const auto& e : log.added_edges) {
      w.u64(e.src);
      w.u64(e.dst);
      w.u32(e.c_src);
      w.u32(e.c_dst);
      VertexColorMap::write_labels(w, e.edge_labels);
      VertexColorMap::write_labels(w, e.src_labels);
      VertexColorMap::write_labels(w, e.dst_labels);
    }
    w.u64(seed);
    std::vector<std::pair<TauKey, TauStats>> sorted(anchors.begin(), anchors.end());
    std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    w.u64(sorted.size());
    for (const auto& [k, s] : sorted) {
      w.u32(k.from);
      w.u32(k.to);
      w.u32(k.edge_label);
      w.u32(k.vertex_label);
      w.u8(static_cast<std::uint8_t>(k.dir));
      w.f64(s.min);
      w.f64(s.avg);
      w.f64(s.max);
    }
  }

  static MaintenanceState read(ByteReader& r) {
    MaintenanceState st;
    st.map = VertexColorMap::read(r);
    st.log.edge_adds = r.u64();
    st.log.vertex_adds = r.u64();
    st.log.next_sequence = r.u64();
    const auto nt = r.count(8);
    for (std::uint64_t i = 0; i < nt; ++i) st.log.timestamps.push_back(r.u64());
    const auto ne = r.count(36);
    for (std::uint64_t i = 0; i < ne; ++i) {
      EdgeRecord e;
      e.src = r.u64();
      e.dst = r.u64();
      e.c_src = r.u32();
      e.c_dst = r.u32();
      e.edge_labels = VertexColorMap::read_labels(r);
      e.src_labels = VertexColorMap::read_labels(r);
      e.dst_labels = VertexColorMap::read_labels(r);
      st.log.added_edges.push_back(std::move(e));
    }
    st.seed = r.u64();
    const auto na = r.count(41);
    for (std::uint64_t i = 0; i < na; ++i) {
      TauKey k;
      k.from = r.u32();
      k.to = r.u32();
      k.edge_label = r.u32();
      k.vertex_label = r.u32();
      const auto d = r.u8();
      if (d > 1) throw FormatError("bad direction tag");
      k.dir = static_cast<Direction>(d);
      TauStats s;
      s.min = r.f64();
      s.avg = r.f64();
      s.max = r.f64();
      st.anchors.emplace(k, s);
    }
    return st;
  }
};

namespace detail {

inline constexpr double kVanishing = 1e-12;

// Applies `f` to tau[k].avg and re-derives min/max from the anchor.
template <class F>
void modify_tau(LiftedGraph& lg, MaintenanceState& st, const TauKey& k, F&& f) {
  auto [it, created] = lg.tau.try_emplace(k, TauStats{});
  auto anchor = st.anchors.try_emplace(k, created ? TauStats{} : it->second).first->second;
  auto& s = it->second;
  s.avg = std::max(0.0, f(s.avg));
  if (anchor.max == 0 && s.avg < kVanishing) {
    lg.tau.erase(it);
    st.anchors.erase(k);
    return;
  }
  s.min = std::min(anchor.min, s.avg);
  s.max = std::max(anchor.max, s.avg);
}

inline void rescale_color(LiftedGraph& lg, MaintenanceState& st, ColorId c, double factor) {
  std::vector<TauKey> keys;
  for (const auto& [k, _] : lg.tau) {
    if (k.from == c) keys.push_back(k);
  }
  std::sort(keys.begin(), keys.end());
  for (const auto& k : keys) modify_tau(lg, st, k, [&](double a) { return a * factor; });
}

inline void bump_psi(LiftedGraph& lg, ColorId c, const LabelSet& labels, int delta) {
  auto step = [&](LabelId l) {
    auto& n = lg.psi[PsiKey{c, l}];
    if (delta < 0 && n == 0) throw std::logic_error("psi underflow");
    n = delta > 0 ? n + 1 : n - 1;
    if (n == 0) lg.psi.erase(PsiKey{c, l});
  };
  step(kWildcard);
  for (auto l : labels) step(l);
}

// Adds `delta` edges (+1 / -1) with the given endpoint attributes to both
// direction tables.
inline void bump_edge(LiftedGraph& lg, MaintenanceState& st, ColorId cs, ColorId cd, const LabelSet& el,
                      const LabelSet& src_labels, const LabelSet& dst_labels, double delta) {
  auto emit = [&](ColorId from, ColorId to, const LabelSet& vl, Direction d) {
    const auto size = lg.psi_of(from);
    if (size == 0) return;
    const double inc = delta / static_cast<double>(size);
    auto add = [&](LabelId e, LabelId v) { modify_tau(lg, st, TauKey{from, to, e, v, d}, [&](double a) { return a + inc; }); };
    add(kWildcard, kWildcard);
    for (auto v : vl) add(kWildcard, v);
    for (auto e : el) {
      add(e, kWildcard);
      for (auto v : vl) add(e, v);
    }
  };
  emit(cs, cd, dst_labels, Direction::kOut);
  emit(cd, cs, src_labels, Direction::kIn);
}

inline LabelSet endpoint_labels(const MaintenanceState& st, std::uint64_t id, ColorId c, Rng& rng) {
  if (const auto* a = st.map.added(id)) return a->labels;
  return st.map.sample_labels(c, rng);
}

}  // namespace detail

// Largest color by psi; ties go to the smallest id.
inline ColorId largest_color(const LiftedGraph& lg) {
  ColorId best = 0;
  std::uint64_t size = 0;
  for (ColorId c = 0; c < lg.num_colors(); ++c) {
    const auto s = lg.psi_of(c);
    if (s > size) {
      size = s;
      best = c;
    }
  }
  return best;
}

inline ColorId lookup_color(const VertexColorMap& map, std::uint64_t id) { return map.lookup(id); }

// Applies one update to the summary. Deleting an update-added edge is the
// exact inverse of its insertion; deleting a build-time edge subtracts it
// with sampled endpoint attributes (clamped at zero).
inline void apply_update(LiftedGraph& lg, MaintenanceState& st, const UpdateOp& op) {
  if (lg.num_colors() == 0) throw ValidationError("cannot update a summary without colors");
  Rng rng(mix64(st.seed, st.log.next_sequence));
  switch (op.kind) {
    case UpdateKind::kAddVertex: {
      if (st.map.added(op.vertex)) throw ValidationError("vertex " + std::to_string(op.vertex) + " already added");
      const ColorId c = largest_color(lg);
      const auto old = lg.psi_of(c);
      detail::rescale_color(lg, st, c, static_cast<double>(old) / static_cast<double>(old + 1));
      detail::bump_psi(lg, c, op.labels, +1);
      st.map.record_added(op.vertex, AddedVertex{c, op.labels, 0});
      ++st.log.vertex_adds;
      ++lg.meta.num_vertices;
      break;
    }
    case UpdateKind::kDeleteVertex: {
      auto* a = st.map.added(op.vertex);
      if (!a) throw ValidationError("vertex " + std::to_string(op.vertex) + " was not added by an update");
      if (a->incident_edges > 0) {
        throw ValidationError("vertex " + std::to_string(op.vertex) + " still has update-added edges");
      }
      const ColorId c = a->color;
      const auto old = lg.psi_of(c);
      detail::bump_psi(lg, c, a->labels, -1);
      if (old > 1) detail::rescale_color(lg, st, c, static_cast<double>(old) / static_cast<double>(old - 1));
      st.map.erase_added(op.vertex);
      --st.log.vertex_adds;
      --lg.meta.num_vertices;
      break;
    }
    case UpdateKind::kAddEdge: {
      EdgeRecord e;
      e.src = op.src;
      e.dst = op.dst;
      e.c_src = st.map.lookup(op.src);
      e.c_dst = st.map.lookup(op.dst);
      e.edge_labels = op.labels;
      e.src_labels = detail::endpoint_labels(st, op.src, e.c_src, rng);
      e.dst_labels = detail::endpoint_labels(st, op.dst, e.c_dst, rng);
      detail::bump_edge(lg, st, e.c_src, e.c_dst, e.edge_labels, e.src_labels, e.dst_labels, +1.0);
      if (auto* a = st.map.added(op.src)) ++a->incident_edges;
      if (auto* a = st.map.added(op.dst)) ++a->incident_edges;
      st.log.added_edges.push_back(std::move(e));
      ++st.log.edge_adds;
      ++lg.meta.num_edges;
      break;
    }
    case UpdateKind::kDeleteEdge: {
      auto& recs = st.log.added_edges;
      auto it = std::find_if(recs.rbegin(), recs.rend(), [&](const EdgeRecord& r) {
        return r.src == op.src && r.dst == op.dst && (op.labels.empty() || r.edge_labels == op.labels);
      });
      if (it != recs.rend()) {
        detail::bump_edge(lg, st, it->c_src, it->c_dst, it->edge_labels, it->src_labels, it->dst_labels, -1.0);
        if (auto* a = st.map.added(op.src)) --a->incident_edges;
        if (auto* a = st.map.added(op.dst)) --a->incident_edges;
        recs.erase(std::next(it).base());
        --st.log.edge_adds;
      } else {
        const auto cs = st.map.lookup(op.src);
        const auto cd = st.map.lookup(op.dst);
        const auto sl = detail::endpoint_labels(st, op.src, cs, rng);
        const auto dl = detail::endpoint_labels(st, op.dst, cd, rng);
        detail::bump_edge(lg, st, cs, cd, op.labels, sl, dl, -1.0);
      }
      if (lg.meta.num_edges > 0) --lg.meta.num_edges;
      break;
    }
  }
  lg.meta.applied_edge_updates = st.log.edge_adds;
  st.log.timestamps.push_back(st.log.next_sequence++);
}

inline void apply_updates(LiftedGraph& lg, MaintenanceState& st, std::span<const UpdateOp> ops) {
  for (const auto& op : ops) apply_update(lg, st, op);
}

// gamma' for a stored key; nullopt when the key has no observations.
inline std::optional<double> adjusted_gamma(const LiftedGraph& lg, const UpdateLog& log, const GammaKey& key) {
  const auto e = lg.raw_gamma(key.from, key.to, key.seq);
  if (!e) return std::nullopt;
  return adjust_closure(e->probability, log.edge_adds, lg.meta.num_vertices);
}

}  // namespace color
