#pragma once

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <istream>
#include <numeric>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "color/error.hpp"

namespace color {

using VertexId = std::uint32_t;
using EdgeId = std::uint32_t;
using LabelId = std::uint32_t;

// Statistic keys use kWildcard for "no predicate". Query labels that are not
// in the data dictionary resolve to kUnknownLabel, which no vertex or edge
// carries.
inline constexpr LabelId kWildcard = UINT32_MAX;
inline constexpr LabelId kUnknownLabel = UINT32_MAX - 1;

enum class Direction : std::uint8_t { kOut = 0, kIn = 1 };

inline constexpr Direction kDirections[] = {Direction::kOut, Direction::kIn};

constexpr Direction reverse(Direction d) noexcept {
  return d == Direction::kOut ? Direction::kIn : Direction::kOut;
}

// Sorted, duplicate-free set of label ids.
class LabelSet {
 public:
  LabelSet() = default;
  LabelSet(std::initializer_list<LabelId> ids) : ids_(ids) { normalize(); }
  explicit LabelSet(std::vector<LabelId> ids) : ids_(std::move(ids)) { normalize(); }

  bool empty() const noexcept { return ids_.empty(); }
  std::size_t size() const noexcept { return ids_.size(); }
  auto begin() const noexcept { return ids_.begin(); }
  auto end() const noexcept { return ids_.end(); }
  const std::vector<LabelId>& ids() const noexcept { return ids_; }

  bool contains(LabelId id) const { return std::binary_search(ids_.begin(), ids_.end(), id); }

  // True when every label of `required` is in this set; an empty requirement
  // (wildcard) is satisfied by anything.
  bool satisfies(const LabelSet& required) const {
    return std::includes(ids_.begin(), ids_.end(), required.ids_.begin(), required.ids_.end());
  }

  void insert(LabelId id) {
    auto it = std::lower_bound(ids_.begin(), ids_.end(), id);
    if (it == ids_.end() || *it != id) ids_.insert(it, id);
  }

  void merge(const LabelSet& other) {
    std::vector<LabelId> out;
    out.reserve(ids_.size() + other.ids_.size());
    std::set_union(ids_.begin(), ids_.end(), other.ids_.begin(), other.ids_.end(),
                   std::back_inserter(out));
    ids_ = std::move(out);
  }

  friend bool operator==(const LabelSet&, const LabelSet&) = default;
  friend auto operator<=>(const LabelSet& a, const LabelSet& b) { return a.ids_ <=> b.ids_; }

 private:
  void normalize() {
    std::sort(ids_.begin(), ids_.end());
    ids_.erase(std::unique(ids_.begin(), ids_.end()), ids_.end());
  }

  std::vector<LabelId> ids_;
};

// Bijection between external label strings and dense ids.
class LabelDictionary {
 public:
  LabelId intern(std::string_view name) {
    auto it = index_.find(std::string(name));
    if (it != index_.end()) return it->second;
    const auto id = static_cast<LabelId>(names_.size());
    names_.emplace_back(name);
    index_.emplace(names_.back(), id);
    return id;
  }

  std::optional<LabelId> find(std::string_view name) const {
    auto it = index_.find(std::string(name));
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  // Unknown names resolve to kUnknownLabel.
  LabelId resolve(std::string_view name) const { return find(name).value_or(kUnknownLabel); }

  const std::string& name(LabelId id) const { return names_.at(id); }
  std::size_t size() const noexcept { return names_.size(); }
  const std::vector<std::string>& names() const noexcept { return names_; }

  friend bool operator==(const LabelDictionary& a, const LabelDictionary& b) {
    return a.names_ == b.names_;
  }

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, LabelId> index_;
};

struct Edge {
  VertexId src = 0;
  VertexId dst = 0;
  friend bool operator==(const Edge&, const Edge&) = default;
  friend auto operator<=>(const Edge&, const Edge&) = default;
};

// Immutable directed data graph with label sets on vertices and edges.
// Edges are deduplicated and sorted by (src, dst); an EdgeId is the position
// in that order. Self-loops are kept and count toward both degrees.
class PropertyGraph {
 public:
  PropertyGraph() = default;

  PropertyGraph(std::vector<LabelSet> vertex_labels,
                std::vector<std::pair<Edge, LabelSet>> edges,
                LabelDictionary labels = {},
                std::vector<std::uint64_t> external_ids = {})
      : vertex_labels_(std::move(vertex_labels)),
        labels_(std::move(labels)),
        external_ids_(std::move(external_ids)) {
    const auto n = vertex_labels_.size();
    if (external_ids_.empty()) {
      external_ids_.resize(n);
      std::iota(external_ids_.begin(), external_ids_.end(), std::uint64_t{0});
    } else if (external_ids_.size() != n) {
      throw ValidationError("external id table does not match vertex count");
    }
    for (const auto& [e, _] : edges) {
      if (e.src >= n || e.dst >= n) {
        throw ValidationError("edge endpoint out of range: " + std::to_string(e.src) + " -> " +
                              std::to_string(e.dst));
      }
    }
    std::stable_sort(edges.begin(), edges.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    for (auto& [e, l] : edges) {
      if (!edges_.empty() && edges_.back() == e) {
        edge_labels_.back().merge(l);
        ++duplicate_edges_;
        continue;
      }
      edges_.push_back(e);
      edge_labels_.push_back(std::move(l));
    }

    out_offsets_.assign(n + 1, 0);
    in_offsets_.assign(n + 1, 0);
    for (const auto& e : edges_) {
      ++out_offsets_[e.src + 1];
      ++in_offsets_[e.dst + 1];
    }
    std::partial_sum(out_offsets_.begin(), out_offsets_.end(), out_offsets_.begin());
    std::partial_sum(in_offsets_.begin(), in_offsets_.end(), in_offsets_.begin());

    out_targets_.resize(edges_.size());
    in_sources_.resize(edges_.size());
    in_edge_ids_.resize(edges_.size());
    std::vector<std::uint32_t> in_fill(in_offsets_.begin(), in_offsets_.end() - 1);
    for (EdgeId id = 0; id < edges_.size(); ++id) {
      const auto& e = edges_[id];
      out_targets_[id] = e.dst;  // edges_ is sorted, so out ranges line up with ids
      const auto slot = in_fill[e.dst]++;
      in_sources_[slot] = e.src;
      in_edge_ids_[slot] = id;
    }
    // in-lists come out sorted by src because edges_ is sorted by (src, dst).
  }

  std::size_t vertex_count() const noexcept { return vertex_labels_.size(); }
  std::size_t edge_count() const noexcept { return edges_.size(); }
  std::span<const Edge> edges() const noexcept { return edges_; }
  const Edge& edge(EdgeId id) const { return edges_.at(id); }
  const LabelSet& edge_labels(EdgeId id) const { return edge_labels_.at(id); }
  const LabelSet& vertex_labels(VertexId v) const { return vertex_labels_.at(v); }
  const LabelDictionary& labels() const noexcept { return labels_; }
  std::uint64_t external_id(VertexId v) const { return external_ids_.at(v); }
  const std::vector<std::uint64_t>& external_ids() const noexcept { return external_ids_; }
  std::size_t duplicate_edges() const noexcept { return duplicate_edges_; }

  std::span<const VertexId> out_neighbors(VertexId v) const {
    check(v);
    return {out_targets_.data() + out_offsets_[v], out_targets_.data() + out_offsets_[v + 1]};
  }
  // Edge ids of v's out-edges, parallel to out_neighbors(v).
  EdgeId first_out_edge(VertexId v) const {
    check(v);
    return out_offsets_[v];
  }
  std::span<const VertexId> in_neighbors(VertexId v) const {
    check(v);
    return {in_sources_.data() + in_offsets_[v], in_sources_.data() + in_offsets_[v + 1]};
  }
  std::span<const EdgeId> in_edge_ids(VertexId v) const {
    check(v);
    return {in_edge_ids_.data() + in_offsets_[v], in_edge_ids_.data() + in_offsets_[v + 1]};
  }

  std::span<const VertexId> neighbors(VertexId v, Direction d) const {
    return d == Direction::kOut ? out_neighbors(v) : in_neighbors(v);
  }

  std::size_t degree(VertexId v, Direction d) const { return neighbors(v, d).size(); }

  std::optional<EdgeId> find_edge(VertexId src, VertexId dst) const {
    const auto out = out_neighbors(src);
    auto it = std::lower_bound(out.begin(), out.end(), dst);
    if (it == out.end() || *it != dst) return std::nullopt;
    return static_cast<EdgeId>(out_offsets_[src] + (it - out.begin()));
  }

  bool has_edge(VertexId src, VertexId dst) const { return find_edge(src, dst).has_value(); }

  friend bool operator==(const PropertyGraph& a, const PropertyGraph& b) {
    return a.vertex_labels_ == b.vertex_labels_ && a.edges_ == b.edges_ &&
           a.edge_labels_ == b.edge_labels_ && a.external_ids_ == b.external_ids_;
  }

 private:
  void check(VertexId v) const {
    if (v >= vertex_labels_.size()) {
      throw std::out_of_range("vertex id " + std::to_string(v) + " out of range");
    }
  }

  std::vector<LabelSet> vertex_labels_;
  std::vector<Edge> edges_;
  std::vector<LabelSet> edge_labels_;
  LabelDictionary labels_;
  std::vector<std::uint64_t> external_ids_;
  std::vector<std::uint32_t> out_offsets_, in_offsets_;
  std::vector<VertexId> out_targets_, in_sources_;
  std::vector<EdgeId> in_edge_ids_;
  std::size_t duplicate_edges_ = 0;
};

inline std::size_t degree(const PropertyGraph& g, VertexId v, Direction d) {
  return g.degree(v, d);
}

// Incremental construction for tests and generators.
class GraphBuilder {
 public:
  VertexId add_vertex(LabelSet labels = {}) {
    labels_.push_back(std::move(labels));
    return static_cast<VertexId>(labels_.size() - 1);
  }
  void add_vertices(std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) add_vertex();
  }
  void add_edge(VertexId src, VertexId dst, LabelSet labels = {}) {
    edges_.emplace_back(Edge{src, dst}, std::move(labels));
  }
  std::size_t vertex_count() const noexcept { return labels_.size(); }
  PropertyGraph build(LabelDictionary dict = {}) const { return PropertyGraph(labels_, edges_, std::move(dict)); }

 private:
  std::vector<LabelSet> labels_;
  std::vector<std::pair<Edge, LabelSet>> edges_;
};

struct QueryEdge {
  VertexId src = 0;
  VertexId dst = 0;
  LabelSet labels;  // required edge labels; empty = wildcard
  friend bool operator==(const QueryEdge&, const QueryEdge&) = default;
};

// Connected directed pattern. Edge directions are kept exactly as authored.
class QueryGraph {
 public:
  QueryGraph(std::vector<LabelSet> vertex_predicates, std::vector<QueryEdge> edges)
      : vertex_predicates_(std::move(vertex_predicates)), edges_(std::move(edges)) {
    const auto n = vertex_predicates_.size();
    if (n == 0) throw ValidationError("query graph has no vertices");
    for (const auto& e : edges_) {
      if (e.src >= n || e.dst >= n) throw ValidationError("query edge endpoint out of range");
    }
    // Union-find over the undirected pattern.
    std::vector<VertexId> parent(n);
    std::iota(parent.begin(), parent.end(), VertexId{0});
    auto find = [&](VertexId x) {
      while (parent[x] != x) x = parent[x] = parent[parent[x]];
      return x;
    };
    std::size_t components = n;
    for (const auto& e : edges_) {
      const auto a = find(e.src), b = find(e.dst);
      if (a != b) {
        parent[a] = b;
        --components;
      }
    }
    if (components != 1) throw ValidationError("query graph is not connected");
  }

  std::size_t vertex_count() const noexcept { return vertex_predicates_.size(); }
  std::size_t edge_count() const noexcept { return edges_.size(); }
  std::span<const QueryEdge> edges() const noexcept { return edges_; }
  const QueryEdge& edge(std::size_t i) const { return edges_.at(i); }
  const LabelSet& vertex_predicate(VertexId v) const { return vertex_predicates_.at(v); }
  const std::vector<LabelSet>& vertex_predicates() const noexcept { return vertex_predicates_; }

  // Undirected adjacency: for each vertex, the incident edge indices.
  std::vector<std::vector<std::size_t>> incident_edges() const {
    std::vector<std::vector<std::size_t>> inc(vertex_count());
    for (std::size_t i = 0; i < edges_.size(); ++i) {
      inc[edges_[i].src].push_back(i);
      if (edges_[i].dst != edges_[i].src) inc[edges_[i].dst].push_back(i);
    }
    return inc;
  }

  friend bool operator==(const QueryGraph&, const QueryGraph&) = default;

 private:
  std::vector<LabelSet> vertex_predicates_;
  std::vector<QueryEdge> edges_;
};

struct NamedQuery {
  std::string id;
  QueryGraph query;
};

// ---------------------------------------------------------------------------
// Text formats
//
//   v <id> [<label> ...]
//   e <src> <dst> [<label> ...]
//   # comment
//
// A label token "-1" stands for "no label" (data files) or wildcard (query
// files). Query set files may additionally contain `q <name>` lines, each
// starting a new query.

namespace detail {

inline std::vector<std::string_view> tokenize(std::string_view line) {
  if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    const auto start = i;
    while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

inline std::uint64_t parse_id(std::string_view tok, std::size_t line) {
  if (tok.empty()) throw ParseError(line, "empty id");
  std::uint64_t v = 0;
  for (char c : tok) {
    if (c < '0' || c > '9') throw ParseError(line, "invalid vertex id '" + std::string(tok) + "'");
    const std::uint64_t d = static_cast<std::uint64_t>(c - '0');
    if (v > (UINT64_MAX - d) / 10) throw ParseError(line, "vertex id too large");
    v = v * 10 + d;
  }
  return v;
}

// Maps external vertex ids to dense ids in declaration order.
class VertexTable {
 public:
  VertexId declare(std::uint64_t external, std::size_t line) {
    auto [it, inserted] = index_.emplace(external, static_cast<VertexId>(ids_.size()));
    if (!inserted) throw ParseError(line, "duplicate vertex " + std::to_string(external));
    ids_.push_back(external);
    return it->second;
  }
  VertexId lookup(std::uint64_t external, std::size_t line) const {
    auto it = index_.find(external);
    if (it == index_.end()) {
      throw ValidationError("line " + std::to_string(line) + ": endpoint " +
                            std::to_string(external) + " is not a declared vertex");
    }
    return it->second;
  }
  std::vector<std::uint64_t>& ids() { return ids_; }
  std::size_t size() const noexcept { return ids_.size(); }

 private:
  std::unordered_map<std::uint64_t, VertexId> index_;
  std::vector<std::uint64_t> ids_;
};

inline std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  return in;
}

}  // namespace detail

struct DataGraphOptions {
  // Materialize both directions of every edge (undirected benchmark graphs).
  bool undirected = false;
};

inline PropertyGraph parse_data_graph(std::istream& in, const DataGraphOptions& opts = {}) {
  detail::VertexTable vertices;
  LabelDictionary dict;
  std::vector<LabelSet> vlabels;
  std::vector<std::pair<Edge, LabelSet>> edges;

  auto labels_from = [&](std::span<const std::string_view> toks) {
    LabelSet set;
    for (auto t : toks) {
      if (t == "-1") continue;
      set.insert(dict.intern(t));
    }
    return set;
  };

  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto toks = detail::tokenize(line);
    if (toks.empty()) continue;
    if (toks[0] == "v") {
      if (toks.size() < 2) throw ParseError(lineno, "vertex line needs an id");
      vertices.declare(detail::parse_id(toks[1], lineno), lineno);
      vlabels.push_back(labels_from(std::span(toks).subspan(2)));
    } else if (toks[0] == "e") {
      if (toks.size() < 3) throw ParseError(lineno, "edge line needs src and dst");
      const auto s = vertices.lookup(detail::parse_id(toks[1], lineno), lineno);
      const auto d = vertices.lookup(detail::parse_id(toks[2], lineno), lineno);
      auto l = labels_from(std::span(toks).subspan(3));
      if (opts.undirected && s != d) edges.emplace_back(Edge{d, s}, l);
      edges.emplace_back(Edge{s, d}, std::move(l));
    } else {
      throw ParseError(lineno, "unknown record type '" + std::string(toks[0]) + "'");
    }
  }
  return PropertyGraph(std::move(vlabels), std::move(edges), std::move(dict),
                       std::move(vertices.ids()));
}

inline PropertyGraph load_data_graph(const std::filesystem::path& path,
                                     const DataGraphOptions& opts = {}) {
  auto in = detail::open_input(path);
  return parse_data_graph(in, opts);
}

// Writes the graph back in the data-graph text format. Parsing the output
// yields an equal graph.
inline void write_data_graph(std::ostream& out, const PropertyGraph& g) {
  const auto& dict = g.labels();
  auto write_labels = [&](const LabelSet& s) {
    for (auto l : s) out << ' ' << dict.name(l);
  };
  for (VertexId v = 0; v < g.vertex_count(); ++v) {
    out << "v " << g.external_id(v);
    write_labels(g.vertex_labels(v));
    out << '\n';
  }
  for (EdgeId i = 0; i < g.edge_count(); ++i) {
    const auto& e = g.edge(i);
    out << "e " << g.external_id(e.src) << ' ' << g.external_id(e.dst);
    write_labels(g.edge_labels(i));
    out << '\n';
  }
}

namespace detail {

struct QueryAccumulator {
  VertexTable vertices;
  std::vector<LabelSet> preds;
  std::vector<QueryEdge> edges;
  std::size_t first_line = 0;
  bool touched = false;

  QueryGraph finish() {
    return QueryGraph(std::move(preds), std::move(edges));
  }
};

inline void parse_query_record(QueryAccumulator& acc, std::span<const std::string_view> toks,
                               std::size_t lineno, const LabelDictionary& dict) {
  auto labels_from = [&](std::span<const std::string_view> ts) {
    LabelSet set;
    for (auto t : ts) {
      if (t == "-1") continue;
      set.insert(dict.resolve(t));
    }
    return set;
  };
  acc.touched = true;
  if (toks[0] == "v") {
    if (toks.size() < 2) throw ParseError(lineno, "vertex line needs an id");
    acc.vertices.declare(parse_id(toks[1], lineno), lineno);
    acc.preds.push_back(labels_from(toks.subspan(2)));
  } else if (toks[0] == "e") {
    if (toks.size() < 3) throw ParseError(lineno, "edge line needs src and dst");
    const auto s = acc.vertices.lookup(parse_id(toks[1], lineno), lineno);
    const auto d = acc.vertices.lookup(parse_id(toks[2], lineno), lineno);
    acc.edges.push_back(QueryEdge{s, d, labels_from(toks.subspan(3))});
  } else {
    throw ParseError(lineno, "unknown record type '" + std::string(toks[0]) + "'");
  }
}

}  // namespace detail

// Parses a query set. Without `q` lines the whole input is one query named
// `default_id`.
inline std::vector<NamedQuery> parse_query_set(std::istream& in, const LabelDictionary& dict,
                                               const std::string& default_id = "0") {
  std::vector<NamedQuery> out;
  std::optional<std::string> current_id;
  detail::QueryAccumulator acc;

  auto flush = [&](std::size_t lineno) {
    if (!acc.touched && !current_id) return;
    try {
      out.push_back({current_id.value_or(default_id), acc.finish()});
    } catch (const ValidationError& e) {
      throw ValidationError("query '" + current_id.value_or(default_id) + "' (ending line " +
                            std::to_string(lineno) + "): " + e.what());
    }
    acc = {};
  };

  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto toks = detail::tokenize(line);
    if (toks.empty()) continue;
    if (toks[0] == "q") {
      if (toks.size() != 2) throw ParseError(lineno, "query header needs exactly one name");
      flush(lineno);
      current_id = std::string(toks[1]);
      continue;
    }
    detail::parse_query_record(acc, toks, lineno, dict);
  }
  flush(lineno);
  return out;
}

inline QueryGraph parse_query_graph(std::istream& in, const LabelDictionary& dict) {
  auto set = parse_query_set(in, dict);
  if (set.size() != 1) {
    throw ValidationError("expected exactly one query, found " + std::to_string(set.size()));
  }
  return std::move(set.front().query);
}

inline QueryGraph load_query_graph(const std::filesystem::path& path,
                                   const LabelDictionary& dict = {}) {
  auto in = detail::open_input(path);
  return parse_query_graph(in, dict);
}

inline std::vector<NamedQuery> load_query_set(const std::filesystem::path& path,
                                              const LabelDictionary& dict = {}) {
  auto in = detail::open_input(path);
  return parse_query_set(in, dict, path.stem().string());
}

}  // namespace color
