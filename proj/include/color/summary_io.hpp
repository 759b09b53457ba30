#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <optional>
#include <string>
#include <vector>

#include "color/binary_io.hpp"
#include "color/error.hpp"
#include "color/lifted_graph.hpp"
#include "color/maintenance.hpp"

namespace color {

// File layout (all integers little-endian; see docs/summary_format.md):
//   magic "CLRSUMRY" | u32 version | sections... | u64 FNV-1a of everything before it
// Each section is u32 tag | u64 payload length | payload.
inline constexpr char kSummaryMagic[8] = {'C', 'L', 'R', 'S', 'U', 'M', 'R', 'Y'};
inline constexpr std::uint32_t kSummaryVersion = 1;

enum class SectionTag : std::uint32_t {
  kHeader = 1,
  kDictionary = 2,
  kPsi = 3,
  kTau = 4,
  kGamma = 5,
  kGammaMarginal = 6,
  kMeta = 7,
  kMaintenance = 8,
};

// A summary as stored on disk: the lifted graph and, when the file was built
// for incremental maintenance, the update state.
struct SummaryFile {
  LiftedGraph lifted;
  std::optional<MaintenanceState> maintenance;
};

namespace detail {

inline void put_section(ByteWriter& out, SectionTag tag, const ByteWriter& payload) {
  out.u32(static_cast<std::uint32_t>(tag));
  out.u64(payload.size());
  out.raw(payload.bytes());
}

template <class Map>
auto sorted_entries(const Map& m) {
  std::vector<std::pair<typename Map::key_type, typename Map::mapped_type>> v(m.begin(), m.end());
  std::sort(v.begin(), v.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  return v;
}

inline void write_gamma_entry(ByteWriter& w, const GammaEntry& e) {
  w.f64(e.probability);
  w.u64(e.samples);
}

inline GammaEntry read_gamma_entry(ByteReader& r) {
  GammaEntry e;
  e.probability = r.f64();
  e.samples = r.u64();
  if (!(e.probability >= 0 && e.probability <= 1)) throw FormatError("gamma outside [0, 1]");
  return e;
}

inline DirectionSequence read_sequence(ByteReader& r) {
  const auto d = DirectionSequence::from_code(r.u32());
  if (d.length == 0 || d.length > DirectionSequence::kMaxLength) throw FormatError("bad direction sequence");
  return d;
}

}  // namespace detail

inline std::string to_bytes(const LiftedGraph& lg, const MaintenanceState* maintenance = nullptr) {
  ByteWriter out;
  out.raw(std::string_view(kSummaryMagic, sizeof kSummaryMagic));
  out.u32(kSummaryVersion);

  ByteWriter h;
  h.u64(lg.meta.num_vertices);
  h.u64(lg.meta.num_edges);
  h.u32(lg.meta.num_colors);
  detail::put_section(out, SectionTag::kHeader, h);

  ByteWriter d;
  d.u64(lg.labels.size());
  for (const auto& n : lg.labels.names()) d.str(n);
  detail::put_section(out, SectionTag::kDictionary, d);

  ByteWriter p;
  const auto psi = detail::sorted_entries(lg.psi);
  p.u64(psi.size());
  for (const auto& [k, n] : psi) {
    p.u32(k.color);
    p.u32(k.label);
    p.u64(n);
  }
  detail::put_section(out, SectionTag::kPsi, p);

  ByteWriter t;
  const auto tau = detail::sorted_entries(lg.tau);
  t.u64(tau.size());
  for (const auto& [k, s] : tau) {
    t.u32(k.from);
    t.u32(k.to);
    t.u32(k.edge_label);
    t.u32(k.vertex_label);
    t.u8(static_cast<std::uint8_t>(k.dir));
    t.f64(s.min);
    t.f64(s.avg);
    t.f64(s.max);
  }
  detail::put_section(out, SectionTag::kTau, t);

  ByteWriter g;
  const auto gamma = detail::sorted_entries(lg.gamma.colored);
  g.u64(gamma.size());
  for (const auto& [k, e] : gamma) {
    g.u32(k.from);
    g.u32(k.to);
    g.u32(k.seq.code());
    detail::write_gamma_entry(g, e);
  }
  detail::put_section(out, SectionTag::kGamma, g);

  ByteWriter gm;
  const auto marginal = detail::sorted_entries(lg.gamma.marginal);
  gm.u64(marginal.size());
  for (const auto& [code, e] : marginal) {
    gm.u32(code);
    detail::write_gamma_entry(gm, e);
  }
  detail::put_section(out, SectionTag::kGammaMarginal, gm);

  ByteWriter m;
  m.f64(lg.meta.epsilon);
  m.f64(lg.meta.degree_range);
  m.u8(static_cast<std::uint8_t>(lg.meta.coloring_method));
  m.u32(lg.meta.target_colors);
  m.u64(lg.meta.coloring_seed);
  m.u64(lg.meta.gamma.num_path_samples);
  m.u32(lg.meta.gamma.max_cycle_length);
  m.u64(lg.meta.gamma.seed);
  m.u8(lg.meta.gamma.exhaustive ? 1 : 0);
  m.u64(lg.meta.applied_edge_updates);
  detail::put_section(out, SectionTag::kMeta, m);

  if (maintenance) {
    ByteWriter x;
    maintenance->write(x);
    detail::put_section(out, SectionTag::kMaintenance, x);
  }

  out.u64(fnv1a64(out.bytes()));
  return out.take();
}

inline SummaryFile from_bytes(std::string_view bytes) {
  constexpr std::size_t kPrefix = sizeof kSummaryMagic + 4;
  if (bytes.size() < kPrefix + 8) throw ChecksumError("summary file truncated");
  const auto body = bytes.substr(0, bytes.size() - 8);
  ByteReader trailer(bytes.substr(bytes.size() - 8));
  if (trailer.u64() != fnv1a64(body)) throw ChecksumError("summary checksum mismatch");
  if (body.substr(0, sizeof kSummaryMagic) != std::string_view(kSummaryMagic, sizeof kSummaryMagic)) {
    throw FormatError("not a summary file");
  }
  ByteReader r(body.substr(sizeof kSummaryMagic));
  const auto version = r.u32();
  if (version != kSummaryVersion) {
    throw VersionError("summary version " + std::to_string(version) + ", expected " +
                       std::to_string(kSummaryVersion));
  }

  SummaryFile f;
  LiftedGraph& lg = f.lifted;
  bool seen_header = false;
  while (!r.done()) {
    const auto tag = static_cast<SectionTag>(r.u32());
    const auto len = r.u64();
    ByteReader s(r.take(len));
    switch (tag) {
      case SectionTag::kHeader:
        lg.meta.num_vertices = s.u64();
        lg.meta.num_edges = s.u64();
        lg.meta.num_colors = s.u32();
        seen_header = true;
        break;
      case SectionTag::kDictionary: {
        const auto n = s.count(4);
        for (std::uint64_t i = 0; i < n; ++i) lg.labels.intern(s.str());
        if (lg.labels.size() != n) throw FormatError("duplicate label in dictionary");
        break;
      }
      case SectionTag::kPsi: {
        const auto n = s.count(16);
        for (std::uint64_t i = 0; i < n; ++i) {
          PsiKey k;
          k.color = s.u32();
          k.label = s.u32();
          lg.psi[k] = s.u64();
        }
        break;
      }
      case SectionTag::kTau: {
        const auto n = s.count(41);
        for (std::uint64_t i = 0; i < n; ++i) {
          TauKey k;
          k.from = s.u32();
          k.to = s.u32();
          k.edge_label = s.u32();
          k.vertex_label = s.u32();
          const auto d = s.u8();
          if (d > 1) throw FormatError("bad direction tag");
          k.dir = static_cast<Direction>(d);
          TauStats st;
          st.min = s.f64();
          st.avg = s.f64();
          st.max = s.f64();
          lg.tau[k] = st;
        }
        break;
      }
      case SectionTag::kGamma: {
        const auto n = s.count(28);
        for (std::uint64_t i = 0; i < n; ++i) {
          GammaKey k;
          k.from = s.u32();
          k.to = s.u32();
          k.seq = detail::read_sequence(s);
          lg.gamma.colored[k] = detail::read_gamma_entry(s);
        }
        break;
      }
      case SectionTag::kGammaMarginal: {
        const auto n = s.count(20);
        for (std::uint64_t i = 0; i < n; ++i) {
          const auto seq = detail::read_sequence(s);
          lg.gamma.marginal[seq.code()] = detail::read_gamma_entry(s);
        }
        break;
      }
      case SectionTag::kMeta: {
        auto& m = lg.meta;
        m.epsilon = s.f64();
        m.degree_range = s.f64();
        const auto method = s.u8();
        if (method > static_cast<std::uint8_t>(ColoringMethod::kHash)) throw FormatError("bad coloring method");
        m.coloring_method = static_cast<ColoringMethod>(method);
        m.target_colors = s.u32();
        m.coloring_seed = s.u64();
        m.gamma.num_path_samples = s.u64();
        m.gamma.max_cycle_length = s.u32();
        m.gamma.seed = s.u64();
        m.gamma.exhaustive = s.u8() != 0;
        m.applied_edge_updates = s.u64();
        break;
      }
      case SectionTag::kMaintenance:
        f.maintenance = MaintenanceState::read(s);
        break;
      default:
        continue;  // unknown sections are skipped
    }
    if (!s.done()) throw FormatError("trailing bytes in summary section");
  }
  if (!seen_header) throw FormatError("summary has no header section");
  return f;
}

inline std::size_t summary_size(const LiftedGraph& lg) { return to_bytes(lg).size(); }

inline void serialize(const LiftedGraph& lg, const std::filesystem::path& path,
                      const MaintenanceState* maintenance = nullptr) {
  const auto bytes = to_bytes(lg, maintenance);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed writing " + path.string());
}

inline SummaryFile deserialize_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return from_bytes(bytes);
}

inline LiftedGraph deserialize(const std::filesystem::path& path) { return deserialize_file(path).lifted; }

}  // namespace color
