#include "cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <atomic>
#include <cctype>
#include <charconv>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>
#include <thread>

#include "color/color.hpp"

namespace color::cli {
namespace {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

struct RunConfig {
  std::string data, queries, summary, updates, truth, out;
  std::string coloring = "mixture";
  std::uint32_t colors = 32;
  std::string mode = "avg";
  std::string inference = "sample";
  std::string closure = "gamma";
  std::size_t samples = 500;
  std::uint32_t max_cycle_len = 6;
  std::uint64_t path_samples = 100000;
  std::uint64_t seed = 0;
  double timeout = 60;
  bool undirected = false;
  bool no_timing = false;
  bool exhaustive_gamma = false;
  bool no_maintenance = false;
  unsigned threads = 1;
  std::uint64_t budget = std::uint64_t{1} << 34;
};

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string num(double v) {
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

double seconds_since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

// Numeric runs compare by value, so q2 sorts before q10.
bool natural_less(const std::string& a, const std::string& b) {
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    if (std::isdigit(static_cast<unsigned char>(a[i])) && std::isdigit(static_cast<unsigned char>(b[j]))) {
      std::size_t i2 = i, j2 = j;
      while (i2 < a.size() && std::isdigit(static_cast<unsigned char>(a[i2]))) ++i2;
      while (j2 < b.size() && std::isdigit(static_cast<unsigned char>(b[j2]))) ++j2;
      auto x = a.substr(i, i2 - i), y = b.substr(j, j2 - j);
      x.erase(0, std::min(x.find_first_not_of('0'), x.size()));
      y.erase(0, std::min(y.find_first_not_of('0'), y.size()));
      if (x.size() != y.size()) return x.size() < y.size();
      if (x != y) return x < y;
      i = i2;
      j = j2;
    } else {
      if (a[i] != b[j]) return a[i] < b[j];
      ++i;
      ++j;
    }
  }
  if (a.size() - i != b.size() - j) return a.size() - i < b.size() - j;
  return a < b;
}

void require(const std::string& value, const char* flag) {
  if (value.empty()) throw UsageError(std::string(flag) + " is required");
}

// Output goes to --out when given, else to the command's stream.
class Sink {
 public:
  Sink(const std::string& path, std::ostream& fallback) : os_(&fallback) {
    if (!path.empty()) {
      file_.open(path, std::ios::trunc);
      if (!file_) throw IoError("cannot write " + path);
      os_ = &file_;
    }
  }
  std::ostream& operator*() { return *os_; }

 private:
  std::ofstream file_;
  std::ostream* os_;
};

PropertyGraph load_data(const RunConfig& cfg) {
  require(cfg.data, "--data");
  return load_data_graph(cfg.data, DataGraphOptions{cfg.undirected});
}

std::map<std::string, double> load_truth(const std::string& path) {
  std::map<std::string, double> truth;
  auto in = detail::open_input(path);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    // Accepts `id,count` and the `id,count,status[,...]` rows written by `exact`.
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw ParseError(lineno, "expected id,count");
    const auto id = line.substr(0, comma);
    const auto end = line.find(',', comma + 1);
    const auto value = line.substr(comma + 1, end == std::string::npos ? std::string::npos : end - comma - 1);
    if (end != std::string::npos && line.compare(end + 1, 2, "ok") != 0 && lineno > 1) continue;
    double v = 0;
    const auto r = std::from_chars(value.data(), value.data() + value.size(), v);
    if (r.ec != std::errc() || r.ptr != value.data() + value.size()) {
      if (lineno == 1) continue;  // header
      throw ParseError(lineno, "bad count '" + value + "'");
    }
    truth[id] = v;
  }
  return truth;
}

EstimateConfig estimate_config(const RunConfig& cfg) {
  EstimateConfig ec;
  const auto mode = parse_stat_mode(cfg.mode);
  if (!mode) throw UsageError("unknown --mode " + cfg.mode);
  const auto inference = parse_inference(cfg.inference);
  if (!inference) throw UsageError("unknown --inference " + cfg.inference);
  const auto closure = parse_closure(cfg.closure);
  if (!closure) throw UsageError("unknown --closure " + cfg.closure);
  if (cfg.samples < 1) throw UsageError("--samples must be positive");
  ec.stat_mode = *mode;
  ec.inference = *inference;
  ec.closure = *closure;
  ec.sample_budget = cfg.samples;
  ec.seed = cfg.seed;
  return ec;
}

ColoringConfig coloring_config(const RunConfig& cfg) {
  const auto method = parse_coloring_method(cfg.coloring);
  if (!method) throw UsageError("unknown --coloring " + cfg.coloring);
  if (cfg.colors < 1) throw UsageError("--colors must be positive");
  return ColoringConfig::single_method(*method, cfg.colors, cfg.seed);
}

// Runs fn(i) for i in [0, n) on up to `threads` workers.
template <class F>
void parallel_for(std::size_t n, unsigned threads, F&& fn) {
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
  if (threads == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) fn(i);
    });
  }
  for (auto& th : pool) th.join();
}

int cmd_build(const RunConfig& cfg, std::ostream& out) {
  require(cfg.out, "--out");
  const auto start = Clock::now();
  const auto g = load_data(cfg);
  SummaryConfig sc;
  sc.coloring = coloring_config(cfg);
  sc.gamma.num_path_samples = cfg.path_samples;
  sc.gamma.max_cycle_length = cfg.max_cycle_len;
  sc.gamma.seed = cfg.seed;
  sc.gamma.exhaustive = cfg.exhaustive_gamma;
  const auto coloring = build_coloring(g, sc.coloring);
  const auto lg = build_lifted_graph(g, coloring, sc);
  std::optional<MaintenanceState> state;
  if (!cfg.no_maintenance) state = MaintenanceState::build(g, coloring, 0.05, cfg.seed);
  serialize(lg, cfg.out, state ? &*state : nullptr);
  const auto elapsed = seconds_since(start);
  out << "vertices,edges,colors,epsilon,degree_range,summary_bytes" << (cfg.no_timing ? "" : ",build_seconds")
      << '\n';
  out << lg.meta.num_vertices << ',' << lg.meta.num_edges << ',' << lg.num_colors() << ',' << num(lg.meta.epsilon)
      << ',' << num(lg.meta.degree_range) << ',' << fs::file_size(cfg.out);
  if (!cfg.no_timing) out << ',' << num(elapsed);
  out << '\n';
  return kExitOk;
}

int cmd_estimate(const RunConfig& cfg, std::ostream& out) {
  require(cfg.summary, "--summary");
  require(cfg.queries, "--queries");
  const auto ec = estimate_config(cfg);
  const auto lg = deserialize(cfg.summary);
  const auto queries = load_query_set(cfg.queries, lg.labels);
  std::map<std::string, double> truth;
  if (!cfg.truth.empty()) truth = load_truth(cfg.truth);

  struct Row {
    std::string status = "ok";
    EstimateResult r;
    double seconds = 0;
  };
  std::vector<Row> rows(queries.size());
  parallel_for(queries.size(), cfg.threads, [&](std::size_t i) {
    auto& row = rows[i];
    const auto start = Clock::now();
    auto qc = ec;
    if (cfg.timeout > 0) {
      qc.deadline = start + std::chrono::duration_cast<Clock::duration>(std::chrono::duration<double>(cfg.timeout));
    }
    try {
      row.r = estimate(queries[i].query, lg, qc);
    } catch (const Timeout&) {
      row.status = "TIMEOUT";
    } catch (const ResourceLimit&) {
      row.status = "LIMIT";
    }
    row.seconds = seconds_since(start);
  });

  std::vector<std::size_t> order(queries.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](auto a, auto b) { return natural_less(queries[a].id, queries[b].id); });

  Sink sink(cfg.out, out);
  auto& os = *sink;
  os << "id,estimate,mode,inference,width,entries,status";
  if (!cfg.truth.empty()) os << ",relative_error";
  if (!cfg.no_timing) os << ",seconds";
  os << '\n';
  for (auto i : order) {
    const auto& row = rows[i];
    const bool ok = row.status == "ok";
    os << queries[i].id << ',' << (ok ? num(row.r.estimate) : "") << ',' << to_string(ec.stat_mode) << ','
       << to_string(ec.inference) << ',' << (ok ? std::to_string(row.r.width) : "") << ','
       << (ok ? std::to_string(row.r.entries) : "") << ',' << row.status;
    if (!cfg.truth.empty()) {
      os << ',';
      auto it = truth.find(queries[i].id);
      if (ok && it != truth.end() && it->second > 0) os << num(relative_error(row.r.estimate, it->second));
    }
    if (!cfg.no_timing) os << ',' << num(row.seconds);
    os << '\n';
  }
  return kExitOk;
}

int cmd_exact(const RunConfig& cfg, std::ostream& out) {
  require(cfg.queries, "--queries");
  const auto g = load_data(cfg);
  const auto queries = load_query_set(cfg.queries, g.labels());
  struct Row {
    std::string status = "ok";
    std::uint64_t count = 0;
    double seconds = 0;
  };
  std::vector<Row> rows(queries.size());
  parallel_for(queries.size(), cfg.threads, [&](std::size_t i) {
    const auto start = Clock::now();
    OracleOptions opts;
    opts.max_expansions = cfg.budget;
    try {
      rows[i].count = count_homomorphisms(queries[i].query, g, opts);
    } catch (const BudgetExceeded&) {
      rows[i].status = "BUDGET";
    } catch (const CountOverflow&) {
      rows[i].status = "OVERFLOW";
    }
    rows[i].seconds = seconds_since(start);
  });
  std::vector<std::size_t> order(queries.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](auto a, auto b) { return natural_less(queries[a].id, queries[b].id); });
  Sink sink(cfg.out, out);
  auto& os = *sink;
  os << "id,count,status" << (cfg.no_timing ? "" : ",seconds") << '\n';
  bool failed = false;
  for (auto i : order) {
    const auto& row = rows[i];
    failed |= row.status != "ok";
    os << queries[i].id << ',' << (row.status == "ok" ? std::to_string(row.count) : "") << ',' << row.status;
    if (!cfg.no_timing) os << ',' << num(row.seconds);
    os << '\n';
  }
  return failed ? kExitFailure : kExitOk;
}

int cmd_update(const RunConfig& cfg, std::ostream& out) {
  require(cfg.summary, "--summary");
  require(cfg.updates, "--updates");
  auto file = deserialize_file(cfg.summary);
  if (!file.maintenance) throw UsageError("summary was built without maintenance state");
  const auto ops = load_updates(cfg.updates, file.lifted.labels);
  for (std::size_t i = 0; i < ops.size(); ++i) {
    try {
      apply_update(file.lifted, *file.maintenance, ops[i]);
    } catch (const ValidationError& e) {
      throw std::runtime_error("update " + std::to_string(i + 1) + ": " + e.what());
    }
  }
  serialize(file.lifted, cfg.out.empty() ? cfg.summary : cfg.out, &*file.maintenance);
  const auto& log = file.maintenance->log;
  out << "ops,vertices,edges,vertex_adds,edge_adds\n";
  out << ops.size() << ',' << file.lifted.meta.num_vertices << ',' << file.lifted.meta.num_edges << ','
      << log.vertex_adds << ',' << log.edge_adds << '\n';
  return kExitOk;
}

int cmd_stats(const RunConfig& cfg, std::ostream& out) {
  Sink sink(cfg.out, out);
  auto& os = *sink;
  if (!cfg.data.empty()) {
    const auto g = load_data(cfg);
    const auto coloring = build_coloring(g, coloring_config(cfg));
    os << "key,value\n";
    os << "num_colors," << coloring.num_colors << '\n';
    os << "degree_range_metric," << num(degree_range_metric(g, coloring)) << '\n';
    os << "epsilon," << num(epsilon_of(g, coloring)) << '\n';
    os << "\nsplit,method,color,criterion\n";
    for (std::size_t i = 0; i < coloring.split_log.size(); ++i) {
      const auto& s = coloring.split_log[i];
      os << i + 1 << ',' << to_string(s.method) << ',' << s.color << ',' << num(s.criterion) << '\n';
    }
    return kExitOk;
  }
  require(cfg.summary, "--summary or --data");
  const auto file = deserialize_file(cfg.summary);
  const auto& lg = file.lifted;
  os << "key,value\n";
  os << "vertices," << lg.meta.num_vertices << '\n';
  os << "edges," << lg.meta.num_edges << '\n';
  os << "colors," << lg.num_colors() << '\n';
  os << "coloring," << to_string(lg.meta.coloring_method) << '\n';
  os << "epsilon," << num(lg.meta.epsilon) << '\n';
  os << "epsilon_current," << num(tau_epsilon(lg)) << '\n';
  os << "degree_range," << num(lg.meta.degree_range) << '\n';
  os << "psi_keys," << lg.psi.size() << '\n';
  os << "tau_keys," << lg.tau.size() << '\n';
  os << "gamma_keys," << lg.gamma.colored.size() << '\n';
  os << "gamma_marginal_keys," << lg.gamma.marginal.size() << '\n';
  os << "summary_bytes," << summary_size(lg) << '\n';
  if (file.maintenance) {
    const auto& m = *file.maintenance;
    os << "filter_false_positive_bound," << num(m.map.false_positive_bound()) << '\n';
    os << "filter_bytes," << m.map.memory_bytes() << '\n';
    os << "spilled_vertices," << m.map.spill_size() << '\n';
    os << "lookup_collisions," << m.map.collisions() << '\n';
    os << "updates_applied," << m.log.timestamps.size() << '\n';
    os << "vertex_adds," << m.log.vertex_adds << '\n';
    os << "edge_adds," << m.log.edge_adds << '\n';
  }
  return kExitOk;
}

// Synthetic suite: degree-range curves, latency by query shape, and error
// by sample budget.
int cmd_bench(const RunConfig& cfg, std::ostream& out) {
  require(cfg.out, "--out");
  fs::create_directories(cfg.out);
  const fs::path dir(cfg.out);
  auto open = [&](const char* name) {
    std::ofstream f(dir / name, std::ios::trunc);
    if (!f) throw IoError("cannot write " + (dir / name).string());
    return f;
  };

  const auto big = synthetic::power_law_digraph(10000, 5.0, 2.5, mix64(cfg.seed, 1));
  {
    auto f = open("degree_range.csv");
    f << "method,colors,degree_range\n";
    for (auto method : {ColoringMethod::kQuasiStable, ColoringMethod::kDegree}) {
      Coloring c = Coloring::single(big.vertex_count());
      f << to_string(method) << ",1," << num(degree_range_metric(big, c)) << '\n';
      while (c.num_colors < 32) {
        auto o = split_once(big, c, method, cfg.seed);
        if (!o.split) break;
        c = std::move(o.coloring);
        f << to_string(method) << ',' << c.num_colors << ',' << num(degree_range_metric(big, c)) << '\n';
      }
    }
  }

  SummaryConfig sc;
  sc.coloring = ColoringConfig::mixture(32, cfg.seed);
  sc.gamma.num_path_samples = cfg.path_samples;
  sc.gamma.max_cycle_length = cfg.max_cycle_len;
  sc.gamma.seed = cfg.seed;
  const auto lg = build_summary(big, sc);
  {
    auto f = open("latency.csv");
    f << "query,vertices,edges,width,entries,estimate" << (cfg.no_timing ? "" : ",seconds") << '\n';
    std::vector<std::pair<std::string, QueryGraph>> shapes;
    for (std::size_t k : {2, 4, 8, 16}) shapes.emplace_back("path" + std::to_string(k), synthetic::path_query(k));
    for (std::size_t k : {3, 4, 5, 6}) shapes.emplace_back("cycle" + std::to_string(k), synthetic::cycle_query(k));
    for (std::size_t k : {3, 5}) shapes.emplace_back("star" + std::to_string(k), synthetic::star_query(k));
    for (std::size_t v : {4, 5, 6}) {
      shapes.emplace_back("random" + std::to_string(v), synthetic::random_query(v, v - 1, mix64(cfg.seed, v)));
    }
    EstimateConfig ec;
    ec.sample_budget = cfg.samples;
    ec.seed = cfg.seed;
    for (const auto& [name, q] : shapes) {
      const auto p = prepare_query(q, lg);
      EstimateResult r;
      double best = std::numeric_limits<double>::infinity();
      for (int rep = 0; rep < 3; ++rep) {
        const auto start = Clock::now();
        r = estimate_sampled(p, lg, ec);
        best = std::min(best, seconds_since(start));
      }
      f << name << ',' << q.vertex_count() << ',' << q.edge_count() << ',' << r.width << ',' << r.entries << ','
        << num(r.estimate);
      if (!cfg.no_timing) f << ',' << num(best);
      f << '\n';
    }
  }
  {
    const auto g = synthetic::power_law_digraph(2000, 4.0, 2.5, mix64(cfg.seed, 2));
    const auto small = build_summary(g, sc);
    auto f = open("samples_error.csv");
    f << "budget,query,truth,estimate,relative_error\n";
    std::vector<std::pair<std::string, QueryGraph>> qs;
    qs.emplace_back("cycle3", synthetic::cycle_query(3));
    qs.emplace_back("cycle4", synthetic::cycle_query(4));
    qs.emplace_back("path3", synthetic::path_query(3));
    for (std::size_t v : {4, 5}) {
      qs.emplace_back("random" + std::to_string(v), synthetic::random_query(v, 2, mix64(cfg.seed, 10 + v)));
    }
    for (std::size_t budget : {10, 50, 250, 1000}) {
      for (const auto& [name, q] : qs) {
        EstimateConfig ec;
        ec.sample_budget = budget;
        ec.seed = cfg.seed;
        const double truth = static_cast<double>(count_homomorphisms(q, g));
        const double est = estimate(q, small, ec).estimate;
        f << budget << ',' << name << ',' << num(truth) << ',' << num(est) << ','
          << (truth > 0 ? num(relative_error(est, truth)) : "") << '\n';
      }
    }
  }
  out << "wrote " << (dir / "degree_range.csv").string() << '\n'
      << "wrote " << (dir / "latency.csv").string() << '\n'
      << "wrote " << (dir / "samples_error.csv").string() << '\n';
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  RunConfig cfg;
  CLI::App app{"Lifted-graph subgraph cardinality estimation", "color"};
  app.require_subcommand(1);

  auto add_data = [&](CLI::App* c) {
    c->add_option("--data", cfg.data, "data graph file (v/e records)");
    c->add_flag("--undirected", cfg.undirected, "read every data edge in both directions");
  };
  auto add_coloring = [&](CLI::App* c) {
    c->add_option("--coloring", cfg.coloring,
                  "quasi_stable | degree | neighbor_label | vertex_label | mixture | hash");
    c->add_option("--colors", cfg.colors, "target number of colors");
  };
  auto add_common = [&](CLI::App* c) {
    c->add_option("--seed", cfg.seed, "random seed");
    c->add_option("--out", cfg.out, "output path");
    c->add_flag("--no-timing", cfg.no_timing, "omit wall-clock columns");
  };
  auto add_gamma = [&](CLI::App* c) {
    c->add_option("--max-cycle-len", cfg.max_cycle_len, "longest cycle closed by path statistics");
    c->add_option("--path-samples", cfg.path_samples, "sampled walks for closure statistics");
  };

  auto* build = app.add_subcommand("build", "build a summary file from a data graph");
  add_data(build);
  add_coloring(build);
  add_common(build);
  add_gamma(build);
  build->add_flag("--exhaustive-gamma", cfg.exhaustive_gamma, "enumerate all walks (small graphs)");
  build->add_flag("--no-maintenance", cfg.no_maintenance, "omit the vertex-color map used by `update`");

  auto* est = app.add_subcommand("estimate", "estimate query cardinalities from a summary");
  est->add_option("--summary", cfg.summary, "summary file");
  est->add_option("--queries", cfg.queries, "query file");
  est->add_option("--truth", cfg.truth, "CSV of id,count for relative errors");
  est->add_option("--mode", cfg.mode, "min | avg | max");
  est->add_option("--inference", cfg.inference, "naive | aggregate | sample");
  est->add_option("--closure", cfg.closure, "gamma | uniform_fallback");
  est->add_option("--samples", cfg.samples, "partial colorings kept per step");
  est->add_option("--timeout", cfg.timeout, "per-query timeout in seconds (0 = none)");
  est->add_option("--threads", cfg.threads, "worker threads");
  add_common(est);

  auto* exact = app.add_subcommand("exact", "count homomorphisms exactly");
  add_data(exact);
  exact->add_option("--queries", cfg.queries, "query file");
  exact->add_option("--budget", cfg.budget, "candidate checks per query before giving up");
  exact->add_option("--threads", cfg.threads, "worker threads");
  add_common(exact);

  auto* update = app.add_subcommand("update", "apply an update file to a summary");
  update->add_option("--summary", cfg.summary, "summary file");
  update->add_option("--updates", cfg.updates, "update file (av/ae/dv/de records)");
  update->add_option("--out", cfg.out, "output summary (default: rewrite in place)");

  auto* stats = app.add_subcommand("stats", "describe a summary, or a coloring of a data graph");
  stats->add_option("--summary", cfg.summary, "summary file");
  add_data(stats);
  add_coloring(stats);
  add_common(stats);

  auto* bench = app.add_subcommand("bench", "write the synthetic benchmark CSVs");
  add_common(bench);
  add_gamma(bench);
  bench->add_option("--samples", cfg.samples, "partial colorings kept per step");

  std::vector<std::string> storage{"color"};
  storage.insert(storage.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& s : storage) argv.push_back(s.data());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitUsage;
  }

  try {
    if (*build) return cmd_build(cfg, out);
    if (*est) return cmd_estimate(cfg, out);
    if (*exact) return cmd_exact(cfg, out);
    if (*update) return cmd_update(cfg, out);
    if (*stats) return cmd_stats(cfg, out);
    if (*bench) return cmd_bench(cfg, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const IoError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const FormatError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace color::cli
