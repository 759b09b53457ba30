#include <gtest/gtest.h>

#include <cmath>

#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace color;

namespace {

EstimateConfig with(Inference inf, StatMode mode = StatMode::kAvg) {
  EstimateConfig cfg;
  cfg.inference = inf;
  cfg.stat_mode = mode;
  return cfg;
}

SummaryConfig exact_gamma() {
  SummaryConfig cfg;
  cfg.gamma.exhaustive = true;
  return cfg;
}

LiftedGraph ring_clique_summary() {
  const auto g = synthetic::ring_plus_clique();
  SummaryConfig cfg;
  cfg.coloring = ColoringConfig::single_method(ColoringMethod::kDegree, 2);
  cfg.gamma.num_path_samples = 1000;
  return build_summary(g, cfg);
}

}  // namespace

TEST(Traditional, Cases) {
  EXPECT_DOUBLE_EQ(traditional_estimate(synthetic::path_query(2), 5, 6), 7.2);
  EXPECT_DOUBLE_EQ(traditional_estimate(QueryGraph(std::vector<LabelSet>(1), {}), 9, 4), 9.0);
  EXPECT_EQ(traditional_estimate(synthetic::path_query(1), 9, 0), 0.0);
  EXPECT_THROW(traditional_estimate(synthetic::path_query(1), 0, 0), std::invalid_argument);
}

TEST(RelativeError, Cases) {
  EXPECT_DOUBLE_EQ(relative_error(7.2, 7.2), 1.0);
  EXPECT_DOUBLE_EQ(relative_error(20, 10), 2.0);
  EXPECT_DOUBLE_EQ(relative_error(0, 10), 0.0);
  EXPECT_THROW(relative_error(1, 0), std::domain_error);
}

TEST(EdgeWeight, SingleColorTreeEdgeIsEdgesPerVertex) {
  const auto g = synthetic::random_digraph(30, 0.1, 2);
  const auto lg = build_lifted_graph(g, Coloring::single(30));
  const auto p = prepare_query(synthetic::path_query(1), lg);
  EXPECT_NEAR(edge_weight(p, 0, 0, 0, lg, {}), static_cast<double>(g.edge_count()) / 30.0, 1e-12);
}

TEST(EdgeWeight, ClosingEdgeOnCompleteGraph) {
  const auto g = synthetic::complete_digraph(20);
  const auto lg = build_lifted_graph(g, Coloring::single(20), exact_gamma());
  const auto p = prepare_query(synthetic::cycle_query(3), lg);
  std::size_t closing = 0;
  for (std::size_t i = 0; i < 3; ++i) {
    if (!p.roles[i].tree) closing = i;
  }
  ASSERT_EQ(p.roles[closing].paths.size(), 1u);
  // Two-step walks in K20 end at one of 19 vertices, 18 of them not the start.
  EXPECT_NEAR(edge_weight(p, closing, 0, 0, lg, {}), 18.0 / 19.0, 1e-12);
  EXPECT_EQ(edge_weight(p, closing, 0, 0, lg, with(Inference::kAggregate, StatMode::kMax)), 1.0);
  EXPECT_EQ(edge_weight(p, closing, 0, 0, lg, with(Inference::kAggregate, StatMode::kMin)), 0.0);
  auto uniform = with(Inference::kAggregate);
  uniform.closure = Closure::kUniformFallback;
  EXPECT_NEAR(edge_weight(p, closing, 0, 0, lg, uniform), 380.0 / 400.0, 1e-12);
}

TEST(EdgeWeight, UnassignedEndpointIsALogicError) {
  const auto lg = build_lifted_graph(synthetic::directed_cycle(4), Coloring::single(4));
  const auto p = prepare_query(synthetic::path_query(2), lg);
  const std::vector<ColorId> partial{0};
  EXPECT_THROW(edge_weight(p, 1, partial, lg, {}), std::logic_error);
}

TEST(ClosurePaths, CyclesHaveOneClosingPath) {
  for (std::size_t k : {3u, 4u, 5u}) {
    const auto p = prepare_query(synthetic::cycle_query(k));
    std::size_t non_tree = 0;
    for (const auto& r : p.roles) {
      if (r.tree) continue;
      ++non_tree;
      ASSERT_EQ(r.paths.size(), 1u);
      EXPECT_EQ(r.paths[0].edges.size(), k - 1);
    }
    EXPECT_EQ(non_tree, 1u);
  }
}

TEST(ClosurePaths, LongCyclesBeyondTheLimitHaveNone) {
  const auto p = prepare_query(synthetic::cycle_query(8), 6);
  for (const auto& r : p.roles) {
    if (!r.tree) {
      EXPECT_TRUE(r.paths.empty());
    }
  }
}

TEST(ClosurePaths, ShortestFirst) {
  // K4 as a query: the last closing edge has paths of length 1.. through
  // earlier edges; lengths must be non-decreasing.
  std::vector<QueryEdge> edges;
  for (VertexId u = 0; u < 4; ++u) {
    for (VertexId v = u + 1; v < 4; ++v) edges.push_back({u, v, {}});
  }
  const auto p = prepare_query(QueryGraph(std::vector<LabelSet>(4), edges));
  for (const auto& r : p.roles) {
    for (std::size_t i = 1; i < r.paths.size(); ++i) {
      EXPECT_LE(r.paths[i - 1].edges.size(), r.paths[i].edges.size());
    }
  }
}

TEST(Estimate, SingleColorPathMatchesTraditional) {
  const auto g = synthetic::random_digraph(25, 0.15, 8);
  const auto lg = build_lifted_graph(g, Coloring::single(25));
  const double e = static_cast<double>(g.edge_count());
  for (auto inf : {Inference::kNaive, Inference::kAggregate, Inference::kSample}) {
    EXPECT_NEAR(estimate(synthetic::path_query(2), lg, with(inf)).estimate, e * e / 25.0, 1e-9);
  }
}

TEST(Estimate, SingleVertexQueryIsVertexCount) {
  const auto g = synthetic::random_digraph(25, 0.15, 8);
  const auto lg = build_summary(g);
  const QueryGraph q(std::vector<LabelSet>(1), {});
  for (auto inf : {Inference::kNaive, Inference::kAggregate, Inference::kSample}) {
    EXPECT_DOUBLE_EQ(estimate(q, lg, with(inf)).estimate, 25.0);
  }
}

TEST(Estimate, RingPlusCliquePathCounts) {
  const auto lg = ring_clique_summary();
  const auto g = synthetic::ring_plus_clique();
  for (int k = 1; k <= 3; ++k) {
    const double want = 100.0 * std::pow(99.0, k) + 10000.0 * std::pow(2.0, k);
    const auto q = synthetic::path_query(static_cast<std::size_t>(k));
    const auto p = prepare_query(q, lg);
    EXPECT_NEAR(estimate_aggregate(p, lg).estimate, want, want * 1e-12);
    EXPECT_NEAR(estimate_naive(p, lg).estimate, want, want * 1e-12);
    EXPECT_EQ(static_cast<double>(count_homomorphisms(q, g)), want);
  }
}

TEST(Estimate, StableColoringIsExactForTrees) {
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    const auto g = synthetic::random_digraph(15, 0.2, seed);
    const auto lg = build_lifted_graph(g, refine_to_stable(g, Coloring::single(15)));
    for (std::uint64_t j = 0; j < 4; ++j) {
      const auto q = synthetic::random_tree_query(1 + j, seed * 10 + j);
      const auto truth = static_cast<double>(oracle::hom_count(q, g));
      auto cfg = with(Inference::kNaive);
      cfg.naive_cap = INFINITY;
      EXPECT_NEAR(estimate(q, lg, cfg).estimate, truth, 1e-9 * std::max(truth, 1.0));
      EXPECT_NEAR(estimate(q, lg, with(Inference::kAggregate)).estimate, truth, 1e-9 * std::max(truth, 1.0));
    }
  }
}

TEST(Estimate, TreeQueriesMatchIndependentSum) {
  const auto g = synthetic::power_law_digraph(150, 3.0, 2.4, 5);
  SummaryConfig sc;
  sc.coloring = ColoringConfig::single_method(ColoringMethod::kQuasiStable, 5);
  const auto lg = build_summary(g, sc);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto q = synthetic::random_tree_query(1 + seed % 4, seed);
    const auto p = prepare_query(q, lg);
    for (auto mode : {StatMode::kMin, StatMode::kAvg, StatMode::kMax}) {
      const double want = oracle::tree_estimate(q, lg, mode, p.plan.vertex_order.front());
      EXPECT_NEAR(estimate_naive(p, lg, with(Inference::kNaive, mode)).estimate, want, 1e-9 * std::max(want, 1.0));
      EXPECT_NEAR(estimate_aggregate(p, lg, with(Inference::kAggregate, mode)).estimate, want,
                  1e-9 * std::max(want, 1.0));
    }
  }
}

TEST(Estimate, AggregateEqualsNaiveOnCyclicQueries) {
  for (std::uint64_t seed = 0; seed < 15; ++seed) {
    const auto g = synthetic::random_digraph(30, 0.12, seed);
    SummaryConfig sc;
    sc.coloring = ColoringConfig::single_method(ColoringMethod::kQuasiStable, 2 + seed % 6);
    sc.gamma.num_path_samples = 5000;
    const auto lg = build_summary(g, sc);
    const auto q = synthetic::random_query(3 + seed % 2, 1 + seed % 2, seed);
    const auto p = prepare_query(q, lg);
    for (auto mode : {StatMode::kMin, StatMode::kAvg, StatMode::kMax}) {
      const double a = estimate_aggregate(p, lg, with(Inference::kAggregate, mode)).estimate;
      const double n = estimate_naive(p, lg, with(Inference::kNaive, mode)).estimate;
      EXPECT_NEAR(a, n, 1e-9 * std::max(n, 1.0)) << "seed " << seed;
    }
  }
}

TEST(Estimate, ModesAreOrdered) {
  const auto g = synthetic::random_digraph(30, 0.15, 4);
  SummaryConfig sc;
  sc.coloring = ColoringConfig::single_method(ColoringMethod::kQuasiStable, 4);
  const auto lg = build_summary(g, sc);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto q = synthetic::random_query(4, seed % 3, seed);
    const auto p = prepare_query(q, lg);
    const double lo = estimate_aggregate(p, lg, with(Inference::kAggregate, StatMode::kMin)).estimate;
    const double mid = estimate_aggregate(p, lg, with(Inference::kAggregate, StatMode::kAvg)).estimate;
    const double hi = estimate_aggregate(p, lg, with(Inference::kAggregate, StatMode::kMax)).estimate;
    EXPECT_LE(lo, mid * (1 + 1e-12));
    EXPECT_LE(mid, hi * (1 + 1e-12));
  }
}

TEST(Estimate, UnknownLabelGivesZero) {
  const auto g = fixtures::graph_from("v 0 a\nv 1\ne 0 1 x\n");
  const auto lg = build_summary(g);
  const auto q = fixtures::query_from("v 0\nv 1\ne 0 1 nope\n", lg.labels);
  EXPECT_EQ(estimate(q, lg).estimate, 0.0);
}

TEST(Estimate, LabeledTreesExactOnDiscreteColoring) {
  const auto g = synthetic::random_labeled_digraph(8, 0.3, 2, 0.5, 3);
  const auto lg = build_lifted_graph(g, Coloring::discrete(8));
  const auto q = fixtures::query_from("v 0 l0\nv 1\nv 2 l1\ne 0 1 l1\ne 2 1\n", g.labels());
  const auto truth = static_cast<double>(oracle::hom_count(q, g));
  EXPECT_NEAR(estimate(q, lg, with(Inference::kAggregate)).estimate, truth, 1e-9);
}

TEST(Sampling, LargeBudgetIsExact) {
  const auto g = synthetic::random_digraph(40, 0.1, 6);
  SummaryConfig sc;
  sc.coloring = ColoringConfig::single_method(ColoringMethod::kQuasiStable, 6);
  const auto lg = build_summary(g, sc);
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    const auto p = prepare_query(synthetic::random_query(4, seed % 3, seed), lg);
    auto cfg = with(Inference::kSample);
    cfg.sample_budget = static_cast<std::size_t>(std::pow(6.0, static_cast<double>(p.plan.width)));
    const auto s = estimate_sampled(p, lg, cfg);
    EXPECT_EQ(s.estimate, estimate_aggregate(p, lg).estimate);
    EXPECT_FALSE(s.truncated);
  }
}

TEST(Sampling, BudgetOneOnSingleColor) {
  const auto lg = build_lifted_graph(synthetic::random_digraph(20, 0.2, 1), Coloring::single(20));
  const auto p = prepare_query(synthetic::cycle_query(4), lg);
  auto cfg = with(Inference::kSample);
  cfg.sample_budget = 1;
  EXPECT_EQ(estimate_sampled(p, lg, cfg).estimate, estimate_aggregate(p, lg).estimate);
}

TEST(Sampling, SmallBudgetTruncatesAndIsSeeded) {
  const auto g = synthetic::power_law_digraph(300, 4.0, 2.5, 2);
  SummaryConfig sc;
  sc.coloring = ColoringConfig::single_method(ColoringMethod::kQuasiStable, 8);
  const auto lg = build_summary(g, sc);
  const auto p = prepare_query(synthetic::cycle_query(4), lg);
  auto cfg = with(Inference::kSample);
  cfg.sample_budget = 4;
  cfg.seed = 9;
  const auto a = estimate_sampled(p, lg, cfg);
  EXPECT_TRUE(a.truncated);
  EXPECT_EQ(a.estimate, estimate_sampled(p, lg, cfg).estimate);
  cfg.sample_budget = 0;
  EXPECT_THROW(estimate_sampled(p, lg, cfg), ValidationError);
}

TEST(Guards, NaiveCap) {
  const auto lg = ring_clique_summary();
  auto cfg = with(Inference::kNaive);
  cfg.naive_cap = 4;
  EXPECT_THROW(estimate(synthetic::path_query(2), lg, cfg), ResourceLimit);
}

TEST(Guards, Deadline) {
  const auto lg = ring_clique_summary();
  auto cfg = with(Inference::kAggregate);
  cfg.deadline = std::chrono::steady_clock::now() - std::chrono::seconds(1);
  EXPECT_THROW(estimate(synthetic::path_query(2), lg, cfg), Timeout);
}

TEST(Guards, TableLimit) {
  const auto g = synthetic::random_digraph(60, 0.3, 1);
  SummaryConfig sc;
  sc.coloring = ColoringConfig::single_method(ColoringMethod::kHash, 16);
  const auto lg = build_summary(g, sc);
  auto cfg = with(Inference::kAggregate);
  cfg.max_table_entries = 10;
  EXPECT_THROW(estimate(synthetic::cycle_query(4), lg, cfg), ResourceLimit);
}

TEST(Aggregate, EntriesBoundedByWidth) {
  const auto g = synthetic::random_digraph(40, 0.15, 12);
  SummaryConfig sc;
  sc.coloring = ColoringConfig::single_method(ColoringMethod::kQuasiStable, 5);
  const auto lg = build_summary(g, sc);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto q = synthetic::random_query(4, seed % 3, seed);
    const auto p = prepare_query(q, lg);
    const auto r = estimate_aggregate(p, lg);
    EXPECT_LE(static_cast<double>(r.entries),
              static_cast<double>(q.vertex_count()) * std::pow(5.0, static_cast<double>(r.width)));
  }
}
