#include <gtest/gtest.h>

#include <set>

#include "color/color.hpp"

using namespace color;

TEST(Plan, Widths) {
  EXPECT_EQ(plan_elimination(synthetic::path_query(4)).width, 2u);
  EXPECT_EQ(plan_elimination(synthetic::cycle_query(3)).width, 3u);
  EXPECT_EQ(plan_elimination(synthetic::star_query(4)).width, 2u);
  EXPECT_EQ(plan_elimination(synthetic::cycle_query(6)).width, 3u);
  EXPECT_EQ(plan_elimination(QueryGraph(std::vector<LabelSet>(1), {})).width, 1u);
}

TEST(Plan, MinFillEliminatesLeavesFirst) {
  // 0 - 1 - 2 - 3: either end has zero fill and degree 1; the smaller id wins.
  const auto order = min_fill_order(synthetic::path_query(3));
  EXPECT_EQ(order.front(), 0u);
}

TEST(Plan, EveryEdgeAssignedOnceToItsLaterEndpoint) {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const auto q = synthetic::random_query(2 + seed % 5, seed % 4, seed);
    const auto plan = plan_elimination(q);
    ASSERT_EQ(plan.vertex_order.size(), q.vertex_count());
    std::vector<std::size_t> pos(q.vertex_count());
    for (std::size_t i = 0; i < plan.vertex_order.size(); ++i) pos[plan.vertex_order[i]] = i;
    std::multiset<std::size_t> seen;
    for (std::size_t i = 0; i < plan.steps.size(); ++i) {
      EXPECT_EQ(plan.steps[i].vertex, plan.vertex_order[i]);
      for (auto e : plan.steps[i].edges) {
        seen.insert(e);
        EXPECT_EQ(std::max(pos[q.edge(e).src], pos[q.edge(e).dst]), i);
      }
    }
    EXPECT_EQ(seen.size(), q.edge_count());
    for (std::size_t e = 0; e < q.edge_count(); ++e) EXPECT_EQ(seen.count(e), 1u);
  }
}

TEST(Plan, ProcessingOrderStaysConnected) {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const auto q = synthetic::random_query(2 + seed % 6, seed % 3, seed + 100);
    const auto plan = plan_elimination(q);
    std::vector<bool> done(q.vertex_count(), false);
    done[plan.vertex_order[0]] = true;
    for (std::size_t i = 1; i < plan.vertex_order.size(); ++i) {
      const auto v = plan.vertex_order[i];
      bool touches = false;
      for (const auto& e : q.edges()) touches |= (e.src == v && done[e.dst]) || (e.dst == v && done[e.src]);
      EXPECT_TRUE(touches) << "seed " << seed << " step " << i;
      done[v] = true;
    }
  }
}

TEST(Plan, SumOutDropsVerticesOnceAllNeighborsAreProcessed) {
  const auto q = synthetic::random_query(6, 3, 5);
  const auto plan = plan_elimination(q);
  std::vector<std::size_t> pos(q.vertex_count());
  for (std::size_t i = 0; i < plan.vertex_order.size(); ++i) pos[plan.vertex_order[i]] = i;
  std::size_t dropped = 0;
  for (std::size_t i = 0; i < plan.steps.size(); ++i) {
    for (auto v : plan.steps[i].sum_out) {
      ++dropped;
      for (const auto& e : q.edges()) {
        if (e.src == v) {
          EXPECT_LE(pos[e.dst], i);
        }
        if (e.dst == v) {
          EXPECT_LE(pos[e.src], i);
        }
      }
    }
  }
  EXPECT_EQ(dropped, q.vertex_count());
}
