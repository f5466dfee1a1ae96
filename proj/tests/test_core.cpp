#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>

#include "fcnd/core.hpp"
#include "fcnd/errors.hpp"
#include "fcnd/rng.hpp"
#include "support.hpp"

using namespace fcnd;

namespace {

Instance one_arc(double c, double u, double f, double d) {
  return Instance("one", 2, {{0, 1, c, u, f}}, {{0, 1, d}});
}

FlowSolution flows_of(int commodities, std::vector<std::vector<FlowEntry>> lists) {
  FlowSolution s;
  s.flows = std::move(lists);
  s.flows.resize(commodities);
  return s;
}

bool has(const FeasibilityReport& r, Violation::Kind kind, int arc) {
  return std::any_of(r.violations.begin(), r.violations.end(),
                     [&](const Violation& v) { return v.kind == kind && v.arc == arc; });
}

}  // namespace

TEST_CASE("objective of a single open arc") {
  const Instance inst = one_arc(2.0, 10.0, 5.0, 3.0);
  DesignVector y(1, true);
  CHECK(evaluate_objective(inst, y, flows_of(1, {{{0, 3.0}}})) == doctest::Approx(11.0));
}

TEST_CASE("objective with no flow and nothing open is zero") {
  const Instance inst = testing::random_instance(3, 5, 10, 3);
  CHECK(evaluate_objective(inst, DesignVector(10), flows_of(3, {})) == 0.0);
}

TEST_CASE("objective agrees with a dense double-entry summation") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const Instance inst = testing::random_instance(seed, 5, 10, 4);
    SplitMix64 rng(seed * 7);
    const int m = inst.arc_count(), kc = inst.commodity_count();
    std::vector<std::vector<double>> dense(m, std::vector<double>(kc, 0.0));
    FlowSolution s;
    s.flows.resize(kc);
    for (int k = 0; k < kc; ++k)
      for (int a = 0; a < m; ++a)
        if (rng.bernoulli(0.4)) {
          const double v = rng.uniform(0.0, 5.0);
          s.flows[k].push_back({a, v});
          dense[a][k] = v;
        }
    DesignVector y(m);
    for (int a = 0; a < m; ++a) y.set(a, rng.bernoulli(0.5));
    double oracle = 0.0;
    for (int a = 0; a < m; ++a) {
      double col = 0.0;
      for (int k = 0; k < kc; ++k) col += dense[a][k];
      oracle += col * inst.arc(a).variable_cost + (y[a] ? inst.arc(a).fixed_cost : 0.0);
    }
    CHECK(evaluate_objective(inst, y, s) == doctest::Approx(oracle).epsilon(1e-12));
  }
}

TEST_CASE("objective is invariant under commodity reordering") {
  const Instance inst = testing::random_instance(11, 6, 14, 4);
  auto sol = solve_flow_lp(inst, DesignVector(14, true));
  REQUIRE(sol);
  std::vector<Commodity> rev(inst.commodities().rbegin(), inst.commodities().rend());
  const Instance swapped("swapped", inst.node_count(), inst.arcs(), rev);
  FlowSolution s2 = *sol;
  std::reverse(s2.flows.begin(), s2.flows.end());
  const DesignVector y(14, true);
  CHECK(evaluate_objective(swapped, y, s2) == doctest::Approx(evaluate_objective(inst, y, *sol)));
}

TEST_CASE("objective rejects mismatched dimensions") {
  const Instance inst = one_arc(1, 1, 1, 1);
  CHECK_THROWS_AS(evaluate_objective(inst, DesignVector(2), flows_of(1, {})), StructuralError);
  CHECK_THROWS_AS(evaluate_objective(inst, DesignVector(1), flows_of(2, {})), StructuralError);
}

TEST_CASE("feasibility: one commodity on one open arc") {
  const Instance inst = one_arc(1.0, 10.0, 5.0, 4.0);
  const auto r = check_feasibility(inst, DesignVector(1, true), flows_of(1, {{{0, 4.0}}}));
  CHECK(r.ok());
}

TEST_CASE("feasibility: flow on a closed arc violates its capacity row") {
  const Instance inst = one_arc(1.0, 10.0, 5.0, 4.0);
  const auto r = check_feasibility(inst, DesignVector(1, false), flows_of(1, {{{0, 4.0}}}));
  CHECK_FALSE(r.ok());
  CHECK(has(r, Violation::Kind::kCapacity, 0));
  CHECK(has(r, Violation::Kind::kClosedArcFlow, 0));
}

TEST_CASE("feasibility reports over-capacity, imbalance, negative flow and bad indices") {
  const Instance inst("tri", 3, {{0, 1, 1, 5, 1}, {1, 2, 1, 5, 1}, {0, 2, 1, 5, 1}},
                      {{0, 2, 6.0}});
  const DesignVector y(3, true);
  auto r = check_feasibility(inst, y, flows_of(1, {{{0, 6.0}, {1, 6.0}}}));
  CHECK(has(r, Violation::Kind::kCapacity, 0));
  CHECK(has(r, Violation::Kind::kCapacity, 1));
  r = check_feasibility(inst, y, flows_of(1, {{{0, 3.0}, {1, 2.0}, {2, 3.0}}}));
  CHECK(std::any_of(r.violations.begin(), r.violations.end(), [](const Violation& v) {
    return v.kind == Violation::Kind::kConservation && v.node == 1;
  }));
  r = check_feasibility(inst, y, flows_of(1, {{{0, 3.0}, {1, 3.0}, {2, 3.0}, {0, -1.0}, {1, 1.0}}}));
  CHECK(has(r, Violation::Kind::kNegativeFlow, 0));
  r = check_feasibility(inst, y, flows_of(1, {{{7, 1.0}}}));
  CHECK(has(r, Violation::Kind::kBadIndex, 7));
  CHECK(check_feasibility(inst, y, flows_of(1, {{{0, 3.0}, {1, 3.0}, {2, 3.0}}})).ok());
}

TEST_CASE("instance constructor enforces invariants") {
  CHECK_THROWS_AS(Instance("x", 2, {{0, 0, 1, 1, 1}}, {}), StructuralError);
  CHECK_THROWS_AS(Instance("x", 2, {{0, 2, 1, 1, 1}}, {}), StructuralError);
  CHECK_THROWS_AS(Instance("x", 2, {{0, 1, 1, 0, 1}}, {}), StructuralError);
  CHECK_THROWS_AS(Instance("x", 2, {{0, 1, 1, 1, -1}}, {}), StructuralError);
  CHECK_THROWS_AS(Instance("x", 2, {{0, 1, -1, 1, 1}}, {}), StructuralError);
  CHECK_THROWS_AS(Instance("x", 2, {{0, 1, 1, 1, 1}}, {{0, 1, 0.0}}), StructuralError);
  CHECK_THROWS_AS(Instance("x", 2, {{0, 1, 1, 1, 1}}, {{1, 1, 1.0}}), StructuralError);
  CHECK_THROWS_AS(Instance("x", 2, {{0, 1, 1, 1, 1}}, {{0, 1, 1.0}}, {{1.0, 2.0}}),
                  StructuralError);
}

TEST_CASE("adjacency lists successors and predecessors") {
  const Instance inst("tri", 3, {{0, 1, 1, 5, 1}, {1, 2, 1, 5, 1}, {0, 2, 1, 5, 1}}, {});
  const auto out0 = inst.out_arcs(0);
  CHECK(std::vector<int>(out0.begin(), out0.end()) == std::vector<int>{0, 2});
  const auto in2 = inst.in_arcs(2);
  CHECK(std::vector<int>(in2.begin(), in2.end()) == std::vector<int>{1, 2});
  CHECK(inst.in_arcs(0).empty());
}

TEST_CASE("per-commodity cost table overrides arc costs") {
  const Instance inst("pc", 2, {{0, 1, 1.0, 10.0, 0.0}}, {{0, 1, 1.0}, {0, 1, 2.0}},
                      {{3.0, 5.0}});
  const FlowSolution s = flows_of(2, {{{0, 1.0}}, {{0, 2.0}}});
  CHECK(evaluate_objective(inst, DesignVector(1, true), s) == doctest::Approx(13.0));
}

TEST_CASE("design distance examples") {
  const auto v = [](const char* s) { return DesignVector::from_string(s); };
  CHECK(design_distance(v("101"), v("101")) == 0);
  CHECK(design_distance(v("101"), v("001")) == 1);
  CHECK_THROWS_AS(design_distance(v("10"), v("101")), StructuralError);
  CHECK_THROWS_AS(DesignVector::from_string("10x"), StructuralError);
}

TEST_CASE("design distance matches a naive loop and is a metric") {
  SplitMix64 rng(99);
  auto random_design = [&](int n) {
    DesignVector y(n);
    for (int i = 0; i < n; ++i) y.set(i, rng.bernoulli(0.5));
    return y;
  };
  for (int trial = 0; trial < 200; ++trial) {
    const DesignVector a = random_design(100), b = random_design(100), c = random_design(100);
    int naive = 0;
    const std::string sa = a.to_string(), sb = b.to_string();
    for (int i = 0; i < 100; ++i) naive += sa[i] != sb[i];
    CHECK(design_distance(a, b) == naive);
    CHECK(design_distance(a, b) == design_distance(b, a));
    CHECK(design_distance(a, a) == 0);
    CHECK(design_distance(a, c) <= design_distance(a, b) + design_distance(b, c));
  }
}

TEST_CASE("trajectory keeps strict improvements only") {
  Trajectory t;
  t.record(0.0, 100.0);
  t.record(1.0, 120.0);
  t.record(2.0, 90.0);
  t.record(2.0, 80.0);
  t.record(3.0, 80.0);
  REQUIRE(t.points.size() == 2);
  CHECK(t.points[1] == TrajectoryPoint{2.0, 80.0});
  CHECK(*t.best() == 80.0);

  Trajectory u;
  u.record(1.0, 95.0);
  u.record(4.0, 70.0);
  u.horizon = 10.0;
  const Trajectory m = Trajectory::merge(t, u);
  REQUIRE(m.points.size() == 4);
  CHECK(m.points[1] == TrajectoryPoint{1.0, 95.0});
  CHECK(m.points[3] == TrajectoryPoint{4.0, 70.0});
  CHECK(m.horizon == 10.0);
}

TEST_CASE("sample set ranking is deterministic") {
  SampleSet s;
  auto sol = [](double obj, const char* tag, const char* bits) {
    Solution x;
    x.objective = obj;
    x.provenance = tag;
    x.design = DesignVector::from_string(bits);
    return x;
  };
  s.feasible = {sol(5, "rss", "110"), sol(3, "rss", "011"), sol(3, "lsfs", "111"),
                sol(3, "lsfs", "101")};
  const auto r = s.ranked_feasible();
  CHECK(r[0]->design.to_string() == "101");
  CHECK(r[1]->design.to_string() == "111");
  CHECK(r[2]->design.to_string() == "011");
  CHECK(r[3]->objective == 5);
  CHECK(s.best() == r[0]);
}
