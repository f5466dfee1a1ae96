#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "fcnd/errors.hpp"
#include "fcnd/flow.hpp"
#include "fcnd/mip.hpp"
#include "support.hpp"

using namespace fcnd;

namespace {

Instance tiny(std::uint64_t seed) { return testing::random_instance(seed, 5, 11, 3, 6.0, 16.0); }

bool rows_ok(const MipProblem& p, const DesignVector& y) {
  for (const DesignRow& r : p.rows)
    if (!r.satisfied(y)) return false;
  return true;
}

std::optional<testing::BruteForce> brute(const MipProblem& p) {
  return testing::brute_force(*p.instance, [&](const DesignVector& y) { return rows_ok(p, y); });
}

MipResult solve(const MipProblem& p) {
  WorkClock clock;
  return solve_mip(p, clock);
}

void check_solution(const Instance& inst, const MipProblem& p, const Solution& s) {
  CHECK(check_feasibility(inst, s.design, s.flows).ok());
  CHECK(s.objective == doctest::Approx(evaluate_objective(inst, s.design, s.flows)).epsilon(1e-9));
  CHECK(rows_ok(p, s.design));
}

}  // namespace

TEST_CASE("branch and bound matches exhaustive enumeration") {
  for (std::uint64_t seed = 1; seed <= 8; ++seed) {
    CAPTURE(seed);
    const Instance inst = tiny(seed);
    MipProblem p(inst);
    const auto oracle = brute(p);
    const MipResult r = solve(p);
    if (!oracle) {
      CHECK(r.status == MipStatus::kInfeasible);
      continue;
    }
    REQUIRE(r.status == MipStatus::kOptimal);
    REQUIRE(r.best);
    CHECK(r.best->objective == doctest::Approx(oracle->objective).epsilon(1e-9));
    CHECK(r.bound == doctest::Approx(oracle->objective).epsilon(1e-9));
    check_solution(inst, p, *r.best);
    // trajectory is strictly improving and ends at the optimum
    REQUIRE(!r.trajectory.points.empty());
    for (std::size_t i = 1; i < r.trajectory.points.size(); ++i) {
      CHECK(r.trajectory.points[i].time > r.trajectory.points[i - 1].time);
      CHECK(r.trajectory.points[i].objective < r.trajectory.points[i - 1].objective);
    }
    CHECK(*r.trajectory.best() == doctest::Approx(oracle->objective));
  }
}

TEST_CASE("cutoff is strict") {
  const Instance inst = tiny(3);
  MipProblem p(inst);
  const auto oracle = brute(p);
  REQUIRE(oracle);

  p.cutoff = oracle->objective - 1.0;
  CHECK(solve(p).status == MipStatus::kNoBetterThanCutoff);
  p.cutoff = oracle->objective;
  CHECK(solve(p).status == MipStatus::kNoBetterThanCutoff);
  p.cutoff = oracle->objective + 1.0;
  const MipResult r = solve(p);
  REQUIRE(r.status == MipStatus::kOptimal);
  CHECK(r.best->objective == doctest::Approx(oracle->objective));
  CHECK(r.best->objective < *p.cutoff);
}

TEST_CASE("neighbourhood rows") {
  const Instance inst = tiny(5);
  const int m = inst.arc_count();
  DesignVector inc(m);
  for (int a : {0, 2, 4, 6, 8}) inc.set(a, true);

  SUBCASE("five open arcs with M = 2 keep three or four of them") {
    MipProblem p(inst);
    add_neighbourhood_rows(p, inc, 2);
    REQUIRE(p.rows.size() == 2);
    for (std::uint32_t mask = 0; mask < (1u << m); ++mask) {
      DesignVector y(m);
      int kept = 0;
      for (int a = 0; a < m; ++a) {
        y.set(a, mask >> a & 1u);
        kept += y[a] && inc[a];
      }
      CHECK(rows_ok(p, y) == (kept == 3 || kept == 4));
    }
    CHECK_FALSE(rows_ok(p, inc));
  }
  SUBCASE("M at least the open count makes the lower row vacuous") {
    MipProblem p(inst);
    add_neighbourhood_rows(p, inc, 5);
    CHECK(p.rows[1].satisfied(DesignVector(m)));
    add_neighbourhood_rows(p, inc, 9);
    CHECK(p.rows[3].satisfied(DesignVector(m)));
  }
  SUBCASE("M = 0 is infeasible") {
    MipProblem p(inst);
    add_neighbourhood_rows(p, inc, 0);
    CHECK(solve(p).status == MipStatus::kInfeasible);
  }
  SUBCASE("search under the rows matches enumeration") {
    DesignVector all(m, true);
    for (int M : {1, 3}) {
      MipProblem p(inst);
      add_neighbourhood_rows(p, all, M);
      const auto oracle = brute(p);
      const MipResult r = solve(p);
      if (!oracle) {
        CHECK(r.status == MipStatus::kInfeasible);
        continue;
      }
      REQUIRE(r.status == MipStatus::kOptimal);
      CHECK(r.best->objective == doctest::Approx(oracle->objective));
      check_solution(inst, p, *r.best);
    }
  }
  SUBCASE("negative M is rejected") {
    MipProblem p(inst);
    CHECK_THROWS_AS(add_neighbourhood_rows(p, inc, -1), StructuralError);
  }
}

TEST_CASE("local branching row") {
  const Instance inst = tiny(6);
  const int m = inst.arc_count();
  const auto free_opt = testing::brute_force(inst);
  REQUIRE(free_opt);

  SUBCASE("beta = 0 allows only the reference") {
    MipProblem p(inst);
    const DesignVector ref(m, true);
    add_local_branching_row(p, ref, 0);
    const MipResult r = solve(p);
    REQUIRE(r.status == MipStatus::kOptimal);
    CHECK(r.best->design == ref);
  }
  SUBCASE("beta = |A| is vacuous") {
    MipProblem p(inst);
    add_local_branching_row(p, DesignVector(m), m);
    const MipResult r = solve(p);
    REQUIRE(r.status == MipStatus::kOptimal);
    CHECK(r.best->objective == doctest::Approx(free_opt->objective));
  }
  SUBCASE("beta = 3 around random references") {
    SplitMix64 rng(11);
    for (int rep = 0; rep < 4; ++rep) {
      DesignVector ref(m);
      for (int a = 0; a < m; ++a) ref.set(a, rng.bernoulli(0.6));
      MipProblem p(inst);
      add_local_branching_row(p, ref, 3);
      for (std::uint32_t mask = 0; mask < (1u << m); ++mask) {
        DesignVector y(m);
        for (int a = 0; a < m; ++a) y.set(a, mask >> a & 1u);
        CHECK(rows_ok(p, y) == (design_distance(y, ref) <= 3));
      }
      const auto oracle = brute(p);
      const MipResult r = solve(p);
      if (!oracle) {
        CHECK(r.status == MipStatus::kInfeasible);
        continue;
      }
      REQUIRE(r.status == MipStatus::kOptimal);
      CHECK(design_distance(r.best->design, ref) <= 3);
      CHECK(r.best->objective == doctest::Approx(oracle->objective));
    }
  }
}

TEST_CASE("pseudo-cut") {
  const Instance inst = tiny(2);
  const int m = inst.arc_count();
  SUBCASE("single terms") {
    MipProblem p(inst);
    add_pseudo_cut(p, {3}, {});
    add_pseudo_cut(p, {}, {5});
    for (std::uint32_t mask = 0; mask < (1u << m); ++mask) {
      DesignVector y(m);
      for (int a = 0; a < m; ++a) y.set(a, mask >> a & 1u);
      CHECK(p.rows[0].satisfied(y) == y[3]);
      CHECK(p.rows[1].satisfied(y) == !y[5]);
    }
  }
  SUBCASE("excludes exactly the agreeing designs") {
    MipProblem p(inst);
    const std::vector<ArcId> a0{0, 4}, a1{1, 7, 9};
    add_pseudo_cut(p, a0, a1);
    for (std::uint32_t mask = 0; mask < (1u << m); ++mask) {
      DesignVector y(m);
      for (int a = 0; a < m; ++a) y.set(a, mask >> a & 1u);
      bool agrees = true;
      for (ArcId a : a0) agrees = agrees && !y[a];
      for (ArcId a : a1) agrees = agrees && y[a];
      CHECK(p.rows[0].satisfied(y) == !agrees);
    }
  }
  SUBCASE("invalid sets") {
    MipProblem p(inst);
    CHECK_THROWS_AS(add_pseudo_cut(p, {}, {}), StructuralError);
    CHECK_THROWS_AS(add_pseudo_cut(p, {1, 2}, {2}), StructuralError);
  }
  SUBCASE("the optimum is cut off") {
    const auto opt = testing::brute_force(inst);
    REQUIRE(opt);
    MipProblem p(inst);
    std::vector<ArcId> a0, a1;
    for (int a = 0; a < m; ++a) (opt->design[a] ? a1 : a0).push_back(a);
    add_pseudo_cut(p, a0, a1);
    const auto oracle = brute(p);
    const MipResult r = solve(p);
    if (!oracle) {
      CHECK(r.status == MipStatus::kInfeasible);
    } else {
      REQUIRE(r.status == MipStatus::kOptimal);
      CHECK(r.best->design != opt->design);
      CHECK(r.best->objective == doctest::Approx(oracle->objective));
    }
  }
}

TEST_CASE("fixed variables") {
  const Instance inst = tiny(4);
  const int m = inst.arc_count();
  MipProblem p(inst);
  p.fixed.assign(m, -1);
  p.fixed[0] = 1;
  p.fixed[3] = 0;
  p.fixed[7] = 0;
  const auto oracle = testing::brute_force(
      inst, [](const DesignVector& y) { return y[0] && !y[3] && !y[7]; });
  const MipResult r = solve(p);
  if (!oracle) {
    CHECK(r.status == MipStatus::kInfeasible);
    return;
  }
  REQUIRE(r.status == MipStatus::kOptimal);
  CHECK(r.best->design[0]);
  CHECK_FALSE(r.best->design[3]);
  CHECK(r.best->objective == doctest::Approx(oracle->objective));
}

TEST_CASE("warm start gives an incumbent at least as good") {
  for (std::uint64_t seed = 1; seed <= 4; ++seed) {
    const Instance inst = tiny(seed);
    MipProblem p(inst);
    const DesignVector all(inst.arc_count(), true);
    const auto warm = solve_flow_lp(inst, all);
    if (!warm) continue;
    p.warm_start = all;
    const MipResult r = solve(p);
    REQUIRE(!r.trajectory.points.empty());
    CHECK(r.trajectory.points.front().objective <= warm->objective + 1e-9);
  }
}

TEST_CASE("determinism and dive bias") {
  const Instance inst = testing::random_instance(21, 10, 30, 10, 6.0, 14.0);
  MipProblem p(inst);
  p.seed = 77;
  const MipResult a = solve(p);
  const MipResult b = solve(p);
  CHECK(a.nodes == b.nodes);
  CHECK(a.trajectory.points == b.trajectory.points);
  REQUIRE(a.status == MipStatus::kOptimal);

  p.dive_bias = 0.0;
  const MipResult down = solve(p);
  p.dive_bias = 1.0;
  const MipResult up = solve(p);
  REQUIRE(down.status == MipStatus::kOptimal);
  REQUIRE(up.status == MipStatus::kOptimal);
  CHECK(down.best->objective == doctest::Approx(a.best->objective).epsilon(1e-9));
  CHECK(up.best->objective == doctest::Approx(a.best->objective).epsilon(1e-9));
}

TEST_CASE("limits") {
  const Instance inst = testing::random_instance(21, 10, 30, 10, 6.0, 14.0);
  MipProblem p(inst);
  REQUIRE(solve(p).nodes > 1);
  p.limits.nodes = 1;
  const MipResult r = solve(p);
  CHECK(r.nodes == 1);
  CHECK((r.status == MipStatus::kFeasibleLimit || r.status == MipStatus::kLimitNoSolution));
  p.limits.nodes = std::numeric_limits<std::int64_t>::max();
  p.limits.time = 0.0;
  CHECK(solve(p).status == MipStatus::kLimitNoSolution);
}

TEST_CASE("design cost replaces f in the search only") {
  const Instance inst = tiny(7);
  const int m = inst.arc_count();
  MipProblem p(inst);
  p.design_cost.assign(m, 0.0);
  const MipResult r = solve(p);
  REQUIRE(r.status == MipStatus::kOptimal);
  CHECK(r.best->objective == doctest::Approx(evaluate_objective(inst, r.best->design, r.best->flows)));
  // with free arcs the search minimizes routing cost alone
  const auto all = solve_flow_lp(inst, DesignVector(m, true));
  REQUIRE(all);
  double fixed_all = 0.0;
  for (const Arc& a : inst.arcs()) fixed_all += a.fixed_cost;
  double fixed_r = 0.0;
  for (ArcId a : r.best->design.open_arcs()) fixed_r += inst.arc(a).fixed_cost;
  CHECK(r.best->objective - fixed_r == doctest::Approx(all->objective - fixed_all).epsilon(1e-9));
}

TEST_CASE("trace and bad input") {
  const Instance inst = tiny(1);
  MipProblem p(inst);
  std::ostringstream trace;
  p.trace = &trace;
  solve(p);
  CHECK(!trace.str().empty());
  MipProblem bad(inst);
  bad.rows.push_back(DesignRow{{{inst.arc_count(), 1.0}}, lp::Sense::kLessEqual, 1.0});
  CHECK_THROWS_AS(solve(bad), StructuralError);
  CHECK(std::string(to_string(MipStatus::kNoBetterThanCutoff)) == "no_better_than_cutoff");
}
