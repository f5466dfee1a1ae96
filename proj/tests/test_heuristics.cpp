#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "fcnd/errors.hpp"
#include "fcnd/flow.hpp"
#include "fcnd/generator.hpp"
#include "fcnd/heuristics.hpp"
#include "support.hpp"

using namespace fcnd;

namespace {

Instance tiny(std::uint64_t seed) { return testing::random_instance(seed, 5, 11, 3, 6.0, 16.0); }

Instance desk(std::uint64_t seed) {
  GenSpec g;
  g.rows = 4;
  g.cols = 4;
  g.commodity_count = 8;
  g.seed = seed;
  return generate(g);
}

Solution all_open(const Instance& inst) {
  WorkClock clock;
  auto s = evaluate_design(inst, DesignVector(inst.arc_count(), true), clock, "init");
  REQUIRE(s);
  return *s;
}

void check_full(const Instance& inst, const Solution& s) {
  CHECK(check_feasibility(inst, s.design, s.flows).ok());
  CHECK(s.objective == doctest::Approx(evaluate_objective(inst, s.design, s.flows)).epsilon(1e-9));
}

void check_monotone(const Trajectory& t) {
  for (std::size_t i = 1; i < t.points.size(); ++i) {
    CHECK(t.points[i].time >= t.points[i - 1].time);
    CHECK(t.points[i].objective < t.points[i - 1].objective);
  }
}

}  // namespace

TEST_CASE("LS* from the all-open design reaches the enumerated optimum") {
  for (std::uint64_t seed = 1; seed <= 6; ++seed) {
    CAPTURE(seed);
    const Instance inst = tiny(seed);
    const auto oracle = testing::brute_force(inst);
    const auto start = solve_flow_lp(inst, DesignVector(inst.arc_count(), true));
    if (!oracle || !start) continue;
    const Solution init = all_open(inst);
    LsConfig cfg;
    cfg.m0 = inst.arc_count();
    cfg.budget = 1e6;
    WorkClock clock;
    const std::vector<std::uint8_t> keep_all(inst.arc_count(), 0);
    const SearchResult r = ls_star(inst, cfg, clock, &init, keep_all);
    REQUIRE(r.best);
    CHECK(r.best->objective == doctest::Approx(oracle->objective).epsilon(1e-9));
    check_full(inst, *r.best);
    check_monotone(r.trajectory);
  }
}

TEST_CASE("LS* with capacity scaling never beats the optimum") {
  for (std::uint64_t seed = 1; seed <= 6; ++seed) {
    CAPTURE(seed);
    const Instance inst = tiny(seed);
    const auto oracle = testing::brute_force(inst);
    if (!oracle) continue;
    LsConfig cfg;
    cfg.budget = 1e6;
    WorkClock clock;
    const SearchResult r = ls_star(inst, cfg, clock);
    REQUIRE(r.best);
    CHECK(r.best->objective >= oracle->objective - 1e-6 * oracle->objective);
    check_full(inst, *r.best);
    check_monotone(r.trajectory);
  }
}

TEST_CASE("LS* with M0 = 0 returns the incumbent unchanged") {
  const Instance inst = tiny(2);
  const Solution init = all_open(inst);
  LsConfig cfg;
  cfg.m0 = 0;
  WorkClock clock;
  const std::vector<std::uint8_t> keep_all(inst.arc_count(), 0);
  const SearchResult r = ls_star(inst, cfg, clock, &init, keep_all);
  REQUIRE(r.best);
  CHECK(r.best->design == init.design);
  CHECK(r.best->objective == init.objective);
  CHECK(r.mip_calls == 0);
}

TEST_CASE("LS* on a generated instance") {
  const Instance inst = desk(3);
  LsConfig cfg;
  cfg.budget = 40.0;
  cfg.mip_time = 5.0;
  WorkClock clock;
  const SearchResult a = ls_star(inst, cfg, clock);
  REQUIRE(a.best);
  check_full(inst, *a.best);
  check_monotone(a.trajectory);
  CHECK(!a.samples.fractional.empty());
  CHECK(clock.seconds() <= cfg.budget + 10.0);
  // never worse than a supplied incumbent
  WorkClock clock2;
  const SearchResult b = ls_star(inst, cfg, clock2, &*a.best);
  REQUIRE(b.best);
  CHECK(b.best->objective <= a.best->objective);
  // determinism
  WorkClock clock3;
  const SearchResult c = ls_star(inst, cfg, clock3);
  CHECK(c.trajectory.points == a.trajectory.points);
  CHECK(c.best->design == a.best->design);
}

TEST_CASE("LS* rejects bad configurations") {
  const Instance inst = tiny(1);
  WorkClock clock;
  LsConfig cfg;
  cfg.lambda = 1.5;
  CHECK_THROWS_AS(ls_star(inst, cfg, clock), StructuralError);
  cfg = LsConfig{};
  cfg.m0 = -1;
  CHECK_THROWS_AS(ls_star(inst, cfg, clock), StructuralError);
}

TEST_CASE("RSS sampling") {
  const Instance inst = desk(4);
  RssOptions opt;
  opt.budget = 15.0;
  opt.per_iter = 1.0;
  opt.seed = 9;
  WorkClock clock;
  const SampleRun run = rss_sample(inst, opt, clock);
  CHECK(run.routine == "rss");
  CHECK(run.mip_calls >= 1);
  REQUIRE(!run.samples.feasible.empty());
  for (const Solution& s : run.samples.feasible) {
    CHECK(s.provenance == "rss");
    CHECK(check_feasibility(inst, s.design, s.flows).ok());
    CHECK(s.objective == doctest::Approx(evaluate_objective(inst, s.design, s.flows)).epsilon(1e-9));
  }
  for (const Eigen::VectorXd& y : run.samples.fractional) {
    CHECK(y.size() == inst.arc_count());
    CHECK(y.minCoeff() >= 0.0);
    CHECK(y.maxCoeff() <= 1.0);
  }
  // no duplicate designs
  std::set<DesignVector> designs;
  for (const Solution& s : run.samples.feasible) CHECK(designs.insert(s.design).second);

  WorkClock again;
  const SampleRun repeat = rss_sample(inst, opt, again);
  REQUIRE(repeat.samples.feasible.size() == run.samples.feasible.size());
  for (std::size_t i = 0; i < run.samples.feasible.size(); ++i) {
    CHECK(repeat.samples.feasible[i].design == run.samples.feasible[i].design);
    CHECK(repeat.samples.feasible[i].wall_time == run.samples.feasible[i].wall_time);
  }
  CHECK(repeat.samples.fractional.size() == run.samples.fractional.size());

  opt.budget = 0.0;
  CHECK(rss_sample(inst, opt, again).samples.feasible.empty());
}

TEST_CASE("LSFS sampling") {
  const Instance inst = desk(4);
  WorkClock clock;
  const SampleRun run = lsfs_sample(inst, 15.0, 1.0, 3, 5, clock);
  CHECK(run.routine == "lsfs");
  CHECK(!run.samples.fractional.empty());
  REQUIRE(!run.samples.feasible.empty());
  for (const Solution& s : run.samples.feasible) {
    CHECK(s.provenance == "lsfs");
    CHECK(check_feasibility(inst, s.design, s.flows).ok());
  }
  WorkClock empty_clock;
  const SampleRun none = lsfs_sample(inst, 0.0, 1.0, 3, 5, empty_clock);
  CHECK(none.samples.feasible.empty());
  CHECK(none.samples.fractional.empty());
}

TEST_CASE("LSR removal and repair") {
  const Instance inst = tiny(3);
  const int m = inst.arc_count();
  DesignVector keep(m);
  keep.set(1, true);
  keep.set(4, true);
  std::vector<std::uint8_t> pred(m, 1);
  pred[0] = 0;
  const auto removed = lsr_removal(pred, keep);
  CHECK(removed[0] == 0);
  CHECK(removed[1] == 0);
  CHECK(removed[4] == 0);
  CHECK(removed[2] == 1);
  for (ArcId a : keep.open_arcs()) CHECK(removed[a] == 0);

  std::vector<std::uint8_t> everything(m, 1);
  REQUIRE(repair_removal(inst, everything));
  CHECK(commodities_connected(inst, everything));
  CHECK_THROWS_AS(lsr_removal(std::vector<std::uint8_t>(m + 1, 0), keep), StructuralError);
}

TEST_CASE("LSR search") {
  const Instance inst = desk(5);
  const int m = inst.arc_count();
  WorkClock sclock;
  const SampleRun samples = lsfs_sample(inst, 10.0, 1.0, 3, 1, sclock);
  const Solution* best = samples.samples.best();
  REQUIRE(best);
  LsConfig cfg;
  cfg.budget = 20.0;
  cfg.mip_time = 4.0;

  SUBCASE("prediction removing the sample's arcs keeps them") {
    std::vector<std::uint8_t> pred(m, 1);
    WorkClock clock;
    const SearchResult r = lsr(inst, pred, *best, cfg, clock);
    REQUIRE(r.best);
    CHECK(r.best->objective <= best->objective);
    check_full(inst, *r.best);
    for (ArcId a : r.best->design.open_arcs()) CHECK(best->design[a]);
  }
  SUBCASE("keep-everything prediction") {
    std::vector<std::uint8_t> pred(m, 0);
    WorkClock clock;
    const SearchResult r = lsr(inst, pred, *best, cfg, clock);
    REQUIRE(r.best);
    CHECK(r.best->objective <= best->objective);
    CHECK(r.samples.fractional.empty());  // no CS phase
    check_full(inst, *r.best);
    check_monotone(r.trajectory);
  }
}

TEST_CASE("local branching heuristics") {
  CHECK(local_branching_radius(100, 0.8) == 20);
  CHECK(local_branching_radius(100, 1.0) == 0);
  CHECK(local_branching_radius(7, 0.5) == 3);
  CHECK_THROWS_AS(local_branching_radius(10, 0.0), StructuralError);
  CHECK_THROWS_AS(local_branching_radius(10, 1.5), StructuralError);

  const Instance inst = tiny(4);
  const int m = inst.arc_count();
  const Solution init = all_open(inst);
  LsConfig cfg;
  cfg.budget = 1e6;

  SUBCASE("LBH with an infeasible prediction at full respect") {
    WorkClock clock;
    const SearchResult r = lbh(inst, DesignVector(m), init, 1.0, cfg, clock);
    CHECK(r.last_status == MipStatus::kInfeasible);
    REQUIRE(r.best);
    CHECK(r.best->design == init.design);
  }
  SUBCASE("LBH stays inside the ball") {
    const auto oracle = testing::brute_force(inst);
    REQUIRE(oracle);
    WorkClock clock;
    const SearchResult r = lbh(inst, oracle->design, init, 0.75, cfg, clock);
    REQUIRE(r.best);
    CHECK(r.best->objective == doctest::Approx(oracle->objective));
    check_full(inst, *r.best);
  }
  SUBCASE("a vacuous ball leaves LS* unchanged") {
    const std::vector<std::uint8_t> keep_all(m, 0);
    cfg.m0 = m;
    WorkClock c1, c2;
    const SearchResult plain = ls_star(inst, cfg, c1, &init, keep_all);
    const LocalBranch lb{DesignVector(m), m};
    const SearchResult ball = ls_star(inst, cfg, c2, &init, keep_all, &lb);
    REQUIRE(plain.best);
    REQUIRE(ball.best);
    CHECK(ball.best->objective == doctest::Approx(plain.best->objective));
  }
  SUBCASE("LSWSH never degrades the sample") {
    const Instance big = desk(6);
    WorkClock sclock;
    const SampleRun samples = lsfs_sample(big, 10.0, 1.0, 3, 2, sclock);
    const Solution* best = samples.samples.best();
    REQUIRE(best);
    LsConfig c;
    c.budget = 20.0;
    c.mip_time = 4.0;
    WorkClock clock;
    const SearchResult r = lswsh(big, best->design, *best, 0.8, c, clock);
    REQUIRE(r.best);
    CHECK(r.best->objective <= best->objective);
    check_full(big, *r.best);
  }
}
