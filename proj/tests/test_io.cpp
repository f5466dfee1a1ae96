#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "fcnd/errors.hpp"
#include "fcnd/flow.hpp"
#include "fcnd/generator.hpp"
#include "fcnd/io.hpp"
#include "fcnd/rng.hpp"
#include "support.hpp"

using namespace fcnd;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "fcnd_test_io";
  fs::create_directories(dir);
  const fs::path p = dir / name;
  fs::remove(p);
  return p;
}

int parse_error_line(std::string_view text) {
  try {
    parse_instance(text, "x");
  } catch (const ParseError& e) {
    return e.line();
  }
  return -1;
}

Solution solution_of(const char* bits, double objective, const char* tag = "t") {
  Solution s;
  s.design = DesignVector::from_string(bits);
  s.objective = objective;
  s.provenance = tag;
  return s;
}

}  // namespace

TEST_CASE("minimal instance file") {
  const Instance inst = parse_instance("2 1 1\n1 2 1 10 5\n1 2 4\n", "mini");
  CHECK(inst.name() == "mini");
  CHECK(inst.node_count() == 2);
  REQUIRE(inst.arc_count() == 1);
  CHECK(inst.arc(0) == Arc{0, 1, 1.0, 10.0, 5.0});
  CHECK(inst.commodity(0) == Commodity{0, 1, 4.0});
}

TEST_CASE("comments, blank lines and the name line") {
  const Instance inst =
      parse_instance("# name foo\n\n# anything\n2 1 1\n  1 2 1 10 5  \n# c\n1 2 4\n", "bar");
  CHECK(inst.name() == "foo");
  CHECK(inst.arc_count() == 1);
}

TEST_CASE("parse errors name the offending line") {
  CHECK(parse_error_line("2 1 1\n1 2 1 10 5\n1 2 0\n") == 3);      // zero demand
  CHECK(parse_error_line("2 1 1\n1 2 1 0 5\n1 2 4\n") == 2);       // zero capacity
  CHECK(parse_error_line("2 1 1\n1 3 1 10 5\n1 2 4\n") == 2);      // node out of range
  CHECK(parse_error_line("2 1\n1 2 1 10 5\n1 2 4\n") == 1);        // header
  CHECK(parse_error_line("2 1 1 xx\n1 2 1 10 5\n1 2 4\n") == 1);   // header flag
  CHECK(parse_error_line("2 1 1\n1 2 1 10\n1 2 4\n") == 2);        // short arc line
  CHECK(parse_error_line("2 1 1\n1 2 1 10 5\n1 1 4\n") == 3);      // origin = destination
  CHECK(parse_error_line("2 1 1\n1 2 1 1e 5\n1 2 4\n") == 2);      // bad number
  CHECK(parse_error_line("2 1 2\n1 2 1 10 5\n1 2 4\n") == 3);      // missing commodity
  CHECK(parse_error_line("") == 1);
}

TEST_CASE("per-commodity cost extension") {
  const Instance inst = parse_instance("2 1 2 pc\n1 2 1 10 5 3 7\n1 2 4\n1 2 1\n", "pc");
  CHECK(inst.has_commodity_costs());
  CHECK(inst.cost(0, 1) == 7.0);
  CHECK(parse_instance(format_instance(inst), "other") == inst);
}

TEST_CASE("instance round trip is exact") {
  GenSpec spec;
  spec.rows = 5;
  spec.cols = 3;  // 44 arcs
  spec.seed = 8;
  Instance inst = generate(spec);
  const fs::path p = scratch("inst.txt");
  write_instance(inst, p);
  CHECK(read_instance(p) == inst);

  // non-integral values survive bit for bit
  std::vector<Arc> arcs = inst.arcs();
  arcs[0].variable_cost = 0.1 + 0.2;
  arcs[1].capacity = 1.0 / 3.0;
  const Instance odd(inst.name(), inst.node_count(), arcs, inst.commodities());
  CHECK(parse_instance(format_instance(odd), "x") == odd);
  CHECK(format_instance(odd) == format_instance(parse_instance(format_instance(odd), "x")));
}

TEST_CASE("archive ordering and deduplication") {
  const fs::path p = scratch("archive.txt");
  append_archive(p, "inst", solution_of("110", 100));
  append_archive(p, "inst", solution_of("011", 90));
  auto a = read_archive(p);
  REQUIRE(a.entries.size() == 2);
  CHECK(a.entries[0].objective == 90);
  CHECK(a.entries[1].objective == 100);
  append_archive(p, "inst", solution_of("011", 90));
  CHECK(read_archive(p).entries.size() == 2);
  append_archive(p, "inst", solution_of("110", 95));  // same design, better value
  a = read_archive(p);
  REQUIRE(a.entries.size() == 2);
  CHECK(a.entries[1].objective == 95);
  CHECK_THROWS_AS(append_archive(p, "other", solution_of("111", 1)), IntegrityError);
  CHECK_THROWS_AS(append_archive(p, "inst", solution_of("1111", 1)), IntegrityError);
}

TEST_CASE("archive verification against the instance") {
  const Instance inst = testing::random_instance(5, 5, 9, 2);
  const fs::path p = scratch("verified.txt");
  SplitMix64 rng(3);
  WorkClock clock;
  double best = 1e300;
  int stored = 0;
  for (int i = 0; i < 30; ++i) {
    DesignVector y(inst.arc_count());
    for (int a = 0; a < inst.arc_count(); ++a) y.set(a, rng.bernoulli(0.8));
    auto s = evaluate_design(inst, y, clock, "rss");
    if (!s) continue;
    append_archive(p, inst.name(), *s);
    best = std::min(best, evaluate_objective(inst, s->design, s->flows));
    ++stored;
  }
  REQUIRE(stored > 0);
  const SolutionArchive a = read_archive(p, &inst);
  REQUIRE(a.best());
  CHECK(a.best()->objective == doctest::Approx(best).epsilon(1e-12));

  SolutionArchive bad = a;
  bad.entries[0].objective *= 1.001;
  write_archive(bad, p);
  CHECK_THROWS_AS(read_archive(p, &inst), IntegrityError);
  CHECK_NOTHROW(read_archive(p));
}

TEST_CASE("feature tables") {
  CHECK(format_feature_table({}, {}).find('\n') == format_feature_table({}, {}).size() - 1);
  SplitMix64 rng(4);
  std::vector<FeatureRow> rows(1000);
  std::vector<std::uint8_t> labels(1000);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (double& v : rows[r]) v = rng.uniform();
    labels[r] = rng.bernoulli(0.3);
  }
  rows[0].fill(0.0);
  rows[1].fill(1.0);
  const std::string text = format_feature_table(rows, labels);
  const FeatureTable t = parse_feature_table(text);
  REQUIRE(t.rows.size() == 1000);
  CHECK(t.labels == labels);
  CHECK(format_feature_table(t.rows, t.labels) == text);
  for (int f = 0; f < kFeatureCount; ++f)
    CHECK(t.rows[5][f] == doctest::Approx(rows[5][f]).epsilon(1e-8));
  const fs::path p = scratch("features.csv");
  write_feature_table({rows[2]}, {1}, p);
  const FeatureTable one = read_feature_table(p);
  REQUIRE(one.rows.size() == 1);
  CHECK(one.labels[0] == 1);
  CHECK_THROWS_AS(format_feature_table(rows, {}), StructuralError);
  CHECK_THROWS_AS(parse_feature_table("a,b\n"), ParseError);
}

TEST_CASE("sample sets, solutions, trajectories and arc bits round trip") {
  SampleSet s;
  Eigen::VectorXd y(3);
  y << 0.0, 0.25, 1.0 / 3.0;
  s.fractional.push_back(y);
  s.feasible.push_back(solution_of("101", 12.5, "rss"));
  const std::string text = format_sample_set(s, "rss");
  const SampleSet back = parse_sample_set(text);
  REQUIRE(back.fractional.size() == 1);
  CHECK(back.fractional[0] == y);
  CHECK(back.feasible[0].design.to_string() == "101");
  CHECK(format_sample_set(back, "rss") == text);

  const Instance inst = testing::random_instance(6, 5, 9, 2);
  WorkClock clock;
  auto sol = evaluate_design(inst, DesignVector(9, true), clock, "ls");
  REQUIRE(sol);
  const Solution parsed = parse_solution(format_solution(*sol));
  CHECK(parsed.objective == sol->objective);
  CHECK(parsed.design == sol->design);
  CHECK(check_feasibility(inst, parsed.design, parsed.flows).ok());
  CHECK(evaluate_objective(inst, parsed.design, parsed.flows) == doctest::Approx(sol->objective));

  Trajectory t;
  t.record(0.5, 10.0);
  t.record(2.0, 9.0);
  t.horizon = 60.0;
  const Trajectory tb = parse_trajectory(format_trajectory(t));
  CHECK(tb.points == t.points);
  CHECK(tb.horizon == 60.0);
  CHECK_THROWS_AS(parse_trajectory("horizon 5\n1 10\n2 11\n"), ParseError);

  const std::vector<std::uint8_t> bits{1, 0, 1};
  const std::vector<double> prob{0.9, 0.1, 0.5};
  CHECK(parse_arc_bits(format_arc_bits(bits)) == bits);
  CHECK(parse_arc_bits(format_arc_bits(bits, &prob)) == bits);
  CHECK_THROWS_AS(parse_arc_bits("2 1\n"), ParseError);
}
