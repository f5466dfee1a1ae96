#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <set>

#include "fcnd/errors.hpp"
#include "fcnd/flow.hpp"
#include "fcnd/generator.hpp"
#include "fcnd/io.hpp"

using namespace fcnd;

TEST_CASE("grid 3x3 has 9 nodes and 24 arcs") {
  GenSpec spec;
  spec.rows = 3;
  spec.cols = 3;
  spec.commodity_count = 5;
  const Instance inst = generate(spec);
  CHECK(inst.node_count() == 9);
  CHECK(inst.arc_count() == 24);
  std::set<std::pair<int, int>> pairs;
  for (const Arc& a : inst.arcs()) {
    pairs.insert({a.tail, a.head});
    const int dr = std::abs(a.tail / 3 - a.head / 3), dc = std::abs(a.tail % 3 - a.head % 3);
    CHECK(dr + dc == 1);
  }
  CHECK(pairs.size() == 24);
}

TEST_CASE("ring of 6 without chords has 12 arcs") {
  GenSpec spec;
  spec.topology = Topology::kCircular;
  spec.ring_size = 6;
  spec.chords = 0;
  spec.commodity_count = 4;
  const Instance inst = generate(spec);
  CHECK(inst.node_count() == 6);
  CHECK(inst.arc_count() == 12);
  spec.chords = 3;
  CHECK(generate(spec).arc_count() == 18);
}

TEST_CASE("same seed gives identical files, different seeds differ") {
  GenSpec spec;
  spec.seed = 42;
  const std::string a = format_instance(generate(spec));
  const std::string b = format_instance(generate(spec));
  CHECK(a == b);
  spec.seed = 43;
  CHECK(format_instance(generate(spec)) != a);
}

TEST_CASE("default spec and generated instances are feasible and valid") {
  for (std::uint64_t seed = 1; seed <= 8; ++seed) {
    GenSpec spec;
    spec.seed = seed;
    if (seed % 2) spec.capacity_ratio = kLooseCapacity;
    if (seed % 3 == 0) {
      spec.topology = Topology::kCircular;
      spec.ring_size = 14;
      spec.chords = 5;
    }
    const Instance inst = generate(spec);
    CHECK(inst.commodity_count() == 20);
    std::set<std::pair<int, int>> od;
    for (const Commodity& c : inst.commodities()) {
      od.insert({c.origin, c.destination});
      CHECK(c.demand >= spec.demand_range.lo);
      CHECK(c.demand <= spec.demand_range.hi);
    }
    CHECK(od.size() == 20);
    for (const Arc& a : inst.arcs()) {
      CHECK(a.variable_cost >= spec.cost_range.lo);
      CHECK(a.variable_cost <= spec.cost_range.hi);
      CHECK(a.fixed_cost >= spec.fixed_range.lo);
      CHECK(a.fixed_cost <= spec.fixed_range.hi);
    }
    CHECK(commodities_connected(inst, {}));
    CHECK(solve_flow_lp(inst, DesignVector(inst.arc_count(), true)).has_value());
  }
  GenSpec d;
  CHECK(d.rows == 6);
  CHECK(d.cols == 6);
  CHECK(d.commodity_count == 20);
}

TEST_CASE("tight capacities are tighter than loose ones") {
  double tight = 0.0, loose = 0.0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    GenSpec spec;
    spec.seed = seed;
    spec.capacity_ratio = kTightCapacity;
    for (const Arc& a : generate(spec).arcs()) tight += a.capacity;
    spec.capacity_ratio = kLooseCapacity;
    for (const Arc& a : generate(spec).arcs()) loose += a.capacity;
  }
  CHECK(loose > tight);
}

TEST_CASE("unsatisfiable specs are rejected") {
  GenSpec spec;
  spec.rows = 2;
  spec.cols = 2;
  spec.commodity_count = 13;  // only 12 ordered pairs
  CHECK_THROWS_AS(generate(spec), SpecError);
  spec.commodity_count = 12;
  CHECK(generate(spec).commodity_count() == 12);
  GenSpec ring;
  ring.topology = Topology::kCircular;
  ring.ring_size = 2;
  CHECK_THROWS_AS(generate(ring), SpecError);
  ring.ring_size = 5;
  ring.chords = 6;  // 5 possible chords
  CHECK_THROWS_AS(generate(ring), SpecError);
  GenSpec bad;
  bad.demand_range = {5.0, 1.0};
  CHECK_THROWS_AS(generate(bad), SpecError);
}

TEST_CASE("scaling a spec") {
  GenSpec spec;
  spec.rows = 10;
  spec.cols = 10;
  spec.commodity_count = 100;
  const GenSpec s = scale_spec(spec, 1.3);
  CHECK(s.rows == 13);
  CHECK(s.cols == 10);
  CHECK(s.commodity_count == 130);
  CHECK(s.seed != spec.seed);
  const GenSpec same = scale_spec(spec, 1.0);
  CHECK(same.rows == 10);
  CHECK(same.commodity_count == 100);
  CHECK_THROWS_AS(scale_spec(spec, 0.0), SpecError);
  CHECK_THROWS_AS(scale_spec(spec, 0.001), SpecError);
  GenSpec ring;
  ring.topology = Topology::kCircular;
  ring.ring_size = 10;
  ring.chords = 4;
  const GenSpec r = scale_spec(ring, 1.5);
  CHECK(r.ring_size == 15);
  CHECK(r.chords == 6);
}
