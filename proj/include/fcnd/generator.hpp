#pragma once

#include <cstdint>
#include <string>

#include "fcnd/core.hpp"

namespace fcnd {

struct Range {
  double lo = 0.0;
  double hi = 0.0;
};

enum class Topology { kGrid, kCircular };

/// Generator controls. Capacities are scaled so that total capacity divided
/// by the capacity needed to route every commodity on a fewest-hop path
/// lands in `capacity_ratio`.
struct GenSpec {
  Topology topology = Topology::kGrid;
  int rows = 6;
  int cols = 6;
  int ring_size = 12;
  int chords = 6;
  int commodity_count = 20;
  Range cost_range{1.0, 10.0};
  Range fixed_range{100.0, 400.0};
  Range demand_range{5.0, 20.0};
  Range capacity_ratio{1.1, 1.5};
  std::uint64_t seed = 1;

  int node_count() const { return topology == Topology::kGrid ? rows * cols : ring_size; }
};

inline constexpr Range kTightCapacity{1.1, 1.5};
inline constexpr Range kLooseCapacity{2.0, 5.0};

/// Throws SpecError on an unsatisfiable spec.
void validate(const GenSpec& spec);

/// Deterministic given the spec. Every commodity is routable and the
/// all-open design is feasible (capacities are raised until it is).
Instance generate(const GenSpec& spec);

/// Scales rows (grid) or ring size and chords (circular) and the commodity
/// count by `factor`, rounding to nearest, with a derived seed.
GenSpec scale_spec(const GenSpec& spec, double factor);

std::string default_name(const GenSpec& spec);

}  // namespace fcnd
