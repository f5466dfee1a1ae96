#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <limits>
#include <optional>
#include <vector>

#include "fcnd/core.hpp"
#include "fcnd/lp.hpp"
#include "fcnd/work_clock.hpp"

namespace fcnd {

/// Linear row over design variables: Σ coeff * y_arc (sense) rhs.
struct DesignRow {
  std::vector<lp::Entry> terms;  // index = arc
  lp::Sense sense = lp::Sense::kLessEqual;
  double rhs = 0.0;

  bool satisfied(const DesignVector& y, double tol = 1e-9) const;
};

struct MipLimits {
  double time = std::numeric_limits<double>::infinity();  // work-seconds
  std::int64_t nodes = std::numeric_limits<std::int64_t>::max();
};

struct MipProblem {
  explicit MipProblem(const Instance& inst) : instance(&inst) {}

  const Instance* instance;
  std::vector<DesignRow> rows;
  std::vector<std::int8_t> fixed;  // per arc: -1 free, 0 or 1; empty = all free
  std::optional<double> cutoff;    // strict upper bound on the search objective
  std::optional<DesignVector> warm_start;
  /// Dives toward the hinted value of the branching variable.
  std::optional<DesignVector> hint;
  /// Replaces f in the search objective; reported objectives stay true.
  std::vector<double> design_cost;
  MipLimits limits;
  std::uint64_t seed = 0;
  double dive_bias = 0.5;  // probability of diving toward y = 1
  std::ostream* trace = nullptr;
  /// Called with every new incumbent, in the order found.
  std::function<void(const Solution&)> on_incumbent;
};

enum class MipStatus : std::uint8_t {
  kOptimal,
  kFeasibleLimit,
  kInfeasible,
  kNoBetterThanCutoff,
  kLimitNoSolution,
};

const char* to_string(MipStatus s);

struct MipResult {
  MipStatus status = MipStatus::kLimitNoSolution;
  std::optional<Solution> best;
  std::int64_t nodes = 0;
  double time = 0.0;  // work-seconds spent
  Trajectory trajectory;
  double bound = -std::numeric_limits<double>::infinity();
};

/// Branch and bound over y on the arc-flow formulation. Node relaxations are
/// solved by the simplex with warm bases; forcing rows x <= min(d,u) y are
/// separated lazily and kept globally. Solution wall times and trajectory
/// stamps read `clock`.
MipResult solve_mip(const MipProblem& problem, WorkClock& clock);

/// Σ_{ȳ=1} y <= Σ ȳ - 1 and Σ_{ȳ=1} y >= Σ ȳ - M.
void add_neighbourhood_rows(MipProblem& p, const DesignVector& incumbent, int m);
/// Σ y(1-y') + (1-y)y' <= β over all arcs.
void add_local_branching_row(MipProblem& p, const DesignVector& reference, int beta);
/// Σ_{A0} y + Σ_{A1} (1-y) >= 1. Throws StructuralError on overlapping or
/// both-empty sets.
void add_pseudo_cut(MipProblem& p, const std::vector<ArcId>& a0, const std::vector<ArcId>& a1);

}  // namespace fcnd
