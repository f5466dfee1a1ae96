#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "fcnd/core.hpp"
#include "fcnd/lp.hpp"
#include "fcnd/work_clock.hpp"

namespace fcnd {

/// Arc-flow LP: one column x_a^k per usable (arc, commodity) pair, one
/// conservation row per (node, commodity) except the destination, one
/// capacity row per arc. Optionally adds design columns y_a in [0,1] with
/// cost f_a, turning capacity rows into Σ_k x_a^k - u_a y_a <= 0.
class ArcFlowModel {
 public:
  struct Config {
    bool design_columns = false;
    /// Arcs with a zero entry get no flow columns. Ignored when empty.
    std::vector<std::uint8_t> usable;
    /// Per-arc surcharge added to every commodity's unit cost.
    std::vector<double> surcharge;
  };

  ArcFlowModel(const Instance& instance, Config config);

  lp::LinearProgram& lp() { return lp_; }
  const lp::LinearProgram& lp() const { return lp_; }
  const Instance& instance() const { return *instance_; }

  int flow_col(ArcId a, CommodityId k) const { return flow_col_[index(a, k)]; }
  int design_col(ArcId a) const { return design_columns_ ? design_col_[a] : -1; }
  int capacity_row(ArcId a) const { return capacity_row_[a]; }

  /// Adds x_a^k <= min(d_k, u_a) y_a. Returns the row, or -1 when already
  /// present or not applicable.
  int add_forcing_row(ArcId a, CommodityId k);
  bool has_forcing_row(ArcId a, CommodityId k) const { return forcing_row_[index(a, k)] >= 0; }

  /// Reads flows (entries above 1e-9) and the design from an LP solution.
  /// Without design columns the design is Σ_k x / u clamped to [0,1].
  FlowSolution extract(const Eigen::VectorXd& x) const;

 private:
  std::size_t index(ArcId a, CommodityId k) const {
    return static_cast<std::size_t>(a) * instance_->commodity_count() + k;
  }

  const Instance* instance_;
  bool design_columns_;
  lp::LinearProgram lp_;
  std::vector<int> flow_col_;     // [a*K + k]
  std::vector<int> forcing_row_;  // [a*K + k]
  std::vector<int> design_col_;
  std::vector<int> capacity_row_;
};

/// Min-cost multicommodity flow on the open arcs of `design`. Returns
/// nullopt when the design cannot carry the demand. The objective includes
/// the fixed cost of every open arc.
std::optional<FlowSolution> solve_flow_lp(const Instance& instance, const DesignVector& design,
                                          WorkClock& clock);
std::optional<FlowSolution> solve_flow_lp(const Instance& instance, const DesignVector& design);

/// Prices a design: solve_flow_lp plus Solution bookkeeping. The wall time
/// is read from `clock` after the solve.
std::optional<Solution> evaluate_design(const Instance& instance, const DesignVector& design,
                                        WorkClock& clock, std::string provenance);

/// y_a = ceil(Σ_k x_a^k / u_a): opens every arc carrying flow above 1e-9.
DesignVector round_up_design(const Instance& instance, const Eigen::VectorXd& arc_totals);

// ---------------------------------------------------------------------------
// Slope scaling

struct SlopeState {
  enum class Freeze : std::uint8_t { kFree, kClosed, kOpen };

  std::vector<double> factor;  // ρ_a
  std::vector<Freeze> frozen;  // kClosed: ρ = big, kOpen: ρ = 0
  double big = 0.0;

  /// ρ_a = f_a / u_a, nothing frozen, big = 1e7 max(c) + max(f).
  static SlopeState initial(const Instance& instance);
  /// Effective per-unit surcharge for arc `a`.
  double surcharge(ArcId a) const;
  void freeze(ArcId a, Freeze how) { frozen[a] = how; }
};

struct SlopeStep {
  bool feasible = false;
  FlowSolution flows;  // design = normalized total flow
  DesignVector rounded;
  double lp_objective = 0.0;
};

/// Keeps the linearized LP and its basis between iterations.
class SlopeScaler {
 public:
  explicit SlopeScaler(const Instance& instance);
  /// Solves the LP with unit costs c + ρ, rounds, then sets ρ_a = f_a /
  /// Σ_k x_a^k on arcs with positive flow. Frozen arcs keep their factor.
  SlopeStep iterate(SlopeState& state, WorkClock& clock);

 private:
  const Instance* instance_;
  ArcFlowModel model_;
  lp::Basis basis_;
};

SlopeStep slope_scaling_iterate(const Instance& instance, SlopeState& state, WorkClock& clock);

// ---------------------------------------------------------------------------
// Path-flow master and pricing

struct Path {
  CommodityId commodity = 0;
  std::vector<ArcId> arcs;  // O(k) to D(k), simple
  double cost = 0.0;        // Σ c_a^k
};

struct PricedPath {
  Path path;
  double reduced_cost = 0.0;
};

/// Duals of the path-flow master. `forcing` is indexed [a*K + k] and holds 0
/// where the row is absent.
struct MasterDuals {
  Eigen::VectorXd demand;    // ρ_k
  Eigen::VectorXd capacity;  // σ_a <= 0
  Eigen::VectorXd forcing;   // τ_a^k <= 0
};

inline constexpr double kPricingTol = 1e-7;

/// For each commodity, the loopless paths (in increasing length, at most
/// `per_commodity`) whose length under c - σ - τ is below ρ_k - 1e-7.
/// Arcs flagged in `blocked` are never used. Throws std::logic_error when an
/// arc length is materially negative.
std::vector<PricedPath> price_paths(const Instance& instance, const MasterDuals& duals,
                                    std::span<const std::uint8_t> blocked, int per_commodity,
                                    WorkClock* clock = nullptr);

/// Restricted master of the path-flow relaxation with lazily generated
/// forcing rows Σ_p δ z_p <= d_k y_a and one artificial column per
/// commodity.
class PathMaster {
 public:
  PathMaster(const Instance& instance, double min_capacity_fraction = 1.0);

  struct Outcome {
    bool converged = false;  // no priceable path and no violated forcing row
    bool feasible = false;   // artificial columns at zero
    double objective = 0.0;
    int rounds = 0;
  };

  /// Column and row generation until convergence or the deadline.
  Outcome solve(int columns_per_round, WorkClock& clock, Deadline deadline);

  void set_capacity(ArcId a, double capacity);
  double capacity(ArcId a) const { return capacity_[a]; }
  /// Removes the arc: y_a and every path through it fixed to zero.
  void block(ArcId a);
  void unblock(ArcId a);
  bool blocked(ArcId a) const { return blocked_[a] != 0; }

  const std::vector<Path>& paths() const { return paths_; }
  Eigen::VectorXd path_values() const;
  /// Σ_p δ z_p per arc, and per (arc, commodity) at [a*K + k].
  Eigen::VectorXd arc_flow() const;
  Eigen::VectorXd arc_commodity_flow() const;
  Eigen::VectorXd design_values() const;
  MasterDuals duals() const;
  FlowSolution flow_solution() const;
  int forcing_row_count() const { return forcing_rows_; }

 private:
  void add_path(const Path& path);
  int add_forcing(ArcId a, CommodityId k);
  int separate_forcing();

  const Instance* instance_;
  lp::LinearProgram lp_;
  lp::Basis basis_;
  lp::LpResult last_;
  std::vector<Path> paths_;
  std::vector<int> path_col_;
  std::vector<std::set<std::vector<ArcId>>> known_;
  std::vector<std::vector<int>> paths_of_;  // per commodity
  std::vector<int> design_col_, capacity_row_, demand_row_, artificial_col_;
  std::vector<int> forcing_row_;  // [a*K + k]
  std::vector<double> capacity_;
  std::vector<std::uint8_t> blocked_;
  int forcing_rows_ = 0;
};

// ---------------------------------------------------------------------------
// Capacity scaling

struct CsLimits {
  int max_iter = 50;
  double frac_fraction = 0.01;  // stop below this share of fractional arcs
  int columns_per_round = 50;
  double time_budget = std::numeric_limits<double>::infinity();
  double prune_eps = 0.01;
  int prune_after = 3;
};

struct ScalingState {
  std::vector<double> capacity;  // u'
  double lambda = 0.05;
  int iteration = 0;
  std::vector<Eigen::VectorXd> history;  // fractional ỹ per iteration
  std::vector<std::uint8_t> pruned;
};

struct CsResult {
  FlowSolution relaxation;  // last ỹ
  std::vector<Path> paths;
  std::vector<std::uint8_t> pruned;
  std::vector<Solution> feasible;
  ScalingState state;
  double first_bound = 0.0;  // path-flow relaxation value at u' = u
  bool bound_valid = false;
};

/// ỹ_a = max(Σ flow / u'_a, max_k flow_k / d_k) clamped to [0,1].
Eigen::VectorXd relaxation_design(const Instance& instance, const PathMaster& master);

/// u'_a <- λ u'_a ỹ_a + (1 - λ) u'_a, kept positive.
void update_capacities(ScalingState& state, const Eigen::VectorXd& design);

CsResult capacity_scaling(const Instance& instance, double lambda, const CsLimits& limits,
                          WorkClock& clock, std::ostream* trace = nullptr);

// ---------------------------------------------------------------------------
// Reduction

struct ReducedInstance {
  Instance instance;
  std::vector<ArcId> to_full;     // reduced arc -> full arc
  std::vector<int> to_reduced;    // full arc -> reduced arc or -1
  bool connected = true;          // every O(k) still reaches D(k)

  DesignVector lift(const DesignVector& reduced) const;
  DesignVector restrict(const DesignVector& full) const;
  FlowSolution lift(const FlowSolution& reduced) const;
  Solution lift(const Solution& reduced) const;
};

ReducedInstance build_reduced_instance(const Instance& instance,
                                       std::span<const std::uint8_t> removed);

/// True when every commodity's destination is reachable from its origin
/// through arcs not flagged in `removed`.
bool commodities_connected(const Instance& instance, std::span<const std::uint8_t> removed);

}  // namespace fcnd
