#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace fcnd {

using NodeId = int;
using ArcId = int;
using CommodityId = int;

struct Arc {
  NodeId tail = 0;
  NodeId head = 0;
  double variable_cost = 0.0;
  double capacity = 0.0;
  double fixed_cost = 0.0;

  friend bool operator==(const Arc&, const Arc&) = default;
};

struct Commodity {
  NodeId origin = 0;
  NodeId destination = 0;
  double demand = 0.0;

  friend bool operator==(const Commodity&, const Commodity&) = default;
};

/// Directed network with capacities, variable and fixed arc costs, and
/// origin-destination demands. Immutable after construction; the
/// constructor validates every invariant and throws StructuralError.
///
/// Variable costs are per arc. An optional table `commodity_costs[a][k]`
/// overrides them per commodity.
class Instance {
 public:
  Instance() = default;
  Instance(std::string name, int node_count, std::vector<Arc> arcs,
           std::vector<Commodity> commodities,
           std::vector<std::vector<double>> commodity_costs = {});

  const std::string& name() const { return name_; }
  int node_count() const { return node_count_; }
  int arc_count() const { return static_cast<int>(arcs_.size()); }
  int commodity_count() const { return static_cast<int>(commodities_.size()); }

  const std::vector<Arc>& arcs() const { return arcs_; }
  const Arc& arc(ArcId a) const { return arcs_[a]; }
  const std::vector<Commodity>& commodities() const { return commodities_; }
  const Commodity& commodity(CommodityId k) const { return commodities_[k]; }

  bool has_commodity_costs() const { return !commodity_costs_.empty(); }
  const std::vector<std::vector<double>>& commodity_costs() const { return commodity_costs_; }
  double cost(ArcId a, CommodityId k) const {
    return commodity_costs_.empty() ? arcs_[a].variable_cost : commodity_costs_[a][k];
  }

  /// Successor arcs N_i^+ and predecessor arcs N_i^- of a node.
  std::span<const ArcId> out_arcs(NodeId i) const;
  std::span<const ArcId> in_arcs(NodeId i) const;

  double total_demand() const;

  Instance renamed(std::string name) const;

  friend bool operator==(const Instance& a, const Instance& b) {
    return a.name_ == b.name_ && a.node_count_ == b.node_count_ && a.arcs_ == b.arcs_ &&
           a.commodities_ == b.commodities_ && a.commodity_costs_ == b.commodity_costs_;
  }

 private:
  std::string name_;
  int node_count_ = 0;
  std::vector<Arc> arcs_;
  std::vector<Commodity> commodities_;
  std::vector<std::vector<double>> commodity_costs_;
  // CSR adjacency
  std::vector<int> out_start_, out_list_, in_start_, in_list_;
};

/// Binary open/closed decision per arc.
class DesignVector {
 public:
  DesignVector() = default;
  explicit DesignVector(std::size_t n, bool open = false) : bits_(n, open ? 1 : 0) {}
  explicit DesignVector(std::vector<std::uint8_t> bits);

  std::size_t size() const { return bits_.size(); }
  bool operator[](std::size_t a) const { return bits_[a] != 0; }
  void set(std::size_t a, bool open) { bits_[a] = open ? 1 : 0; }
  const std::vector<std::uint8_t>& bits() const { return bits_; }

  int open_count() const;
  std::vector<ArcId> open_arcs() const;

  /// "0110..." form used by the text formats.
  std::string to_string() const;
  static DesignVector from_string(std::string_view s);

  friend bool operator==(const DesignVector&, const DesignVector&) = default;
  friend auto operator<=>(const DesignVector&, const DesignVector&) = default;

 private:
  std::vector<std::uint8_t> bits_;
};

struct FlowEntry {
  ArcId arc = 0;
  double amount = 0.0;
};

/// Per-commodity sparse arc flows plus a (possibly fractional) design.
struct FlowSolution {
  std::vector<std::vector<FlowEntry>> flows;  // [commodity] -> entries
  Eigen::VectorXd design;                     // [arc] in [0,1]
  double objective = 0.0;

  /// Σ_k x_ij^k per arc.
  Eigen::VectorXd arc_totals(int arc_count) const;
};

/// A complete (x, y) pair with bookkeeping.
struct Solution {
  DesignVector design;
  FlowSolution flows;
  double objective = 0.0;
  double wall_time = 0.0;  // work-seconds since the producing run started
  std::string provenance;
};

/// Σ_k Σ_a c_a^k x_a^k + Σ_a f_a y_a. Throws StructuralError on dimension
/// mismatch.
double evaluate_objective(const Instance& instance, const DesignVector& design,
                          const FlowSolution& flows);

struct Violation {
  enum class Kind { kCapacity, kConservation, kNegativeFlow, kClosedArcFlow, kBadIndex };
  Kind kind;
  int arc = -1;
  int node = -1;
  int commodity = -1;
  double amount = 0.0;  // residual magnitude
};

struct FeasibilityReport {
  std::vector<Violation> violations;
  bool ok() const { return violations.empty(); }
  std::string describe() const;
};

inline constexpr double kDefaultFeasibilityTol = 1e-6;

/// Checks capacity, conservation and sign constraints of the arc-flow
/// formulation for a binary design. Violations are returned, never thrown.
FeasibilityReport check_feasibility(const Instance& instance, const DesignVector& design,
                                    const FlowSolution& flows,
                                    double tol = kDefaultFeasibilityTol);

/// Hamming distance Σ a(1-b) + (1-a)b.
int design_distance(const DesignVector& a, const DesignVector& b);

struct TrajectoryPoint {
  double time = 0.0;
  double objective = 0.0;
  friend bool operator==(const TrajectoryPoint&, const TrajectoryPoint&) = default;
};

/// Incumbent improvements over a run: times strictly increasing, objectives
/// strictly decreasing.
struct Trajectory {
  std::vector<TrajectoryPoint> points;
  double horizon = 0.0;

  /// Appends when `objective` improves on the last point. An improvement at
  /// the same time stamp replaces the last point.
  void record(double time, double objective);
  /// Merges two trajectories into the running minimum over time.
  static Trajectory merge(const Trajectory& a, const Trajectory& b);
  std::optional<double> best() const {
    return points.empty() ? std::nullopt : std::optional<double>(points.back().objective);
  }
};

/// Fractional designs and feasible solutions accumulated by sampling.
struct SampleSet {
  std::vector<Eigen::VectorXd> fractional;
  std::vector<Solution> feasible;

  void append(const SampleSet& other);
  /// Feasible entries sorted by objective, then provenance, then design.
  std::vector<const Solution*> ranked_feasible() const;
  const Solution* best() const;
};

}  // namespace fcnd
