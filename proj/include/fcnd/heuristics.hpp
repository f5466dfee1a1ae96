#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fcnd/core.hpp"
#include "fcnd/mip.hpp"
#include "fcnd/work_clock.hpp"

namespace fcnd {

/// Budgets are work-seconds.
struct LsConfig {
  double lambda = 0.05;
  int m0 = 20;
  double mip_time = 20.0;
  double budget = 120.0;
  int columns_per_round = 50;
  double prune_eps = 0.01;
  std::uint64_t seed = 1;

  /// Throws StructuralError on out-of-range values.
  void validate() const;
};

/// Hamming ball around a reference design, installed in every neighbourhood
/// MIP together with a branching hint toward the reference.
struct LocalBranch {
  DesignVector reference;
  int beta = 0;
};

struct SearchResult {
  std::optional<Solution> best;  // on the full instance
  Trajectory trajectory;
  /// Fractional relaxation history and every incumbent, in order.
  SampleSet samples;
  int mip_calls = 0;
  MipStatus last_status = MipStatus::kLimitNoSolution;
  bool reduction_fallback = false;
};

/// CS reduction, then neighbourhood search with the two incumbent rows,
/// strict cutoffs and M-halving. With `reduction_override` the CS phase is
/// skipped and the flagged arcs are removed instead. Arcs open in `initial`
/// are never removed. Trajectory stamps read `clock`.
SearchResult ls_star(const Instance& instance, const LsConfig& cfg, WorkClock& clock,
                     const Solution* initial = nullptr,
                     std::span<const std::uint8_t> reduction_override = {},
                     const LocalBranch* local_branch = nullptr);

struct SampleRun {
  std::string routine;
  SampleSet samples;
  int mip_calls = 0;
};

struct RssOptions {
  double budget = 30.0;
  double per_iter = 20.0;
  std::uint64_t seed = 1;
  double big_fraction = 0.01;
  int plateau = 3;       // unchanged y^SS rounds that end the SS loop
  int max_ss_iter = 20;
};

/// Randomized slope scaling: SS to a plateau, fix A⁰/A¹ from the linearized
/// LP, solve the restricted MIP from y^SS with a random seed and dive bias
/// and a large design cost on a random 1% of the free arcs, add the
/// pseudo-cut, repeat until the budget is spent.
SampleRun rss_sample(const Instance& instance, const RssOptions& options, WorkClock& clock);

/// LS* with few columns per pricing round; every incumbent and the CS
/// history become samples.
SampleRun lsfs_sample(const Instance& instance, double budget, double per_iter, int columns,
                      std::uint64_t seed, WorkClock& clock);

/// Removal set of LSR: arcs predicted removable that are closed in
/// `keep_open`.
std::vector<std::uint8_t> lsr_removal(std::span<const std::uint8_t> remove_prediction,
                                      const DesignVector& keep_open);

/// Re-adds the arcs of a cheapest path for every commodity cut off by
/// `removed`. Returns false when even the full graph cannot connect one.
bool repair_removal(const Instance& instance, std::vector<std::uint8_t>& removed);

/// LS* without CS on the instance reduced by the prediction, starting from
/// `best_sample`.
SearchResult lsr(const Instance& instance, std::span<const std::uint8_t> remove_prediction,
                 const Solution& best_sample, const LsConfig& cfg, WorkClock& clock);

/// β = ⌊(1 - respect_fraction) |A|⌋.
int local_branching_radius(int arc_count, double respect_fraction);

/// One MIP on the full instance inside the local-branching ball around
/// `prediction` (a design), warm-started at `best_sample`, diving toward
/// the prediction. Runs for cfg.budget.
SearchResult lbh(const Instance& instance, const DesignVector& prediction,
                 const Solution& best_sample, double respect_fraction, const LsConfig& cfg,
                 WorkClock& clock);

/// LS* with the local-branching row and hint in every neighbourhood MIP.
SearchResult lswsh(const Instance& instance, const DesignVector& prediction,
                   const Solution& best_sample, double respect_fraction, const LsConfig& cfg,
                   WorkClock& clock);

}  // namespace fcnd
