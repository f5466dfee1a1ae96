#include "fcnd/heuristics.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <queue>
#include <set>

#include "fcnd/errors.hpp"
#include "fcnd/flow.hpp"
#include "fcnd/rng.hpp"

namespace fcnd {

void LsConfig::validate() const {
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw StructuralError("lambda must lie in [0,1]");
  if (m0 < 0) throw StructuralError("M0 must be nonnegative");
  if (!(mip_time > 0.0)) throw StructuralError("per-MIP time limit must be positive");
  if (!(budget >= 0.0)) throw StructuralError("budget must be nonnegative");
  if (columns_per_round < 1) throw StructuralError("columns per round must be positive");
  if (!(prune_eps >= 0.0)) throw StructuralError("prune threshold must be nonnegative");
}

namespace {

/// Cheapest O(k)->D(k) path for one commodity avoiding `removed` arcs
/// (ignored when empty). Empty when unreachable.
std::optional<std::vector<ArcId>> cheapest_path(const Instance& inst, CommodityId k,
                                                std::span<const std::uint8_t> removed) {
  const int n = inst.node_count();
  const Commodity& com = inst.commodity(k);
  std::vector<double> dist(n, std::numeric_limits<double>::infinity());
  std::vector<ArcId> via(n, -1);
  using Item = std::pair<double, NodeId>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
  dist[com.origin] = 0.0;
  heap.push({0.0, com.origin});
  while (!heap.empty()) {
    const auto [d, i] = heap.top();
    heap.pop();
    if (d > dist[i]) continue;
    if (i == com.destination) break;
    for (ArcId a : inst.out_arcs(i)) {
      if (!removed.empty() && removed[a]) continue;
      const NodeId j = inst.arc(a).head;
      const double nd = d + inst.cost(a, k);
      if (nd < dist[j]) {
        dist[j] = nd;
        via[j] = a;
        heap.push({nd, j});
      }
    }
  }
  if (!std::isfinite(dist[com.destination])) return std::nullopt;
  std::vector<ArcId> path;
  for (NodeId i = com.destination; i != com.origin; i = inst.arc(via[i]).tail) path.push_back(via[i]);
  std::reverse(path.begin(), path.end());
  return path;
}

class Search {
 public:
  /// Keeps `s` when it improves; `sample` adds it to the sample set.
  bool adopt(Solution s, bool sample) {
    if (sample) out.samples.feasible.push_back(s);
    if (out.best && !(s.objective < out.best->objective)) return false;
    out.trajectory.record(s.wall_time, s.objective);
    out.best = std::move(s);
    return true;
  }

  SearchResult out;
};

}  // namespace

bool repair_removal(const Instance& instance, std::vector<std::uint8_t>& removed) {
  if (removed.empty()) return true;
  for (int k = 0; k < instance.commodity_count(); ++k) {
    if (cheapest_path(instance, k, removed)) continue;
    const auto path = cheapest_path(instance, k, {});
    if (!path) return false;
    for (ArcId a : *path) removed[a] = 0;
  }
  return true;
}

SearchResult ls_star(const Instance& instance, const LsConfig& cfg, WorkClock& clock,
                     const Solution* initial, std::span<const std::uint8_t> reduction_override,
                     const LocalBranch* local_branch) {
  cfg.validate();
  const int m = instance.arc_count();
  if (!reduction_override.empty() && static_cast<int>(reduction_override.size()) != m)
    throw StructuralError("reduction mask length does not match arc count");
  if (initial && static_cast<int>(initial->design.size()) != m)
    throw StructuralError("initial design length does not match arc count");
  if (local_branch && static_cast<int>(local_branch->reference.size()) != m)
    throw StructuralError("local-branching reference length does not match arc count");

  const Deadline deadline = Deadline::after(clock, cfg.budget);
  Search search;
  SearchResult& out = search.out;
  if (initial) {
    Solution s = *initial;
    s.wall_time = clock.seconds();
    search.adopt(std::move(s), false);
  }

  std::vector<std::uint8_t> removed(m, 0);
  if (!reduction_override.empty()) {
    removed.assign(reduction_override.begin(), reduction_override.end());
  } else {
    CsLimits limits;
    limits.columns_per_round = cfg.columns_per_round;
    limits.prune_eps = cfg.prune_eps;
    limits.time_budget = deadline.remaining(clock);
    CsResult cs = capacity_scaling(instance, cfg.lambda, limits, clock);
    out.samples.fractional = std::move(cs.state.history);
    for (Solution& s : cs.feasible) search.adopt(std::move(s), true);
    removed = std::move(cs.pruned);
  }
  if (out.best)
    for (ArcId a : out.best->design.open_arcs()) removed[a] = 0;
  if (!commodities_connected(instance, removed) && !repair_removal(instance, removed)) {
    std::fill(removed.begin(), removed.end(), 0);
    out.reduction_fallback = true;
  }

  ReducedInstance red = build_reduced_instance(instance, removed);
  if (!out.best) {
    auto s = evaluate_design(red.instance, DesignVector(red.to_full.size(), true), clock, "ls");
    if (!s && red.to_full.size() != static_cast<std::size_t>(m)) {
      std::fill(removed.begin(), removed.end(), 0);
      out.reduction_fallback = true;
      red = build_reduced_instance(instance, removed);
      s = evaluate_design(red.instance, DesignVector(m, true), clock, "ls");
    }
    if (!s) return out;  // no feasible design at all
    search.adopt(red.lift(*s), true);
  }

  DesignVector incumbent = red.restrict(out.best->design);
  std::optional<DesignVector> reference;
  if (local_branch) reference = red.restrict(local_branch->reference);

  int M = cfg.m0;
  for (int iter = 0; M > 0 && !deadline.expired(clock); ++iter) {
    MipProblem p(red.instance);
    add_neighbourhood_rows(p, incumbent, M);
    if (reference) {
      add_local_branching_row(p, *reference, local_branch->beta);
      p.hint = *reference;
    }
    p.cutoff = out.best->objective;
    p.limits.time = std::min(cfg.mip_time, deadline.remaining(clock));
    p.seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(iter));
    p.on_incumbent = [&](const Solution& s) {
      Solution full = red.lift(s);
      full.provenance = "ls";
      search.adopt(std::move(full), true);
    };
    const MipResult r = solve_mip(p, clock);
    ++out.mip_calls;
    out.last_status = r.status;
    if (r.status == MipStatus::kOptimal || r.status == MipStatus::kFeasibleLimit) {
      incumbent = red.restrict(out.best->design);
      M = cfg.m0;
    } else if (r.status == MipStatus::kLimitNoSolution) {
      M /= 2;
    } else {
      break;  // neighbourhood proven empty
    }
  }
  out.trajectory.horizon = clock.seconds();
  return out;
}

SampleRun rss_sample(const Instance& instance, const RssOptions& options, WorkClock& clock) {
  if (!(options.per_iter > 0.0)) throw StructuralError("per-iteration limit must be positive");
  if (options.plateau < 1 || options.max_ss_iter < 1)
    throw StructuralError("slope-scaling stop rule must be positive");
  SampleRun run;
  run.routine = "rss";
  if (!(options.budget > 0.0)) return run;

  const int m = instance.arc_count();
  const Deadline deadline = Deadline::after(clock, options.budget);
  SplitMix64 rng(options.seed);
  SlopeScaler scaler(instance);
  std::set<DesignVector> seen;
  MipProblem cuts(instance);
  double big = 1.0;
  for (const Arc& a : instance.arcs()) big += 10.0 * a.fixed_cost;
  const int heavy_count = std::max(1, static_cast<int>(std::lround(options.big_fraction * m)));

  auto record = [&](Solution s) {
    if (!seen.insert(s.design).second) return;
    s.provenance = "rss";
    run.samples.feasible.push_back(std::move(s));
  };

  while (!deadline.expired(clock)) {
    // random arcs with a large design cost
    std::vector<int> order(m);
    for (int a = 0; a < m; ++a) order[a] = a;
    std::vector<std::uint8_t> heavy(m, 0);
    for (int i = 0; i < heavy_count && i < m; ++i) {
      const int j = i + static_cast<int>(rng.below(static_cast<std::uint64_t>(m - i)));
      std::swap(order[i], order[j]);
      heavy[order[i]] = 1;
    }

    SlopeState state = SlopeState::initial(instance);
    for (int a = 0; a < m; ++a)
      if (heavy[a]) state.freeze(a, SlopeState::Freeze::kClosed);
    SlopeStep step;
    DesignVector previous;
    int unchanged = 0;
    bool feasible = false;
    for (int it = 0; it < options.max_ss_iter; ++it) {
      step = scaler.iterate(state, clock);
      if (!step.feasible) break;
      feasible = true;
      run.samples.fractional.push_back(step.flows.design);
      if (it > 0 && step.rounded == previous) {
        if (++unchanged >= options.plateau) break;
      } else {
        unchanged = 0;
        if (!seen.count(step.rounded))
          if (auto s = evaluate_design(instance, step.rounded, clock, "rss")) record(std::move(*s));
      }
      previous = step.rounded;
      if (deadline.expired(clock)) break;
    }
    if (!feasible) break;

    const Eigen::VectorXd relaxed = step.flows.design;
    std::vector<ArcId> a0, a1;
    for (int a = 0; a < m; ++a) {
      if (relaxed[a] <= 1e-9) a0.push_back(a);
      else if (relaxed[a] >= 1.0 - 1e-9) a1.push_back(a);
    }
    for (ArcId a : a0) state.freeze(a, SlopeState::Freeze::kClosed);
    for (ArcId a : a1) state.freeze(a, SlopeState::Freeze::kOpen);
    const SlopeStep fixed_step = scaler.iterate(state, clock);
    std::optional<DesignVector> y_ss;
    if (fixed_step.feasible) {
      y_ss = fixed_step.rounded;
      if (auto s = evaluate_design(instance, *y_ss, clock, "rss")) record(std::move(*s));
    }
    if (deadline.expired(clock)) break;

    MipProblem p(instance);
    p.rows = cuts.rows;
    p.fixed.assign(m, -1);
    for (ArcId a : a0) p.fixed[a] = 0;
    for (ArcId a : a1) p.fixed[a] = 1;
    p.design_cost.resize(m);
    for (int a = 0; a < m; ++a)
      p.design_cost[a] = heavy[a] && p.fixed[a] < 0 ? big : instance.arc(a).fixed_cost;
    p.warm_start = y_ss;
    p.seed = rng.next();
    p.dive_bias = rng.uniform();
    p.limits.time = std::min(options.per_iter, deadline.remaining(clock));
    p.on_incumbent = [&](const Solution& s) { record(s); };
    solve_mip(p, clock);
    ++run.mip_calls;
    if (!a0.empty() || !a1.empty()) add_pseudo_cut(cuts, a0, a1);
  }
  return run;
}

SampleRun lsfs_sample(const Instance& instance, double budget, double per_iter, int columns,
                      std::uint64_t seed, WorkClock& clock) {
  SampleRun run;
  run.routine = "lsfs";
  if (!(budget > 0.0)) return run;
  LsConfig cfg;
  cfg.budget = budget;
  cfg.mip_time = per_iter;
  cfg.columns_per_round = columns;
  cfg.seed = seed;
  SearchResult r = ls_star(instance, cfg, clock);
  run.samples = std::move(r.samples);
  for (Solution& s : run.samples.feasible) s.provenance = "lsfs";
  run.mip_calls = r.mip_calls;
  return run;
}

std::vector<std::uint8_t> lsr_removal(std::span<const std::uint8_t> remove_prediction,
                                      const DesignVector& keep_open) {
  if (remove_prediction.size() != keep_open.size())
    throw StructuralError("prediction length does not match design length");
  std::vector<std::uint8_t> removed(remove_prediction.size(), 0);
  for (std::size_t a = 0; a < removed.size(); ++a)
    removed[a] = remove_prediction[a] && !keep_open[a] ? 1 : 0;
  return removed;
}

SearchResult lsr(const Instance& instance, std::span<const std::uint8_t> remove_prediction,
                 const Solution& best_sample, const LsConfig& cfg, WorkClock& clock) {
  if (static_cast<int>(remove_prediction.size()) != instance.arc_count())
    throw StructuralError("prediction length does not match arc count");
  std::vector<std::uint8_t> removed = lsr_removal(remove_prediction, best_sample.design);
  bool fallback = false;
  if (!repair_removal(instance, removed)) {
    std::fill(removed.begin(), removed.end(), 0);
    fallback = true;
  }
  SearchResult r = ls_star(instance, cfg, clock, &best_sample, removed);
  r.reduction_fallback = r.reduction_fallback || fallback;
  return r;
}

int local_branching_radius(int arc_count, double respect_fraction) {
  if (!(respect_fraction > 0.0 && respect_fraction <= 1.0))
    throw StructuralError("respect fraction must lie in (0,1]");
  return static_cast<int>(std::floor((1.0 - respect_fraction) * arc_count + 1e-9));
}

SearchResult lbh(const Instance& instance, const DesignVector& prediction,
                 const Solution& best_sample, double respect_fraction, const LsConfig& cfg,
                 WorkClock& clock) {
  cfg.validate();
  const int m = instance.arc_count();
  if (static_cast<int>(prediction.size()) != m)
    throw StructuralError("prediction length does not match arc count");
  Search search;
  Solution start = best_sample;
  start.wall_time = clock.seconds();
  search.adopt(std::move(start), false);

  MipProblem p(instance);
  add_local_branching_row(p, prediction, local_branching_radius(m, respect_fraction));
  p.warm_start = best_sample.design;
  p.hint = prediction;
  p.limits.time = cfg.budget;
  p.seed = cfg.seed;
  p.on_incumbent = [&](const Solution& s) {
    Solution copy = s;
    copy.provenance = "lbh";
    search.adopt(std::move(copy), true);
  };
  const MipResult r = solve_mip(p, clock);
  search.out.mip_calls = 1;
  search.out.last_status = r.status;
  search.out.trajectory.horizon = clock.seconds();
  return std::move(search.out);
}

SearchResult lswsh(const Instance& instance, const DesignVector& prediction,
                   const Solution& best_sample, double respect_fraction, const LsConfig& cfg,
                   WorkClock& clock) {
  if (static_cast<int>(prediction.size()) != instance.arc_count())
    throw StructuralError("prediction length does not match arc count");
  const LocalBranch lb{prediction, local_branching_radius(instance.arc_count(), respect_fraction)};
  return ls_star(instance, cfg, clock, &best_sample, {}, &lb);
}

}  // namespace fcnd
