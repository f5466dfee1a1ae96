#include "fcnd/mip.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <queue>
#include <set>

#include "fcnd/errors.hpp"
#include "fcnd/flow.hpp"
#include "fcnd/rng.hpp"

namespace fcnd {

const char* to_string(MipStatus s) {
  switch (s) {
    case MipStatus::kOptimal: return "optimal";
    case MipStatus::kFeasibleLimit: return "feasible_limit";
    case MipStatus::kInfeasible: return "infeasible";
    case MipStatus::kNoBetterThanCutoff: return "no_better_than_cutoff";
    case MipStatus::kLimitNoSolution: return "limit_no_solution";
  }
  return "?";
}

bool DesignRow::satisfied(const DesignVector& y, double tol) const {
  double lhs = 0.0;
  for (const lp::Entry& e : terms) lhs += y[e.index] ? e.value : 0.0;
  switch (sense) {
    case lp::Sense::kLessEqual: return lhs <= rhs + tol;
    case lp::Sense::kGreaterEqual: return lhs >= rhs - tol;
    case lp::Sense::kEqual: return std::abs(lhs - rhs) <= tol;
  }
  return false;
}

void add_neighbourhood_rows(MipProblem& p, const DesignVector& incumbent, int m) {
  if (m < 0) throw StructuralError("neighbourhood size must be nonnegative");
  if (static_cast<int>(incumbent.size()) != p.instance->arc_count())
    throw StructuralError("incumbent length does not match arc count");
  DesignRow upper, lower;
  for (ArcId a : incumbent.open_arcs()) {
    upper.terms.push_back({a, 1.0});
    lower.terms.push_back({a, 1.0});
  }
  const double open = incumbent.open_count();
  upper.sense = lp::Sense::kLessEqual;
  upper.rhs = open - 1.0;
  lower.sense = lp::Sense::kGreaterEqual;
  lower.rhs = open - m;
  p.rows.push_back(std::move(upper));
  p.rows.push_back(std::move(lower));
}

void add_local_branching_row(MipProblem& p, const DesignVector& reference, int beta) {
  if (beta < 0) throw StructuralError("local branching radius must be nonnegative");
  if (static_cast<int>(reference.size()) != p.instance->arc_count())
    throw StructuralError("reference length does not match arc count");
  DesignRow row;
  row.sense = lp::Sense::kLessEqual;
  row.rhs = beta - static_cast<double>(reference.open_count());
  for (std::size_t a = 0; a < reference.size(); ++a)
    row.terms.push_back({static_cast<int>(a), reference[a] ? -1.0 : 1.0});
  p.rows.push_back(std::move(row));
}

void add_pseudo_cut(MipProblem& p, const std::vector<ArcId>& a0, const std::vector<ArcId>& a1) {
  if (a0.empty() && a1.empty()) throw StructuralError("pseudo-cut needs a nonempty index set");
  std::set<ArcId> zero(a0.begin(), a0.end());
  for (ArcId a : a1)
    if (zero.count(a)) throw StructuralError("pseudo-cut index sets overlap");
  DesignRow row;
  row.sense = lp::Sense::kGreaterEqual;
  row.rhs = 1.0 - static_cast<double>(a1.size());
  for (ArcId a : a0) row.terms.push_back({a, 1.0});
  for (ArcId a : a1) row.terms.push_back({a, -1.0});
  std::sort(row.terms.begin(), row.terms.end(),
            [](const lp::Entry& x, const lp::Entry& y) { return x.index < y.index; });
  p.rows.push_back(std::move(row));
}

namespace {

constexpr double kIntTol = 1e-6;

struct Node {
  std::int64_t id = 0;
  double bound = 0.0;
  std::vector<std::int8_t> lo, hi;
  lp::Basis basis;
};

struct NodeOrder {
  bool operator()(const Node& a, const Node& b) const {
    if (a.bound != b.bound) return a.bound > b.bound;
    return a.id > b.id;
  }
};

class BranchAndBound {
 public:
  BranchAndBound(const MipProblem& p, WorkClock& clock)
      : p_(p), inst_(*p.instance), clock_(clock), rng_(p.seed), model_(inst_, config()) {
    const int m = inst_.arc_count();
    if (!p.fixed.empty() && static_cast<int>(p.fixed.size()) != m)
      throw StructuralError("fixed-variable vector length does not match arc count");
    if (!p.design_cost.empty() && static_cast<int>(p.design_cost.size()) != m)
      throw StructuralError("design cost vector length does not match arc count");
    if (p.hint && static_cast<int>(p.hint->size()) != m)
      throw StructuralError("hint length does not match arc count");
    search_cost_.resize(m);
    for (int a = 0; a < m; ++a) {
      search_cost_[a] = p.design_cost.empty() ? inst_.arc(a).fixed_cost : p.design_cost[a];
      model_.lp().set_cost(model_.design_col(a), search_cost_[a]);
    }
    for (const DesignRow& row : p.rows) {
      std::vector<lp::Entry> terms;
      for (const lp::Entry& e : row.terms) {
        if (e.index < 0 || e.index >= m) throw StructuralError("design row references unknown arc");
        terms.push_back({model_.design_col(e.index), e.value});
      }
      model_.lp().add_row(terms, row.sense, row.rhs);
    }
    if (p.cutoff) threshold_ = *p.cutoff - 1e-9 * std::abs(*p.cutoff);
  }

  MipResult run();

 private:
  static ArcFlowModel::Config config() {
    ArcFlowModel::Config c;
    c.design_columns = true;
    return c;
  }

  double prune_level() const {
    if (!incumbent_value_) return threshold_;
    const double inc = *incumbent_value_;
    return std::min(threshold_, inc - 1e-7 * std::max(1.0, std::abs(inc)));
  }
  bool pruned_by_cutoff(double bound) const {
    return p_.cutoff && bound >= threshold_ &&
           (!incumbent_value_ || threshold_ <= *incumbent_value_);
  }

  double search_value(const DesignVector& y, const FlowSolution& flows) const {
    double v = 0.0;
    for (int k = 0; k < inst_.commodity_count(); ++k)
      for (const FlowEntry& e : flows.flows[k]) v += inst_.cost(e.arc, k) * e.amount;
    for (int a = 0; a < inst_.arc_count(); ++a)
      if (y[a]) v += search_cost_[a];
    return v;
  }

  bool rows_ok(const DesignVector& y) const {
    for (const DesignRow& r : p_.rows)
      if (!r.satisfied(y)) return false;
    return true;
  }

  /// Prices a design and adopts it when it beats the pruning level.
  void try_design(const DesignVector& y) {
    if (!tried_.insert(y).second) return;
    auto flows = solve_flow_lp(inst_, y, clock_);
    if (!flows) return;
    const double value = search_value(y, *flows);
    if (!(value < prune_level())) return;
    incumbent_value_ = value;
    Solution s;
    s.design = y;
    s.objective = evaluate_objective(inst_, y, *flows);
    s.flows = std::move(*flows);
    s.wall_time = clock_.seconds();
    s.provenance = "bnb";
    result_.trajectory.record(s.wall_time, s.objective);
    if (p_.on_incumbent) p_.on_incumbent(s);
    result_.best = std::move(s);
    trace(value);
  }

  void trace(double bound) const {
    if (!p_.trace) return;
    *p_.trace << clock_.seconds() << " " << bound << " ";
    if (incumbent_value_) *p_.trace << *incumbent_value_;
    else *p_.trace << "-";
    *p_.trace << "\n";
  }

  const MipProblem& p_;
  const Instance& inst_;
  WorkClock& clock_;
  SplitMix64 rng_;
  ArcFlowModel model_;
  std::vector<double> search_cost_;
  double threshold_ = std::numeric_limits<double>::infinity();
  std::optional<double> incumbent_value_;
  std::set<DesignVector> tried_;
  MipResult result_;
};

MipResult BranchAndBound::run() {
  const int m = inst_.arc_count();
  const double start = clock_.seconds();
  const Deadline deadline = Deadline::after(clock_, p_.limits.time);

  Node root;
  root.lo.assign(m, 0);
  root.hi.assign(m, 1);
  for (int a = 0; a < m && !p_.fixed.empty(); ++a)
    if (p_.fixed[a] >= 0) root.lo[a] = root.hi[a] = p_.fixed[a];
  root.bound = -std::numeric_limits<double>::infinity();

  if (p_.warm_start) {
    const DesignVector& w = *p_.warm_start;
    if (static_cast<int>(w.size()) != m) throw StructuralError("warm start length does not match arc count");
    bool fits = rows_ok(w);
    for (int a = 0; a < m && fits; ++a) fits = w[a] >= root.lo[a] && w[a] <= root.hi[a];
    if (fits) try_design(w);
  }

  std::priority_queue<Node, std::vector<Node>, NodeOrder> open;
  std::optional<Node> dive = std::move(root);
  std::int64_t next_id = 1;
  bool cutoff_pruned = false;
  bool limit_hit = false;

  while (dive || !open.empty()) {
    if (deadline.expired(clock_) || result_.nodes >= p_.limits.nodes) {
      limit_hit = true;
      break;
    }
    Node node;
    if (dive) {
      node = std::move(*dive);
      dive.reset();
    } else {
      node = open.top();
      open.pop();
    }
    if (node.bound >= prune_level()) {
      cutoff_pruned |= pruned_by_cutoff(node.bound);
      continue;
    }
    ++result_.nodes;

    for (int a = 0; a < m; ++a) model_.lp().set_bounds(model_.design_col(a), node.lo[a], node.hi[a]);
    lp::LpResult r;
    for (int round = 0;; ++round) {
      r = lp::solve_lp(model_.lp(), node.basis.empty() ? nullptr : &node.basis);
      clock_.charge(r.work);
      if (!r.optimal()) break;
      node.basis = r.basis;
      if (r.objective >= prune_level() || round == 8) break;
      int added = 0;
      for (int a = 0; a < m; ++a) {
        const double y = r.x[model_.design_col(a)];
        const double cap = std::min(inst_.arc(a).capacity, 1e300);
        for (int k = 0; k < inst_.commodity_count(); ++k) {
          const int col = model_.flow_col(a, k);
          if (col < 0 || model_.has_forcing_row(a, k)) continue;
          const double bound = std::min(inst_.commodity(k).demand, cap);
          if (r.x[col] > bound * y + 1e-6) added += model_.add_forcing_row(a, k) >= 0;
        }
      }
      if (added == 0) break;
    }
    if (!r.optimal()) continue;  // infeasible node (or numerical failure)
    const double bound = r.objective;
    if (bound >= prune_level()) {
      cutoff_pruned |= pruned_by_cutoff(bound);
      continue;
    }

    // fractional variables and the rounding heuristic
    const FlowSolution flows = model_.extract(r.x);
    const Eigen::VectorXd total = flows.arc_totals(m);
    int branch = -1;
    double best_score = -1.0;
    DesignVector rounded(m);
    for (int a = 0; a < m; ++a) {
      const double y = r.x[model_.design_col(a)];
      rounded.set(a, total[a] > 1e-9 || node.lo[a] == 1);
      if (y <= kIntTol || y >= 1.0 - kIntTol) continue;
      const double score = 0.5 - std::abs(y - 0.5);
      if (branch < 0 || score > best_score + 1e-12 ||
          (score >= best_score - 1e-12 &&
           inst_.arc(a).fixed_cost > inst_.arc(branch).fixed_cost)) {
        branch = a;
        best_score = score;
      }
    }
    if (branch < 0) {
      DesignVector y(m);
      for (int a = 0; a < m; ++a) y.set(a, r.x[model_.design_col(a)] > 0.5);
      try_design(y);
      continue;
    }
    if (rows_ok(rounded)) {
      double quick = 0.0;
      for (int k = 0; k < inst_.commodity_count(); ++k)
        for (const FlowEntry& e : flows.flows[k]) quick += inst_.cost(e.arc, k) * e.amount;
      for (int a = 0; a < m; ++a)
        if (rounded[a]) quick += search_cost_[a];
      if (quick < prune_level()) try_design(rounded);
    }
    if (bound >= prune_level()) continue;

    bool up;
    if (p_.hint) up = (*p_.hint)[branch];
    else up = rng_.uniform() < p_.dive_bias;
    Node down_child, up_child;
    for (Node* c : {&down_child, &up_child}) {
      c->lo = node.lo;
      c->hi = node.hi;
      c->bound = bound;
      c->basis = node.basis;
      c->id = next_id++;
    }
    down_child.hi[branch] = 0;
    up_child.lo[branch] = 1;
    if (up) {
      dive = std::move(up_child);
      open.push(std::move(down_child));
    } else {
      dive = std::move(down_child);
      open.push(std::move(up_child));
    }
    trace(bound);
  }

  result_.time = clock_.seconds() - start;
  double open_bound = std::numeric_limits<double>::infinity();
  if (dive) open_bound = std::min(open_bound, dive->bound);
  if (!open.empty()) open_bound = std::min(open_bound, open.top().bound);
  if (limit_hit) {
    result_.status = result_.best ? MipStatus::kFeasibleLimit : MipStatus::kLimitNoSolution;
    result_.bound = std::min(open_bound, incumbent_value_.value_or(open_bound));
  } else if (result_.best) {
    result_.status = MipStatus::kOptimal;
    result_.bound = *incumbent_value_;
  } else {
    result_.status = cutoff_pruned ? MipStatus::kNoBetterThanCutoff : MipStatus::kInfeasible;
  }
  result_.trajectory.horizon = clock_.seconds();
  return result_;
}

}  // namespace

MipResult solve_mip(const MipProblem& problem, WorkClock& clock) {
  BranchAndBound bb(problem, clock);
  return bb.run();
}

}  // namespace fcnd
