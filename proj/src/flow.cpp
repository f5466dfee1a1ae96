#include "fcnd/flow.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <queue>
#include <stdexcept>

#include "fcnd/errors.hpp"

namespace fcnd {

using lp::Entry;
using lp::Sense;

// ---------------------------------------------------------------------------
// ArcFlowModel

ArcFlowModel::ArcFlowModel(const Instance& instance, Config config)
    : instance_(&instance), design_columns_(config.design_columns) {
  const int n = instance.node_count();
  const int m = instance.arc_count();
  const int kc = instance.commodity_count();
  if (!config.usable.empty() && static_cast<int>(config.usable.size()) != m)
    throw StructuralError("usable mask length does not match arc count");
  if (!config.surcharge.empty() && static_cast<int>(config.surcharge.size()) != m)
    throw StructuralError("surcharge length does not match arc count");

  flow_col_.assign(static_cast<std::size_t>(m) * kc, -1);
  forcing_row_.assign(static_cast<std::size_t>(m) * kc, -1);
  capacity_row_.assign(m, -1);

  // rows first: conservation (node, commodity) except destination, then capacity
  std::vector<int> conservation(static_cast<std::size_t>(n) * kc, -1);
  for (int k = 0; k < kc; ++k) {
    const Commodity& com = instance.commodity(k);
    for (int i = 0; i < n; ++i) {
      if (i == com.destination) continue;
      conservation[static_cast<std::size_t>(k) * n + i] =
          lp_.add_row({}, Sense::kEqual, i == com.origin ? com.demand : 0.0);
    }
  }
  for (int a = 0; a < m; ++a)
    capacity_row_[a] = lp_.add_row({}, Sense::kLessEqual,
                                   design_columns_ ? 0.0 : instance.arc(a).capacity);

  std::vector<Entry> entries;
  for (int a = 0; a < m; ++a) {
    if (!config.usable.empty() && !config.usable[a]) continue;
    const Arc& arc = instance.arc(a);
    const double extra = config.surcharge.empty() ? 0.0 : config.surcharge[a];
    for (int k = 0; k < kc; ++k) {
      const Commodity& com = instance.commodity(k);
      if (arc.head == com.origin || arc.tail == com.destination) continue;
      entries.clear();
      entries.push_back({conservation[static_cast<std::size_t>(k) * n + arc.tail], 1.0});
      if (arc.head != com.destination)
        entries.push_back({conservation[static_cast<std::size_t>(k) * n + arc.head], -1.0});
      entries.push_back({capacity_row_[a], 1.0});
      flow_col_[index(a, k)] = lp_.add_column(instance.cost(a, k) + extra, entries);
    }
  }
  if (design_columns_) {
    design_col_.assign(m, -1);
    for (int a = 0; a < m; ++a) {
      const Entry e{capacity_row_[a], -instance.arc(a).capacity};
      design_col_[a] = lp_.add_column(instance.arc(a).fixed_cost, {&e, 1}, 0.0, 1.0);
    }
  }
}

int ArcFlowModel::add_forcing_row(ArcId a, CommodityId k) {
  if (!design_columns_) return -1;
  const std::size_t idx = index(a, k);
  if (forcing_row_[idx] >= 0 || flow_col_[idx] < 0) return -1;
  const double bound = std::min(instance_->commodity(k).demand, instance_->arc(a).capacity);
  const Entry entries[2] = {{flow_col_[idx], 1.0}, {design_col_[a], -bound}};
  forcing_row_[idx] = lp_.add_row(entries, Sense::kLessEqual, 0.0);
  return forcing_row_[idx];
}

FlowSolution ArcFlowModel::extract(const Eigen::VectorXd& x) const {
  const int m = instance_->arc_count();
  const int kc = instance_->commodity_count();
  FlowSolution out;
  out.flows.resize(kc);
  Eigen::VectorXd total = Eigen::VectorXd::Zero(m);
  for (int a = 0; a < m; ++a) {
    for (int k = 0; k < kc; ++k) {
      const int col = flow_col_[index(a, k)];
      if (col < 0) continue;
      const double v = x[col];
      if (v > 1e-9) {
        out.flows[k].push_back({a, v});
        total[a] += v;
      }
    }
  }
  for (auto& list : out.flows)
    std::sort(list.begin(), list.end(),
              [](const FlowEntry& p, const FlowEntry& q) { return p.arc < q.arc; });
  out.design.resize(m);
  for (int a = 0; a < m; ++a) {
    out.design[a] = design_columns_
                        ? std::clamp(x[design_col_[a]], 0.0, 1.0)
                        : std::clamp(total[a] / instance_->arc(a).capacity, 0.0, 1.0);
  }
  return out;
}

// ---------------------------------------------------------------------------
// flow LP

std::optional<FlowSolution> solve_flow_lp(const Instance& instance, const DesignVector& design,
                                          WorkClock& clock) {
  if (static_cast<int>(design.size()) != instance.arc_count())
    throw StructuralError("design length does not match arc count");
  ArcFlowModel::Config config;
  config.usable = design.bits();
  ArcFlowModel model(instance, std::move(config));
  const lp::LpResult r = lp::solve_lp(model.lp());
  clock.charge(r.work);
  if (!r.optimal()) return std::nullopt;
  FlowSolution out = model.extract(r.x);
  for (int a = 0; a < instance.arc_count(); ++a) out.design[a] = design[a] ? 1.0 : 0.0;
  out.objective = evaluate_objective(instance, design, out);
  return out;
}

std::optional<FlowSolution> solve_flow_lp(const Instance& instance, const DesignVector& design) {
  WorkClock clock;
  return solve_flow_lp(instance, design, clock);
}

std::optional<Solution> evaluate_design(const Instance& instance, const DesignVector& design,
                                        WorkClock& clock, std::string provenance) {
  auto flows = solve_flow_lp(instance, design, clock);
  if (!flows) return std::nullopt;
  Solution s;
  s.design = design;
  s.objective = flows->objective;
  s.flows = std::move(*flows);
  s.wall_time = clock.seconds();
  s.provenance = std::move(provenance);
  return s;
}

DesignVector round_up_design(const Instance& instance, const Eigen::VectorXd& arc_totals) {
  if (arc_totals.size() != instance.arc_count())
    throw StructuralError("flow totals length does not match arc count");
  DesignVector y(instance.arc_count());
  for (int a = 0; a < instance.arc_count(); ++a)
    y.set(a, std::ceil(std::max(0.0, arc_totals[a] - 1e-9) / instance.arc(a).capacity) > 0.0);
  return y;
}

// ---------------------------------------------------------------------------
// Slope scaling

SlopeState SlopeState::initial(const Instance& instance) {
  SlopeState s;
  const int m = instance.arc_count();
  s.factor.resize(m);
  s.frozen.assign(m, Freeze::kFree);
  double max_c = 0.0, max_f = 0.0;
  for (int a = 0; a < m; ++a) {
    const Arc& arc = instance.arc(a);
    s.factor[a] = arc.fixed_cost / arc.capacity;
    max_f = std::max(max_f, arc.fixed_cost);
    for (int k = 0; k < instance.commodity_count(); ++k)
      max_c = std::max(max_c, instance.cost(a, k));
  }
  s.big = 1e7 * max_c + max_f;
  if (s.big <= 0.0) s.big = 1.0;
  return s;
}

double SlopeState::surcharge(ArcId a) const {
  switch (frozen[a]) {
    case Freeze::kClosed: return big;
    case Freeze::kOpen: return 0.0;
    case Freeze::kFree: break;
  }
  return factor[a];
}

namespace {

ArcFlowModel::Config slope_config(const Instance& instance) {
  ArcFlowModel::Config c;
  const SlopeState s = SlopeState::initial(instance);
  c.surcharge = s.factor;
  return c;
}

}  // namespace

SlopeScaler::SlopeScaler(const Instance& instance)
    : instance_(&instance), model_(instance, slope_config(instance)) {}

SlopeStep SlopeScaler::iterate(SlopeState& state, WorkClock& clock) {
  const Instance& inst = *instance_;
  const int m = inst.arc_count();
  if (static_cast<int>(state.factor.size()) != m)
    throw StructuralError("slope state does not match arc count");
  for (int a = 0; a < m; ++a) {
    const double extra = state.surcharge(a);
    for (int k = 0; k < inst.commodity_count(); ++k) {
      const int col = model_.flow_col(a, k);
      if (col >= 0) model_.lp().set_cost(col, inst.cost(a, k) + extra);
    }
  }
  const lp::LpResult r = lp::solve_lp(model_.lp(), basis_.empty() ? nullptr : &basis_);
  clock.charge(r.work);
  SlopeStep step;
  if (!r.optimal()) return step;
  basis_ = r.basis;
  step.feasible = true;
  step.lp_objective = r.objective;
  step.flows = model_.extract(r.x);
  const Eigen::VectorXd total = step.flows.arc_totals(m);
  step.rounded = round_up_design(inst, total);
  step.flows.objective = evaluate_objective(inst, step.rounded, step.flows);
  for (int a = 0; a < m; ++a)
    if (total[a] > 1e-9) state.factor[a] = inst.arc(a).fixed_cost / total[a];
  return step;
}

SlopeStep slope_scaling_iterate(const Instance& instance, SlopeState& state, WorkClock& clock) {
  SlopeScaler scaler(instance);
  return scaler.iterate(state, clock);
}

// ---------------------------------------------------------------------------
// Pricing

namespace {

struct ShortestPath {
  std::vector<ArcId> arcs;
  double length = 0.0;
};

/// Dijkstra from `source` to `target`. Ties broken by node index, parents
/// replaced only on strict improvement.
std::optional<ShortestPath> dijkstra(const Instance& inst, std::span<const double> length,
                                     NodeId source, NodeId target,
                                     std::span<const std::uint8_t> banned_arc,
                                     std::span<const std::uint8_t> banned_node, double& work) {
  const int n = inst.node_count();
  std::vector<double> dist(n, std::numeric_limits<double>::infinity());
  std::vector<int> parent(n, -1);
  std::vector<std::uint8_t> done(n, 0);
  using Item = std::pair<double, int>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
  dist[source] = 0.0;
  heap.push({0.0, source});
  while (!heap.empty()) {
    const auto [d, i] = heap.top();
    heap.pop();
    if (done[i]) continue;
    done[i] = 1;
    if (i == target) break;
    for (ArcId a : inst.out_arcs(i)) {
      work += 4.0;
      if (banned_arc[a]) continue;
      const int j = inst.arc(a).head;
      if (done[j] || banned_node[j]) continue;
      const double nd = d + length[a];
      if (nd < dist[j]) {
        dist[j] = nd;
        parent[j] = a;
        heap.push({nd, j});
      }
    }
  }
  if (!done[target]) return std::nullopt;
  ShortestPath sp;
  sp.length = dist[target];
  for (int v = target; v != source; v = inst.arc(parent[v]).tail) sp.arcs.push_back(parent[v]);
  std::reverse(sp.arcs.begin(), sp.arcs.end());
  return sp;
}

double path_length(std::span<const double> length, const std::vector<ArcId>& arcs) {
  double s = 0.0;
  for (ArcId a : arcs) s += length[a];
  return s;
}

/// Yen's loopless k-shortest paths, stopping once a path reaches `limit`.
std::vector<ShortestPath> k_shortest(const Instance& inst, std::span<const double> length,
                                     NodeId s, NodeId t, std::span<const std::uint8_t> blocked,
                                     int count, double limit, double& work) {
  std::vector<ShortestPath> accepted;
  std::vector<std::uint8_t> banned_node(inst.node_count(), 0);
  std::vector<std::uint8_t> banned_arc(blocked.begin(), blocked.end());
  auto first = dijkstra(inst, length, s, t, banned_arc, banned_node, work);
  if (!first || !(first->length < limit)) return accepted;
  accepted.push_back(std::move(*first));

  auto better = [](const ShortestPath& a, const ShortestPath& b) {
    return a.length < b.length || (a.length == b.length && a.arcs < b.arcs);
  };
  std::vector<ShortestPath> candidates;
  while (static_cast<int>(accepted.size()) < count) {
    const ShortestPath& prev = accepted.back();
    std::vector<NodeId> nodes{s};
    for (ArcId a : prev.arcs) nodes.push_back(inst.arc(a).head);
    for (std::size_t j = 0; j < prev.arcs.size(); ++j) {
      std::fill(banned_node.begin(), banned_node.end(), 0);
      std::copy(blocked.begin(), blocked.end(), banned_arc.begin());
      const std::vector<ArcId> root(prev.arcs.begin(), prev.arcs.begin() + j);
      for (const ShortestPath& p : accepted)
        if (p.arcs.size() > j && std::equal(root.begin(), root.end(), p.arcs.begin()))
          banned_arc[p.arcs[j]] = 1;
      for (std::size_t r = 0; r < j; ++r) banned_node[nodes[r]] = 1;
      auto spur = dijkstra(inst, length, nodes[j], t, banned_arc, banned_node, work);
      if (!spur) continue;
      ShortestPath cand;
      cand.arcs = root;
      cand.arcs.insert(cand.arcs.end(), spur->arcs.begin(), spur->arcs.end());
      cand.length = path_length(length, cand.arcs);
      const auto same = [&](const ShortestPath& p) { return p.arcs == cand.arcs; };
      if (std::none_of(candidates.begin(), candidates.end(), same) &&
          std::none_of(accepted.begin(), accepted.end(), same))
        candidates.push_back(std::move(cand));
    }
    if (candidates.empty()) break;
    auto best = std::min_element(candidates.begin(), candidates.end(), better);
    if (!(best->length < limit)) break;
    accepted.push_back(std::move(*best));
    candidates.erase(best);
  }
  return accepted;
}

}  // namespace

std::vector<PricedPath> price_paths(const Instance& instance, const MasterDuals& duals,
                                    std::span<const std::uint8_t> blocked, int per_commodity,
                                    WorkClock* clock) {
  const int m = instance.arc_count();
  const int kc = instance.commodity_count();
  if (duals.demand.size() != kc || duals.capacity.size() != m)
    throw StructuralError("dual vector dimensions do not match instance");
  const bool has_forcing = duals.forcing.size() > 0;
  if (has_forcing && duals.forcing.size() != static_cast<Eigen::Index>(m) * kc)
    throw StructuralError("forcing dual dimensions do not match instance");
  std::vector<std::uint8_t> none;
  if (blocked.empty()) {
    none.assign(m, 0);
    blocked = none;
  }

  std::vector<PricedPath> out;
  std::vector<double> length(m);
  double work = 0.0;
  for (int k = 0; k < kc; ++k) {
    for (int a = 0; a < m; ++a) {
      const double tau = has_forcing ? duals.forcing[static_cast<Eigen::Index>(a) * kc + k] : 0.0;
      double w = instance.cost(a, k) - duals.capacity[a] - tau;
      if (w < 0.0) {
        if (w < -1e-6 * (1.0 + std::abs(instance.cost(a, k))))
          throw std::logic_error("negative arc length in pricing");
        w = 0.0;
      }
      length[a] = w;
    }
    const Commodity& com = instance.commodity(k);
    const double limit = duals.demand[k] - kPricingTol;
    for (ShortestPath& sp :
         k_shortest(instance, length, com.origin, com.destination, blocked, per_commodity, limit,
                    work)) {
      PricedPath p;
      p.path.commodity = k;
      p.path.cost = 0.0;
      for (ArcId a : sp.arcs) p.path.cost += instance.cost(a, k);
      p.reduced_cost = sp.length - duals.demand[k];
      p.path.arcs = std::move(sp.arcs);
      out.push_back(std::move(p));
    }
  }
  if (clock) clock->charge(work);
  return out;
}

// ---------------------------------------------------------------------------
// PathMaster

PathMaster::PathMaster(const Instance& instance, double min_capacity_fraction)
    : instance_(&instance) {
  const int m = instance.arc_count();
  const int kc = instance.commodity_count();
  const int n = instance.node_count();
  known_.resize(kc);
  paths_of_.resize(kc);
  forcing_row_.assign(static_cast<std::size_t>(m) * kc, -1);
  capacity_.resize(m);
  blocked_.assign(m, 0);

  double max_c = 0.0, max_f = 0.0, min_u = std::numeric_limits<double>::infinity();
  for (int a = 0; a < m; ++a) {
    const Arc& arc = instance.arc(a);
    capacity_[a] = arc.capacity;
    max_f = std::max(max_f, arc.fixed_cost);
    min_u = std::min(min_u, arc.capacity);
    for (int k = 0; k < kc; ++k) max_c = std::max(max_c, instance.cost(a, k));
  }
  min_u *= std::max(min_capacity_fraction, 1e-6);

  for (int k = 0; k < kc; ++k)
    demand_row_.push_back(lp_.add_row({}, Sense::kEqual, instance.commodity(k).demand));
  for (int a = 0; a < m; ++a) capacity_row_.push_back(lp_.add_row({}, Sense::kLessEqual, 0.0));
  for (int a = 0; a < m; ++a) {
    const Entry e{capacity_row_[a], -capacity_[a]};
    design_col_.push_back(lp_.add_column(instance.arc(a).fixed_cost, {&e, 1}, 0.0, 1.0));
  }
  for (int k = 0; k < kc; ++k) {
    // any real routing costs less per unit than this
    const double d = instance.commodity(k).demand;
    const double art = 2.0 * std::max(1, n - 1) * (max_c + max_f / std::min(d, min_u)) + 1.0;
    const Entry e{demand_row_[k], 1.0};
    artificial_col_.push_back(lp_.add_column(art, {&e, 1}));
  }
}

void PathMaster::add_path(const Path& path) {
  const int k = path.commodity;
  const int kc = instance_->commodity_count();
  std::vector<Entry> entries;
  entries.push_back({demand_row_[k], 1.0});
  for (ArcId a : path.arcs) {
    entries.push_back({capacity_row_[a], 1.0});
    const int fr = forcing_row_[static_cast<std::size_t>(a) * kc + k];
    if (fr >= 0) entries.push_back({fr, 1.0});
  }
  const int col = lp_.add_column(path.cost, entries);
  known_[k].insert(path.arcs);
  paths_of_[k].push_back(static_cast<int>(paths_.size()));
  paths_.push_back(path);
  path_col_.push_back(col);
}

int PathMaster::add_forcing(ArcId a, CommodityId k) {
  const int kc = instance_->commodity_count();
  const std::size_t idx = static_cast<std::size_t>(a) * kc + k;
  if (forcing_row_[idx] >= 0) return -1;
  std::vector<Entry> entries;
  for (int p : paths_of_[k]) {
    const auto& arcs = paths_[p].arcs;
    if (std::find(arcs.begin(), arcs.end(), a) != arcs.end())
      entries.push_back({path_col_[p], 1.0});
  }
  entries.push_back({design_col_[a], -instance_->commodity(k).demand});
  forcing_row_[idx] = lp_.add_row(entries, Sense::kLessEqual, 0.0);
  ++forcing_rows_;
  return forcing_row_[idx];
}

int PathMaster::separate_forcing() {
  const int m = instance_->arc_count();
  const int kc = instance_->commodity_count();
  const Eigen::VectorXd flow = arc_commodity_flow();
  const Eigen::VectorXd y = design_values();
  int added = 0;
  for (int a = 0; a < m; ++a)
    for (int k = 0; k < kc; ++k)
      if (flow[static_cast<Eigen::Index>(a) * kc + k] >
          instance_->commodity(k).demand * y[a] + 1e-6)
        added += add_forcing(a, k) >= 0;
  return added;
}

PathMaster::Outcome PathMaster::solve(int columns_per_round, WorkClock& clock,
                                      Deadline deadline) {
  Outcome out;
  const int kc = instance_->commodity_count();
  while (true) {
    last_ = lp::solve_lp(lp_, basis_.empty() ? nullptr : &basis_);
    clock.charge(last_.work);
    ++out.rounds;
    if (!last_.optimal()) return out;  // cannot happen with artificial columns
    basis_ = last_.basis;
    out.objective = last_.objective;
    if (deadline.expired(clock)) break;

    const auto priced = price_paths(*instance_, duals(), blocked_, columns_per_round, &clock);
    int added = 0;
    for (const PricedPath& p : priced) {
      if (known_[p.path.commodity].count(p.path.arcs)) continue;
      add_path(p.path);
      ++added;
    }
    if (added == 0) added = separate_forcing();
    if (added == 0) {
      out.converged = true;
      break;
    }
  }
  double artificial = 0.0;
  for (int k = 0; k < kc; ++k) artificial += last_.x[artificial_col_[k]];
  out.feasible = artificial <= 1e-7;
  return out;
}

void PathMaster::set_capacity(ArcId a, double capacity) {
  capacity_[a] = capacity;
  lp_.set_coefficient(capacity_row_[a], design_col_[a], -capacity);
}

void PathMaster::block(ArcId a) {
  if (blocked_[a]) return;
  blocked_[a] = 1;
  lp_.set_bounds(design_col_[a], 0.0, 0.0);
  for (std::size_t p = 0; p < paths_.size(); ++p) {
    const auto& arcs = paths_[p].arcs;
    if (std::find(arcs.begin(), arcs.end(), a) != arcs.end()) lp_.set_bounds(path_col_[p], 0.0, 0.0);
  }
}

void PathMaster::unblock(ArcId a) {
  if (!blocked_[a]) return;
  blocked_[a] = 0;
  lp_.set_bounds(design_col_[a], 0.0, 1.0);
  for (std::size_t p = 0; p < paths_.size(); ++p) {
    const auto& arcs = paths_[p].arcs;
    const bool still_blocked =
        std::any_of(arcs.begin(), arcs.end(), [&](ArcId b) { return blocked_[b] != 0; });
    if (!still_blocked) lp_.set_bounds(path_col_[p], 0.0, lp::kInf);
  }
}

Eigen::VectorXd PathMaster::path_values() const {
  Eigen::VectorXd z(paths_.size());
  for (std::size_t p = 0; p < paths_.size(); ++p) z[p] = std::max(0.0, last_.x[path_col_[p]]);
  return z;
}

Eigen::VectorXd PathMaster::arc_flow() const {
  Eigen::VectorXd flow = Eigen::VectorXd::Zero(instance_->arc_count());
  const Eigen::VectorXd z = path_values();
  for (std::size_t p = 0; p < paths_.size(); ++p)
    for (ArcId a : paths_[p].arcs) flow[a] += z[p];
  return flow;
}

Eigen::VectorXd PathMaster::arc_commodity_flow() const {
  const int kc = instance_->commodity_count();
  Eigen::VectorXd flow = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(instance_->arc_count()) * kc);
  const Eigen::VectorXd z = path_values();
  for (std::size_t p = 0; p < paths_.size(); ++p)
    for (ArcId a : paths_[p].arcs)
      flow[static_cast<Eigen::Index>(a) * kc + paths_[p].commodity] += z[p];
  return flow;
}

Eigen::VectorXd PathMaster::design_values() const {
  Eigen::VectorXd y(instance_->arc_count());
  for (int a = 0; a < instance_->arc_count(); ++a)
    y[a] = std::clamp(last_.x[design_col_[a]], 0.0, 1.0);
  return y;
}

MasterDuals PathMaster::duals() const {
  const int m = instance_->arc_count();
  const int kc = instance_->commodity_count();
  MasterDuals d;
  d.demand.resize(kc);
  d.capacity.resize(m);
  d.forcing = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(m) * kc);
  for (int k = 0; k < kc; ++k) d.demand[k] = last_.duals[demand_row_[k]];
  for (int a = 0; a < m; ++a) d.capacity[a] = std::min(0.0, last_.duals[capacity_row_[a]]);
  for (std::size_t i = 0; i < forcing_row_.size(); ++i)
    if (forcing_row_[i] >= 0) d.forcing[static_cast<Eigen::Index>(i)] = std::min(0.0, last_.duals[forcing_row_[i]]);
  return d;
}

FlowSolution PathMaster::flow_solution() const {
  const int m = instance_->arc_count();
  const int kc = instance_->commodity_count();
  const Eigen::VectorXd flow = arc_commodity_flow();
  FlowSolution out;
  out.flows.resize(kc);
  for (int k = 0; k < kc; ++k)
    for (int a = 0; a < m; ++a) {
      const double v = flow[static_cast<Eigen::Index>(a) * kc + k];
      if (v > 1e-9) out.flows[k].push_back({a, v});
    }
  out.design = design_values();
  out.objective = last_.objective;
  return out;
}

// ---------------------------------------------------------------------------
// Capacity scaling

Eigen::VectorXd relaxation_design(const Instance& instance, const PathMaster& master) {
  const int m = instance.arc_count();
  const int kc = instance.commodity_count();
  const Eigen::VectorXd total = master.arc_flow();
  const Eigen::VectorXd per = master.arc_commodity_flow();
  Eigen::VectorXd y(m);
  for (int a = 0; a < m; ++a) {
    double v = total[a] / master.capacity(a);
    for (int k = 0; k < kc; ++k)
      v = std::max(v, per[static_cast<Eigen::Index>(a) * kc + k] / instance.commodity(k).demand);
    y[a] = std::clamp(v, 0.0, 1.0);
  }
  return y;
}

void update_capacities(ScalingState& state, const Eigen::VectorXd& design) {
  for (std::size_t a = 0; a < state.capacity.size(); ++a) {
    const double u = state.capacity[a];
    const double next = state.lambda * u * design[static_cast<Eigen::Index>(a)] + (1.0 - state.lambda) * u;
    state.capacity[a] = std::max(next, 1e-9 * u);
  }
}

namespace {

constexpr double kIntegralTol = 1e-6;

int fractional_count(const Eigen::VectorXd& y) {
  int c = 0;
  for (Eigen::Index a = 0; a < y.size(); ++a)
    c += y[a] > kIntegralTol && y[a] < 1.0 - kIntegralTol;
  return c;
}

}  // namespace

CsResult capacity_scaling(const Instance& instance, double lambda, const CsLimits& limits,
                          WorkClock& clock, std::ostream* trace) {
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw StructuralError("lambda must lie in [0,1]");
  const int m = instance.arc_count();
  CsResult result;
  ScalingState& state = result.state;
  state.lambda = lambda;
  state.pruned.assign(m, 0);
  for (int a = 0; a < m; ++a) state.capacity.push_back(instance.arc(a).capacity);

  const Deadline deadline = Deadline::after(clock, limits.time_budget);
  PathMaster master(instance, 1.0 - lambda);
  Eigen::VectorXd y;
  bool have = false;
  std::set<DesignVector> recorded;

  auto record = [&](const DesignVector& design, const char* tag) {
    if (!recorded.insert(design).second) return;
    if (auto s = evaluate_design(instance, design, clock, tag)) result.feasible.push_back(std::move(*s));
  };

  for (int it = 1; it <= limits.max_iter; ++it) {
    if (it > 1 && deadline.expired(clock)) break;
    PathMaster::Outcome o = master.solve(limits.columns_per_round, clock, deadline);
    if (!o.feasible && it == 1) break;  // instance itself infeasible
    if (!o.feasible) {
      // last pruning cut off all routes for some commodity: undo it
      for (int a = 0; a < m; ++a)
        if (state.pruned[a]) master.unblock(a);
      std::fill(state.pruned.begin(), state.pruned.end(), 0);
      o = master.solve(limits.columns_per_round, clock, deadline);
      if (!o.feasible) break;
    }
    state.iteration = it;
    if (it == 1 && o.converged) {
      result.first_bound = o.objective;
      result.bound_valid = true;
    }
    y = relaxation_design(instance, master);
    have = true;
    const int frac = fractional_count(y);
    int pruned_count = 0;
    for (auto p : state.pruned) pruned_count += p;
    if (trace)
      *trace << "cs " << it << " " << o.objective << " " << frac << " " << pruned_count << "\n";
    if (frac == 0) {
      record(round_up_design(instance, master.arc_flow()), "cs");
      break;
    }
    state.history.push_back(y);
    if (frac < limits.frac_fraction * m || it == limits.max_iter) break;

    update_capacities(state, y);
    for (int a = 0; a < m; ++a) master.set_capacity(a, state.capacity[a]);
    if (it >= limits.prune_after) {
      for (int a = 0; a < m; ++a)
        if (!state.pruned[a] && y[a] < limits.prune_eps) {
          state.pruned[a] = 1;
          master.block(a);
        }
    }
  }
  if (have) {
    record(round_up_design(instance, master.arc_flow()), "cs");
    result.relaxation = master.flow_solution();
    result.relaxation.design = y;
  }
  result.paths = master.paths();
  result.pruned = state.pruned;
  return result;
}

// ---------------------------------------------------------------------------
// Reduction

bool commodities_connected(const Instance& instance, std::span<const std::uint8_t> removed) {
  const int n = instance.node_count();
  std::vector<int> seen(n, -1);
  std::vector<int> stack;
  for (int k = 0; k < instance.commodity_count(); ++k) {
    const Commodity& com = instance.commodity(k);
    stack.assign(1, com.origin);
    seen[com.origin] = k;
    bool reached = false;
    while (!stack.empty() && !reached) {
      const int i = stack.back();
      stack.pop_back();
      for (ArcId a : instance.out_arcs(i)) {
        if (!removed.empty() && removed[a]) continue;
        const int j = instance.arc(a).head;
        if (seen[j] == k) continue;
        seen[j] = k;
        if (j == com.destination) {
          reached = true;
          break;
        }
        stack.push_back(j);
      }
    }
    if (!reached) return false;
  }
  return true;
}

ReducedInstance build_reduced_instance(const Instance& instance,
                                       std::span<const std::uint8_t> removed) {
  const int m = instance.arc_count();
  if (!removed.empty() && static_cast<int>(removed.size()) != m)
    throw StructuralError("removal mask length does not match arc count");
  ReducedInstance r;
  r.to_reduced.assign(m, -1);
  std::vector<Arc> arcs;
  std::vector<std::vector<double>> costs;
  for (int a = 0; a < m; ++a) {
    if (!removed.empty() && removed[a]) continue;
    r.to_reduced[a] = static_cast<int>(arcs.size());
    r.to_full.push_back(a);
    arcs.push_back(instance.arc(a));
    if (instance.has_commodity_costs()) costs.push_back(instance.commodity_costs()[a]);
  }
  r.instance = Instance(instance.name(), instance.node_count(), std::move(arcs),
                        instance.commodities(), std::move(costs));
  r.connected = commodities_connected(instance, removed);
  return r;
}

DesignVector ReducedInstance::lift(const DesignVector& reduced) const {
  if (reduced.size() != to_full.size()) throw StructuralError("design does not match reduced instance");
  DesignVector full(to_reduced.size());
  for (std::size_t a = 0; a < to_full.size(); ++a) full.set(to_full[a], reduced[a]);
  return full;
}

DesignVector ReducedInstance::restrict(const DesignVector& full) const {
  if (full.size() != to_reduced.size()) throw StructuralError("design does not match full instance");
  DesignVector reduced(to_full.size());
  for (std::size_t a = 0; a < to_full.size(); ++a) reduced.set(a, full[to_full[a]]);
  return reduced;
}

FlowSolution ReducedInstance::lift(const FlowSolution& reduced) const {
  FlowSolution full;
  full.objective = reduced.objective;
  full.flows.resize(reduced.flows.size());
  for (std::size_t k = 0; k < reduced.flows.size(); ++k) {
    for (const FlowEntry& e : reduced.flows[k]) full.flows[k].push_back({to_full[e.arc], e.amount});
    std::sort(full.flows[k].begin(), full.flows[k].end(),
              [](const FlowEntry& p, const FlowEntry& q) { return p.arc < q.arc; });
  }
  full.design = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(to_reduced.size()));
  for (std::size_t a = 0; a < to_full.size() && static_cast<Eigen::Index>(a) < reduced.design.size(); ++a)
    full.design[to_full[a]] = reduced.design[static_cast<Eigen::Index>(a)];
  return full;
}

Solution ReducedInstance::lift(const Solution& reduced) const {
  Solution s = reduced;
  s.design = lift(reduced.design);
  s.flows = lift(reduced.flows);
  return s;
}

}  // namespace fcnd
