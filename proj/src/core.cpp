#include "fcnd/core.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "fcnd/errors.hpp"

namespace fcnd {

namespace {

void build_csr(int node_count, const std::vector<Arc>& arcs, bool by_tail,
               std::vector<int>& start, std::vector<int>& list) {
  start.assign(node_count + 1, 0);
  for (const Arc& a : arcs) ++start[(by_tail ? a.tail : a.head) + 1];
  for (int i = 0; i < node_count; ++i) start[i + 1] += start[i];
  list.assign(arcs.size(), 0);
  std::vector<int> fill(start.begin(), start.end() - 1);
  for (int a = 0; a < static_cast<int>(arcs.size()); ++a) {
    list[fill[by_tail ? arcs[a].tail : arcs[a].head]++] = a;
  }
}

}  // namespace

Instance::Instance(std::string name, int node_count, std::vector<Arc> arcs,
                   std::vector<Commodity> commodities,
                   std::vector<std::vector<double>> commodity_costs)
    : name_(std::move(name)),
      node_count_(node_count),
      arcs_(std::move(arcs)),
      commodities_(std::move(commodities)),
      commodity_costs_(std::move(commodity_costs)) {
  if (node_count_ <= 0) throw StructuralError("instance needs at least one node");
  for (std::size_t a = 0; a < arcs_.size(); ++a) {
    const Arc& arc = arcs_[a];
    const std::string where = "arc " + std::to_string(a);
    if (arc.tail < 0 || arc.tail >= node_count_ || arc.head < 0 || arc.head >= node_count_)
      throw StructuralError(where + ": node index out of range");
    if (arc.tail == arc.head) throw StructuralError(where + ": self-loop");
    if (!(arc.capacity > 0.0)) throw StructuralError(where + ": capacity must be positive");
    if (!(arc.fixed_cost >= 0.0)) throw StructuralError(where + ": negative fixed cost");
    if (!(arc.variable_cost >= 0.0)) throw StructuralError(where + ": negative variable cost");
  }
  for (std::size_t k = 0; k < commodities_.size(); ++k) {
    const Commodity& c = commodities_[k];
    const std::string where = "commodity " + std::to_string(k);
    if (c.origin < 0 || c.origin >= node_count_ || c.destination < 0 ||
        c.destination >= node_count_)
      throw StructuralError(where + ": node index out of range");
    if (c.origin == c.destination) throw StructuralError(where + ": origin equals destination");
    if (!(c.demand > 0.0)) throw StructuralError(where + ": demand must be positive");
  }
  if (!commodity_costs_.empty()) {
    if (commodity_costs_.size() != arcs_.size())
      throw StructuralError("per-commodity cost table has wrong arc dimension");
    for (const auto& row : commodity_costs_) {
      if (row.size() != commodities_.size())
        throw StructuralError("per-commodity cost table has wrong commodity dimension");
      for (double c : row)
        if (!(c >= 0.0)) throw StructuralError("negative per-commodity cost");
    }
  }
  build_csr(node_count_, arcs_, true, out_start_, out_list_);
  build_csr(node_count_, arcs_, false, in_start_, in_list_);
}

std::span<const ArcId> Instance::out_arcs(NodeId i) const {
  return {out_list_.data() + out_start_[i], out_list_.data() + out_start_[i + 1]};
}

std::span<const ArcId> Instance::in_arcs(NodeId i) const {
  return {in_list_.data() + in_start_[i], in_list_.data() + in_start_[i + 1]};
}

double Instance::total_demand() const {
  double s = 0.0;
  for (const Commodity& c : commodities_) s += c.demand;
  return s;
}

Instance Instance::renamed(std::string name) const {
  Instance copy = *this;
  copy.name_ = std::move(name);
  return copy;
}

DesignVector::DesignVector(std::vector<std::uint8_t> bits) : bits_(std::move(bits)) {
  for (auto& b : bits_) b = b ? 1 : 0;
}

int DesignVector::open_count() const {
  return static_cast<int>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
}

std::vector<ArcId> DesignVector::open_arcs() const {
  std::vector<ArcId> out;
  for (std::size_t a = 0; a < bits_.size(); ++a)
    if (bits_[a]) out.push_back(static_cast<ArcId>(a));
  return out;
}

std::string DesignVector::to_string() const {
  std::string s(bits_.size(), '0');
  for (std::size_t a = 0; a < bits_.size(); ++a)
    if (bits_[a]) s[a] = '1';
  return s;
}

DesignVector DesignVector::from_string(std::string_view s) {
  std::vector<std::uint8_t> bits(s.size());
  for (std::size_t a = 0; a < s.size(); ++a) {
    if (s[a] != '0' && s[a] != '1') throw StructuralError("design string must contain only 0/1");
    bits[a] = s[a] == '1';
  }
  return DesignVector(std::move(bits));
}

Eigen::VectorXd FlowSolution::arc_totals(int arc_count) const {
  Eigen::VectorXd total = Eigen::VectorXd::Zero(arc_count);
  for (const auto& commodity : flows)
    for (const FlowEntry& e : commodity)
      if (e.arc >= 0 && e.arc < arc_count) total[e.arc] += e.amount;
  return total;
}

double evaluate_objective(const Instance& instance, const DesignVector& design,
                          const FlowSolution& flows) {
  if (static_cast<int>(design.size()) != instance.arc_count())
    throw StructuralError("design length does not match arc count");
  if (static_cast<int>(flows.flows.size()) != instance.commodity_count())
    throw StructuralError("flow solution does not match commodity count");
  double routing = 0.0;
  for (int k = 0; k < instance.commodity_count(); ++k) {
    for (const FlowEntry& e : flows.flows[k]) {
      if (e.arc < 0 || e.arc >= instance.arc_count())
        throw StructuralError("flow entry references unknown arc");
      routing += instance.cost(e.arc, k) * e.amount;
    }
  }
  double fixed = 0.0;
  for (int a = 0; a < instance.arc_count(); ++a)
    if (design[a]) fixed += instance.arc(a).fixed_cost;
  return routing + fixed;
}

FeasibilityReport check_feasibility(const Instance& instance, const DesignVector& design,
                                    const FlowSolution& flows, double tol) {
  if (static_cast<int>(design.size()) != instance.arc_count())
    throw StructuralError("design length does not match arc count");
  if (static_cast<int>(flows.flows.size()) != instance.commodity_count())
    throw StructuralError("flow solution does not match commodity count");

  FeasibilityReport report;
  const int n = instance.node_count();
  const int m = instance.arc_count();
  Eigen::VectorXd load = Eigen::VectorXd::Zero(m);
  Eigen::VectorXd balance(n);

  for (int k = 0; k < instance.commodity_count(); ++k) {
    const Commodity& com = instance.commodity(k);
    balance.setZero();
    for (const FlowEntry& e : flows.flows[k]) {
      if (e.arc < 0 || e.arc >= m) {
        report.violations.push_back({Violation::Kind::kBadIndex, e.arc, -1, k, 0.0});
        continue;
      }
      if (e.amount < -tol)
        report.violations.push_back({Violation::Kind::kNegativeFlow, e.arc, -1, k, -e.amount});
      load[e.arc] += e.amount;
      balance[instance.arc(e.arc).tail] += e.amount;
      balance[instance.arc(e.arc).head] -= e.amount;
    }
    for (int i = 0; i < n; ++i) {
      double expected = 0.0;
      if (i == com.origin) expected = com.demand;
      if (i == com.destination) expected = -com.demand;
      const double residual = std::abs(balance[i] - expected);
      if (residual > tol)
        report.violations.push_back({Violation::Kind::kConservation, -1, i, k, residual});
    }
  }
  for (int a = 0; a < m; ++a) {
    const double cap = design[a] ? instance.arc(a).capacity : 0.0;
    if (load[a] > cap + tol)
      report.violations.push_back({Violation::Kind::kCapacity, a, -1, -1, load[a] - cap});
    if (!design[a] && load[a] > tol)
      report.violations.push_back({Violation::Kind::kClosedArcFlow, a, -1, -1, load[a]});
  }
  return report;
}

std::string FeasibilityReport::describe() const {
  if (ok()) return "ok";
  std::ostringstream out;
  for (const Violation& v : violations) {
    switch (v.kind) {
      case Violation::Kind::kCapacity: out << "capacity(arc " << v.arc << ")"; break;
      case Violation::Kind::kConservation:
        out << "conservation(node " << v.node << ", commodity " << v.commodity << ")";
        break;
      case Violation::Kind::kNegativeFlow:
        out << "negative(arc " << v.arc << ", commodity " << v.commodity << ")";
        break;
      case Violation::Kind::kClosedArcFlow: out << "closed-arc-flow(arc " << v.arc << ")"; break;
      case Violation::Kind::kBadIndex: out << "bad-index(arc " << v.arc << ")"; break;
    }
    out << " by " << v.amount << "; ";
  }
  return out.str();
}

int design_distance(const DesignVector& a, const DesignVector& b) {
  if (a.size() != b.size()) throw StructuralError("design lengths differ");
  int d = 0;
  for (std::size_t i = 0; i < a.size(); ++i) d += a[i] != b[i];
  return d;
}

}  // namespace fcnd

namespace fcnd {

void Trajectory::record(double time, double objective) {
  if (!points.empty()) {
    TrajectoryPoint& last = points.back();
    if (objective >= last.objective) return;
    if (time <= last.time) {
      last.objective = objective;
      return;
    }
  }
  points.push_back({time, objective});
  if (time > horizon) horizon = time;
}

Trajectory Trajectory::merge(const Trajectory& a, const Trajectory& b) {
  std::vector<TrajectoryPoint> all = a.points;
  all.insert(all.end(), b.points.begin(), b.points.end());
  std::stable_sort(all.begin(), all.end(), [](const TrajectoryPoint& p, const TrajectoryPoint& q) {
    return p.time < q.time || (p.time == q.time && p.objective < q.objective);
  });
  Trajectory out;
  for (const TrajectoryPoint& p : all) out.record(p.time, p.objective);
  out.horizon = std::max(a.horizon, b.horizon);
  return out;
}

void SampleSet::append(const SampleSet& other) {
  fractional.insert(fractional.end(), other.fractional.begin(), other.fractional.end());
  feasible.insert(feasible.end(), other.feasible.begin(), other.feasible.end());
}

std::vector<const Solution*> SampleSet::ranked_feasible() const {
  std::vector<const Solution*> out;
  out.reserve(feasible.size());
  for (const Solution& s : feasible) out.push_back(&s);
  std::stable_sort(out.begin(), out.end(), [](const Solution* a, const Solution* b) {
    if (a->objective != b->objective) return a->objective < b->objective;
    if (a->provenance != b->provenance) return a->provenance < b->provenance;
    return a->design < b->design;
  });
  return out;
}

const Solution* SampleSet::best() const {
  const auto ranked = ranked_feasible();
  return ranked.empty() ? nullptr : ranked.front();
}

}  // namespace fcnd
