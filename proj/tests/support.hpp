#pragma once

#include <optional>
#include <set>
#include <utility>
#include <vector>

#include "fcnd/core.hpp"
#include "fcnd/flow.hpp"
#include "fcnd/rng.hpp"

namespace fcnd::testing {

/// Random strongly connected digraph: a directed cycle through all nodes
/// plus random extra arcs, then random commodities.
inline Instance random_instance(std::uint64_t seed, int nodes, int arcs, int commodities,
                                double capacity_lo = 5.0, double capacity_hi = 30.0) {
  SplitMix64 rng(seed);
  std::vector<Arc> list;
  std::set<std::pair<int, int>> used;
  auto add = [&](int t, int h) {
    Arc a;
    a.tail = t;
    a.head = h;
    a.variable_cost = std::round(rng.uniform(1.0, 10.0));
    a.capacity = std::round(rng.uniform(capacity_lo, capacity_hi));
    a.fixed_cost = std::round(rng.uniform(10.0, 80.0));
    list.push_back(a);
    used.insert({t, h});
  };
  for (int i = 0; i < nodes; ++i) add(i, (i + 1) % nodes);
  int guard = 0;
  while (static_cast<int>(list.size()) < arcs && guard++ < 10000) {
    const int t = static_cast<int>(rng.below(nodes));
    const int h = static_cast<int>(rng.below(nodes));
    if (t == h || used.count({t, h})) continue;
    add(t, h);
  }
  std::vector<Commodity> coms;
  while (static_cast<int>(coms.size()) < commodities) {
    const int o = static_cast<int>(rng.below(nodes));
    const int d = static_cast<int>(rng.below(nodes));
    if (o == d) continue;
    coms.push_back({o, d, std::round(rng.uniform(2.0, 8.0))});
  }
  return Instance("rand" + std::to_string(seed), nodes, std::move(list), std::move(coms));
}

struct BruteForce {
  double objective = 0.0;
  DesignVector design;
  int feasible_designs = 0;
};

/// Enumerates all 2^|A| designs, pricing each with the flow LP. `accept`
/// filters designs (extra rows).
template <typename Accept>
std::optional<BruteForce> brute_force(const Instance& inst, Accept accept) {
  const int m = inst.arc_count();
  std::optional<BruteForce> best;
  int count = 0;
  for (std::uint32_t mask = 0; mask < (1u << m); ++mask) {
    DesignVector y(m);
    double fixed = 0.0;
    for (int a = 0; a < m; ++a)
      if (mask >> a & 1u) {
        y.set(a, true);
        fixed += inst.arc(a).fixed_cost;
      }
    if (!accept(y)) continue;
    if (best && fixed >= best->objective) continue;  // routing cost is nonnegative
    auto f = solve_flow_lp(inst, y);
    if (!f) continue;
    ++count;
    if (!best || f->objective < best->objective) best = BruteForce{f->objective, y, 0};
  }
  if (best) best->feasible_designs = count;
  return best;
}

inline std::optional<BruteForce> brute_force(const Instance& inst) {
  return brute_force(inst, [](const DesignVector&) { return true; });
}

}  // namespace fcnd::testing
