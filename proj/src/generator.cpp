#include "fcnd/generator.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <set>

#include "fcnd/errors.hpp"
#include "fcnd/flow.hpp"
#include "fcnd/rng.hpp"

namespace fcnd {

namespace {

void check_range(const Range& r, bool positive, const char* what) {
  if (!(r.lo <= r.hi)) throw SpecError(std::string(what) + ": lower bound exceeds upper bound");
  if (positive ? !(r.lo > 0.0) : !(r.lo >= 0.0))
    throw SpecError(std::string(what) + (positive ? " must be positive" : " must be nonnegative"));
}

double draw_integral(SplitMix64& rng, const Range& r, double floor_value) {
  return std::max(floor_value, std::round(rng.uniform(r.lo, r.hi)));
}

std::vector<std::pair<int, int>> lattice_edges(int rows, int cols) {
  std::vector<std::pair<int, int>> e;
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      const int v = r * cols + c;
      if (c + 1 < cols) e.push_back({v, v + 1});
      if (r + 1 < rows) e.push_back({v, v + cols});
    }
  return e;
}

std::vector<std::pair<int, int>> ring_edges(int n, int chords, SplitMix64& rng) {
  std::vector<std::pair<int, int>> e;
  for (int i = 0; i < n; ++i) e.push_back({std::min(i, (i + 1) % n), std::max(i, (i + 1) % n)});
  std::vector<std::pair<int, int>> candidates;
  for (int u = 0; u < n; ++u)
    for (int v = u + 2; v < n; ++v)
      if (!(u == 0 && v == n - 1)) candidates.push_back({u, v});
  for (int i = 0; i < chords; ++i) {
    const std::size_t j = i + rng.below(candidates.size() - i);
    std::swap(candidates[i], candidates[j]);
    e.push_back(candidates[i]);
  }
  return e;
}

std::vector<int> hop_distances(int n, const std::vector<Arc>& arcs, int source) {
  std::vector<std::vector<int>> adj(n);
  for (const Arc& a : arcs) adj[a.tail].push_back(a.head);
  std::vector<int> dist(n, -1);
  std::deque<int> queue{source};
  dist[source] = 0;
  while (!queue.empty()) {
    const int i = queue.front();
    queue.pop_front();
    for (int j : adj[i])
      if (dist[j] < 0) {
        dist[j] = dist[i] + 1;
        queue.push_back(j);
      }
  }
  return dist;
}

}  // namespace

void validate(const GenSpec& spec) {
  if (spec.topology == Topology::kGrid) {
    if (spec.rows < 1 || spec.cols < 1) throw SpecError("grid needs positive rows and cols");
    if (spec.rows * spec.cols < 2) throw SpecError("grid needs at least two nodes");
  } else {
    if (spec.ring_size < 3) throw SpecError("ring needs at least three nodes");
    const long possible = static_cast<long>(spec.ring_size) * (spec.ring_size - 3) / 2;
    if (spec.chords < 0 || spec.chords > possible)
      throw SpecError("chord count exceeds available node pairs");
  }
  const long n = spec.node_count();
  if (spec.commodity_count < 1) throw SpecError("commodity count must be positive");
  if (spec.commodity_count > n * (n - 1)) throw SpecError("commodity count exceeds node pairs");
  check_range(spec.cost_range, false, "cost range");
  check_range(spec.fixed_range, false, "fixed-cost range");
  check_range(spec.demand_range, true, "demand range");
  check_range(spec.capacity_ratio, true, "capacity ratio range");
}

std::string default_name(const GenSpec& spec) {
  std::string base = spec.topology == Topology::kGrid
                         ? "grid" + std::to_string(spec.rows) + "x" + std::to_string(spec.cols)
                         : "ring" + std::to_string(spec.ring_size) + "c" +
                               std::to_string(spec.chords);
  return base + "-k" + std::to_string(spec.commodity_count) + "-s" + std::to_string(spec.seed);
}

Instance generate(const GenSpec& spec) {
  validate(spec);
  SplitMix64 rng(spec.seed);
  const int n = spec.node_count();

  const auto edges = spec.topology == Topology::kGrid ? lattice_edges(spec.rows, spec.cols)
                                                      : ring_edges(n, spec.chords, rng);
  std::vector<Arc> arcs;
  for (const auto& [u, v] : edges) {
    for (const auto& [t, h] : {std::pair{u, v}, std::pair{v, u}}) {
      Arc a;
      a.tail = t;
      a.head = h;
      a.variable_cost = draw_integral(rng, spec.cost_range, 0.0);
      a.fixed_cost = draw_integral(rng, spec.fixed_range, 0.0);
      arcs.push_back(a);
    }
  }

  std::vector<Commodity> commodities;
  std::set<std::pair<int, int>> used;
  const long pairs = static_cast<long>(n) * (n - 1);
  if (spec.commodity_count * 2 > pairs) {
    std::vector<std::pair<int, int>> all;
    for (int o = 0; o < n; ++o)
      for (int d = 0; d < n; ++d)
        if (o != d) all.push_back({o, d});
    for (int i = 0; i < spec.commodity_count; ++i) {
      const std::size_t j = i + rng.below(all.size() - i);
      std::swap(all[i], all[j]);
      commodities.push_back({all[i].first, all[i].second, 0.0});
    }
  } else {
    while (static_cast<int>(commodities.size()) < spec.commodity_count) {
      const int o = static_cast<int>(rng.below(n));
      const int d = static_cast<int>(rng.below(n));
      if (o == d || !used.insert({o, d}).second) continue;
      commodities.push_back({o, d, 0.0});
    }
  }
  for (Commodity& c : commodities) c.demand = draw_integral(rng, spec.demand_range, 1.0);

  // capacity budget relative to fewest-hop routing of all demand
  double required = 0.0;
  std::vector<std::vector<int>> hops(n);
  for (const Commodity& c : commodities) {
    if (hops[c.origin].empty()) hops[c.origin] = hop_distances(n, arcs, c.origin);
    required += c.demand * hops[c.origin][c.destination];
  }
  const double ratio = rng.uniform(spec.capacity_ratio.lo, spec.capacity_ratio.hi);
  std::vector<double> weight(arcs.size());
  double weight_sum = 0.0;
  for (double& w : weight) weight_sum += (w = rng.uniform(0.5, 1.5));
  for (std::size_t a = 0; a < arcs.size(); ++a)
    arcs[a].capacity = std::max(1.0, std::ceil(ratio * required * weight[a] / weight_sum));

  const std::string name = default_name(spec);
  for (int attempt = 0;; ++attempt) {
    Instance inst(name, n, arcs, commodities);
    if (solve_flow_lp(inst, DesignVector(arcs.size(), true))) return inst;
    if (attempt == 60) throw SpecError("could not make generated instance feasible");
    for (Arc& a : arcs) a.capacity = std::ceil(a.capacity * 1.25);
  }
}

GenSpec scale_spec(const GenSpec& spec, double factor) {
  if (!(factor > 0.0)) throw SpecError("scale factor must be positive");
  GenSpec out = spec;
  const auto scaled = [factor](int v) { return static_cast<int>(std::lround(v * factor)); };
  if (spec.topology == Topology::kGrid) {
    out.rows = scaled(spec.rows);
  } else {
    out.ring_size = scaled(spec.ring_size);
    out.chords = scaled(spec.chords);
  }
  out.commodity_count = scaled(spec.commodity_count);
  out.seed = derive_seed(spec.seed, "scale");
  validate(out);
  return out;
}

}  // namespace fcnd
