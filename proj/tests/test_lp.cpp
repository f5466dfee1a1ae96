#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <deque>
#include <vector>

#include "fcnd/errors.hpp"
#include "fcnd/lp.hpp"
#include "fcnd/rng.hpp"

using namespace fcnd;
using namespace fcnd::lp;

namespace {

// Edmonds-Karp on a dense capacity matrix.
double max_flow_oracle(std::vector<std::vector<double>> cap, int s, int t) {
  const int n = static_cast<int>(cap.size());
  double total = 0.0;
  for (;;) {
    std::vector<int> parent(n, -1);
    parent[s] = s;
    std::deque<int> queue{s};
    while (!queue.empty() && parent[t] < 0) {
      const int u = queue.front();
      queue.pop_front();
      for (int v = 0; v < n; ++v)
        if (parent[v] < 0 && cap[u][v] > 1e-12) {
          parent[v] = u;
          queue.push_back(v);
        }
    }
    if (parent[t] < 0) return total;
    double push = 1e300;
    for (int v = t; v != s; v = parent[v]) push = std::min(push, cap[parent[v]][v]);
    for (int v = t; v != s; v = parent[v]) {
      cap[parent[v]][v] -= push;
      cap[v][parent[v]] += push;
    }
    total += push;
  }
}

struct DenseLp {
  Eigen::MatrixXd a;
  std::vector<Sense> sense;
  Eigen::VectorXd b, c, lo, hi;
};

// Enumerates every choice of n active constraints among rows and bounds.
double vertex_oracle(const DenseLp& p, bool& feasible) {
  const int m = static_cast<int>(p.a.rows()), n = static_cast<int>(p.a.cols());
  const int total = m + 2 * n;
  double best = 1e300;
  feasible = false;
  std::vector<int> pick(n);
  for (int i = 0; i < n; ++i) pick[i] = i;
  for (;;) {
    Eigen::MatrixXd sys(n, n);
    Eigen::VectorXd rhs(n);
    for (int r = 0; r < n; ++r) {
      const int c = pick[r];
      if (c < m) {
        sys.row(r) = p.a.row(c);
        rhs[r] = p.b[c];
      } else {
        const int j = (c - m) / 2;
        sys.row(r).setZero();
        sys(r, j) = 1.0;
        rhs[r] = (c - m) % 2 == 0 ? p.lo[j] : p.hi[j];
      }
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(sys);
    if (lu.isInvertible()) {
      const Eigen::VectorXd x = lu.solve(rhs);
      bool ok = true;
      for (int j = 0; j < n; ++j) ok &= x[j] >= p.lo[j] - 1e-9 && x[j] <= p.hi[j] + 1e-9;
      const Eigen::VectorXd ax = p.a * x;
      for (int i = 0; i < m; ++i) {
        if (p.sense[i] == Sense::kLessEqual) ok &= ax[i] <= p.b[i] + 1e-9;
        if (p.sense[i] == Sense::kGreaterEqual) ok &= ax[i] >= p.b[i] - 1e-9;
        if (p.sense[i] == Sense::kEqual) ok &= std::abs(ax[i] - p.b[i]) <= 1e-9;
      }
      if (ok) {
        feasible = true;
        best = std::min(best, p.c.dot(x));
      }
    }
    int i = n - 1;
    while (i >= 0 && pick[i] == total - n + i) --i;
    if (i < 0) break;
    ++pick[i];
    for (int k = i + 1; k < n; ++k) pick[k] = pick[k - 1] + 1;
  }
  return best;
}

DenseLp random_dense(SplitMix64& rng, int m, int n) {
  DenseLp p;
  p.a = Eigen::MatrixXd::Zero(m, n);
  p.b.resize(m);
  p.c.resize(n);
  p.lo.resize(n);
  p.hi.resize(n);
  for (int j = 0; j < n; ++j) {
    p.lo[j] = std::round(rng.uniform(-2, 1));
    p.hi[j] = p.lo[j] + std::round(rng.uniform(1, 4));
    p.c[j] = std::round(rng.uniform(-5, 5));
  }
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j)
      if (rng.bernoulli(0.7)) p.a(i, j) = std::round(rng.uniform(-3, 3));
    const int s = static_cast<int>(rng.below(3));
    p.sense.push_back(s == 0 ? Sense::kLessEqual : s == 1 ? Sense::kGreaterEqual : Sense::kEqual);
    p.b[i] = std::round(rng.uniform(-3, 3));
  }
  return p;
}

LinearProgram to_sparse(const DenseLp& p) {
  LinearProgram lp;
  for (int i = 0; i < p.a.rows(); ++i) lp.add_row({}, p.sense[i], p.b[i]);
  for (int j = 0; j < p.a.cols(); ++j) {
    std::vector<Entry> col;
    for (int i = 0; i < p.a.rows(); ++i)
      if (p.a(i, j) != 0.0) col.push_back({i, p.a(i, j)});
    lp.add_column(p.c[j], col, p.lo[j], p.hi[j]);
  }
  return lp;
}

// Optimality certificate: primal feasibility, dual sign conditions,
// complementary slackness and zero duality gap.
void check_certificate(const LinearProgram& lp, const LpResult& r) {
  REQUIRE(r.optimal());
  for (int j = 0; j < lp.num_cols(); ++j) {
    CHECK(r.x[j] >= lp.lower(j) - 1e-7);
    CHECK(r.x[j] <= lp.upper(j) + 1e-7);
    const double d = r.reduced_costs[j];
    if (d > 1e-6) CHECK(std::abs(r.x[j] - lp.lower(j)) <= 1e-6);
    if (d < -1e-6) CHECK(std::abs(r.x[j] - lp.upper(j)) <= 1e-6);
  }
  double dual_obj = 0.0;
  for (int i = 0; i < lp.num_rows(); ++i) {
    const double act = r.row_activity[i], y = r.duals[i], b = lp.rhs(i);
    switch (lp.sense(i)) {
      case Sense::kLessEqual: CHECK(act <= b + 1e-7); CHECK(y <= 1e-7); break;
      case Sense::kGreaterEqual: CHECK(act >= b - 1e-7); CHECK(y >= -1e-7); break;
      case Sense::kEqual: CHECK(std::abs(act - b) <= 1e-7); break;
    }
    if (std::abs(y) > 1e-6) CHECK(std::abs(act - b) <= 1e-6);
    dual_obj += y * b;
  }
  for (int j = 0; j < lp.num_cols(); ++j) {
    const double d = r.reduced_costs[j];
    if (d > 1e-9) dual_obj += d * lp.lower(j);
    if (d < -1e-9) dual_obj += d * lp.upper(j);
  }
  CHECK(std::abs(dual_obj - r.objective) <= 1e-6 * (1.0 + std::abs(r.objective)));
}

}  // namespace

TEST_CASE("single bounded variable with a >= row") {
  LinearProgram lp;
  const int row = lp.add_row({}, Sense::kGreaterEqual, 1.0);
  const Entry e{row, 1.0};
  lp.add_column(1.0, {&e, 1}, 0.0, 10.0);
  const LpResult r = solve_lp(lp);
  REQUIRE(r.optimal());
  CHECK(r.x[0] == doctest::Approx(1.0));
  CHECK(r.duals[0] == doctest::Approx(1.0));
  check_certificate(lp, r);
}

TEST_CASE("contradictory rows are infeasible") {
  LinearProgram lp;
  lp.add_column(0.0, {}, -kInf, kInf);
  const Entry e{0, 1.0};
  lp.add_row({&e, 1}, Sense::kLessEqual, 0.0);
  lp.add_row({&e, 1}, Sense::kGreaterEqual, 1.0);
  CHECK(solve_lp(lp).status == Status::kInfeasible);
}

TEST_CASE("unbounded direction is reported") {
  LinearProgram lp;
  const int row = lp.add_row({}, Sense::kGreaterEqual, 1.0);
  const Entry e{row, 1.0};
  lp.add_column(-1.0, {&e, 1});
  CHECK(solve_lp(lp).status == Status::kUnbounded);
}

TEST_CASE("max flow on a diamond matches augmenting paths") {
  // 0 -> {1,2} -> 3 with a cross arc 1 -> 2
  struct A { int u, v; double cap; };
  const std::vector<A> arcs{{0, 1, 3}, {0, 2, 2}, {1, 2, 1.5}, {1, 3, 2}, {2, 3, 3}};
  std::vector<std::vector<double>> cap(4, std::vector<double>(4, 0.0));
  for (const A& a : arcs) cap[a.u][a.v] = a.cap;
  const double expected = max_flow_oracle(cap, 0, 3);

  LinearProgram lp;
  for (int node = 1; node <= 2; ++node) lp.add_row({}, Sense::kEqual, 0.0);
  for (const A& a : arcs) {
    std::vector<Entry> col;
    if (a.u == 1 || a.u == 2) col.push_back({a.u - 1, 1.0});
    if (a.v == 1 || a.v == 2) col.push_back({a.v - 1, -1.0});
    lp.add_column(a.v == 3 ? -1.0 : 0.0, col, 0.0, a.cap);
  }
  const LpResult r = solve_lp(lp);
  REQUIRE(r.optimal());
  CHECK(-r.objective == doctest::Approx(expected));
  CHECK(expected == doctest::Approx(5.0));
  check_certificate(lp, r);
}

TEST_CASE("random small LPs agree with vertex enumeration") {
  SplitMix64 rng(7);
  int solved = 0;
  for (int t = 0; t < 300; ++t) {
    const int m = 1 + static_cast<int>(rng.below(4));
    const int n = 1 + static_cast<int>(rng.below(4));
    const DenseLp p = random_dense(rng, m, n);
    bool feasible = false;
    const double oracle = vertex_oracle(p, feasible);
    const LinearProgram lp = to_sparse(p);
    const LpResult r = solve_lp(lp);
    if (!feasible) {
      CHECK(r.status == Status::kInfeasible);
      continue;
    }
    ++solved;
    REQUIRE(r.optimal());
    CHECK(r.objective == doctest::Approx(oracle).epsilon(1e-7));
    check_certificate(lp, r);
  }
  CHECK(solved > 50);
}

TEST_CASE("warm-started resolve matches cold solve after bound changes") {
  SplitMix64 rng(11);
  for (int t = 0; t < 200; ++t) {
    const DenseLp p = random_dense(rng, 3, 4);
    LinearProgram lp = to_sparse(p);
    const LpResult first = solve_lp(lp);
    if (!first.optimal()) continue;
    const int j = static_cast<int>(rng.below(4));
    const double mid = std::round(first.x[j]);
    if (rng.bernoulli(0.5))
      lp.set_bounds(j, lp.lower(j), std::max(lp.lower(j), mid - 1));
    else
      lp.set_bounds(j, std::min(lp.upper(j), mid + 1), lp.upper(j));
    const LpResult cold = solve_lp(lp);
    const LpResult warm = solve_lp(lp, &first.basis);
    REQUIRE(cold.status == warm.status);
    if (cold.optimal()) {
      CHECK(warm.objective == doctest::Approx(cold.objective).epsilon(1e-6));
      check_certificate(lp, warm);
    }
  }
}

TEST_CASE("appended rows and columns reuse the previous basis") {
  SplitMix64 rng(23);
  for (int t = 0; t < 100; ++t) {
    const DenseLp p = random_dense(rng, 3, 3);
    LinearProgram lp = to_sparse(p);
    const LpResult first = solve_lp(lp);
    if (!first.optimal()) continue;

    std::vector<Entry> col;
    for (int i = 0; i < lp.num_rows(); ++i)
      if (rng.bernoulli(0.6)) col.push_back({i, std::round(rng.uniform(-3, 3))});
    lp.add_column(std::round(rng.uniform(-4, 4)), col, 0.0, 3.0);
    std::vector<Entry> row;
    for (int j = 0; j < lp.num_cols(); ++j)
      if (rng.bernoulli(0.6)) row.push_back({j, std::round(rng.uniform(-2, 2))});
    lp.add_row(row, Sense::kLessEqual, std::round(rng.uniform(0, 4)));

    const LpResult cold = solve_lp(lp);
    const LpResult warm = solve_lp(lp, &first.basis);
    REQUIRE(cold.status == warm.status);
    if (cold.optimal()) CHECK(warm.objective == doctest::Approx(cold.objective).epsilon(1e-6));
  }
}

TEST_CASE("adding a column: from-scratch equivalence, priced-out and duplicate columns") {
  LinearProgram lp;
  // min 2a + 3b  s.t.  a + b >= 4, a <= 3
  const int r0 = lp.add_row({}, Sense::kGreaterEqual, 4.0);
  const Entry ea{r0, 1.0}, eb{r0, 1.0};
  lp.add_column(2.0, {&ea, 1}, 0.0, 3.0);
  lp.add_column(3.0, {&eb, 1});
  const LpResult base = solve_lp(lp);
  REQUIRE(base.optimal());
  CHECK(base.objective == doctest::Approx(9.0));

  SUBCASE("column with nonnegative reduced cost leaves optimum unchanged") {
    // reduced cost = 5 - dual(=3) = 2
    lp.add_column(5.0, {&ea, 1});
    const LpResult r = solve_lp(lp, &base.basis);
    CHECK(r.objective == doctest::Approx(9.0));
  }
  SUBCASE("duplicate column leaves optimum unchanged") {
    lp.add_column(3.0, {&eb, 1});
    const LpResult r = solve_lp(lp, &base.basis);
    CHECK(r.objective == doctest::Approx(9.0));
  }
  SUBCASE("improving column matches a from-scratch solve") {
    lp.add_column(2.5, {&ea, 1});
    const LpResult warm = solve_lp(lp, &base.basis);
    const LpResult cold = solve_lp(lp);
    CHECK(warm.objective == doctest::Approx(cold.objective));
    CHECK(warm.objective == doctest::Approx(8.5));
  }
}

TEST_CASE("structural errors on bad indices") {
  LinearProgram lp;
  const Entry bad{3, 1.0};
  CHECK_THROWS_AS(lp.add_column(1.0, {&bad, 1}), StructuralError);
  CHECK_THROWS_AS(lp.add_row({&bad, 1}, Sense::kEqual, 0.0), StructuralError);
}

TEST_CASE("degenerate transportation LP is solved deterministically") {
  // 4x4 assignment: highly degenerate
  LinearProgram lp;
  for (int i = 0; i < 8; ++i) lp.add_row({}, Sense::kEqual, 1.0);
  SplitMix64 rng(3);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) {
      const Entry e[2] = {{i, 1.0}, {4 + j, 1.0}};
      lp.add_column(static_cast<double>(rng.below(3)), e);
    }
  const LpResult a = solve_lp(lp);
  const LpResult b = solve_lp(lp);
  REQUIRE(a.optimal());
  CHECK(a.objective == b.objective);
  CHECK(a.iterations == b.iterations);
  check_certificate(lp, a);
}
