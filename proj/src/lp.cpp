#include "fcnd/lp.hpp"

#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>

#include "fcnd/errors.hpp"

namespace fcnd::lp {

const char* to_string(Status s) {
  switch (s) {
    case Status::kOptimal: return "optimal";
    case Status::kInfeasible: return "infeasible";
    case Status::kUnbounded: return "unbounded";
    case Status::kIterationLimit: return "iteration_limit";
    case Status::kNumericalFailure: return "numerical_failure";
  }
  return "?";
}

int LinearProgram::add_column(double cost, std::span<const Entry> entries, double lo, double hi) {
  std::vector<Entry> col;
  col.reserve(entries.size());
  for (const Entry& e : entries) {
    if (e.index < 0 || e.index >= num_rows())
      throw StructuralError("column entry references row " + std::to_string(e.index));
    if (e.value != 0.0) col.push_back(e);
  }
  std::sort(col.begin(), col.end(), [](const Entry& a, const Entry& b) { return a.index < b.index; });
  for (std::size_t i = 1; i < col.size(); ++i)
    if (col[i].index == col[i - 1].index) throw StructuralError("duplicate row in column");
  if (lo > hi) throw StructuralError("column lower bound exceeds upper bound");
  cost_.push_back(cost);
  lo_.push_back(lo);
  hi_.push_back(hi);
  columns_.push_back(std::move(col));
  return num_cols() - 1;
}

int LinearProgram::add_row(std::span<const Entry> entries, Sense sense, double rhs) {
  const int row = num_rows();
  for (const Entry& e : entries)
    if (e.index < 0 || e.index >= num_cols())
      throw StructuralError("row entry references column " + std::to_string(e.index));
  sense_.push_back(sense);
  rhs_.push_back(rhs);
  for (const Entry& e : entries)
    if (e.value != 0.0) set_coefficient(row, e.index, e.value);
  return row;
}

void LinearProgram::set_cost(int col, double cost) { cost_.at(col) = cost; }

void LinearProgram::set_bounds(int col, double lo, double hi) {
  if (lo > hi) throw StructuralError("column lower bound exceeds upper bound");
  lo_.at(col) = lo;
  hi_.at(col) = hi;
}

void LinearProgram::set_rhs(int row, double rhs) { rhs_.at(row) = rhs; }

void LinearProgram::set_coefficient(int row, int col, double value) {
  if (row < 0 || row >= num_rows() || col < 0 || col >= num_cols())
    throw StructuralError("coefficient index out of range");
  auto& c = columns_[col];
  auto it = std::lower_bound(c.begin(), c.end(), row,
                             [](const Entry& e, int r) { return e.index < r; });
  if (it != c.end() && it->index == row) {
    if (value == 0.0)
      c.erase(it);
    else
      it->value = value;
  } else if (value != 0.0) {
    c.insert(it, Entry{row, value});
  }
}

std::size_t LinearProgram::nonzeros() const {
  std::size_t nz = 0;
  for (const auto& c : columns_) nz += c.size();
  return nz;
}

namespace {

constexpr double kPivotTol = 1e-9;
constexpr int kMaxRecoveries = 4;

enum class Outcome { kOptimal, kFeasible, kInfeasible, kUnbounded, kLimit, kStalled, kNumerical };

class Simplex {
 public:
  Simplex(const LinearProgram& lp, const LpOptions& opt)
      : lp_(lp),
        opt_(opt),
        m_(lp.num_rows()),
        n_(lp.num_cols()),
        total_(lp.num_rows() + lp.num_cols()) {
    lo_.resize(total_);
    hi_.resize(total_);
    cost_.assign(total_, 0.0);
    for (int j = 0; j < n_; ++j) {
      lo_[j] = lp.lower(j);
      hi_[j] = lp.upper(j);
      cost_[j] = lp.cost(j);
      nnz_ += lp.column(j).size();
    }
    for (int i = 0; i < m_; ++i) {
      const double b = lp.rhs(i);
      switch (lp.sense(i)) {
        case Sense::kLessEqual: lo_[n_ + i] = -kInf; hi_[n_ + i] = b; break;
        case Sense::kEqual: lo_[n_ + i] = b; hi_[n_ + i] = b; break;
        case Sense::kGreaterEqual: lo_[n_ + i] = b; hi_[n_ + i] = kInf; break;
      }
    }
    x_ = Eigen::VectorXd::Zero(total_);
    work_ += static_cast<double>(nnz_ + total_);
  }

  LpResult run(const Basis* warm);

 private:
  // --- basis bookkeeping ---
  void slack_basis();
  bool load_basis(const Basis& warm);
  void place_nonbasic(int j, VarState preferred);
  bool factor();
  void recompute_primal();

  // --- linear algebra on the basis ---
  void ftran(Eigen::VectorXd& v) const;
  void btran(Eigen::VectorXd& u) const;
  void scatter(int j, Eigen::VectorXd& v) const;
  double dot(int j, const Eigen::VectorXd& y) const;
  void pivot(int r, int q, const Eigen::VectorXd& w, double leave_value, bool leave_upper);

  // --- algorithms ---
  double primal_infeasibility() const;
  bool make_dual_feasible(const Eigen::VectorXd& d);
  Eigen::VectorXd reduced_costs() const;
  Outcome primal(bool phase_one);
  Outcome dual();
  bool budget_left() const { return iterations_ < opt_.max_iterations; }
  void charge_iteration() {
    ++iterations_;
    work_ += static_cast<double>(nnz_ + total_ + m_);
  }

  bool is_fixed(int j) const { return lo_[j] == hi_[j]; }
  bool is_boxed(int j) const { return std::isfinite(lo_[j]) && std::isfinite(hi_[j]); }

  const LinearProgram& lp_;
  const LpOptions& opt_;
  int m_, n_, total_;
  std::size_t nnz_ = 0;
  std::vector<double> lo_, hi_, cost_;
  std::vector<VarState> state_;
  std::vector<int> basic_;  // position -> variable
  std::vector<int> pos_;    // variable -> position or -1
  Eigen::VectorXd x_;

  mutable Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu_;
  struct Eta {
    int r;
    double pivot;
    std::vector<std::pair<int, double>> col;  // off-pivot entries
  };
  std::vector<Eta> etas_;
  std::size_t eta_nnz_ = 0;

  std::int64_t iterations_ = 0;
  std::size_t lu_fill_ = 0;
  mutable double work_ = 0.0;
  bool bland_ = false;
};

void Simplex::place_nonbasic(int j, VarState preferred) {
  const bool has_lo = std::isfinite(lo_[j]);
  const bool has_hi = std::isfinite(hi_[j]);
  VarState s = preferred;
  if (s == VarState::kAtUpper && !has_hi) s = VarState::kAtLower;
  if (s == VarState::kAtLower && !has_lo) s = has_hi ? VarState::kAtUpper : VarState::kFreeZero;
  if (s == VarState::kFreeZero && (has_lo || has_hi)) s = has_lo ? VarState::kAtLower : VarState::kAtUpper;
  state_[j] = s;
  pos_[j] = -1;
  x_[j] = s == VarState::kAtLower ? lo_[j] : s == VarState::kAtUpper ? hi_[j] : 0.0;
}

void Simplex::slack_basis() {
  state_.assign(total_, VarState::kAtLower);
  pos_.assign(total_, -1);
  basic_.assign(m_, -1);
  for (int j = 0; j < n_; ++j) place_nonbasic(j, VarState::kAtLower);
  for (int i = 0; i < m_; ++i) {
    state_[n_ + i] = VarState::kBasic;
    basic_[i] = n_ + i;
    pos_[n_ + i] = i;
  }
}

bool Simplex::load_basis(const Basis& warm) {
  if (static_cast<int>(warm.columns.size()) > n_ || static_cast<int>(warm.rows.size()) > m_)
    return false;
  state_.assign(total_, VarState::kAtLower);
  pos_.assign(total_, -1);
  basic_.clear();
  for (int j = 0; j < total_; ++j) {
    VarState s;
    if (j < n_)
      s = j < static_cast<int>(warm.columns.size()) ? warm.columns[j] : VarState::kAtLower;
    else
      s = (j - n_) < static_cast<int>(warm.rows.size()) ? warm.rows[j - n_] : VarState::kBasic;
    if (s == VarState::kBasic) {
      pos_[j] = static_cast<int>(basic_.size());
      basic_.push_back(j);
      state_[j] = VarState::kBasic;
    } else {
      place_nonbasic(j, s);
    }
  }
  return static_cast<int>(basic_.size()) == m_;
}

bool Simplex::factor() {
  etas_.clear();
  eta_nnz_ = 0;
  if (m_ == 0) return true;
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<std::size_t>(m_) * 3);
  for (int p = 0; p < m_; ++p) {
    const int j = basic_[p];
    if (j < n_) {
      for (const Entry& e : lp_.column(j)) trip.emplace_back(e.index, p, e.value);
    } else {
      trip.emplace_back(j - n_, p, -1.0);
    }
  }
  Eigen::SparseMatrix<double> b(m_, m_);
  b.setFromTriplets(trip.begin(), trip.end());
  b.makeCompressed();
  lu_.analyzePattern(b);
  lu_.factorize(b);
  lu_fill_ = 2 * trip.size() + m_;
  work_ += 20.0 * static_cast<double>(trip.size()) + 10.0 * m_;
  return lu_.info() == Eigen::Success;
}

void Simplex::ftran(Eigen::VectorXd& v) const {
  if (m_ == 0) return;
  work_ += static_cast<double>(lu_fill_ + eta_nnz_);
  v = lu_.solve(v);
  for (const Eta& e : etas_) {
    const double vr = v[e.r] / e.pivot;
    v[e.r] = vr;
    if (vr != 0.0)
      for (const auto& [i, w] : e.col) v[i] -= w * vr;
  }
}

void Simplex::btran(Eigen::VectorXd& u) const {
  if (m_ == 0) return;
  work_ += static_cast<double>(lu_fill_ + eta_nnz_);
  for (auto it = etas_.rbegin(); it != etas_.rend(); ++it) {
    double s = u[it->r];
    for (const auto& [i, w] : it->col) s -= u[i] * w;
    u[it->r] = s / it->pivot;
  }
  u = lu_.transpose().solve(u);
}

void Simplex::scatter(int j, Eigen::VectorXd& v) const {
  v.setZero(m_);
  if (j < n_) {
    for (const Entry& e : lp_.column(j)) v[e.index] = e.value;
  } else {
    v[j - n_] = -1.0;
  }
}

double Simplex::dot(int j, const Eigen::VectorXd& y) const {
  if (j >= n_) return -y[j - n_];
  double s = 0.0;
  for (const Entry& e : lp_.column(j)) s += e.value * y[e.index];
  return s;
}

void Simplex::recompute_primal() {
  if (m_ == 0) return;
  work_ += static_cast<double>(nnz_ + total_);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m_);
  for (int j = 0; j < total_; ++j) {
    if (state_[j] == VarState::kBasic || x_[j] == 0.0) continue;
    if (j < n_) {
      for (const Entry& e : lp_.column(j)) rhs[e.index] -= e.value * x_[j];
    } else {
      rhs[j - n_] += x_[j];
    }
  }
  ftran(rhs);
  for (int p = 0; p < m_; ++p) x_[basic_[p]] = rhs[p];
}

void Simplex::pivot(int r, int q, const Eigen::VectorXd& w, double leave_value, bool leave_upper) {
  const int p = basic_[r];
  x_[p] = leave_value;
  state_[p] = leave_upper ? VarState::kAtUpper : VarState::kAtLower;
  if (!std::isfinite(leave_value)) state_[p] = VarState::kFreeZero;
  pos_[p] = -1;
  basic_[r] = q;
  pos_[q] = r;
  state_[q] = VarState::kBasic;
  Eta eta{r, w[r], {}};
  for (int i = 0; i < m_; ++i)
    if (i != r && std::abs(w[i]) > 1e-14) eta.col.emplace_back(i, w[i]);
  eta_nnz_ += eta.col.size() + 1;
  etas_.push_back(std::move(eta));
}

double Simplex::primal_infeasibility() const {
  double s = 0.0;
  for (int p = 0; p < m_; ++p) {
    const int j = basic_[p];
    if (x_[j] < lo_[j] - opt_.feasibility_tol) s += lo_[j] - x_[j];
    else if (x_[j] > hi_[j] + opt_.feasibility_tol) s += x_[j] - hi_[j];
  }
  return s;
}

Eigen::VectorXd Simplex::reduced_costs() const {
  Eigen::VectorXd y(m_);
  for (int p = 0; p < m_; ++p) y[p] = cost_[basic_[p]];
  btran(y);
  work_ += static_cast<double>(nnz_ + total_);
  Eigen::VectorXd d = Eigen::VectorXd::Zero(total_);
  for (int j = 0; j < total_; ++j)
    if (state_[j] != VarState::kBasic) d[j] = cost_[j] - dot(j, y);
  return d;
}

// Flips boxed nonbasic variables to the bound matching the sign of their
// reduced cost. Returns true when the basis is then dual feasible.
bool Simplex::make_dual_feasible(const Eigen::VectorXd& d) {
  const double tol = opt_.optimality_tol;
  bool feasible = true;
  for (int j = 0; j < total_; ++j) {
    if (state_[j] == VarState::kBasic || is_fixed(j)) continue;
    const VarState s = state_[j];
    const bool bad = (s == VarState::kAtLower && d[j] < -tol) ||
                     (s == VarState::kAtUpper && d[j] > tol) ||
                     (s == VarState::kFreeZero && std::abs(d[j]) > tol);
    if (!bad) continue;
    if (is_boxed(j)) {
      place_nonbasic(j, s == VarState::kAtLower ? VarState::kAtUpper : VarState::kAtLower);
    } else {
      feasible = false;
    }
  }
  return feasible;
}

Outcome Simplex::primal(bool phase_one) {
  const double ftol = opt_.feasibility_tol;
  const double otol = opt_.optimality_tol;
  const std::int64_t stall_limit = 5LL * (m_ + n_) + 50;
  double best_obj = kInf;
  std::int64_t since_progress = 0;
  Eigen::VectorXd y(m_), w(m_);

  for (;;) {
    if (!budget_left()) return Outcome::kLimit;
    if (static_cast<int>(etas_.size()) >= opt_.refactor_interval) {
      if (!factor()) return Outcome::kNumerical;
      recompute_primal();
    }
    // phase costs on the basic variables
    bool any_infeasible = false;
    double phase_obj = 0.0;
    for (int p = 0; p < m_; ++p) {
      const int j = basic_[p];
      double c = 0.0;
      if (phase_one) {
        if (x_[j] < lo_[j] - ftol) { c = -1.0; phase_obj += lo_[j] - x_[j]; }
        else if (x_[j] > hi_[j] + ftol) { c = 1.0; phase_obj += x_[j] - hi_[j]; }
        any_infeasible |= c != 0.0;
      } else {
        c = cost_[j];
      }
      y[p] = c;
    }
    if (phase_one && !any_infeasible) return Outcome::kFeasible;
    if (!phase_one) {
      phase_obj = 0.0;
      for (int j = 0; j < total_; ++j) phase_obj += cost_[j] * x_[j];
    }
    if (phase_obj < best_obj - 1e-11 * (1.0 + std::abs(best_obj))) {
      best_obj = phase_obj;
      since_progress = 0;
    } else if (++since_progress > stall_limit) {
      bland_ = true;
    }

    btran(y);

    // pricing
    int q = -1;
    double q_score = 0.0, q_d = 0.0;
    for (int j = 0; j < total_; ++j) {
      const VarState s = state_[j];
      if (s == VarState::kBasic || is_fixed(j)) continue;
      const double d = (phase_one ? 0.0 : cost_[j]) - dot(j, y);
      const bool eligible = (s == VarState::kAtLower && d < -otol) ||
                            (s == VarState::kAtUpper && d > otol) ||
                            (s == VarState::kFreeZero && std::abs(d) > otol);
      if (!eligible) continue;
      if (bland_) {
        q = j;
        q_d = d;
        break;
      }
      if (std::abs(d) > q_score) {
        q = j;
        q_score = std::abs(d);
        q_d = d;
      }
    }
    charge_iteration();
    if (q < 0) return phase_one ? Outcome::kInfeasible : Outcome::kOptimal;

    const double dir = q_d < 0.0 ? 1.0 : -1.0;
    scatter(q, w);
    ftran(w);

    // ratio test; rate of change of basic p per unit step is g = -dir*w[p]
    int r = -1;
    double step = kInf;
    bool leave_upper = false;
    if (phase_one || bland_) {
      double best_g = 0.0;
      for (int p = 0; p < m_; ++p) {
        const double g = -dir * w[p];
        if (std::abs(g) < kPivotTol) continue;
        const int j = basic_[p];
        double ratio = kInf;
        bool upper = false;
        if (x_[j] < lo_[j] - ftol) {
          if (g > 0.0) { ratio = (lo_[j] - x_[j]) / g; upper = false; }
        } else if (x_[j] > hi_[j] + ftol) {
          if (g < 0.0) { ratio = (x_[j] - hi_[j]) / -g; upper = true; }
        } else if (g < 0.0 && std::isfinite(lo_[j])) {
          ratio = std::max(0.0, x_[j] - lo_[j]) / -g;
          upper = false;
        } else if (g > 0.0 && std::isfinite(hi_[j])) {
          ratio = std::max(0.0, hi_[j] - x_[j]) / g;
          upper = true;
        }
        if (!std::isfinite(ratio)) continue;
        const bool better =
            ratio < step - 1e-12 ||
            (ratio <= step + 1e-12 &&
             (bland_ ? (r < 0 || j < basic_[r]) : std::abs(g) > best_g));
        if (better) {
          r = p;
          step = ratio;
          best_g = std::abs(g);
          leave_upper = upper;
        }
      }
    } else {
      // Harris two-pass
      double relaxed = kInf;
      for (int p = 0; p < m_; ++p) {
        const double g = -dir * w[p];
        if (std::abs(g) < kPivotTol) continue;
        const int j = basic_[p];
        if (g < 0.0 && std::isfinite(lo_[j]))
          relaxed = std::min(relaxed, (x_[j] - lo_[j] + ftol) / -g);
        else if (g > 0.0 && std::isfinite(hi_[j]))
          relaxed = std::min(relaxed, (hi_[j] + ftol - x_[j]) / g);
      }
      double best_g = 0.0;
      for (int p = 0; p < m_; ++p) {
        const double g = -dir * w[p];
        if (std::abs(g) < kPivotTol) continue;
        const int j = basic_[p];
        double ratio = kInf;
        bool upper = false;
        if (g < 0.0 && std::isfinite(lo_[j])) {
          ratio = std::max(0.0, x_[j] - lo_[j]) / -g;
        } else if (g > 0.0 && std::isfinite(hi_[j])) {
          ratio = std::max(0.0, hi_[j] - x_[j]) / g;
          upper = true;
        }
        if (ratio <= relaxed && std::abs(g) > best_g) {
          r = p;
          step = ratio;
          best_g = std::abs(g);
          leave_upper = upper;
        }
      }
    }

    const double range = hi_[q] - lo_[q];
    const bool flip = std::isfinite(range) && range <= step;
    if (r < 0 && !flip) {
      if (phase_one) return Outcome::kNumerical;
      return Outcome::kUnbounded;
    }
    if (flip) step = range;

    x_[q] += dir * step;
    for (int p = 0; p < m_; ++p) x_[basic_[p]] -= dir * w[p] * step;
    if (flip) {
      place_nonbasic(q, dir > 0.0 ? VarState::kAtUpper : VarState::kAtLower);
      continue;
    }
    const int leaving = basic_[r];
    const double leave_value = leave_upper ? hi_[leaving] : lo_[leaving];
    pivot(r, q, w, leave_value, leave_upper);
  }
}

Outcome Simplex::dual() {
  const double ftol = opt_.feasibility_tol;
  const double otol = opt_.optimality_tol;
  const std::int64_t stall_limit = 5LL * (m_ + n_) + 50;
  std::int64_t degenerate = 0;
  Eigen::VectorXd rho(m_), y(m_), w(m_);
  std::vector<double> alpha(total_, 0.0);
  int recoveries = 0;

  for (;;) {
    if (!budget_left()) return Outcome::kLimit;
    if (static_cast<int>(etas_.size()) >= opt_.refactor_interval) {
      if (!factor()) return Outcome::kNumerical;
      recompute_primal();
    }
    // leaving row: largest bound violation
    int r = -1;
    double worst = ftol;
    for (int p = 0; p < m_; ++p) {
      const int j = basic_[p];
      const double v = std::max(lo_[j] - x_[j], x_[j] - hi_[j]);
      if (v > worst) {
        worst = v;
        r = p;
      }
    }
    if (r < 0) return Outcome::kFeasible;
    const int leaving = basic_[r];
    const bool to_lower = x_[leaving] < lo_[leaving];
    const double target = to_lower ? lo_[leaving] : hi_[leaving];

    for (int p = 0; p < m_; ++p) y[p] = cost_[basic_[p]];
    btran(y);
    rho.setZero(m_);
    rho[r] = 1.0;
    btran(rho);

    // dual ratio test (Harris two-pass)
    double relaxed = kInf;
    for (int j = 0; j < total_; ++j) {
      alpha[j] = 0.0;
      const VarState s = state_[j];
      if (s == VarState::kBasic || is_fixed(j)) continue;
      const double a = dot(j, rho);
      alpha[j] = a;
      // x_r rises when x_j rises and a < 0, or x_j falls and a > 0
      const bool up_ok = s != VarState::kAtUpper;
      const bool down_ok = s != VarState::kAtLower;
      bool eligible;
      if (to_lower)
        eligible = (up_ok && a < -kPivotTol) || (down_ok && a > kPivotTol);
      else
        eligible = (up_ok && a > kPivotTol) || (down_ok && a < -kPivotTol);
      if (!eligible) {
        alpha[j] = 0.0;
        continue;
      }
      const double d = cost_[j] - dot(j, y);
      const double dd = s == VarState::kAtLower ? std::max(d, 0.0)
                        : s == VarState::kAtUpper ? std::max(-d, 0.0)
                                                  : std::abs(d);
      relaxed = std::min(relaxed, (dd + otol) / std::abs(a));
    }
    int q = -1;
    double q_ratio = 0.0, best_a = 0.0;
    for (int j = 0; j < total_; ++j) {
      if (alpha[j] == 0.0) continue;
      const VarState s = state_[j];
      const double d = cost_[j] - dot(j, y);
      const double dd = s == VarState::kAtLower ? std::max(d, 0.0)
                        : s == VarState::kAtUpper ? std::max(-d, 0.0)
                                                  : std::abs(d);
      const double ratio = dd / std::abs(alpha[j]);
      if (ratio <= relaxed && std::abs(alpha[j]) > best_a) {
        q = j;
        best_a = std::abs(alpha[j]);
        q_ratio = ratio;
      }
    }
    charge_iteration();
    if (q < 0) return Outcome::kInfeasible;

    scatter(q, w);
    ftran(w);
    if (std::abs(w[r] - alpha[q]) > 1e-7 * (1.0 + std::abs(alpha[q])) || std::abs(w[r]) < kPivotTol) {
      if (++recoveries > kMaxRecoveries) return Outcome::kNumerical;
      if (!factor()) return Outcome::kNumerical;
      recompute_primal();
      continue;
    }
    const double delta = (x_[leaving] - target) / w[r];
    x_[q] += delta;
    for (int p = 0; p < m_; ++p) x_[basic_[p]] -= w[p] * delta;
    pivot(r, q, w, target, !to_lower);

    if (q_ratio <= 1e-12) {
      if (++degenerate > stall_limit) return Outcome::kStalled;
    } else {
      degenerate = 0;
    }
  }
}

LpResult Simplex::run(const Basis* warm) {
  LpResult result;
  if (warm == nullptr || !load_basis(*warm)) slack_basis();
  if (!factor()) {
    slack_basis();
    factor();
  }
  recompute_primal();

  Outcome outcome = Outcome::kNumerical;
  for (int attempt = 0; attempt <= kMaxRecoveries; ++attempt) {
    if (primal_infeasibility() > 0.0) {
      bool try_dual = attempt == 0;
      if (try_dual) {
        const Eigen::VectorXd d = reduced_costs();
        try_dual = make_dual_feasible(d);
        recompute_primal();
      }
      outcome = Outcome::kStalled;
      if (try_dual) outcome = dual();
      if (outcome == Outcome::kLimit) break;
      if (outcome == Outcome::kInfeasible) break;
      if (outcome != Outcome::kFeasible) {
        outcome = primal(true);
        if (outcome == Outcome::kInfeasible || outcome == Outcome::kLimit) break;
        if (outcome == Outcome::kNumerical) {
          slack_basis();
          factor();
          recompute_primal();
          continue;
        }
      }
    }
    outcome = primal(false);
    if (outcome == Outcome::kLimit || outcome == Outcome::kUnbounded) break;
    if (outcome == Outcome::kNumerical) {
      slack_basis();
      factor();
      recompute_primal();
      continue;
    }
    // verify on a fresh factorization
    if (!factor()) {
      slack_basis();
      factor();
      recompute_primal();
      continue;
    }
    recompute_primal();
    if (primal_infeasibility() > 0.0) continue;
    const Eigen::VectorXd d = reduced_costs();
    bool dual_ok = true;
    for (int j = 0; j < total_ && dual_ok; ++j) {
      const VarState s = state_[j];
      if (s == VarState::kBasic || is_fixed(j)) continue;
      dual_ok = !((s == VarState::kAtLower && d[j] < -opt_.optimality_tol) ||
                  (s == VarState::kAtUpper && d[j] > opt_.optimality_tol) ||
                  (s == VarState::kFreeZero && std::abs(d[j]) > opt_.optimality_tol));
    }
    if (!dual_ok) continue;
    outcome = Outcome::kOptimal;
    break;
  }

  switch (outcome) {
    case Outcome::kOptimal: result.status = Status::kOptimal; break;
    case Outcome::kInfeasible: result.status = Status::kInfeasible; break;
    case Outcome::kUnbounded: result.status = Status::kUnbounded; break;
    case Outcome::kLimit: result.status = Status::kIterationLimit; break;
    default: result.status = Status::kNumericalFailure; break;
  }

  result.x = x_.head(n_);
  result.row_activity = Eigen::VectorXd::Zero(m_);
  for (int j = 0; j < n_; ++j)
    for (const Entry& e : lp_.column(j)) result.row_activity[e.index] += e.value * x_[j];
  result.objective = 0.0;
  for (int j = 0; j < n_; ++j) result.objective += cost_[j] * x_[j];

  Eigen::VectorXd y(m_);
  for (int p = 0; p < m_; ++p) y[p] = cost_[basic_[p]];
  btran(y);
  result.duals = y;
  result.reduced_costs.resize(n_);
  for (int j = 0; j < n_; ++j)
    result.reduced_costs[j] = state_[j] == VarState::kBasic ? 0.0 : cost_[j] - dot(j, y);

  work_ += static_cast<double>(2 * nnz_ + total_);
  result.basis.columns.assign(state_.begin(), state_.begin() + n_);
  result.basis.rows.assign(state_.begin() + n_, state_.end());
  result.iterations = iterations_;
  result.work = work_;
  return result;
}

}  // namespace

LpResult solve_lp(const LinearProgram& lp, const Basis* warm, const LpOptions& options) {
  Simplex simplex(lp, options);
  return simplex.run(warm);
}

}  // namespace fcnd::lp
