#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace fcnd::lp {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class Sense : std::uint8_t { kLessEqual, kEqual, kGreaterEqual };

enum class Status : std::uint8_t {
  kOptimal,
  kInfeasible,
  kUnbounded,
  kIterationLimit,
  kNumericalFailure,
};

const char* to_string(Status s);

/// Position of a variable relative to the basis.
enum class VarState : std::uint8_t { kBasic, kAtLower, kAtUpper, kFreeZero };

/// Simplex basis. `columns` covers the structural variables, `rows` the
/// logical (row activity) variables. A basis captured from one solve stays
/// usable after columns or rows are appended: missing columns are taken
/// nonbasic, missing rows basic.
struct Basis {
  std::vector<VarState> columns;
  std::vector<VarState> rows;
  bool empty() const { return columns.empty() && rows.empty(); }
};

struct Entry {
  int index = 0;
  double value = 0.0;
};

/// min c'x  s.t.  row_lo <= Ax <= row_hi,  lo <= x <= hi.
///
/// Rows are given by sense and right-hand side. Storage is column-major
/// and sparse, so columns and rows can be appended between solves.
class LinearProgram {
 public:
  /// Adds a column; `entries` index existing rows. Returns its index.
  int add_column(double cost, std::span<const Entry> entries, double lo = 0.0,
                 double hi = kInf);
  /// Adds a row; `entries` index existing columns. Returns its index.
  int add_row(std::span<const Entry> entries, Sense sense, double rhs);

  void set_cost(int col, double cost);
  void set_bounds(int col, double lo, double hi);
  void set_rhs(int row, double rhs);
  /// Sets a_{row,col}; inserts the entry when absent.
  void set_coefficient(int row, int col, double value);

  int num_rows() const { return static_cast<int>(sense_.size()); }
  int num_cols() const { return static_cast<int>(cost_.size()); }
  double cost(int col) const { return cost_[col]; }
  double lower(int col) const { return lo_[col]; }
  double upper(int col) const { return hi_[col]; }
  Sense sense(int row) const { return sense_[row]; }
  double rhs(int row) const { return rhs_[row]; }
  std::span<const Entry> column(int col) const { return columns_[col]; }
  std::size_t nonzeros() const;

 private:
  std::vector<double> cost_, lo_, hi_;
  std::vector<std::vector<Entry>> columns_;  // entries index rows
  std::vector<Sense> sense_;
  std::vector<double> rhs_;
};

struct LpOptions {
  std::int64_t max_iterations = 1'000'000;
  double feasibility_tol = 1e-7;
  double optimality_tol = 1e-7;
  int refactor_interval = 100;
};

struct LpResult {
  Status status = Status::kNumericalFailure;
  double objective = 0.0;
  Eigen::VectorXd x;              // structural values
  Eigen::VectorXd row_activity;   // Ax
  Eigen::VectorXd duals;          // one per row; >= 0 on binding >= rows for min
  Eigen::VectorXd reduced_costs;  // c - A'duals
  Basis basis;
  std::int64_t iterations = 0;
  /// Deterministic effort measure (see WorkClock).
  double work = 0.0;
  bool optimal() const { return status == Status::kOptimal; }
};

/// Bounded-variable revised simplex. Starts from `warm` when given (and
/// structurally valid), otherwise from the all-logical basis. Uses the dual
/// simplex when the start basis is dual feasible but primal infeasible, a
/// composite primal phase 1 otherwise. Degenerate stalls switch pricing to
/// Bland's rule.
LpResult solve_lp(const LinearProgram& lp, const Basis* warm = nullptr,
                  const LpOptions& options = {});

}  // namespace fcnd::lp
