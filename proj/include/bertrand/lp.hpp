#pragma once

// Small dense linear programs: maximize c.x subject to A_le x <= b_le,
// A_eq x = b_eq, x >= 0. Two-phase tableau simplex. Sized for the symmetric
// coarse correlated equilibrium programs (tens of rows, tens of thousands of
// columns), not for general use.

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "bertrand/errors.hpp"

namespace bertrand {

struct LinearProgram {
  int vars = 0;
  std::vector<double> objective;  // maximized
  std::vector<std::vector<double>> le_rows;
  std::vector<double> le_rhs;
  std::vector<std::vector<double>> eq_rows;
  std::vector<double> eq_rhs;
};

enum class LpStatus { kOptimal, kInfeasible, kUnbounded, kIterationLimit };

inline std::string to_string(LpStatus s) {
  switch (s) {
    case LpStatus::kOptimal:
      return "optimal";
    case LpStatus::kInfeasible:
      return "infeasible";
    case LpStatus::kUnbounded:
      return "unbounded";
    case LpStatus::kIterationLimit:
      return "iteration_limit";
  }
  return "unknown";
}

struct LpResult {
  LpStatus status = LpStatus::kInfeasible;
  std::vector<double> x;
  double objective = 0.0;
  int iterations = 0;
};

struct SimplexOptions {
  double pivot_tolerance = 1e-11;
  int max_iterations = 200000;
  /// Consecutive degenerate pivots before switching to Bland's rule.
  int degenerate_limit = 50;
};

namespace detail {

class Tableau {
 public:
  Tableau(int rows, int cols) : rows_(rows), cols_(cols), a_(static_cast<std::size_t>(rows + 1) * (cols + 1), 0.0) {}

  double& at(int r, int c) { return a_[static_cast<std::size_t>(r) * (cols_ + 1) + c]; }
  double at(int r, int c) const { return a_[static_cast<std::size_t>(r) * (cols_ + 1) + c]; }
  double& rhs(int r) { return at(r, cols_); }
  double* row(int r) { return &a_[static_cast<std::size_t>(r) * (cols_ + 1)]; }
  int rows() const { return rows_; }
  int cols() const { return cols_; }

  void pivot(int pr, int pc) {
    double* p = row(pr);
    const double inv = 1.0 / p[pc];
    for (int c = 0; c <= cols_; ++c) p[c] *= inv;
    p[pc] = 1.0;
    for (int r = 0; r <= rows_; ++r) {
      if (r == pr) continue;
      double* q = row(r);
      const double f = q[pc];
      if (f == 0.0) continue;
      for (int c = 0; c <= cols_; ++c) q[c] -= f * p[c];
      q[pc] = 0.0;
    }
  }

 private:
  int rows_;
  int cols_;
  std::vector<double> a_;  // last row is the (negated) objective
};

// Runs simplex iterations on tableau `t` whose last row holds reduced costs
// (entering candidates have negative entries). Columns with allowed[c] == 0
// never enter.
inline LpStatus simplex_loop(Tableau& t, std::vector<int>& basis, const std::vector<char>& allowed,
                             const SimplexOptions& opt, int& iterations) {
  const int m = t.rows();
  const int n = t.cols();
  int degenerate = 0;
  while (true) {
    if (iterations >= opt.max_iterations) return LpStatus::kIterationLimit;
    const double* obj = t.row(m);
    const bool bland = degenerate >= opt.degenerate_limit;
    int enter = -1;
    double best = -opt.pivot_tolerance;
    for (int c = 0; c < n; ++c) {
      if (!allowed[c] || obj[c] >= -opt.pivot_tolerance) continue;
      if (bland) {
        enter = c;
        break;
      }
      if (obj[c] < best) {
        best = obj[c];
        enter = c;
      }
    }
    if (enter < 0) return LpStatus::kOptimal;

    int leave = -1;
    double ratio = std::numeric_limits<double>::infinity();
    for (int r = 0; r < m; ++r) {
      const double a = t.at(r, enter);
      if (a <= opt.pivot_tolerance) continue;
      const double q = t.at(r, n) / a;
      if (q < ratio - 1e-14 || (q <= ratio + 1e-14 && leave >= 0 && basis[r] < basis[leave])) {
        ratio = q;
        leave = r;
      }
    }
    if (leave < 0) return LpStatus::kUnbounded;
    degenerate = ratio <= 1e-14 ? degenerate + 1 : 0;
    t.pivot(leave, enter);
    basis[leave] = enter;
    ++iterations;
  }
}

}  // namespace detail

inline LpResult solve_lp(const LinearProgram& lp, const SimplexOptions& opt = {}) {
  const int n = lp.vars;
  if (static_cast<int>(lp.objective.size()) != n) throw ConfigError("objective length differs from variable count");
  const int m_le = static_cast<int>(lp.le_rows.size());
  const int m_eq = static_cast<int>(lp.eq_rows.size());
  if (static_cast<int>(lp.le_rhs.size()) != m_le || static_cast<int>(lp.eq_rhs.size()) != m_eq) {
    throw ConfigError("constraint rows and right-hand sides disagree");
  }
  const int m = m_le + m_eq;

  // Columns: originals, one slack per <= row, then one artificial per row that
  // cannot start with its slack basic (equalities and <= rows with b < 0).
  std::vector<int> art_row;
  for (int r = 0; r < m_le; ++r) {
    if (lp.le_rhs[r] < 0.0) art_row.push_back(r);
  }
  for (int r = 0; r < m_eq; ++r) art_row.push_back(m_le + r);
  const int slack0 = n;
  const int art0 = n + m_le;
  const int cols = art0 + static_cast<int>(art_row.size());

  detail::Tableau t(m, cols);
  std::vector<int> basis(m, -1);
  for (int r = 0; r < m; ++r) {
    const bool le = r < m_le;
    const auto& row = le ? lp.le_rows[r] : lp.eq_rows[r - m_le];
    if (static_cast<int>(row.size()) != n) throw ConfigError("constraint row length differs from variable count");
    double b = le ? lp.le_rhs[r] : lp.eq_rhs[r - m_le];
    const double sign = b < 0.0 ? -1.0 : 1.0;
    for (int c = 0; c < n; ++c) t.at(r, c) = sign * row[c];
    if (le) t.at(r, slack0 + r) = sign;
    t.rhs(r) = sign * b;
    if (le && sign > 0.0) basis[r] = slack0 + r;
  }
  for (std::size_t k = 0; k < art_row.size(); ++k) {
    t.at(art_row[k], art0 + static_cast<int>(k)) = 1.0;
    basis[art_row[k]] = art0 + static_cast<int>(k);
  }

  LpResult result;
  std::vector<char> allowed(cols, 1);

  if (!art_row.empty()) {
    // Phase 1: maximize -(sum of artificials); reduced costs start as minus
    // the column sums of the artificial rows.
    double* obj = t.row(m);
    for (int c = 0; c <= cols; ++c) obj[c] = 0.0;
    for (int r : art_row) {
      const double* row = t.row(r);
      for (int c = 0; c < art0; ++c) obj[c] -= row[c];
      obj[cols] -= row[cols];
    }
    const LpStatus s = detail::simplex_loop(t, basis, allowed, opt, result.iterations);
    if (s == LpStatus::kIterationLimit) {
      result.status = s;
      return result;
    }
    if (-t.rhs(m) > 1e-9) {
      result.status = LpStatus::kInfeasible;
      return result;
    }
    // Drive artificials out of the basis where possible.
    for (int r = 0; r < m; ++r) {
      if (basis[r] < art0) continue;
      for (int c = 0; c < art0; ++c) {
        if (std::abs(t.at(r, c)) > 1e-9) {
          t.pivot(r, c);
          basis[r] = c;
          break;
        }
      }
    }
    for (int c = art0; c < cols; ++c) allowed[c] = 0;
  }

  // Phase 2: reduced costs of the real objective against the current basis.
  {
    double* obj = t.row(m);
    for (int c = 0; c <= cols; ++c) obj[c] = 0.0;
    for (int c = 0; c < n; ++c) obj[c] = -lp.objective[c];
    for (int r = 0; r < m; ++r) {
      const int b = basis[r];
      if (b >= n || lp.objective[b] == 0.0) continue;
      const double f = lp.objective[b];
      const double* row = t.row(r);
      for (int c = 0; c <= cols; ++c) obj[c] += f * row[c];
    }
  }
  result.status = detail::simplex_loop(t, basis, allowed, opt, result.iterations);
  result.x.assign(n, 0.0);
  for (int r = 0; r < m; ++r) {
    if (basis[r] < n) result.x[basis[r]] = std::max(0.0, t.rhs(r));
  }
  result.objective = 0.0;
  for (int c = 0; c < n; ++c) result.objective += lp.objective[c] * result.x[c];
  return result;
}

}  // namespace bertrand
