#include <gtest/gtest.h>

#include <cmath>
#include <optional>
#include <random>
#include <vector>

#include "bertrand/lp.hpp"

namespace bertrand {
namespace {

using Matrix = std::vector<std::vector<double>>;

std::optional<std::vector<double>> solve_square(Matrix a, std::vector<double> b) {
  const int n = static_cast<int>(b.size());
  for (int c = 0; c < n; ++c) {
    int piv = c;
    for (int r = c + 1; r < n; ++r) {
      if (std::abs(a[r][c]) > std::abs(a[piv][c])) piv = r;
    }
    if (std::abs(a[piv][c]) < 1e-10) return std::nullopt;
    std::swap(a[piv], a[c]);
    std::swap(b[piv], b[c]);
    for (int r = 0; r < n; ++r) {
      if (r == c) continue;
      const double f = a[r][c] / a[c][c];
      for (int k = c; k < n; ++k) a[r][k] -= f * a[c][k];
      b[r] -= f * b[c];
    }
  }
  std::vector<double> x(n);
  for (int i = 0; i < n; ++i) x[i] = b[i] / a[i][i];
  return x;
}

// Optimum of a bounded, feasible LP by enumerating every basic point: pick n
// tight constraints among the rows, the equalities and x >= 0.
std::optional<double> vertex_oracle(const LinearProgram& lp) {
  const int n = lp.vars;
  Matrix rows;
  std::vector<double> rhs;
  for (std::size_t r = 0; r < lp.le_rows.size(); ++r) {
    rows.push_back(lp.le_rows[r]);
    rhs.push_back(lp.le_rhs[r]);
  }
  const int m_le = static_cast<int>(rows.size());
  for (int j = 0; j < n; ++j) {
    std::vector<double> e(n, 0.0);
    e[j] = 1.0;
    rows.push_back(e);
    rhs.push_back(0.0);
  }
  const int total = static_cast<int>(rows.size());
  const int m_eq = static_cast<int>(lp.eq_rows.size());
  std::optional<double> best;
  std::vector<int> pick;
  auto feasible = [&](const std::vector<double>& x) {
    for (int j = 0; j < n; ++j) {
      if (x[j] < -1e-9) return false;
    }
    for (int r = 0; r < m_le; ++r) {
      double s = 0.0;
      for (int j = 0; j < n; ++j) s += lp.le_rows[r][j] * x[j];
      if (s > lp.le_rhs[r] + 1e-9) return false;
    }
    for (int r = 0; r < m_eq; ++r) {
      double s = 0.0;
      for (int j = 0; j < n; ++j) s += lp.eq_rows[r][j] * x[j];
      if (std::abs(s - lp.eq_rhs[r]) > 1e-9) return false;
    }
    return true;
  };
  std::function<void(int)> rec = [&](int from) {
    if (static_cast<int>(pick.size()) == n - m_eq) {
      Matrix a = lp.eq_rows;
      std::vector<double> b = lp.eq_rhs;
      for (int r : pick) {
        a.push_back(rows[r]);
        b.push_back(rhs[r]);
      }
      const auto x = solve_square(a, b);
      if (!x || !feasible(*x)) return;
      double v = 0.0;
      for (int j = 0; j < n; ++j) v += lp.objective[j] * (*x)[j];
      if (!best || v > *best) best = v;
      return;
    }
    for (int r = from; r < total; ++r) {
      pick.push_back(r);
      rec(r + 1);
      pick.pop_back();
    }
  };
  rec(0);
  return best;
}

TEST(Simplex, TextbookProgram) {
  // max 3x + 5y, x <= 4, 2y <= 12, 3x + 2y <= 18 -> (2, 6), value 36.
  LinearProgram lp;
  lp.vars = 2;
  lp.objective = {3, 5};
  lp.le_rows = {{1, 0}, {0, 2}, {3, 2}};
  lp.le_rhs = {4, 12, 18};
  const LpResult r = solve_lp(lp);
  ASSERT_EQ(r.status, LpStatus::kOptimal);
  EXPECT_NEAR(r.objective, 36.0, 1e-9);
  EXPECT_NEAR(r.x[0], 2.0, 1e-9);
  EXPECT_NEAR(r.x[1], 6.0, 1e-9);
}

TEST(Simplex, MatchesVertexEnumerationOnRandomPrograms) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> coef(-1.0, 1.0), pos(0.1, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    LinearProgram lp;
    lp.vars = 2 + trial % 3;
    const int m = 2 + trial % 4;
    lp.objective.resize(lp.vars);
    for (double& c : lp.objective) c = coef(rng);
    for (int r = 0; r < m; ++r) {
      std::vector<double> row(lp.vars);
      for (double& a : row) a = coef(rng);
      lp.le_rows.push_back(row);
      lp.le_rhs.push_back(coef(rng));
    }
    // A bounding row keeps every program bounded.
    std::vector<double> cap(lp.vars);
    for (double& a : cap) a = pos(rng);
    lp.le_rows.push_back(cap);
    lp.le_rhs.push_back(2.0);
    if (trial % 2 == 0) {
      lp.eq_rows.push_back(std::vector<double>(lp.vars, 1.0));
      lp.eq_rhs.push_back(1.0);
    }
    const auto oracle = vertex_oracle(lp);
    const LpResult r = solve_lp(lp);
    if (!oracle) {
      EXPECT_EQ(r.status, LpStatus::kInfeasible) << "trial " << trial;
      continue;
    }
    ASSERT_EQ(r.status, LpStatus::kOptimal) << "trial " << trial;
    EXPECT_NEAR(r.objective, *oracle, 1e-8) << "trial " << trial;
  }
}

TEST(Simplex, ReportsInfeasibleAndUnbounded) {
  LinearProgram infeasible;
  infeasible.vars = 1;
  infeasible.objective = {1};
  infeasible.le_rows = {{1}};
  infeasible.le_rhs = {-1};
  EXPECT_EQ(solve_lp(infeasible).status, LpStatus::kInfeasible);

  LinearProgram unbounded;
  unbounded.vars = 2;
  unbounded.objective = {1, 0};
  unbounded.le_rows = {{-1, 1}};
  unbounded.le_rhs = {1};
  EXPECT_EQ(solve_lp(unbounded).status, LpStatus::kUnbounded);
}

TEST(Simplex, DegenerateProgramTerminates) {
  // Many constraints tight at the origin.
  LinearProgram lp;
  lp.vars = 3;
  lp.objective = {1, 1, 1};
  lp.le_rows = {{1, -1, 0}, {0, 1, -1}, {-1, 0, 1}, {1, 1, 1}, {1, -1, 0}};
  lp.le_rhs = {0, 0, 0, 3, 0};
  const LpResult r = solve_lp(lp);
  ASSERT_EQ(r.status, LpStatus::kOptimal);
  EXPECT_NEAR(r.objective, 3.0, 1e-9);
}

TEST(Simplex, RejectsMalformedPrograms) {
  LinearProgram lp;
  lp.vars = 2;
  lp.objective = {1};
  EXPECT_THROW(solve_lp(lp), ConfigError);
  lp.objective = {1, 1};
  lp.le_rows = {{1, 1, 1}};
  lp.le_rhs = {1};
  EXPECT_THROW(solve_lp(lp), ConfigError);
}

}  // namespace
}  // namespace bertrand
