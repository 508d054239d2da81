#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <vector>

#include "bertrand/cce.hpp"

namespace bertrand {
namespace {

double duopoly(double mine, double other) {
  if (mine < other) return mine;
  if (mine == other) return mine / 2.0;
  return 0.0;
}

// Best symmetric two-player CCE price over a mesh of weights on the sorted
// outcomes of `support`, with constraints written out by hand.
double mesh_best(int k, const std::vector<int>& support, int steps) {
  std::vector<std::pair<double, double>> outcomes;
  for (std::size_t a = 0; a < support.size(); ++a) {
    for (std::size_t b = a; b < support.size(); ++b) {
      outcomes.emplace_back(static_cast<double>(support[a]) / k, static_cast<double>(support[b]) / k);
    }
  }
  const int n = static_cast<int>(outcomes.size());
  std::vector<int> w(n, 0);
  double best = 0.0;
  std::function<void(int, int)> rec = [&](int pos, int left) {
    if (pos == n - 1) {
      w[pos] = left;
      double u = 0.0, price = 0.0;
      std::vector<double> dev(k + 1, 0.0);
      for (int j = 0; j < n; ++j) {
        const double pr = static_cast<double>(w[j]) / steps;
        const auto [a, b] = outcomes[j];
        price += pr * std::min(a, b);
        u += pr * 0.5 * (duopoly(a, b) + duopoly(b, a));
        for (int p = 0; p <= k; ++p) dev[p] += pr * 0.5 * (duopoly(static_cast<double>(p) / k, a) + duopoly(static_cast<double>(p) / k, b));
      }
      for (double d : dev) {
        if (d > u + 1e-12) return;
      }
      best = std::max(best, price);
      return;
    }
    for (int x = 0; x <= left; ++x) {
      w[pos] = x;
      rec(pos + 1, left - x);
    }
  };
  rec(0, steps);
  return best;
}

TEST(ExtremalCce, ClosedFormPrices) {
  EXPECT_NEAR(extremal_cce_price(2), 0.7358, 1e-4);
  EXPECT_NEAR(extremal_cce_price(3), 0.4060, 1e-4);
  EXPECT_NEAR(extremal_cce_price(4), 0.1991, 1e-4);
}

TEST(ExtremalCce, TinyGridsAgreeWithMeshSearch) {
  // The mesh cannot do better than the LP optimum, and a fine mesh gets close.
  for (int k : {2, 3}) {
    const PriceGrid g(k);
    std::vector<int> below_one;
    for (int p = 0; p < k; ++p) below_one.push_back(p);
    const double lp = solve_extremal_cce(2, g).objective;
    const double mesh = mesh_best(k, below_one, k == 2 ? 50 : 24);
    EXPECT_LE(mesh, lp + 1e-9) << "K=" << k;
    EXPECT_NEAR(lp, mesh, 1e-3) << "K=" << k;
  }
}

TEST(ExtremalCce, AllowingPriceOneAtKTwoReachesOne) {
  // Both at 1 is a CCE on {0, 1/2, 1}: undercutting to 1/2 earns exactly 1/2.
  CceOptions opt;
  opt.allow_top = true;
  EXPECT_NEAR(solve_extremal_cce(2, PriceGrid(2), opt).objective, 1.0, 1e-9);
  EXPECT_NEAR(mesh_best(2, {0, 1, 2}, 20), 1.0, 1e-12);
}

TEST(ExtremalCce, TwoPlayerObjectiveApproachesTwoOverE) {
  double prev = 0.0;
  for (int k : {10, 25, 50}) {
    const double v = solve_extremal_cce(2, PriceGrid(k)).objective;
    EXPECT_GE(v, prev - 1e-12);
    EXPECT_NEAR(v, extremal_cce_price(2), 5.0 / k);
    EXPECT_LE(v, extremal_cce_price(2) + 1e-9);
    prev = v;
  }
}

TEST(ExtremalCce, SolutionIsCertifiedAndSymmetric) {
  for (int m : {2, 3}) {
    const CceSolution sol = solve_extremal_cce(m, PriceGrid(12));
    const auto law = sol.joint_law();
    const CceCertificate c = certify_cce(*law);
    EXPECT_LE(c.max_violation, 1e-8) << "M=" << m;
    EXPECT_LE(c.max_asymmetry, 1e-12);
    EXPECT_NEAR(c.objective, sol.objective, 1e-12);
    double total = 0.0;
    for (double u : c.utilities) {
      EXPECT_NEAR(u, c.utilities.front(), 1e-12);
      total += u;
    }
    EXPECT_NEAR(total, sol.objective, 1e-12);  // welfare equals the expected minimum
  }
}

TEST(ExtremalCce, MarginalMatchesJointAndAvoidsPriceOne) {
  const CceSolution sol = solve_extremal_cce(3, PriceGrid(10));
  const PriceDist marg = sol.marginal();
  const auto law = sol.joint_law();
  std::vector<double> first(11, 0.0);
  for (std::size_t a = 0; a < law->atoms().size(); ++a) first[law->atoms()[a][0]] += law->probs()[a];
  for (int p = 0; p <= 10; ++p) EXPECT_NEAR(first[p], marg[p], 1e-12);
  EXPECT_EQ(marg[10], 0.0);
}

TEST(ExtremalCce, CertifierFlagsANonEquilibrium) {
  // Both at 3/4 on a K=4 grid: each earns 3/8, undercutting to 1/2 earns 1/2.
  const PriceGrid g(4);
  const JointLaw bad(g, 2, {{3, 3}}, {1.0});
  const CceCertificate c = certify_cce(bad);
  EXPECT_NEAR(c.max_violation, 0.5 - 0.375, 1e-12);
  EXPECT_EQ(c.worst_price, 2);
}

TEST(ExtremalCce, IidProductOfTheMarginalIsNotACce) {
  // Independent copies of the LP marginal leave more regret than the 2/K guard.
  const PriceGrid g(50);
  const PriceDist marg = solve_extremal_cce(2, g).marginal();
  double u = 0.0, best = 0.0;
  for (int p = 0; p <= 50; ++p) {
    double dev = 0.0;
    for (int q = 0; q <= 50; ++q) dev += marg[q] * duopoly(g.price(p), g.price(q));
    u += marg[p] * dev;
    best = std::max(best, dev);
  }
  EXPECT_GT(best - u, 2.0 / 50);
}

TEST(ExtremalCce, Errors) {
  EXPECT_THROW(solve_extremal_cce(1, PriceGrid(10)), ConfigError);
  CceOptions small;
  small.max_columns = 100;
  EXPECT_THROW(solve_extremal_cce(3, PriceGrid(50), small), ConfigError);
  EXPECT_THROW(parse_sampling_mode("joint"), UsageError);
  EXPECT_EQ(parse_sampling_mode("iid"), SamplingMode::kIid);
}

TEST(ExtremalCce, PlayCarriesTheRightObject) {
  const CceSolution sol = solve_extremal_cce(2, PriceGrid(10));
  const CcePlay corr = cce_play(sol, SamplingMode::kCorrelated);
  EXPECT_TRUE(corr.law);
  EXPECT_FALSE(corr.marginal);
  const CcePlay iid = cce_play(sol, SamplingMode::kIid);
  EXPECT_TRUE(iid.marginal);
  EXPECT_FALSE(iid.law);
}

}  // namespace
}  // namespace bertrand
