#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "bertrand/constructions.hpp"
#include "bertrand/engine.hpp"

namespace bertrand {
namespace {

GameConfig config(const PriceGrid& g, int rounds, Profile p, EvalMode mode = EvalMode::kMonteCarlo, int reps = 4) {
  GameConfig cfg;
  cfg.grid = g;
  cfg.rounds = rounds;
  cfg.profile = std::move(p);
  cfg.mode = mode;
  cfg.replicates = reps;
  cfg.seed = 12345;
  return cfg;
}

// Oracle for exact mode: walk every realized price profile (full support, no
// bucketing) with the machines' own transition functions.
struct BruteForce {
  const PriceGrid& grid;
  std::vector<const StateMachine*> machines;
  int rounds;
  double market = 0.0;
  std::vector<double> util;

  void walk(int t, std::vector<int> states, double prob) {
    if (t == rounds || prob == 0.0) return;
    const int n = static_cast<int>(machines.size());
    std::vector<const PriceDist*> d(n);
    for (int i = 0; i < n; ++i) d[i] = &machines[i]->output(states[i], t);
    std::vector<PriceIndex> realized(n);
    std::function<void(int, double)> rec = [&](int i, double pr) {
      if (pr == 0.0) return;
      if (i == n) {
        const auto pay = bertrand_payoffs(realized, grid);
        for (int j = 0; j < n; ++j) util[j] += pr * pay[j];
        market += pr * grid.price(*std::min_element(realized.begin(), realized.end()));
        std::vector<int> next(n);
        for (int j = 0; j < n; ++j) next[j] = machines[j]->next_state(states[j], realized, t);
        walk(t + 1, next, pr);
        return;
      }
      for (PriceIndex p = 0; p <= grid.top(); ++p) {
        realized[i] = p;
        rec(i + 1, pr * (*d[i])[p]);
      }
    };
    rec(0, prob);
  }
};

TEST(Engine, SimpleGrimWithoutDefectionPricesOneInBothModes) {
  const PriceGrid g(100);
  for (EvalMode mode : {EvalMode::kMonteCarlo, EvalMode::kExactAutomaton}) {
    const RunMetrics m = run(config(g, 200, make_simple_grim(4, g), mode)).metrics;
    EXPECT_DOUBLE_EQ(m.market_price, 1.0);
    EXPECT_DOUBLE_EQ(m.standard_error, 0.0);
    for (double u : m.utilities) EXPECT_DOUBLE_EQ(u, 0.25);
  }
}

TEST(Engine, ZeroGrimUndercutByHand) {
  // Round 0: the defector wins at 0.9; afterwards the punisher posts 0 and
  // both earn nothing. Market price (0.9 + 9*0) / 10.
  const PriceGrid g(10);
  for (EvalMode mode : {EvalMode::kMonteCarlo, EvalMode::kExactAutomaton}) {
    GameConfig cfg = config(g, 10, make_zero_grim(2, g), mode);
    cfg.defection = DefectionSpec{{0}, {make_fixed_strategy(PriceDist::point(g, 9), "undercut")}};
    const RunMetrics m = run(cfg).metrics;
    EXPECT_NEAR(m.market_price, 0.09, 1e-15);
    EXPECT_NEAR(m.utilities[0], 0.09, 1e-15);
    EXPECT_NEAR(m.utilities[1], 0.0, 1e-15);
  }
}

TEST(Engine, ExactModeMatchesHistoryEnumeration) {
  const PriceGrid g(4);
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 12; ++trial) {
    const int n = 2 + trial % 2;
    Profile p = random_automaton_profile(n, g, rng);
    p[0] = make_fixed_strategy(PriceDist::from_weights(g, {0.1, 0.2, 0.0, 0.3, 0.4}), "mixed");
    const int rounds = 4;
    const RunMetrics m = run(config(g, rounds, p, EvalMode::kExactAutomaton)).metrics;
    BruteForce bf{g, {}, rounds, 0.0, std::vector<double>(n, 0.0)};
    std::vector<int> start;
    for (const auto& s : p) {
      bf.machines.push_back(s->machine());
      start.push_back(s->machine()->start_state());
    }
    bf.walk(0, start, 1.0);
    EXPECT_NEAR(m.market_price, bf.market / rounds, 1e-12) << "trial " << trial;
    for (int i = 0; i < n; ++i) EXPECT_NEAR(m.utilities[i], bf.util[i] / rounds, 1e-12);
    EXPECT_LT(m.welfare_residual, 1e-12);
  }
}

TEST(Engine, MonteCarloAgreesWithExactOnAutomata) {
  const PriceGrid g(40);
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 4; ++trial) {
    GameConfig cfg = config(g, 60, make_cyclic_erd(3, g, 0.1), EvalMode::kExactAutomaton, 100);
    cfg.defection = DefectionSpec{{trial % 3}, {make_switch_strategy(g, 40, 5 + trial, 39)}};
    if (trial == 3) cfg.profile = random_automaton_profile(3, g, rng);
    const RunMetrics ex = run(cfg).metrics;
    cfg.mode = EvalMode::kMonteCarlo;
    const RunMetrics mc = run(cfg).metrics;
    EXPECT_LE(std::abs(mc.market_price - ex.market_price), 4.0 * mc.standard_error + 1e-12) << "trial " << trial;
  }
}

TEST(Engine, CachedAndUncachedPathsAgree) {
  const PriceGrid g(60);
  std::mt19937_64 rng(8);
  const std::vector<Profile> profiles{make_simple_grim(3, g), make_cyclic_erd(3, g, 0.1), random_automaton_profile(3, g, rng)};
  for (const Profile& base : profiles) {
    GameConfig cfg = config(g, 400, base, EvalMode::kMonteCarlo, 3);
    cfg.defection = DefectionSpec{{1}, {make_hedge(g, 400)}};
    const RunMetrics fast = run(cfg).metrics;
    cfg.cache_evaluations = false;
    const RunMetrics slow = run(cfg).metrics;
    EXPECT_NEAR(fast.market_price, slow.market_price, 1e-9);
    for (int i = 0; i < 3; ++i) EXPECT_NEAR(fast.utilities[i], slow.utilities[i], 1e-9);
    EXPECT_NEAR(fast.worst_regret()->measured, slow.worst_regret()->measured, 1e-7);
    EXPECT_LT(fast.welfare_residual, 1e-12);
    EXPECT_LT(slow.welfare_residual, 1e-12);
  }
}

TEST(Engine, DeterministicUnderFixedSeed) {
  const PriceGrid g(50);
  GameConfig cfg = config(g, 300, make_cyclic_erd(2, g, 0.1), EvalMode::kMonteCarlo, 5);
  cfg.defection = DefectionSpec{{0}, {make_hedge(g, 300)}};
  const RunMetrics a = run(cfg).metrics;
  cfg.record_trace = true;
  const RunResult b = run(cfg);
  EXPECT_EQ(a.digest(), b.metrics.digest());
  EXPECT_EQ(a.market_price, b.metrics.market_price);
  EXPECT_EQ(b.trace.rounds.size(), 300u);
  cfg.seed = 777;
  EXPECT_NE(run(cfg).metrics.digest(), a.digest());
}

TEST(Engine, TraceRecordsConditionalExpectations) {
  const PriceGrid g(30);
  GameConfig cfg = config(g, 80, make_cyclic_erd(3, g, 0.1), EvalMode::kMonteCarlo, 1);
  cfg.defection = DefectionSpec{{2}, {make_hedge(g, 80)}};
  cfg.record_trace = true;
  cfg.record_distributions = true;
  const RunResult r = run(cfg);
  double total = 0.0;
  for (const RoundRecord& rec : r.trace.rounds) {
    std::vector<PriceDist> d;
    for (const auto& m : rec.distributions) d.emplace_back(g, m);
    EXPECT_NEAR(rec.expected_min, expected_min(refs(d), g), 1e-12);
    double s = 0.0;
    for (double u : rec.payoffs) s += u;
    EXPECT_NEAR(s, rec.expected_min, 1e-12);
    total += rec.expected_min;
  }
  EXPECT_NEAR(total / 80, r.metrics.market_price, 1e-12);
}

TEST(Engine, ExactModeRejectsLearners) {
  const PriceGrid g(10);
  GameConfig cfg = config(g, 10, make_simple_grim(2, g), EvalMode::kExactAutomaton);
  cfg.defection = DefectionSpec{{0}, {make_hedge(g, 10)}};
  EXPECT_THROW(run(cfg), ConfigError);
}

TEST(Engine, RejectsBadDefections) {
  const PriceGrid g(10);
  GameConfig cfg = config(g, 10, make_simple_grim(2, g));
  cfg.defection = DefectionSpec{{2}, {make_hedge(g, 10)}};
  EXPECT_THROW(run(cfg), ConfigError);
  cfg.defection = DefectionSpec{{0, 0}, {make_hedge(g, 10), make_hedge(g, 10)}};
  EXPECT_THROW(run(cfg), ConfigError);
  cfg.defection.reset();
  cfg.rounds = 0;
  EXPECT_THROW(run(cfg), ConfigError);
}

TEST(Engine, HedgeDefectorAgainstSimpleGrimKeepsThreatPrice) {
  const PriceGrid g(100);
  const int rounds = 4000;
  GameConfig cfg = config(g, rounds, make_simple_grim(4, g), EvalMode::kMonteCarlo, 10);
  const DefectedPrice dp = defected_price(make_simple_grim(4, g), DefectionSpec{{0}, {make_hedge(g, rounds)}}, cfg);
  const double r = hedge_regret_bound(100, rounds);
  EXPECT_GE(dp.defected.market_price, 0.25 - 2.0 / 100 - r / rounds - 3 * dp.defected.standard_error);
  ASSERT_TRUE(dp.baseline.has_value());
  EXPECT_DOUBLE_EQ(dp.baseline->market_price, 1.0);
  EXPECT_LE(dp.defected.market_price, dp.baseline->market_price);
  const auto regret = dp.defected.worst_regret();
  ASSERT_TRUE(regret.has_value());
  EXPECT_LE(regret->measured, regret->theoretical_bound + 1e-6);
  EXPECT_GE(regret->measured, -1e-9);
}

TEST(Engine, CorrelatedGroupSharesOneDraw) {
  const PriceGrid g(4);
  auto law = std::make_shared<const JointLaw>(g, 2, std::vector<std::vector<PriceIndex>>{{1, 3}, {3, 1}, {2, 2}},
                                              std::vector<double>{0.25, 0.25, 0.5});
  Profile p{std::make_shared<GuardedLearner>(g, 50, law, 0, GuardConfig{1.0, GuardRule::kAverage}),
            std::make_shared<GuardedLearner>(g, 50, law, 1, GuardConfig{1.0, GuardRule::kAverage}),
            make_fixed_strategy(PriceDist::point(g, 4), "top")};
  GameConfig cfg = config(g, 50, p, EvalMode::kMonteCarlo, 3);
  cfg.record_trace = true;
  const RunResult r = run(cfg);
  // E[min] = 0.25*0.25 + 0.25*0.25 + 0.5*0.5; the independent product would give less.
  EXPECT_NEAR(r.metrics.market_price, 0.375, 1e-12);
  for (const auto& rec : r.trace.rounds) {
    const auto a = rec.realized[0], b = rec.realized[1];
    EXPECT_TRUE((a == 1 && b == 3) || (a == 3 && b == 1) || (a == 2 && b == 2));
  }
}

TEST(Lemma2Cap, BoundaryValues) {
  const PriceGrid g(1000);
  EXPECT_NEAR(lemma2_cap(1.0, 0.0, g).value, 2.0 + 0.001, 1e-12);
  EXPECT_DOUBLE_EQ(lemma2_cap(1.0, 0.0, g).reported(), 1.0);
  EXPECT_TRUE(lemma2_cap(0.0, 0.1, g).vacuous);
  const double n = 6, eq_slack = 0.01;
  const double c = 2.0 / n + eq_slack;
  EXPECT_NEAR(lemma2_cap(c, 0.0, g).value, c + 0.001 + c * (1.0 + std::log(1.0 / c)), 1e-12);
}

}  // namespace
}  // namespace bertrand
