#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "bertrand/grid.hpp"

namespace bertrand {
namespace {

// Brute-force oracle: enumerate every joint outcome of independent players
// and apply the lowest-price-wins rule directly.
void enumerate(const std::vector<PriceDist>& players, const std::function<void(const std::vector<int>&, double)>& visit) {
  std::vector<int> prices(players.size(), 0);
  std::function<void(std::size_t, double)> rec = [&](std::size_t i, double prob) {
    if (prob == 0.0) return;
    if (i == players.size()) {
      visit(prices, prob);
      return;
    }
    for (int j = 0; j < players[i].grid().points(); ++j) {
      prices[i] = j;
      rec(i + 1, prob * players[i][j]);
    }
  };
  rec(0, 1.0);
}

double oracle_payoff(const std::vector<int>& prices, std::size_t who, int k) {
  int low = prices[0];
  for (int p : prices) low = std::min(low, p);
  if (prices[who] != low) return 0.0;
  int ties = 0;
  for (int p : prices) ties += (p == low);
  return static_cast<double>(low) / k / ties;
}

PriceDist random_dist(const PriceGrid& g, std::mt19937_64& rng, double zero_prob = 0.4) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> w(g.points());
  for (double& x : w) x = u(rng) < zero_prob ? 0.0 : u(rng);
  w[std::uniform_int_distribution<int>(0, g.top())(rng)] += 0.5;
  return PriceDist::from_weights(g, w);
}

TEST(PriceGrid, RejectsCoarseResolution) {
  EXPECT_THROW(PriceGrid(1), ConfigError);
  EXPECT_EQ(PriceGrid(10).points(), 11);
}

TEST(PriceGrid, FloorAndCeil) {
  const PriceGrid g10(10);
  EXPECT_EQ(floor_to_grid(1.0 / 4, g10), 2);
  EXPECT_EQ(ceil_to_grid(1.0 / 4, g10), 3);
  EXPECT_EQ(floor_to_grid(0.0, g10), 0);
  EXPECT_EQ(ceil_to_grid(0.0, g10), 0);
  const PriceGrid g3(3);
  EXPECT_EQ(floor_to_grid(1.0 / 3, g3), 1);
  EXPECT_EQ(ceil_to_grid(1.0 / 3, g3), 1);
  EXPECT_EQ(floor_to_grid(0.3, g10), 3);
  EXPECT_THROW(floor_to_grid(1.5, g10), UsageError);
  EXPECT_THROW(ceil_to_grid(-0.1, g10), UsageError);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int t = 0; t < 1000; ++t) {
    const double x = u(rng);
    EXPECT_LE(g10.price(floor_to_grid(x, g10)), x + 1e-12);
    EXPECT_GE(g10.price(ceil_to_grid(x, g10)), x - 1e-12);
    EXPECT_LE(x - g10.price(floor_to_grid(x, g10)), g10.step() + 1e-12);
  }
}

TEST(PriceDist, ValidatesMasses) {
  const PriceGrid g(2);
  EXPECT_THROW(PriceDist(g, {0.5, 0.5}), ConfigError);
  EXPECT_THROW(PriceDist(g, {0.5, 0.6, 0.0}), ConfigError);
  EXPECT_THROW(PriceDist(g, {-0.1, 0.6, 0.5}), ConfigError);
  const PriceDist d(g, {0.25, 0.0, 0.75});
  EXPECT_EQ(d.lowest(), 0);
  EXPECT_EQ(d.highest(), 2);
  EXPECT_DOUBLE_EQ(d.mean(), 0.75);
  EXPECT_DOUBLE_EQ(d.prob_below(2), 0.25);
  EXPECT_DOUBLE_EQ(d.prob_at_least(1), 0.75);
  EXPECT_EQ(d.sample(0.2), 0);
  EXPECT_EQ(d.sample(0.3), 2);
}

TEST(BertrandPayoffs, TieSplitting) {
  const PriceGrid g(10);
  const std::vector<PriceIndex> three{6, 6, 6};
  for (double u : bertrand_payoffs(three, g)) EXPECT_NEAR(u, 0.2, 1e-15);

  const PriceGrid g1000(1000);
  const std::vector<PriceIndex> undercut{1000, 999};
  const auto u2 = bertrand_payoffs(undercut, g1000);
  EXPECT_DOUBLE_EQ(u2[0], 0.0);
  EXPECT_DOUBLE_EQ(u2[1], 0.999);

  const std::vector<PriceIndex> four{5, 5, 9, 10};
  const auto u4 = bertrand_payoffs(four, g);
  EXPECT_DOUBLE_EQ(u4[0], 0.25);
  EXPECT_DOUBLE_EQ(u4[1], 0.25);
  EXPECT_DOUBLE_EQ(u4[2], 0.0);
  EXPECT_DOUBLE_EQ(u4[3], 0.0);
}

TEST(BertrandPayoffs, SumEqualsMinimumPrice) {
  const PriceGrid g(7);
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> price(0, 7);
  for (int t = 0; t < 2000; ++t) {
    std::vector<PriceIndex> p(1 + t % 6);
    for (auto& x : p) x = price(rng);
    const auto u = bertrand_payoffs(p, g);
    double s = 0.0;
    for (double x : u) s += x;
    EXPECT_NEAR(s, g.price(*std::min_element(p.begin(), p.end())), 1e-15);
  }
}

TEST(ExpectedUtility, SimpleCases) {
  const PriceGrid g(100);
  const PriceDist at_one = PriceDist::point(g, 100);
  const PriceDist* opp[] = {&at_one};
  EXPECT_DOUBLE_EQ(expected_utility_fixed_price(99, opp, g), 0.99);

  const PriceGrid g2(2);
  const PriceDist zero_or_one(g2, {0.5, 0.0, 0.5});
  const PriceDist* two[] = {&zero_or_one, &zero_or_one};
  EXPECT_DOUBLE_EQ(expected_utility_fixed_price(0, two, g2), 0.0);
  // p = 1: wins only when both opponents are at 1, three-way tie.
  EXPECT_DOUBLE_EQ(expected_utility_fixed_price(2, two, g2), 0.25 / 3);
}

TEST(ExpectedUtility, MatchesBruteForce) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 40; ++trial) {
    const PriceGrid g(2 + trial % 5);
    const int n_opp = 1 + trial % 3;
    std::vector<PriceDist> players;
    for (int i = 0; i <= n_opp; ++i) players.push_back(random_dist(g, rng));
    const std::vector<PriceDist> opponents(players.begin() + 1, players.end());
    const auto opp_refs = refs(opponents);
    const auto fast = fixed_price_payoffs(opp_refs, g);
    for (int p = 0; p <= g.top(); ++p) {
      std::vector<PriceDist> with_p = players;
      with_p[0] = PriceDist::point(g, p);
      double oracle = 0.0;
      enumerate(with_p, [&](const std::vector<int>& prices, double prob) { oracle += prob * oracle_payoff(prices, 0, g.resolution()); });
      EXPECT_NEAR(expected_utility_fixed_price(p, opp_refs, g), oracle, 1e-13);
      EXPECT_NEAR(fast[p], oracle, 1e-13);
      EXPECT_LE(fast[p], g.price(p) + 1e-15);
    }
    double min_oracle = 0.0;
    std::vector<double> util_oracle(players.size(), 0.0);
    enumerate(players, [&](const std::vector<int>& prices, double prob) {
      min_oracle += prob * g.price(*std::min_element(prices.begin(), prices.end()));
      for (std::size_t i = 0; i < players.size(); ++i) util_oracle[i] += prob * oracle_payoff(prices, i, g.resolution());
    });
    const auto all = refs(players);
    EXPECT_NEAR(expected_min(all, g), min_oracle, 1e-13);
    const auto util = expected_payoffs(all, g);
    double welfare = 0.0;
    for (std::size_t i = 0; i < util.size(); ++i) {
      EXPECT_NEAR(util[i], util_oracle[i], 1e-13);
      welfare += util[i];
    }
    EXPECT_NEAR(welfare, min_oracle, 1e-13);
  }
}

TEST(ExpectedUtility, AgreesWithMonteCarlo) {
  const PriceGrid g(20);
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<PriceDist> opp;
    for (int i = 0; i < 4; ++i) opp.push_back(random_dist(g, rng, 0.2));
    const auto r = refs(opp);
    const int p = std::uniform_int_distribution<int>(0, 20)(rng);
    const double exact = expected_utility_fixed_price(p, r, g);
    const int draws = 40000;
    double s = 0.0, s2 = 0.0;
    std::vector<PriceIndex> prices(5);
    prices[0] = p;
    for (int d = 0; d < draws; ++d) {
      for (int i = 0; i < 4; ++i) prices[i + 1] = opp[i].sample(u01(rng));
      const double x = bertrand_payoffs(prices, g)[0];
      s += x;
      s2 += x * x;
    }
    const double mean = s / draws;
    const double se = std::sqrt(std::max(s2 / draws - mean * mean, 0.0) / draws);
    EXPECT_LE(std::abs(mean - exact), 4.0 * se + 1e-12) << "trial " << trial;
  }
}

TEST(ExpectedMin, KnownValues) {
  const PriceGrid g(2);
  const PriceDist u3 = PriceDist::uniform(g);
  const PriceDist* two[] = {&u3, &u3};
  // The 9 equally likely outcomes have minima 0 (5 of them), 1/2 (3) and 1 (1).
  double enumerated = 0.0;
  enumerate({u3, u3}, [&](const std::vector<int>& p, double prob) { enumerated += prob * g.price(std::min(p[0], p[1])); });
  EXPECT_NEAR(enumerated, 5.0 / 18.0, 1e-15);
  EXPECT_NEAR(expected_min(two, g), enumerated, 1e-15);
  const PriceDist top = PriceDist::point(g, 2);
  const PriceDist* tops[] = {&top, &top, &top};
  EXPECT_DOUBLE_EQ(expected_min(tops, g), 1.0);
  EXPECT_THROW(expected_min(std::span<const PriceDist* const>{}, g), UsageError);
}

TEST(ExpectedMin, NonincreasingAsPlayersJoin) {
  const PriceGrid g(30);
  std::mt19937_64 rng(23);
  std::vector<PriceDist> dists;
  double prev = 1.0;
  for (int i = 0; i < 12; ++i) {
    dists.push_back(random_dist(g, rng));
    const double m = expected_min(refs(dists), g);
    EXPECT_LE(m, prev + 1e-15);
    prev = m;
  }
}

TEST(ExpectedMin, RejectsMixedGrids) {
  const PriceDist a = PriceDist::uniform(PriceGrid(3));
  const PriceDist b = PriceDist::uniform(PriceGrid(4));
  const PriceDist* both[] = {&a, &b};
  EXPECT_THROW(expected_min(both, PriceGrid(3)), ConfigError);
  EXPECT_THROW(expected_utility_fixed_price(0, both, PriceGrid(3)), ConfigError);
}

TEST(Dot, MatchesNaiveSum) {
  std::vector<double> a{1, 2, 3, 4, 5, 6, 7}, b{7, 6, 5, 4, 3, 2, 1};
  EXPECT_DOUBLE_EQ(detail::dot(a, b), 84.0);
}

}  // namespace
}  // namespace bertrand
