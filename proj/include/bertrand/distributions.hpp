#pragma once

// Discretized equal-revenue distributions, their perturbed variant used as a
// punishment threat, and a floor-to-grid pushforward for continuous laws.

#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "bertrand/errors.hpp"
#include "bertrand/grid.hpp"

namespace bertrand {

/// H_n = 1 + 1/2 + ... + 1/n, with H_0 = 0.
inline double harmonic(int n) {
  if (n < 0) throw UsageError("harmonic number of a negative index");
  double s = 0.0;
  for (int j = n; j >= 1; --j) s += 1.0 / j;  // small terms first
  return s;
}

/// Equal-revenue parameter c = m/K with 1 <= m <= K-1.
class DerdParams {
 public:
  DerdParams(PriceGrid grid, int m) : grid_(grid), m_(m) {
    if (m_ < 1 || m_ > grid_.resolution() - 1) {
      throw ConfigError("equal-revenue parameter needs 1 <= m <= K-1, got m=" + std::to_string(m_) +
                        " with K=" + std::to_string(grid_.resolution()));
    }
  }

  const PriceGrid& grid() const noexcept { return grid_; }
  int m() const noexcept { return m_; }
  double c() const noexcept { return grid_.price(m_); }

 private:
  PriceGrid grid_;
  int m_;
};

/// Mass c at 1 and c(1/p_i - 1/p_{i+1}) at p_i for m <= i <= K-1.
inline PriceDist derd_pmf(const DerdParams& params) {
  const PriceGrid& grid = params.grid();
  const int k = grid.resolution();
  const double c = params.c();
  std::vector<double> mass(grid.points(), 0.0);
  for (int i = params.m(); i <= k - 1; ++i) {
    mass[i] = c * (static_cast<double>(k) / i - static_cast<double>(k) / (i + 1));
  }
  mass[k] = c;
  return PriceDist(grid, std::move(mass));
}

/// (1 - perturb) * base + perturb * point mass at 1, for perturb in [0, 1).
inline PriceDist perturbed_erd_pmf(const DerdParams& params, double perturb) {
  if (!(perturb >= 0.0 && perturb < 1.0)) throw ConfigError("perturbation must lie in [0,1)");
  const PriceDist base = derd_pmf(params);
  std::vector<double> mass(base.mass().begin(), base.mass().end());
  for (double& m : mass) m *= (1.0 - perturb);
  mass[params.grid().top()] += perturb;
  return PriceDist(params.grid(), std::move(mass));
}

/// Perturbed equal-revenue threat with its nominal best-response gap
/// (perturb - (1 - perturb)/K) / 2, which must be positive.
class PerturbedErd {
 public:
  PerturbedErd(DerdParams base, double perturb) : base_(base), perturb_(perturb) {
    if (!(perturb_ > 0.0 && perturb_ < 1.0)) throw ConfigError("perturbation must lie in (0,1)");
    if (!(gap() > 0.0)) {
      throw ConfigError("perturbation " + std::to_string(perturb_) + " too small for K=" +
                        std::to_string(base_.grid().resolution()) + ": nominal gap is not positive");
    }
  }

  static double nominal_gap(double perturb, int resolution) {
    return (perturb - (1.0 - perturb) / resolution) / 2.0;
  }

  const DerdParams& base() const noexcept { return base_; }
  double perturb() const noexcept { return perturb_; }
  double gap() const noexcept { return nominal_gap(perturb_, base_.grid().resolution()); }
  PriceIndex best_price() const noexcept { return base_.grid().top() - 1; }

 private:
  DerdParams base_;
  double perturb_;
};

inline PriceDist perturbed_erd_pmf(const PerturbedErd& p) { return perturbed_erd_pmf(p.base(), p.perturb()); }

/// Unique maximizer of the one-shot payoff against `opponent` and the margin
/// by which it beats every other grid price.
struct BestResponse {
  PriceIndex price = 0;
  double value = 0.0;
  double gap = 0.0;
};

inline BestResponse one_shot_best_response(const PriceDist& opponent) {
  const PriceDist* opp[] = {&opponent};
  const std::vector<double> u = fixed_price_payoffs(opp, opponent.grid());
  BestResponse br;
  br.price = 0;
  for (PriceIndex p = 1; p < static_cast<PriceIndex>(u.size()); ++p) {
    if (u[p] > u[br.price]) br.price = p;
  }
  br.value = u[br.price];
  double runner_up = -std::numeric_limits<double>::infinity();
  for (PriceIndex p = 0; p < static_cast<PriceIndex>(u.size()); ++p) {
    if (p != br.price) runner_up = std::max(runner_up, u[p]);
  }
  br.gap = br.value - runner_up;
  return br;
}

/// Law on (0,1] described by x -> Pr[X < x].
using ProbBelow = std::function<double(double)>;

/// Pushforward of a law on (0,1] under x -> floor(Kx)/K, sending 1 to 1 - 1/K.
/// The result never has mass at price 1.
inline PriceDist discretize_distribution(const ProbBelow& prob_below, const PriceGrid& grid) {
  const int k = grid.resolution();
  std::vector<double> mass(grid.points(), 0.0);
  for (int j = 0; j <= k - 2; ++j) {
    mass[j] = std::max(0.0, prob_below(grid.price(j + 1)) - prob_below(grid.price(j)));
  }
  mass[k - 1] = std::max(0.0, 1.0 - prob_below(grid.price(k - 1)));
  return PriceDist::from_weights(grid, std::move(mass));
}

}  // namespace bertrand
