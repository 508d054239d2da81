#pragma once

// Price grid {0, 1/K, ..., 1}, distributions over it, and the Bertrand payoff
// rule with even tie splitting. Prices are carried as integer grid indices so
// that comparisons such as "priced below 1" are exact.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "bertrand/errors.hpp"

namespace bertrand {

using PriceIndex = int;

class PriceGrid {
 public:
  explicit PriceGrid(int resolution) : k_(resolution) {
    if (k_ < 2) {
      throw ConfigError("price grid resolution K must be >= 2, got " + std::to_string(k_));
    }
  }

  int resolution() const noexcept { return k_; }
  int points() const noexcept { return k_ + 1; }
  PriceIndex top() const noexcept { return k_; }
  double step() const noexcept { return 1.0 / k_; }
  double price(PriceIndex j) const noexcept { return static_cast<double>(j) / k_; }
  bool contains(PriceIndex j) const noexcept { return j >= 0 && j <= k_; }

  friend bool operator==(const PriceGrid&, const PriceGrid&) = default;

 private:
  int k_;
};

namespace detail {
// Grid-scaled slack used when rounding reals to grid points, so that values
// such as 0.3 * 10 land on the intended point.
inline constexpr double kRoundingSlack = 1e-9;
}  // namespace detail

/// Largest grid index whose price is <= x.
inline PriceIndex floor_to_grid(double x, const PriceGrid& grid) {
  if (!(x >= 0.0 && x <= 1.0)) {
    throw UsageError("floor_to_grid: value must lie in [0,1], got " + std::to_string(x));
  }
  const auto j = static_cast<PriceIndex>(std::floor(x * grid.resolution() + detail::kRoundingSlack));
  return std::clamp(j, 0, grid.top());
}

/// Smallest grid index whose price is >= x.
inline PriceIndex ceil_to_grid(double x, const PriceGrid& grid) {
  if (!(x >= 0.0 && x <= 1.0)) {
    throw UsageError("ceil_to_grid: value must lie in [0,1], got " + std::to_string(x));
  }
  const auto j = static_cast<PriceIndex>(std::ceil(x * grid.resolution() - detail::kRoundingSlack));
  return std::clamp(j, 0, grid.top());
}

/// Probability distribution over the K+1 grid prices.
///
/// Immutable after construction. The support bounds [lowest(), highest()] are
/// cached because most payoff computations only touch the prices between them.
class PriceDist {
 public:
  /// Masses must be nonnegative and sum to 1 within 1e-9; drift above 1e-12 is
  /// renormalized away.
  PriceDist(PriceGrid grid, std::vector<double> mass) : grid_(grid), mass_(std::move(mass)) {
    if (static_cast<int>(mass_.size()) != grid_.points()) {
      throw ConfigError("price distribution needs " + std::to_string(grid_.points()) +
                        " masses, got " + std::to_string(mass_.size()));
    }
    double total = 0.0;
    for (double& m : mass_) {
      if (!std::isfinite(m) || m < -1e-15) {
        throw ConfigError("price distribution has a negative or non-finite mass");
      }
      m = std::max(m, 0.0);
      total += m;
    }
    if (std::abs(total - 1.0) > 1e-9) {
      throw ConfigError("price distribution masses sum to " + std::to_string(total));
    }
    if (std::abs(total - 1.0) > 1e-12) {
      for (double& m : mass_) m /= total;
    }
    find_support();
  }

  static PriceDist point(PriceGrid grid, PriceIndex j) {
    if (!grid.contains(j)) throw ConfigError("point mass outside the grid: " + std::to_string(j));
    std::vector<double> m(grid.points(), 0.0);
    m[j] = 1.0;
    return PriceDist(grid, std::move(m));
  }

  static PriceDist uniform(PriceGrid grid) {
    return PriceDist(grid, std::vector<double>(grid.points(), 1.0 / grid.points()));
  }

  /// Normalizes nonnegative weights with a positive total.
  static PriceDist from_weights(PriceGrid grid, std::vector<double> weights) {
    if (static_cast<int>(weights.size()) != grid.points()) {
      throw ConfigError("weight vector has the wrong length");
    }
    double total = 0.0;
    for (double w : weights) {
      if (!(w >= 0.0) || !std::isfinite(w)) throw ConfigError("weights must be finite and nonnegative");
      total += w;
    }
    if (!(total > 0.0)) throw ConfigError("weights must have a positive total");
    for (double& w : weights) w /= total;
    PriceDist d(grid);
    d.mass_ = std::move(weights);
    d.find_support();
    return d;
  }

  const PriceGrid& grid() const noexcept { return grid_; }
  std::span<const double> mass() const noexcept { return mass_; }
  double operator[](PriceIndex j) const noexcept { return mass_[j]; }
  PriceIndex lowest() const noexcept { return lo_; }
  PriceIndex highest() const noexcept { return hi_; }
  bool is_point() const noexcept { return lo_ == hi_; }

  double mean() const noexcept {
    double s = 0.0;
    for (PriceIndex j = lo_; j <= hi_; ++j) s += mass_[j] * grid_.price(j);
    return s;
  }

  double prob_at_least(PriceIndex j) const noexcept {
    double s = 0.0;
    for (PriceIndex q = std::max(j, lo_); q <= hi_; ++q) s += mass_[q];
    return s;
  }

  double prob_below(PriceIndex j) const noexcept {
    double s = 0.0;
    for (PriceIndex q = lo_; q < std::min(j, hi_ + 1); ++q) s += mass_[q];
    return s;
  }

  /// Inverse-CDF draw for u in [0,1).
  PriceIndex sample(double u) const noexcept {
    double acc = 0.0;
    for (PriceIndex j = lo_; j < hi_; ++j) {
      acc += mass_[j];
      if (u < acc) return j;
    }
    return hi_;
  }

  friend bool operator==(const PriceDist& a, const PriceDist& b) {
    return a.grid_ == b.grid_ && a.mass_ == b.mass_;
  }

 private:
  explicit PriceDist(PriceGrid grid) : grid_(grid) {}

  void find_support() {
    lo_ = 0;
    hi_ = grid_.top();
    while (lo_ < hi_ && mass_[lo_] == 0.0) ++lo_;
    while (hi_ > lo_ && mass_[hi_] == 0.0) --hi_;
  }

  PriceGrid grid_;
  std::vector<double> mass_;
  PriceIndex lo_ = 0;
  PriceIndex hi_ = 0;
};

using DistRefs = std::vector<const PriceDist*>;

inline DistRefs refs(const std::vector<PriceDist>& dists) {
  DistRefs out;
  out.reserve(dists.size());
  for (const auto& d : dists) out.push_back(&d);
  return out;
}

namespace detail {

inline double dot(std::span<const double> a, std::span<const double> b) noexcept {
  const std::size_t n = std::min(a.size(), b.size());
  double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
  std::size_t j = 0;
  for (; j + 4 <= n; j += 4) {
    s0 += a[j] * b[j];
    s1 += a[j + 1] * b[j + 1];
    s2 += a[j + 2] * b[j + 2];
    s3 += a[j + 3] * b[j + 3];
  }
  for (; j < n; ++j) s0 += a[j] * b[j];
  return (s0 + s1) + (s2 + s3);
}

inline void require_grid(std::span<const PriceDist* const> dists, const PriceGrid& grid) {
  for (const PriceDist* d : dists) {
    if (!(d->grid() == grid)) throw ConfigError("price distributions live on different grids");
  }
}

// E[1/(1+k)] where k counts the opponents tied at the price, restricted to
// the event that no opponent is strictly below it. above[j] = Pr[X_j > p],
// equal[j] = Pr[X_j = p]. O(n^2) over the tie count.
inline double tie_share(std::span<const double> above, std::span<const double> equal,
                        std::vector<double>& scratch) {
  const std::size_t n = above.size();
  scratch.assign(n + 1, 0.0);
  scratch[0] = 1.0;
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t k = j + 1; k > 0; --k) {
      scratch[k] = scratch[k] * above[j] + scratch[k - 1] * equal[j];
    }
    scratch[0] *= above[j];
  }
  double s = 0.0;
  for (std::size_t k = 0; k <= n; ++k) s += scratch[k] / static_cast<double>(k + 1);
  return s;
}

// Fixed-price payoffs against independent opponents for prices in [from, to],
// written to out[from..to]. Opponents with no mass at or below p contribute a
// factor of one and are skipped.
inline void fixed_price_payoffs_into(std::span<const PriceDist* const> opponents, const PriceGrid& grid,
                                     PriceIndex from, PriceIndex to, std::span<double> out) {
  if (opponents.empty()) {
    for (PriceIndex p = from; p <= to; ++p) out[p] = grid.price(p);
    return;
  }
  PriceIndex hi_min = grid.top();
  for (const PriceDist* d : opponents) hi_min = std::min(hi_min, d->highest());
  for (PriceIndex p = std::max(from, hi_min + 1); p <= to; ++p) out[p] = 0.0;
  const PriceIndex start = std::min(to, hi_min);
  if (start < from) return;

  const std::size_t n = opponents.size();
  std::vector<double> above(n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    const PriceDist& d = *opponents[j];
    for (PriceIndex q = start + 1; q <= d.highest(); ++q) above[j] += d[q];
  }
  std::vector<double> a, b, scratch;
  a.reserve(n);
  b.reserve(n);
  for (PriceIndex p = start; p >= from; --p) {
    a.clear();
    b.clear();
    for (std::size_t j = 0; j < n; ++j) {
      const PriceDist& d = *opponents[j];
      if (d.lowest() > p) continue;
      a.push_back(above[j]);
      b.push_back(d[p]);
    }
    out[p] = grid.price(p) * tie_share(a, b, scratch);
    for (std::size_t j = 0; j < n; ++j) above[j] += (*opponents[j])[p];
  }
}

}  // namespace detail

/// Realized Bertrand payoffs: the lowest price wins and ties split it evenly.
inline std::vector<double> bertrand_payoffs(std::span<const PriceIndex> prices, const PriceGrid& grid) {
  std::vector<double> out(prices.size(), 0.0);
  if (prices.empty()) return out;
  for (PriceIndex p : prices) {
    if (!grid.contains(p)) throw UsageError("realized price index outside the grid");
  }
  const PriceIndex low = *std::min_element(prices.begin(), prices.end());
  const auto ties = std::count(prices.begin(), prices.end(), low);
  const double share = grid.price(low) / static_cast<double>(ties);
  for (std::size_t i = 0; i < prices.size(); ++i) {
    if (prices[i] == low) out[i] = share;
  }
  return out;
}

/// E[u_i(p, P_{-i})] for a fixed own price against independent opponents,
/// by a dynamic program over the number of opponents tied at p.
inline double expected_utility_fixed_price(PriceIndex p, std::span<const PriceDist* const> opponents,
                                           const PriceGrid& grid) {
  if (!grid.contains(p)) throw UsageError("price index outside the grid");
  detail::require_grid(opponents, grid);
  // tied[k] = Pr[every opponent so far is >= p and exactly k of them equal p]
  std::vector<double> tied{1.0};
  for (const PriceDist* d : opponents) {
    const double above = d->prob_at_least(p + 1);
    const double equal = (*d)[p];
    tied.push_back(0.0);
    for (std::size_t k = tied.size() - 1; k > 0; --k) tied[k] = tied[k] * above + tied[k - 1] * equal;
    tied[0] *= above;
  }
  double share = 0.0;
  for (std::size_t k = 0; k < tied.size(); ++k) share += tied[k] / static_cast<double>(k + 1);
  return grid.price(p) * share;
}

/// Fixed-price payoff for every grid price against independent opponents.
inline std::vector<double> fixed_price_payoffs(std::span<const PriceDist* const> opponents,
                                               const PriceGrid& grid) {
  detail::require_grid(opponents, grid);
  std::vector<double> out(grid.points(), 0.0);
  detail::fixed_price_payoffs_into(opponents, grid, 0, grid.top(), out);
  return out;
}

/// Expected payoff of every player when all play independently.
inline std::vector<double> expected_payoffs(std::span<const PriceDist* const> players, const PriceGrid& grid) {
  detail::require_grid(players, grid);
  const std::size_t n = players.size();
  std::vector<double> out(n, 0.0);
  std::vector<double> profile(grid.points(), 0.0);
  DistRefs others;
  others.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    others.clear();
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) others.push_back(players[j]);
    }
    const PriceDist& own = *players[i];
    detail::fixed_price_payoffs_into(others, grid, own.lowest(), own.highest(), profile);
    double s = 0.0;
    for (PriceIndex p = own.lowest(); p <= own.highest(); ++p) s += own[p] * profile[p];
    out[i] = s;
  }
  return out;
}

/// E[min_i X_i] for independent X_i, via the tail-product identity
/// E[min] = (1/K) sum_{g=1..K} prod_i Pr[X_i >= g/K].
inline double expected_min(std::span<const PriceDist* const> dists, const PriceGrid& grid) {
  if (dists.empty()) throw UsageError("expected_min needs at least one distribution");
  detail::require_grid(dists, grid);
  PriceIndex hi_min = grid.top();
  for (const PriceDist* d : dists) hi_min = std::min(hi_min, d->highest());
  std::vector<double> tail(dists.size(), 0.0);
  for (std::size_t i = 0; i < dists.size(); ++i) tail[i] = dists[i]->prob_at_least(hi_min + 1);
  double total = 0.0;
  for (PriceIndex g = hi_min; g >= 1; --g) {
    double prod = 1.0;
    for (std::size_t i = 0; i < dists.size(); ++i) {
      tail[i] += (*dists[i])[g];
      prod *= tail[i];
    }
    total += prod;
  }
  return total / grid.resolution();
}

}  // namespace bertrand
