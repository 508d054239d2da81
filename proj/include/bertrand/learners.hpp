#pragma once

// Full-information no-regret learners over the price grid: Hedge with a
// horizon-tuned learning rate, and the guarded wrapper that follows a base
// distribution until its measured regret exceeds a threshold.

#include <algorithm>
#include <cmath>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "bertrand/errors.hpp"
#include "bertrand/grid.hpp"
#include "bertrand/strategy.hpp"

namespace bertrand {

/// sqrt(T ln(K+1) / 2), the standard Hedge guarantee with eta = sqrt(8 ln(K+1) / T).
inline double hedge_regret_bound(int resolution, int horizon) {
  return std::sqrt(static_cast<double>(horizon) * std::log(resolution + 1.0) / 2.0);
}

inline double hedge_learning_rate(int resolution, int horizon) {
  return std::sqrt(8.0 * std::log(resolution + 1.0) / horizon);
}

/// Exponential weights over the K+1 grid prices.
///
/// Weights are updated multiplicatively and periodically rebuilt from the
/// cumulative payoffs, so drift never accumulates over long horizons.
class HedgeState {
 public:
  HedgeState(PriceGrid grid, int horizon)
      : grid_(grid),
        horizon_(horizon),
        eta_(horizon >= 1 ? hedge_learning_rate(grid.resolution(), horizon) : 0.0),
        weights_(grid.points(), 1.0),
        cumulative_(grid.points(), 0.0),
        dist_(PriceDist::uniform(grid)) {
    if (horizon_ < 1) throw ConfigError("Hedge horizon must be >= 1");
    weight_total_ = grid.points();
  }

  const PriceGrid& grid() const noexcept { return grid_; }
  int horizon() const noexcept { return horizon_; }
  double learning_rate() const noexcept { return eta_; }
  int rounds_seen() const noexcept { return rounds_; }
  std::span<const double> weights() const noexcept { return weights_; }
  std::span<const double> cumulative_payoffs() const noexcept { return cumulative_; }
  double cumulative_obtained() const noexcept { return obtained_; }

  /// Current normalized weights.
  const PriceDist& next() const noexcept { return dist_; }

  /// Feeds one round's payoff vector. `identity` marks vectors whose contents
  /// never change, so their exponentiated factors can be reused.
  void update(std::span<const double> payoffs, const void* identity = nullptr) {
    const int n = grid_.points();
    if (static_cast<int>(payoffs.size()) != n) throw ContractViolation("Hedge payoff vector has the wrong length");
    obtained_ += detail::dot(dist_.mass(), payoffs);

    const std::vector<double>* factors = nullptr;
    if (identity) {
      auto it = factor_cache_.find(identity);
      if (it == factor_cache_.end() && factor_cache_.size() < kMaxCachedFactors) {
        check_range(payoffs);
        std::vector<double> f(n);
        for (int j = 0; j < n; ++j) f[j] = std::exp(eta_ * payoffs[j]);
        it = factor_cache_.emplace(identity, std::move(f)).first;
      }
      if (it != factor_cache_.end()) factors = &it->second;
    }
    if (!factors) check_range(payoffs);

    double total = 0.0;
    if (factors) {
      const double* f = factors->data();
      for (int j = 0; j < n; ++j) {
        cumulative_[j] += payoffs[j];
        weights_[j] *= f[j];
        total += weights_[j];
      }
    } else {
      for (int j = 0; j < n; ++j) {
        cumulative_[j] += payoffs[j];
        weights_[j] *= std::exp(eta_ * payoffs[j]);
        total += weights_[j];
      }
    }
    ++rounds_;
    weight_total_ = total;
    if (rounds_ % kResyncEvery == 0 || !(total > 1e-250 && total < 1e250)) resync();
    rebuild_distribution();
  }

  RegretRecord regret() const {
    RegretRecord r;
    r.best_fixed_price = 0;
    for (int j = 1; j < grid_.points(); ++j) {
      if (cumulative_[j] > cumulative_[r.best_fixed_price]) r.best_fixed_price = j;
    }
    r.measured = cumulative_[r.best_fixed_price] - obtained_;
    r.theoretical_bound = hedge_regret_bound(grid_.resolution(), horizon_);
    return r;
  }

 private:
  static constexpr int kResyncEvery = 64;
  static constexpr std::size_t kMaxCachedFactors = 256;

  static void check_range(std::span<const double> payoffs) {
    for (double u : payoffs) {
      if (!(u >= -1e-12 && u <= 1.0 + 1e-12)) {
        throw ContractViolation("Hedge payoff outside [0,1]: " + std::to_string(u));
      }
    }
  }

  void resync() {
    const double top = *std::max_element(cumulative_.begin(), cumulative_.end());
    double total = 0.0;
    for (int j = 0; j < grid_.points(); ++j) {
      weights_[j] = std::exp(eta_ * (cumulative_[j] - top));
      total += weights_[j];
    }
    weight_total_ = total;
  }

  void rebuild_distribution() {
    std::vector<double> m(weights_.size());
    const double inv = 1.0 / weight_total_;
    for (std::size_t j = 0; j < m.size(); ++j) m[j] = weights_[j] * inv;
    dist_ = PriceDist::from_weights(grid_, std::move(m));
  }

  PriceGrid grid_;
  int horizon_;
  double eta_;
  std::vector<double> weights_;
  std::vector<double> cumulative_;
  double weight_total_ = 0.0;
  double obtained_ = 0.0;
  int rounds_ = 0;
  PriceDist dist_;
  std::unordered_map<const void*, std::vector<double>> factor_cache_;
};

/// Argmax of the summed payoff vectors (lowest index on ties) and its total.
inline std::pair<PriceIndex, double> best_fixed_price(std::span<const std::vector<double>> history) {
  if (history.empty()) throw UsageError("best_fixed_price needs at least one round");
  std::vector<double> total(history.front().size(), 0.0);
  for (const auto& v : history) {
    if (v.size() != total.size()) throw UsageError("payoff vectors differ in length");
    for (std::size_t j = 0; j < v.size(); ++j) total[j] += v[j];
  }
  const auto best = std::max_element(total.begin(), total.end());
  return {static_cast<PriceIndex>(best - total.begin()), *best};
}

/// Total probability mass placed off `p_star` across the recorded rounds.
inline double count_bad_rounds(std::span<const PriceDist> outputs, PriceIndex p_star) {
  double b = 0.0;
  for (const auto& d : outputs) b += 1.0 - d[p_star];
  return b;
}

class HedgeLearner final : public Strategy {
 public:
  /// `watch` enables tracking of the off-watch mass sum_t (1 - P_t(watch)).
  HedgeLearner(PriceGrid grid, int horizon, std::optional<PriceIndex> watch = std::nullopt)
      : state_(grid, horizon), watch_(watch) {}

  std::unique_ptr<Strategy> fresh() const override {
    return std::make_unique<HedgeLearner>(state_.grid(), state_.horizon(), watch_);
  }

  Play play(int /*round*/) override {
    if (watch_) off_watch_ += 1.0 - state_.next()[*watch_];
    return Play{&state_.next(), nullptr};
  }

  void observe(const Observation& obs) override {
    if (obs.payoffs.empty()) throw ContractViolation("Hedge learner observed no payoff vector");
    state_.update(obs.payoffs, obs.payoffs_identity);
  }

  bool needs_payoffs() const override { return true; }

  std::optional<LearnerReport> report() const override {
    LearnerReport r{"hedge", state_.regret(), std::nullopt, std::nullopt};
    if (watch_) r.off_watch_mass = off_watch_;
    return r;
  }

  std::string describe() const override { return "hedge(T=" + std::to_string(state_.horizon()) + ")"; }

  const HedgeState& state() const noexcept { return state_; }

 private:
  HedgeState state_;
  std::optional<PriceIndex> watch_;
  double off_watch_ = 0.0;
};

inline StrategyPtr make_hedge(const PriceGrid& grid, int horizon, std::optional<PriceIndex> watch = std::nullopt) {
  return std::make_shared<HedgeLearner>(grid, horizon, watch);
}

enum class GuardRule {
  kAverage,   // cumulative regret <= rate * rounds_seen
  kAbsolute,  // cumulative regret <= rate
};

struct GuardConfig {
  double threshold_rate = 0.0;
  GuardRule rule = GuardRule::kAverage;

  static GuardConfig standard(const PriceGrid& grid) { return {2.0 / grid.resolution(), GuardRule::kAverage}; }

  double allowed(int rounds) const {
    return rule == GuardRule::kAverage ? threshold_rate * rounds : threshold_rate;
  }
};

inline std::string to_string(GuardRule r) { return r == GuardRule::kAverage ? "average" : "absolute"; }

/// Follows a base (an independent distribution or one coordinate of a shared
/// joint law) while measured regret stays within the guard, then switches to
/// Hedge for the remaining rounds and never switches back.
class GuardedLearner final : public Strategy {
 public:
  GuardedLearner(PriceGrid grid, int horizon, std::shared_ptr<const PriceDist> base, GuardConfig guard)
      : grid_(grid), horizon_(horizon), base_(std::move(base)), guard_(guard), cumulative_(grid.points(), 0.0) {
    if (!base_ || !(base_->grid() == grid_)) throw ConfigError("guarded learner base lives on a different grid");
  }

  GuardedLearner(PriceGrid grid, int horizon, std::shared_ptr<const JointLaw> law, int coordinate, GuardConfig guard)
      : grid_(grid),
        horizon_(horizon),
        law_(std::move(law)),
        coordinate_(coordinate),
        guard_(guard),
        cumulative_(grid.points(), 0.0) {
    if (!law_ || !(law_->grid() == grid_)) throw ConfigError("guarded learner law lives on a different grid");
    if (coordinate_ < 0 || coordinate_ >= law_->coordinates()) throw ConfigError("guarded learner coordinate out of range");
  }

  std::unique_ptr<Strategy> fresh() const override {
    if (law_) return std::make_unique<GuardedLearner>(grid_, horizon_, law_, coordinate_, guard_);
    return std::make_unique<GuardedLearner>(grid_, horizon_, base_, guard_);
  }

  Play play(int /*round*/) override {
    if (hedge_) return Play{&hedge_->next(), nullptr};
    if (law_) {
      const PriceDist* m = &law_->marginal(coordinate_);
      return Play{m, m, law_.get(), coordinate_};
    }
    return Play{base_.get(), base_.get()};
  }

  void observe(const Observation& obs) override {
    if (static_cast<int>(obs.payoffs.size()) != grid_.points()) {
      throw ContractViolation("guarded learner observed no payoff vector");
    }
    double best = cumulative_[0] + obs.payoffs[0];
    for (int j = 0; j < grid_.points(); ++j) {
      cumulative_[j] += obs.payoffs[j];
      best = std::max(best, cumulative_[j]);
    }
    obtained_ += obs.obtained;
    ++rounds_;
    if (hedge_) {
      hedge_->update(obs.payoffs, obs.payoffs_identity);
    } else if (best - obtained_ > guard_.allowed(rounds_) + 1e-12) {
      breach_round_ = rounds_;
      hedge_.emplace(grid_, std::max(1, horizon_ - rounds_));
    }
  }

  bool needs_payoffs() const override { return true; }
  bool breached() const noexcept { return hedge_.has_value(); }

  std::optional<LearnerReport> report() const override {
    LearnerReport r;
    r.kind = "guarded";
    const auto best = std::max_element(cumulative_.begin(), cumulative_.end());
    r.regret.best_fixed_price = static_cast<PriceIndex>(best - cumulative_.begin());
    r.regret.measured = *best - obtained_;
    if (breach_round_) {
      // Regret is subadditive over the two phases: at most the guard before
      // the breaching round, one for that round, and Hedge's bound after it.
      r.regret.theoretical_bound = guard_.allowed(*breach_round_ - 1) + 1.0 +
                                   hedge_regret_bound(grid_.resolution(), std::max(1, horizon_ - *breach_round_));
    } else {
      r.regret.theoretical_bound = guard_.allowed(horizon_);
    }
    r.breach_round = breach_round_;
    return r;
  }

  std::string describe() const override {
    return std::string("guarded(") + (law_ ? "correlated" : "iid") + ", rate=" + std::to_string(guard_.threshold_rate) +
           ", rule=" + to_string(guard_.rule) + ")";
  }

 private:
  PriceGrid grid_;
  int horizon_;
  std::shared_ptr<const PriceDist> base_;
  std::shared_ptr<const JointLaw> law_;
  int coordinate_ = -1;
  GuardConfig guard_;
  std::vector<double> cumulative_;
  double obtained_ = 0.0;
  int rounds_ = 0;
  std::optional<int> breach_round_;
  std::optional<HedgeState> hedge_;
};

}  // namespace bertrand
