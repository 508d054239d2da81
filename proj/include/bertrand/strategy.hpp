#pragma once

// Strategy interface driven by the engine: each round a strategy announces a
// play (a price distribution, possibly one coordinate of a shared correlated
// law) and then observes the realized profile together with its exact
// expected-payoff vector.

#include <algorithm>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "bertrand/automaton.hpp"
#include "bertrand/errors.hpp"
#include "bertrand/grid.hpp"

namespace bertrand {

/// Joint law over price tuples for a group of players that sample one shared
/// outcome per round.
class JointLaw {
 public:
  JointLaw(PriceGrid grid, int coordinates, std::vector<std::vector<PriceIndex>> atoms, std::vector<double> probs)
      : grid_(grid), coordinates_(coordinates), atoms_(std::move(atoms)), probs_(std::move(probs)) {
    if (coordinates_ < 1) throw ConfigError("joint law needs at least one coordinate");
    if (atoms_.empty() || atoms_.size() != probs_.size()) throw ConfigError("joint law atoms and probabilities disagree");
    double total = 0.0;
    for (std::size_t a = 0; a < atoms_.size(); ++a) {
      if (static_cast<int>(atoms_[a].size()) != coordinates_) throw ConfigError("joint law atom has the wrong arity");
      for (PriceIndex p : atoms_[a]) {
        if (!grid_.contains(p)) throw ConfigError("joint law atom outside the grid");
      }
      if (!(probs_[a] >= 0.0)) throw ConfigError("joint law probability is negative");
      total += probs_[a];
    }
    if (std::abs(total - 1.0) > 1e-9) throw ConfigError("joint law probabilities sum to " + std::to_string(total));
    for (double& p : probs_) p /= total;
    cumulative_.resize(probs_.size());
    double acc = 0.0;
    for (std::size_t a = 0; a < probs_.size(); ++a) cumulative_[a] = (acc += probs_[a]);
    for (int c = 0; c < coordinates_; ++c) {
      std::vector<double> m(grid_.points(), 0.0);
      for (std::size_t a = 0; a < atoms_.size(); ++a) m[atoms_[a][c]] += probs_[a];
      marginals_.push_back(PriceDist::from_weights(grid_, std::move(m)));
    }
  }

  const PriceGrid& grid() const noexcept { return grid_; }
  int coordinates() const noexcept { return coordinates_; }
  const std::vector<std::vector<PriceIndex>>& atoms() const noexcept { return atoms_; }
  const std::vector<double>& probs() const noexcept { return probs_; }
  const PriceDist& marginal(int c) const { return marginals_.at(c); }

  std::size_t sample(double u) const noexcept {
    auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
    return std::min<std::size_t>(it - cumulative_.begin(), atoms_.size() - 1);
  }

 private:
  PriceGrid grid_;
  int coordinates_;
  std::vector<std::vector<PriceIndex>> atoms_;
  std::vector<double> probs_;
  std::vector<double> cumulative_;
  std::vector<PriceDist> marginals_;
};

/// One round's announced behavior.
///
/// `identity` lets the engine cache evaluations: two plays with the same
/// non-null identity are the same distribution (or the same slot of the same
/// law). Null means "new every round".
struct Play {
  const PriceDist* dist = nullptr;  // marginal when `law` is set
  const void* identity = nullptr;
  const JointLaw* law = nullptr;
  int coordinate = -1;

  bool correlated() const noexcept { return law != nullptr; }
};

struct Observation {
  int round = 0;
  std::span<const PriceIndex> realized;
  /// Expected payoff of each fixed own price against this round's opponents;
  /// empty unless the strategy asked for it.
  std::span<const double> payoffs;
  /// Non-null when `payoffs` is a cached vector that always holds the same
  /// values for this identity.
  const void* payoffs_identity = nullptr;
  /// Expected payoff of the announced play this round.
  double obtained = 0.0;
};

struct RegretRecord {
  double measured = 0.0;
  double theoretical_bound = 0.0;
  PriceIndex best_fixed_price = 0;
};

/// Diagnostics a learner reports after a run.
struct LearnerReport {
  std::string kind;
  RegretRecord regret;
  std::optional<int> breach_round;        // guarded learners only
  std::optional<double> off_watch_mass;   // sum over rounds of 1 - P_t(watched price)
};

class Strategy {
 public:
  virtual ~Strategy() = default;

  /// A copy in its initial state. Prototypes are shared between runs; the
  /// engine only ever mutates fresh copies.
  virtual std::unique_ptr<Strategy> fresh() const = 0;
  virtual Play play(int round) = 0;
  virtual void observe(const Observation& obs) = 0;
  virtual bool needs_payoffs() const { return false; }
  virtual const StateMachine* machine() const { return nullptr; }
  virtual int current_state() const { return 0; }
  virtual std::optional<LearnerReport> report() const { return std::nullopt; }
  virtual std::string describe() const = 0;
};

using StrategyPtr = std::shared_ptr<const Strategy>;
using Profile = std::vector<StrategyPtr>;

/// Strategy backed by a state machine (automaton or fixed sequence).
class MachineStrategy final : public Strategy {
 public:
  MachineStrategy(std::shared_ptr<const StateMachine> machine, std::string description)
      : machine_(std::move(machine)), description_(std::move(description)), state_(machine_->start_state()) {}

  std::unique_ptr<Strategy> fresh() const override {
    return std::make_unique<MachineStrategy>(machine_, description_);
  }

  Play play(int round) override {
    const PriceDist* d = &machine_->output(state_, round);
    return Play{d, d};
  }

  void observe(const Observation& obs) override { state_ = machine_->next_state(state_, obs.realized, obs.round); }

  const StateMachine* machine() const override { return machine_.get(); }
  int current_state() const override { return state_; }
  std::string describe() const override { return description_; }

  const std::shared_ptr<const StateMachine>& shared_machine() const noexcept { return machine_; }

 private:
  std::shared_ptr<const StateMachine> machine_;
  std::string description_;
  int state_;
};

inline StrategyPtr make_machine_strategy(std::shared_ptr<const StateMachine> m, std::string description) {
  return std::make_shared<MachineStrategy>(std::move(m), std::move(description));
}

/// Plays the same distribution every round regardless of history.
inline StrategyPtr make_fixed_strategy(PriceDist d, std::string description) {
  return make_machine_strategy(FixedSequenceSpec::constant(std::move(d)), std::move(description));
}

/// Fixed price p_before until round `at`, then p_after forever.
inline StrategyPtr make_switch_strategy(const PriceGrid& grid, PriceIndex before, int at, PriceIndex after) {
  std::vector<FixedSequenceSpec::Segment> segs;
  if (at > 0) segs.push_back({0, PriceDist::point(grid, before)});
  segs.push_back({std::max(at, 0), PriceDist::point(grid, after)});
  return make_machine_strategy(std::make_shared<FixedSequenceSpec>(std::move(segs)),
                               "fixed " + std::to_string(before) + " until round " + std::to_string(at) +
                                   ", then " + std::to_string(after));
}

struct DefectionSpec {
  std::vector<int> defectors;
  std::vector<StrategyPtr> replacements;

  void validate(int n) const {
    if (defectors.size() != replacements.size()) throw ConfigError("defection needs one replacement per defector");
    std::set<int> seen;
    for (std::size_t k = 0; k < defectors.size(); ++k) {
      const int d = defectors[k];
      if (d < 0 || d >= n) throw ConfigError("defector index " + std::to_string(d) + " outside [0, N)");
      if (!seen.insert(d).second) throw ConfigError("defector " + std::to_string(d) + " listed twice");
      if (!replacements[k]) throw ConfigError("defector " + std::to_string(d) + " has no replacement strategy");
    }
  }
};

/// Profile with the listed players replaced. Null slots in `base` (players the
/// construction leaves open) must all be filled by the defection.
inline Profile apply_defection(const Profile& base, const DefectionSpec* defection) {
  const int n = static_cast<int>(base.size());
  Profile out = base;
  if (defection) {
    defection->validate(n);
    for (std::size_t k = 0; k < defection->defectors.size(); ++k) out[defection->defectors[k]] = defection->replacements[k];
  }
  for (int i = 0; i < n; ++i) {
    if (!out[i]) throw ConfigError("player " + std::to_string(i) + " has no strategy");
  }
  return out;
}

}  // namespace bertrand
