#pragma once

// Finite-state threat automata. Transitions fire on predicates of the realized
// price profile only, so replaying a realized history reproduces the state
// path exactly.

#include <algorithm>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "bertrand/errors.hpp"
#include "bertrand/grid.hpp"

namespace bertrand {

/// Read-only view of a strategy whose behavior is a deterministic function of
/// a finite state, the round number, and realized prices. Exact evaluation and
/// the best-response auditor work against this view.
class StateMachine {
 public:
  virtual ~StateMachine() = default;

  virtual int start_state() const = 0;
  virtual int state_count() const = 0;
  virtual const PriceDist& output(int state, int round) const = 0;
  virtual int next_state(int state, std::span<const PriceIndex> realized, int round) const = 0;
  /// Every price threshold t the transitions compare realized prices against
  /// (as "price < t"). Prices in the same threshold bucket are interchangeable.
  virtual std::vector<PriceIndex> thresholds() const = 0;
  /// True when neither output nor transitions depend on the round.
  virtual bool stationary() const = 0;
  virtual std::string state_name(int state) const { return "s" + std::to_string(state); }
};

enum class EventKind {
  kAnyBelow,         // some watched player priced below the threshold
  kExactlyOneBelow,  // exactly one watched player did
  kSeveralBelow,     // at least two watched players did
  kPlayerBelow,      // the single watched player did
};

struct Event {
  EventKind kind = EventKind::kAnyBelow;
  std::vector<int> players;
  PriceIndex threshold = 0;

  bool holds(std::span<const PriceIndex> realized) const {
    int below = 0;
    for (int j : players) {
      if (realized[j] < threshold) ++below;
    }
    switch (kind) {
      case EventKind::kAnyBelow:
      case EventKind::kPlayerBelow:
        return below >= 1;
      case EventKind::kExactlyOneBelow:
        return below == 1;
      case EventKind::kSeveralBelow:
        return below >= 2;
    }
    return false;
  }
};

inline std::vector<int> all_players(int n) {
  std::vector<int> out(n);
  for (int i = 0; i < n; ++i) out[i] = i;
  return out;
}

inline std::vector<int> all_players_except(int n, std::initializer_list<int> excluded) {
  std::vector<int> out;
  for (int i = 0; i < n; ++i) {
    if (std::find(excluded.begin(), excluded.end(), i) == excluded.end()) out.push_back(i);
  }
  return out;
}

inline Event anyone_below_one(std::vector<int> players, const PriceGrid& grid) {
  return {EventKind::kAnyBelow, std::move(players), grid.top()};
}
inline Event exactly_one_below_one(std::vector<int> players, const PriceGrid& grid) {
  return {EventKind::kExactlyOneBelow, std::move(players), grid.top()};
}
inline Event several_below_one(std::vector<int> players, const PriceGrid& grid) {
  return {EventKind::kSeveralBelow, std::move(players), grid.top()};
}
/// Read from a state in which every earlier round was all-1, this is "player j
/// is (among) the first to price below 1".
inline Event first_deviator_is(int player, const PriceGrid& grid) {
  return {EventKind::kPlayerBelow, {player}, grid.top()};
}
inline Event own_price_below_one(int owner, const PriceGrid& grid) { return first_deviator_is(owner, grid); }

struct Rule {
  int event = 0;
  int target = 0;
};

/// States with fixed output distributions and ordered transition rules; the
/// first rule whose event holds fires, otherwise the state is kept.
class AutomatonSpec final : public StateMachine {
 public:
  struct State {
    std::string name;
    PriceDist output;
    std::vector<Rule> rules;
  };

  AutomatonSpec(std::vector<State> states, std::vector<Event> events, int start = 0)
      : states_(std::move(states)), events_(std::move(events)), start_(start) {
    if (states_.empty()) throw ConfigError("automaton needs at least one state");
    if (start_ < 0 || start_ >= static_cast<int>(states_.size())) throw ConfigError("automaton start state out of range");
    const PriceGrid& grid = states_.front().output.grid();
    for (const auto& s : states_) {
      if (!(s.output.grid() == grid)) throw ConfigError("automaton outputs live on different grids");
      for (const Rule& r : s.rules) {
        if (r.event < 0 || r.event >= static_cast<int>(events_.size())) throw ConfigError("rule references unknown event");
        if (r.target < 0 || r.target >= static_cast<int>(states_.size())) throw ConfigError("rule targets unknown state");
      }
    }
    for (const auto& e : events_) {
      if (e.players.empty()) throw ConfigError("event watches no players");
      if (e.kind == EventKind::kPlayerBelow && e.players.size() != 1) {
        throw ConfigError("player-below event must watch exactly one player");
      }
      if (e.threshold < 0 || e.threshold > grid.top() + 1) throw ConfigError("event threshold outside the grid");
    }
  }

  int start_state() const override { return start_; }
  int state_count() const override { return static_cast<int>(states_.size()); }
  const PriceDist& output(int state, int /*round*/) const override { return states_[state].output; }

  int next_state(int state, std::span<const PriceIndex> realized, int /*round*/) const override {
    for (const Rule& r : states_[state].rules) {
      if (events_[r.event].holds(realized)) return r.target;
    }
    return state;
  }

  std::vector<PriceIndex> thresholds() const override {
    std::vector<PriceIndex> out;
    for (const auto& e : events_) out.push_back(e.threshold);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }

  bool stationary() const override { return true; }
  std::string state_name(int state) const override { return states_[state].name; }

  const std::vector<State>& states() const noexcept { return states_; }
  const std::vector<Event>& events() const noexcept { return events_; }

  /// Largest player index any event watches, or -1.
  int max_watched_player() const {
    int m = -1;
    for (const auto& e : events_) {
      for (int j : e.players) m = std::max(m, j);
    }
    return m;
  }

 private:
  std::vector<State> states_;
  std::vector<Event> events_;
  int start_;
};

/// History-independent play. A segment's output applies from its from_round
/// until the next segment starts; the last one runs to the horizon.
class FixedSequenceSpec final : public StateMachine {
 public:
  struct Segment {
    int from_round;
    PriceDist output;
  };

  explicit FixedSequenceSpec(std::vector<Segment> segments) : segments_(std::move(segments)) {
    if (segments_.empty() || segments_.front().from_round != 0) {
      throw ConfigError("fixed sequence must start with a segment at round 0");
    }
    for (std::size_t k = 1; k < segments_.size(); ++k) {
      if (segments_[k].from_round <= segments_[k - 1].from_round) throw ConfigError("fixed sequence segments out of order");
      if (!(segments_[k].output.grid() == segments_[0].output.grid())) throw ConfigError("fixed sequence mixes grids");
    }
  }

  static std::shared_ptr<const FixedSequenceSpec> constant(PriceDist d) {
    return std::make_shared<FixedSequenceSpec>(std::vector<Segment>{{0, std::move(d)}});
  }

  int start_state() const override { return 0; }
  int state_count() const override { return 1; }

  const PriceDist& output(int /*state*/, int round) const override {
    auto it = std::upper_bound(segments_.begin(), segments_.end(), round,
                               [](int r, const Segment& s) { return r < s.from_round; });
    return std::prev(it)->output;
  }

  int next_state(int, std::span<const PriceIndex>, int) const override { return 0; }
  std::vector<PriceIndex> thresholds() const override { return {}; }
  bool stationary() const override { return segments_.size() == 1; }

  const std::vector<Segment>& segments() const noexcept { return segments_; }

 private:
  std::vector<Segment> segments_;
};

}  // namespace bertrand
