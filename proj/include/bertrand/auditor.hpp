#pragma once

// Equilibrium audits. For automaton opponents the best deviation is found by
// backward induction over (joint opponent state, round); otherwise a fixed
// menu of deviations is simulated.

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "bertrand/engine.hpp"
#include "bertrand/learners.hpp"

namespace bertrand {

enum class AuditMethod { kExactDp, kCanonicalDeviations, kNoRegretOnly };

inline std::string to_string(AuditMethod m) {
  switch (m) {
    case AuditMethod::kExactDp:
      return "exact_dp";
    case AuditMethod::kCanonicalDeviations:
      return "canonical_deviations";
    case AuditMethod::kNoRegretOnly:
      return "noregret_only";
  }
  return "unknown";
}

struct PlayerAudit {
  int player = 0;
  double equilibrium_utility = 0.0;
  double deviation_utility = 0.0;
  double gain = 0.0;
  double standard_error = 0.0;  // zero for exact audits
  std::string witness;
};

struct AuditReport {
  AuditMethod method = AuditMethod::kExactDp;
  int rounds = 0;
  std::vector<PlayerAudit> players;
  std::vector<std::string> warnings;

  /// Smallest eq_slack the audit certifies: the largest gain, floored at 0.
  double eq_slack() const {
    double s = 0.0;
    for (const auto& p : players) s = std::max(s, p.gain);
    return s;
  }
};

namespace detail {

inline std::string price_label(PriceIndex p, const PriceGrid& grid) {
  std::ostringstream os;
  os << p << "/" << grid.resolution();
  return os.str();
}

// Best-response dynamic program for one player against state machines.
class BestResponseDp {
 public:
  BestResponseDp(std::vector<const StateMachine*> machines, int player, const PriceGrid& grid, int rounds)
      : machines_(std::move(machines)), player_(player), grid_(grid), rounds_(rounds), n_(static_cast<int>(machines_.size())) {
    edges_.push_back(0);
    stationary_ = true;
    for (int j = 0; j < n_; ++j) {
      if (j == player_) continue;
      for (PriceIndex t : machines_[j]->thresholds()) {
        if (t > 0 && t <= grid_.top()) edges_.push_back(t);
      }
      stationary_ = stationary_ && machines_[j]->stationary();
    }
    edges_.push_back(grid_.top() + 1);
    std::sort(edges_.begin(), edges_.end());
    edges_.erase(std::unique(edges_.begin(), edges_.end()), edges_.end());
  }

  struct Solution {
    double value = 0.0;  // best total payoff over the horizon
    std::string witness;
  };

  Solution solve() {
    std::vector<int> start(n_, 0);
    for (int j = 0; j < n_; ++j) {
      if (j != player_) start[j] = machines_[j]->start_state();
    }
    std::vector<std::vector<int>> layers(rounds_ + 1);
    std::vector<std::vector<const StateEval*>> evals(rounds_);
    layers[0].push_back(index_of(start));
    std::vector<char> seen;
    for (int t = 0; t < rounds_; ++t) {
      seen.assign(states_.size() + 1, 0);
      for (int s : layers[t]) {
        const StateEval* ev = eval(s, t);
        evals[t].push_back(ev);
        for (const auto& bucket : ev->next) {
          for (const auto& [ns, pr] : bucket) {
            if (ns >= static_cast<int>(seen.size())) seen.resize(states_.size() + 1, 0);
            if (!seen[ns]) {
              seen[ns] = 1;
              layers[t + 1].push_back(ns);
            }
          }
        }
      }
    }

    std::vector<double> next_value(states_.size(), 0.0), value(states_.size(), 0.0);
    std::vector<std::vector<int>> policy(rounds_);
    for (int t = rounds_ - 1; t >= 0; --t) {
      policy[t].resize(layers[t].size());
      for (std::size_t k = 0; k < layers[t].size(); ++k) {
        const StateEval& ev = *evals[t][k];
        double best = -1.0;
        int best_b = 0;
        for (std::size_t b = 0; b < ev.next.size(); ++b) {
          if (ev.best_price[b] < 0) continue;
          double v = ev.best_payoff[b];
          for (const auto& [ns, pr] : ev.next[b]) v += pr * next_value[ns];
          if (v > best) {
            best = v;
            best_b = static_cast<int>(b);
          }
        }
        value[layers[t][k]] = best;
        policy[t][k] = best_b;
      }
      std::swap(value, next_value);
    }
    Solution sol;
    sol.value = next_value[layers[0][0]];
    sol.witness = describe_policy(layers, evals, policy);
    return sol;
  }

 private:
  struct StateEval {
    std::vector<double> best_payoff;      // per own-price bucket
    std::vector<PriceIndex> best_price;   // -1 for an empty bucket
    std::vector<std::vector<std::pair<int, double>>> next;
  };

  int index_of(const std::vector<int>& s) {
    auto it = index_.find(s);
    if (it != index_.end()) return it->second;
    const int id = static_cast<int>(states_.size());
    states_.push_back(s);
    index_.emplace(s, id);
    return id;
  }

  const StateEval* eval(int s, int t) {
    const std::pair<int, int> key{s, stationary_ ? 0 : t};
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second.get();
    const std::vector<int> state = states_[s];
    auto ev = std::make_unique<StateEval>();
    std::vector<const PriceDist*> opp;
    std::vector<std::vector<std::pair<PriceIndex, double>>> options(n_);
    for (int j = 0; j < n_; ++j) {
      if (j == player_) continue;
      const PriceDist& d = machines_[j]->output(state[j], t);
      opp.push_back(&d);
      for (std::size_t b = 0; b + 1 < edges_.size(); ++b) {
        double mass = 0.0;
        for (PriceIndex p = std::max(edges_[b], d.lowest()); p < std::min(edges_[b + 1], d.highest() + 1); ++p) mass += d[p];
        if (mass > 0.0) options[j].emplace_back(edges_[b], mass);
      }
    }
    const std::vector<double> u = fixed_price_payoffs(opp, grid_);
    const std::size_t buckets = edges_.size() - 1;
    ev->best_payoff.assign(buckets, -1.0);
    ev->best_price.assign(buckets, -1);
    ev->next.resize(buckets);
    for (std::size_t b = 0; b < buckets; ++b) {
      for (PriceIndex p = edges_[b]; p < edges_[b + 1]; ++p) {
        if (u[p] > ev->best_payoff[b]) {
          ev->best_payoff[b] = u[p];
          ev->best_price[b] = p;
        }
      }
      std::map<int, double> next;
      std::vector<PriceIndex> realized(n_, 0);
      realized[player_] = edges_[b];
      std::vector<int> ns(n_, 0);
      std::function<void(int, double)> branch = [&](int j, double pr) {
        if (j == n_) {
          for (int q = 0; q < n_; ++q) {
            if (q != player_) ns[q] = machines_[q]->next_state(state[q], realized, t);
          }
          next[index_of(ns)] += pr;
          return;
        }
        if (j == player_) {
          branch(j + 1, pr);
          return;
        }
        for (const auto& [price, mass] : options[j]) {
          realized[j] = price;
          branch(j + 1, pr * mass);
        }
      };
      branch(0, 1.0);
      ev->next[b].assign(next.begin(), next.end());
    }
    const StateEval* out = ev.get();
    cache_.emplace(key, std::move(ev));
    return out;
  }

  // Follows the optimal policy along the most likely opponent path and prints
  // the chosen prices as run-length segments.
  std::string describe_policy(const std::vector<std::vector<int>>& layers,
                              const std::vector<std::vector<const StateEval*>>& evals,
                              const std::vector<std::vector<int>>& policy) const {
    std::vector<PriceIndex> path;
    int s = layers[0][0];
    for (int t = 0; t < rounds_; ++t) {
      const auto& layer = layers[t];
      const std::size_t k = std::find(layer.begin(), layer.end(), s) - layer.begin();
      const int b = policy[t][k];
      const StateEval& ev = *evals[t][k];
      path.push_back(ev.best_price[b]);
      double best = -1.0;
      for (const auto& [ns, pr] : ev.next[b]) {
        if (pr > best) {
          best = pr;
          s = ns;
        }
      }
    }
    std::ostringstream os;
    int segments = 0;
    for (std::size_t t = 0; t < path.size() && segments < 4; ++segments) {
      std::size_t e = t;
      while (e + 1 < path.size() && path[e + 1] == path[t]) ++e;
      if (segments > 0) os << "; ";
      os << "price " << price_label(path[t], grid_) << " in rounds " << t << "-" << e;
      t = e + 1;
    }
    if (segments == 4 && !path.empty()) os << "; ...";
    return os.str();
  }

  std::vector<const StateMachine*> machines_;
  int player_;
  PriceGrid grid_;
  int rounds_;
  int n_;
  bool stationary_ = true;
  std::vector<PriceIndex> edges_;
  std::vector<std::vector<int>> states_;
  std::map<std::vector<int>, int> index_;
  std::map<std::pair<int, int>, std::unique_ptr<StateEval>> cache_;
};

inline bool all_machines(const Profile& p) {
  return std::all_of(p.begin(), p.end(), [](const StrategyPtr& s) { return s && s->machine() != nullptr; });
}

inline std::vector<int> players_or_all(std::optional<std::vector<int>> players, int n) {
  return players ? *players : all_players(n);
}

}  // namespace detail

/// Best total payoff player i can reach against the other machines, divided
/// by the horizon.
inline double best_deviation_value(const Profile& profile, int player, const PriceGrid& grid, int rounds,
                                   std::string* witness = nullptr) {
  std::vector<const StateMachine*> machines;
  for (const auto& s : profile) machines.push_back(s->machine());
  detail::BestResponseDp dp(machines, player, grid, rounds);
  const auto sol = dp.solve();
  if (witness) *witness = sol.witness;
  return sol.value / rounds;
}

struct CanonicalOptions {
  int replicates = 20;
  std::uint64_t seed = 1;
};

/// Simulated audit against all fixed prices, undercut-once-then-fixed for
/// every follow-up price, undercutting only in the last round, and Hedge.
inline AuditReport audit_canonical(const Profile& profile, const PriceGrid& grid, int rounds,
                                   std::optional<std::vector<int>> players = std::nullopt,
                                   const CanonicalOptions& opt = {}) {
  const int n = static_cast<int>(profile.size());
  const bool exact = detail::all_machines(profile);
  GameConfig cfg;
  cfg.grid = grid;
  cfg.rounds = rounds;
  cfg.profile = profile;
  cfg.replicates = opt.replicates;
  cfg.seed = opt.seed;
  cfg.mode = exact ? EvalMode::kExactAutomaton : EvalMode::kMonteCarlo;
  const RunMetrics eq = run(cfg).metrics;

  AuditReport report;
  report.method = AuditMethod::kCanonicalDeviations;
  report.rounds = rounds;
  const PriceIndex top = grid.top();
  for (int i : detail::players_or_all(players, n)) {
    std::vector<StrategyPtr> menu;
    for (PriceIndex p = 0; p <= top; ++p) menu.push_back(make_fixed_strategy(PriceDist::point(grid, p), "fixed " + detail::price_label(p, grid)));
    for (PriceIndex p = 0; p <= top; ++p) menu.push_back(make_switch_strategy(grid, top - 1, 1, p));
    menu.push_back(make_switch_strategy(grid, top, rounds - 1, top - 1));
    menu.push_back(make_hedge(grid, rounds));
    PlayerAudit pa;
    pa.player = i;
    pa.equilibrium_utility = eq.utilities[i];
    pa.deviation_utility = -1.0;
    for (const auto& s : menu) {
      GameConfig dc = cfg;
      dc.defection = DefectionSpec{{i}, {s}};
      dc.mode = (exact && s->machine()) ? EvalMode::kExactAutomaton : EvalMode::kMonteCarlo;
      const RunMetrics m = run(dc).metrics;
      if (m.utilities[i] > pa.deviation_utility) {
        pa.deviation_utility = m.utilities[i];
        pa.standard_error = std::hypot(m.utility_stderr[i], eq.utility_stderr[i]);
        pa.witness = s->describe();
      }
    }
    pa.gain = pa.deviation_utility - pa.equilibrium_utility;
    report.players.push_back(std::move(pa));
  }
  return report;
}

/// Exact audit of every listed player (default: all) against automaton
/// opponents. Falls back to canonical deviations with a warning when any
/// strategy is not a state machine.
inline AuditReport audit_exact(const Profile& profile, const PriceGrid& grid, int rounds,
                               std::optional<std::vector<int>> players = std::nullopt) {
  const int n = static_cast<int>(profile.size());
  if (!detail::all_machines(profile)) {
    AuditReport r = audit_canonical(profile, grid, rounds, players);
    r.warnings.push_back("profile contains a strategy that is not a state machine; audited canonical deviations only");
    return r;
  }
  GameConfig cfg;
  cfg.grid = grid;
  cfg.rounds = rounds;
  cfg.profile = profile;
  cfg.mode = EvalMode::kExactAutomaton;
  const RunMetrics eq = run(cfg).metrics;
  AuditReport report;
  report.method = AuditMethod::kExactDp;
  report.rounds = rounds;
  for (int i : detail::players_or_all(players, n)) {
    PlayerAudit pa;
    pa.player = i;
    pa.equilibrium_utility = eq.utilities[i];
    pa.deviation_utility = best_deviation_value(profile, i, grid, rounds, &pa.witness);
    pa.gain = pa.deviation_utility - pa.equilibrium_utility;
    report.players.push_back(std::move(pa));
  }
  return report;
}

using LearnerFactory = std::function<StrategyPtr(const PriceGrid&, int rounds)>;

inline LearnerFactory hedge_factory() {
  return [](const PriceGrid& g, int rounds) { return make_hedge(g, rounds); };
}

struct AdoptionOptions {
  int replicates = 20;
  std::uint64_t seed = 1;
};

/// Each listed player in turn swaps its strategy for a fresh learner; the
/// gain is the learner's utility minus the equilibrium utility.
inline AuditReport audit_adoption(const Profile& profile, const PriceGrid& grid, int rounds, const LearnerFactory& learner,
                                  std::optional<std::vector<int>> players = std::nullopt, const AdoptionOptions& opt = {}) {
  const int n = static_cast<int>(profile.size());
  GameConfig cfg;
  cfg.grid = grid;
  cfg.rounds = rounds;
  cfg.profile = profile;
  cfg.replicates = opt.replicates;
  cfg.seed = opt.seed;
  cfg.mode = detail::all_machines(profile) ? EvalMode::kExactAutomaton : EvalMode::kMonteCarlo;
  const RunMetrics eq = run(cfg).metrics;
  cfg.mode = EvalMode::kMonteCarlo;
  AuditReport report;
  report.method = AuditMethod::kNoRegretOnly;
  report.rounds = rounds;
  for (int i : detail::players_or_all(players, n)) {
    const StrategyPtr s = learner(grid, rounds);
    GameConfig dc = cfg;
    dc.defection = DefectionSpec{{i}, {s}};
    const RunMetrics m = run(dc).metrics;
    PlayerAudit pa;
    pa.player = i;
    pa.equilibrium_utility = eq.utilities[i];
    pa.deviation_utility = m.utilities[i];
    pa.gain = pa.deviation_utility - pa.equilibrium_utility;
    pa.standard_error = std::hypot(m.utility_stderr[i], eq.utility_stderr[i]);
    pa.witness = s->describe();
    report.players.push_back(std::move(pa));
  }
  return report;
}

/// Audit of the players other than `ignored` once its slot holds `fixed`.
/// Exact when `fixed` and the rest are state machines.
inline AuditReport audit_defection_aware(const Profile& profile, int ignored, const StrategyPtr& fixed, const PriceGrid& grid,
                                         int rounds, std::optional<std::vector<int>> players = std::nullopt) {
  const int n = static_cast<int>(profile.size());
  if (ignored < 0 || ignored >= n) throw ConfigError("ignored player outside [0, N)");
  const DefectionSpec fill{{ignored}, {fixed}};
  const Profile filled = apply_defection(profile, &fill);
  std::vector<int> audited = players ? *players : all_players_except(n, {ignored});
  if (std::find(audited.begin(), audited.end(), ignored) != audited.end()) {
    throw ConfigError("the ignored player is not audited in a defection-aware audit");
  }
  return audit_exact(filled, grid, rounds, audited);
}

/// Largest amount by which a scripted deviation's exact utility exceeds the
/// DP value for `player`: fixed prices and "post 1, then switch" scripts.
/// Nonpositive (up to rounding) when the DP is optimal.
struct ScriptedCheck {
  int scripts = 0;
  double max_excess = -1.0;
  std::string worst;
};

inline ScriptedCheck check_scripted_deviations(const Profile& profile, int player, const PriceGrid& grid, int rounds,
                                               int count, std::uint64_t seed) {
  const double dp = best_deviation_value(profile, player, grid, rounds);
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<PriceIndex> price(0, grid.top());
  std::uniform_int_distribution<int> round(0, rounds - 1);
  ScriptedCheck out;
  GameConfig cfg;
  cfg.grid = grid;
  cfg.rounds = rounds;
  cfg.profile = profile;
  cfg.mode = EvalMode::kExactAutomaton;
  for (int k = 0; k < count; ++k) {
    StrategyPtr s;
    if (k % 2 == 0) {
      const PriceIndex p = price(rng);
      s = make_fixed_strategy(PriceDist::point(grid, p), "fixed " + detail::price_label(p, grid));
    } else {
      const int at = round(rng);
      const PriceIndex before = grid.top();
      s = make_switch_strategy(grid, before, at, price(rng));
    }
    cfg.defection = DefectionSpec{{player}, {s}};
    const double u = run(cfg).metrics.utilities[player];
    ++out.scripts;
    if (u - dp > out.max_excess) {
      out.max_excess = u - dp;
      out.worst = s->describe();
    }
  }
  return out;
}

}  // namespace bertrand
