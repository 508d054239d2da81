#pragma once

// Factories for the equilibrium profiles: grim triggers, the pathological
// high-price profile, cyclic perturbed equal-revenue threats, the
// multi-deviation-tolerant base, and the defection-aware variants.

#include <algorithm>
#include <cmath>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "bertrand/automaton.hpp"
#include "bertrand/distributions.hpp"
#include "bertrand/errors.hpp"
#include "bertrand/grid.hpp"
#include "bertrand/learners.hpp"
#include "bertrand/strategy.hpp"

namespace bertrand {

namespace detail {

inline void require_players(int n, int minimum, const std::string& what) {
  if (n < minimum) {
    throw ConfigError(what + " needs N >= " + std::to_string(minimum) + ", got N=" + std::to_string(n));
  }
}

inline void require_player(int i, int n, const std::string& what) {
  if (i < 0 || i >= n) throw ConfigError(what + " index " + std::to_string(i) + " outside [0, N)");
}

// COOPERATE at 1 until `trigger` fires, then PUNISH with `threat` forever.
inline std::shared_ptr<const AutomatonSpec> grim(const PriceGrid& grid, Event trigger, PriceDist threat) {
  std::vector<AutomatonSpec::State> states;
  states.push_back({"cooperate", PriceDist::point(grid, grid.top()), {{0, 1}}});
  states.push_back({"punish", std::move(threat), {}});
  return std::make_shared<AutomatonSpec>(std::move(states), std::vector<Event>{std::move(trigger)});
}

}  // namespace detail

/// Grim trigger on anyone pricing below 1, with threat price floor(1/N).
inline Profile make_simple_grim(int n, const PriceGrid& grid) {
  detail::require_players(n, 2, "simple grim");
  const PriceIndex threat = grid.resolution() / n;
  auto spec = detail::grim(grid, anyone_below_one(all_players(n), grid), PriceDist::point(grid, threat));
  return Profile(n, make_machine_strategy(spec, "simple_grim"));
}

inline Profile make_zero_grim(int n, const PriceGrid& grid) {
  detail::require_players(n, 2, "zero grim");
  auto spec = detail::grim(grid, anyone_below_one(all_players(n), grid), PriceDist::point(grid, 0));
  return Profile(n, make_machine_strategy(spec, "zero_grim"));
}

/// Player i_star always posts 1 - 1/K; the rest run zero grim on everyone but i_star.
inline Profile make_pathological(int i_star, int n, const PriceGrid& grid) {
  detail::require_players(n, 3, "pathological profile");
  detail::require_player(i_star, n, "pathological high-profit player");
  auto others = detail::grim(grid, anyone_below_one(all_players_except(n, {i_star}), grid), PriceDist::point(grid, 0));
  Profile out(n, make_machine_strategy(others, "pathological_follower"));
  out[i_star] = make_fixed_strategy(PriceDist::point(grid, grid.top() - 1), "pathological_leader");
  return out;
}

/// Default perturbation sqrt(r(T) / (T (ln N + 1))) with r(T) the Hedge bound.
inline double default_cyclic_perturb(int n, const PriceGrid& grid, int horizon) {
  const double r = hedge_regret_bound(grid.resolution(), horizon);
  return std::sqrt(r / (horizon * (std::log(static_cast<double>(n)) + 1.0)));
}

/// Threat parameters: c = floor(1/N - 2 delta) with delta the nominal gap.
inline PerturbedErd cyclic_erd_threat(int n, const PriceGrid& grid, double perturb) {
  const double gap = PerturbedErd::nominal_gap(perturb, grid.resolution());
  const double level = 1.0 / n - 2.0 * gap;
  const PriceIndex m = level > 0.0 ? floor_to_grid(level, grid) : 0;
  if (m < 1) {
    throw ConfigError("cyclic threat level c = floor(1/N - 2*delta) is not positive for N=" + std::to_string(n) +
                      ", K=" + std::to_string(grid.resolution()) + ", perturb=" + std::to_string(perturb) +
                      "; the grid is too coarse (needs roughly K >= 2N) or the perturbation too large");
  }
  return PerturbedErd(DerdParams(grid, m), perturb);
}

/// Player i watches pi(i) = (i+1) mod N. The first time pi(i) prices below 1
/// while i is still armed, i punishes with the perturbed equal-revenue threat
/// forever; if someone else breaks the all-1 history first, i disarms and
/// keeps posting 1.
inline Profile make_cyclic_erd(int n, const PriceGrid& grid, double perturb) {
  detail::require_players(n, 2, "cyclic threat profile");
  const PerturbedErd threat = cyclic_erd_threat(n, grid, perturb);
  const PriceDist threat_dist = perturbed_erd_pmf(threat);
  Profile out;
  for (int i = 0; i < n; ++i) {
    const int watched = (i + 1) % n;
    std::vector<Event> events{first_deviator_is(watched, grid), anyone_below_one(all_players(n), grid)};
    std::vector<AutomatonSpec::State> states;
    states.push_back({"cooperate", PriceDist::point(grid, grid.top()), {{0, 1}, {1, 2}}});
    states.push_back({"punish", threat_dist, {}});
    states.push_back({"disarmed", PriceDist::point(grid, grid.top()), {}});
    out.push_back(make_machine_strategy(std::make_shared<AutomatonSpec>(std::move(states), std::move(events)),
                                        "cyclic_erd(watch=" + std::to_string(watched) + ")"));
  }
  return out;
}

/// Cyclic threats with the default perturbation for horizon T.
inline Profile make_cyclic_erd_for_horizon(int n, const PriceGrid& grid, int horizon) {
  return make_cyclic_erd(n, grid, default_cyclic_perturb(n, grid, horizon));
}

/// COOPERATE at 1; a first deviation by two or more players moves to TOLERATE
/// (1 forever), a first deviation by exactly one player to PUNISH (0 forever).
inline Profile make_multidefector_base(int n, const PriceGrid& grid) {
  detail::require_players(n, 2, "multi-deviation base profile");
  std::vector<Event> events{several_below_one(all_players(n), grid), exactly_one_below_one(all_players(n), grid)};
  std::vector<AutomatonSpec::State> states;
  states.push_back({"cooperate", PriceDist::point(grid, grid.top()), {{0, 1}, {1, 2}}});
  states.push_back({"tolerate", PriceDist::point(grid, grid.top()), {}});
  states.push_back({"punish", PriceDist::point(grid, 0), {}});
  auto spec = std::make_shared<AutomatonSpec>(std::move(states), std::move(events));
  return Profile(n, make_machine_strategy(spec, "multidefector_base"));
}

/// Zero grim among J = [N] minus {ignored}. Slot `ignored` is left empty for
/// the known defector's strategy.
inline Profile make_defection_aware(int ignored, int n, const PriceGrid& grid) {
  detail::require_players(n, 2, "defection-aware profile");
  detail::require_player(ignored, n, "ignored player");
  auto spec = detail::grim(grid, anyone_below_one(all_players_except(n, {ignored}), grid), PriceDist::point(grid, 0));
  Profile out(n, make_machine_strategy(spec, "defection_aware"));
  out[ignored] = nullptr;
  return out;
}

/// Followers run zero grim among themselves, ignoring both the defector and
/// the leader; the leader posts i.i.d. perturbed equal-revenue draws at level
/// c (floored to the grid). Slot `ignored` is left empty.
inline Profile make_welfare_aware(int ignored, int leader, int n, const PriceGrid& grid, double c, double perturb) {
  detail::require_players(n, 4, "welfare-aware profile");
  detail::require_player(ignored, n, "ignored player");
  detail::require_player(leader, n, "leader");
  if (leader == ignored) throw ConfigError("leader must differ from the ignored player");
  if (!(c > 0.0 && c < 1.0)) throw ConfigError("leader level c must lie in (0,1)");
  const PerturbedErd threat(DerdParams(grid, floor_to_grid(c, grid)), perturb);
  auto followers = detail::grim(grid, anyone_below_one(all_players_except(n, {ignored, leader}), grid),
                                PriceDist::point(grid, 0));
  Profile out(n, make_machine_strategy(followers, "welfare_aware_follower"));
  out[leader] = make_fixed_strategy(perturbed_erd_pmf(threat), "welfare_aware_leader");
  out[ignored] = nullptr;
  return out;
}

/// The floor(N/2) players with the lowest utilities, ties to the lowest index.
inline std::vector<int> median_profit_set(std::span<const double> utilities) {
  std::vector<int> order(utilities.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return utilities[a] < utilities[b]; });
  order.resize(utilities.size() / 2);
  std::sort(order.begin(), order.end());
  return order;
}

namespace detail {

inline PriceDist random_dist(const PriceGrid& grid, std::mt19937_64& rng) {
  const int k = grid.resolution();
  std::uniform_int_distribution<int> kind(0, 2);
  switch (kind(rng)) {
    case 0:
      return PriceDist::point(grid, std::uniform_int_distribution<int>(0, k)(rng));
    case 1:
      return derd_pmf(DerdParams(grid, std::uniform_int_distribution<int>(1, k - 1)(rng)));
    default: {
      int lo = std::uniform_int_distribution<int>(0, k)(rng);
      int hi = std::uniform_int_distribution<int>(0, k)(rng);
      if (lo > hi) std::swap(lo, hi);
      std::uniform_real_distribution<double> w(0.0, 1.0);
      std::vector<double> m(grid.points(), 0.0);
      for (int j = lo; j <= hi; ++j) m[j] = w(rng) + 1e-3;
      return PriceDist::from_weights(grid, std::move(m));
    }
  }
}

inline Event random_event(int n, const PriceGrid& grid, std::mt19937_64& rng) {
  std::vector<int> watched;
  std::bernoulli_distribution include(0.6);
  for (int j = 0; j < n; ++j) {
    if (include(rng)) watched.push_back(j);
  }
  if (watched.empty()) watched.push_back(std::uniform_int_distribution<int>(0, n - 1)(rng));
  const PriceIndex threshold = std::uniform_int_distribution<int>(1, grid.top())(rng);
  const int kind = std::uniform_int_distribution<int>(0, 2)(rng);
  if (kind == 2 && watched.size() < 2) return {EventKind::kAnyBelow, std::move(watched), threshold};
  return {kind == 0 ? EventKind::kAnyBelow : kind == 1 ? EventKind::kExactlyOneBelow : EventKind::kSeveralBelow,
          std::move(watched), threshold};
}

}  // namespace detail

/// Random two- or three-state automaton: a high opening price, random trigger
/// events (random watched sets and thresholds), and random punishment laws.
/// Not an equilibrium in general.
inline std::shared_ptr<const AutomatonSpec> random_automaton(int n, const PriceGrid& grid, std::mt19937_64& rng) {
  const int k = grid.resolution();
  const int state_count = std::uniform_int_distribution<int>(2, 3)(rng);
  std::vector<Event> events;
  const int event_count = std::uniform_int_distribution<int>(1, 2)(rng);
  for (int e = 0; e < event_count; ++e) events.push_back(detail::random_event(n, grid, rng));

  std::vector<AutomatonSpec::State> states;
  const PriceIndex opening = std::uniform_int_distribution<int>(k / 2, k)(rng);
  states.push_back({"open", PriceDist::point(grid, opening), {{0, 1}}});
  for (int s = 1; s < state_count; ++s) {
    AutomatonSpec::State st{"s" + std::to_string(s), detail::random_dist(grid, rng), {}};
    if (s + 1 < state_count) {
      st.rules.push_back({event_count - 1, s + 1});
    } else if (std::bernoulli_distribution(0.3)(rng)) {
      st.rules.push_back({event_count - 1, 0});
    }
    states.push_back(std::move(st));
  }
  return std::make_shared<AutomatonSpec>(std::move(states), std::move(events));
}

inline Profile random_automaton_profile(int n, const PriceGrid& grid, std::mt19937_64& rng) {
  Profile out;
  for (int i = 0; i < n; ++i) out.push_back(make_machine_strategy(random_automaton(n, grid, rng), "random_automaton"));
  return out;
}

}  // namespace bertrand
