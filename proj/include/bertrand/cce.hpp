#pragma once

// Highest-price symmetric coarse correlated equilibrium of the M-player
// one-shot pricing game on a grid, by linear programming over multisets of
// prices, plus an independent certifier that re-checks every deviation
// constraint on the expanded joint table.

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "bertrand/errors.hpp"
#include "bertrand/grid.hpp"
#include "bertrand/lp.hpp"
#include "bertrand/strategy.hpp"

namespace bertrand {

enum class SamplingMode {
  kIid,         // each defector draws from the symmetric marginal independently
  kCorrelated,  // one joint outcome per round shared by the group
};

inline std::string to_string(SamplingMode m) { return m == SamplingMode::kIid ? "iid" : "correlated"; }

inline SamplingMode parse_sampling_mode(const std::string& s) {
  if (s == "iid") return SamplingMode::kIid;
  if (s == "correlated") return SamplingMode::kCorrelated;
  throw UsageError("unknown sampling mode '" + s + "' (expected iid or correlated)");
}

/// Closed-form market price M / e^(M-1) of the extremal continuous CCE.
inline double extremal_cce_price(int m) { return m / std::exp(static_cast<double>(m - 1)); }

struct CceOptions {
  double tolerance = 1e-9;  // slack allowed in each deviation constraint
  /// Allow the joint to put mass on price 1. Off by default: defectors that
  /// never post 1 are always seen as a multi-deviation by bystanders at 1.
  bool allow_top = false;
  std::size_t max_columns = 400000;
};

struct CceSolution {
  int players = 0;
  PriceGrid grid{2};
  /// Sorted price tuples with positive probability; each stands for the
  /// uniform mixture over its distinct orderings.
  std::vector<std::vector<PriceIndex>> outcomes;
  std::vector<double> probs;
  double objective = 0.0;
  int iterations = 0;
  std::size_t columns = 0;

  PriceDist marginal() const {
    std::vector<double> m(grid.points(), 0.0);
    for (std::size_t k = 0; k < outcomes.size(); ++k) {
      for (PriceIndex p : outcomes[k]) m[p] += probs[k] / players;
    }
    return PriceDist::from_weights(grid, std::move(m));
  }

  /// The symmetric joint law over ordered tuples.
  std::shared_ptr<const JointLaw> joint_law() const {
    std::map<std::vector<PriceIndex>, double> table;
    for (std::size_t k = 0; k < outcomes.size(); ++k) {
      std::vector<PriceIndex> perm = outcomes[k];
      std::vector<std::vector<PriceIndex>> orders;
      do {
        orders.push_back(perm);
      } while (std::next_permutation(perm.begin(), perm.end()));
      for (const auto& o : orders) table[o] += probs[k] / static_cast<double>(orders.size());
    }
    std::vector<std::vector<PriceIndex>> atoms;
    std::vector<double> p;
    for (const auto& [atom, prob] : table) {
      atoms.push_back(atom);
      p.push_back(prob);
    }
    return std::make_shared<JointLaw>(grid, players, std::move(atoms), std::move(p));
  }
};

namespace detail {

inline void for_each_multiset(int size, PriceIndex top, const std::function<void(const std::vector<PriceIndex>&)>& f) {
  std::vector<PriceIndex> cur(size, 0);
  std::function<void(int, PriceIndex)> rec = [&](int pos, PriceIndex from) {
    if (pos == size) {
      f(cur);
      return;
    }
    for (PriceIndex p = from; p <= top; ++p) {
      cur[pos] = p;
      rec(pos + 1, p);
    }
  };
  rec(0, 0);
}

inline double binomial(int n, int k) {
  double r = 1.0;
  for (int j = 1; j <= k; ++j) r = r * (n - k + j) / j;
  return r;
}

// Payoff of fixed price p against the sorted tuple `rest`.
inline double payoff_against_sorted(PriceIndex p, const std::vector<PriceIndex>& rest, const PriceGrid& grid) {
  if (rest.empty()) return grid.price(p);
  if (p > rest.front()) return 0.0;
  int ties = 0;
  for (PriceIndex q : rest) {
    if (q != p) break;
    ++ties;
  }
  return grid.price(p) / (1 + ties);
}

}  // namespace detail

inline CceSolution solve_extremal_cce(int players, const PriceGrid& grid, const CceOptions& opt = {}) {
  if (players < 2) throw ConfigError("extremal CCE needs at least 2 players");
  const PriceIndex top = opt.allow_top ? grid.top() : grid.top() - 1;
  const double columns = detail::binomial(top + players, players);
  if (columns > static_cast<double>(opt.max_columns)) {
    throw ConfigError("CCE table with M=" + std::to_string(players) + ", K=" + std::to_string(grid.resolution()) +
                      " needs " + std::to_string(static_cast<long long>(columns)) + " columns (limit " +
                      std::to_string(opt.max_columns) + ")");
  }

  std::vector<std::vector<PriceIndex>> outcomes;
  detail::for_each_multiset(players, top, [&](const std::vector<PriceIndex>& s) { outcomes.push_back(s); });
  const int n = static_cast<int>(outcomes.size());

  LinearProgram lp;
  lp.vars = n;
  lp.objective.resize(n);
  lp.le_rows.assign(grid.points(), std::vector<double>(n, 0.0));
  lp.le_rhs.assign(grid.points(), opt.tolerance);
  lp.eq_rows.assign(1, std::vector<double>(n, 1.0));
  lp.eq_rhs.assign(1, 1.0);
  std::vector<PriceIndex> rest(players - 1);
  for (int k = 0; k < n; ++k) {
    const auto& s = outcomes[k];
    const double price = grid.price(s.front());
    lp.objective[k] = price;
    const double own = price / players;
    // A player of the symmetrized joint sits at each position with equal
    // probability; its opponents are the tuple with that position removed.
    for (PriceIndex p = 0; p <= grid.top(); ++p) {
      double dev = 0.0;
      for (int j = 0; j < players; ++j) {
        if (j > 0 && s[j] == s[j - 1]) {
          dev += detail::payoff_against_sorted(p, rest, grid);
          continue;
        }
        std::size_t w = 0;
        for (int q = 0; q < players; ++q) {
          if (q != j) rest[w++] = s[q];
        }
        dev += detail::payoff_against_sorted(p, rest, grid);
      }
      lp.le_rows[p][k] = dev / players - own;
    }
  }

  const LpResult r = solve_lp(lp);
  if (r.status != LpStatus::kOptimal) {
    throw ContractViolation("CCE linear program ended " + to_string(r.status) +
                            " (the all-zero outcome is feasible, so this is a solver failure)");
  }
  CceSolution sol;
  sol.players = players;
  sol.grid = grid;
  sol.iterations = r.iterations;
  sol.columns = static_cast<std::size_t>(n);
  double total = 0.0;
  for (int k = 0; k < n; ++k) {
    if (r.x[k] > 1e-13) {
      sol.outcomes.push_back(outcomes[k]);
      sol.probs.push_back(r.x[k]);
      total += r.x[k];
    }
  }
  for (double& p : sol.probs) p /= total;
  for (std::size_t k = 0; k < sol.outcomes.size(); ++k) sol.objective += sol.probs[k] * grid.price(sol.outcomes[k].front());
  return sol;
}

struct CceCertificate {
  double objective = 0.0;               // expected minimum price
  std::vector<double> utilities;        // per player under the joint
  double max_violation = 0.0;           // max over players and prices of deviation gain
  PriceIndex worst_price = 0;
  double max_asymmetry = 0.0;           // max |P(atom) - P(permuted atom)|
};

/// Re-evaluates every fixed-price deviation of every player directly from the
/// ordered joint table using the payoff rule.
inline CceCertificate certify_cce(const JointLaw& law) {
  const PriceGrid& grid = law.grid();
  const int m = law.coordinates();
  CceCertificate c;
  c.utilities.assign(m, 0.0);
  std::vector<std::vector<double>> dev(m, std::vector<double>(grid.points(), 0.0));
  std::map<std::vector<PriceIndex>, double> table;
  for (std::size_t a = 0; a < law.atoms().size(); ++a) {
    const auto& atom = law.atoms()[a];
    const double pr = law.probs()[a];
    table[atom] += pr;
    const auto pay = bertrand_payoffs(atom, grid);
    c.objective += pr * grid.price(*std::min_element(atom.begin(), atom.end()));
    std::vector<PriceIndex> swapped = atom;
    for (int i = 0; i < m; ++i) {
      c.utilities[i] += pr * pay[i];
      for (PriceIndex p = 0; p <= grid.top(); ++p) {
        swapped[i] = p;
        dev[i][p] += pr * bertrand_payoffs(swapped, grid)[i];
      }
      swapped[i] = atom[i];
    }
  }
  c.max_violation = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < m; ++i) {
    for (PriceIndex p = 0; p <= grid.top(); ++p) {
      if (dev[i][p] - c.utilities[i] > c.max_violation) {
        c.max_violation = dev[i][p] - c.utilities[i];
        c.worst_price = p;
      }
    }
  }
  for (const auto& [atom, pr] : table) {
    std::vector<PriceIndex> perm = atom;
    std::sort(perm.begin(), perm.end());
    do {
      auto it = table.find(perm);
      const double other = it == table.end() ? 0.0 : it->second;
      c.max_asymmetry = std::max(c.max_asymmetry, std::abs(pr - other));
    } while (std::next_permutation(perm.begin(), perm.end()));
  }
  return c;
}

/// What a group of defectors draws from: the shared joint for correlated play,
/// or the symmetric marginal for independent play.
struct CcePlay {
  SamplingMode mode = SamplingMode::kCorrelated;
  std::shared_ptr<const JointLaw> law;       // correlated
  std::shared_ptr<const PriceDist> marginal;  // iid
};

inline CcePlay cce_play(const CceSolution& sol, SamplingMode mode) {
  CcePlay p;
  p.mode = mode;
  if (mode == SamplingMode::kCorrelated) {
    p.law = sol.joint_law();
  } else {
    p.marginal = std::make_shared<const PriceDist>(sol.marginal());
  }
  return p;
}

}  // namespace bertrand
