#pragma once

// Repeated-game execution. Monte Carlo mode samples realized prices to drive
// history but records exact conditional expectations each round; exact mode
// propagates the distribution over joint automaton states.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <tuple>
#include <unordered_map>
#include <utility>
#include <vector>

#include "bertrand/errors.hpp"
#include "bertrand/grid.hpp"
#include "bertrand/learners.hpp"
#include "bertrand/strategy.hpp"

namespace bertrand {

enum class EvalMode { kMonteCarlo, kExactAutomaton };

inline std::string to_string(EvalMode m) { return m == EvalMode::kMonteCarlo ? "monte_carlo" : "exact_automaton"; }

struct GameConfig {
  PriceGrid grid{2};
  int rounds = 1;
  Profile profile;
  std::optional<DefectionSpec> defection;
  EvalMode mode = EvalMode::kMonteCarlo;
  int replicates = 100;
  std::uint64_t seed = 0;
  /// Keep per-round records for the first replicate (or the exact run).
  bool record_trace = false;
  /// Also keep every player's announced distribution in those records.
  bool record_distributions = false;
  /// Reuse evaluations of recurring play combinations. Off only in tests that
  /// compare against the uncached path.
  bool cache_evaluations = true;

  int players() const noexcept { return static_cast<int>(profile.size()); }
};

struct RoundRecord {
  int round = 0;
  std::vector<PriceIndex> realized;  // empty in exact mode
  double expected_min = 0.0;
  std::vector<double> payoffs;
  std::vector<std::vector<double>> distributions;
};

struct Trace {
  EvalMode mode = EvalMode::kMonteCarlo;
  std::uint64_t master_seed = 0;
  std::vector<std::uint64_t> replicate_seeds;
  std::vector<RoundRecord> rounds;
};

struct RunMetrics {
  int players = 0;
  int rounds = 0;
  int replicates = 0;
  double market_price = 0.0;
  double standard_error = 0.0;
  std::vector<double> utilities;
  std::vector<double> utility_stderr;
  std::vector<double> replicate_prices;
  /// Largest |sum_i u_i - E[min]| seen in any round's conditional expectations.
  double welfare_residual = 0.0;
  std::vector<std::uint64_t> replicate_digests;
  /// learner_reports[r][i] for replicate r and player i (empty for automata).
  std::vector<std::vector<std::optional<LearnerReport>>> learner_reports;

  double total_utility() const {
    double s = 0.0;
    for (double u : utilities) s += u;
    return s;
  }

  /// Largest measured regret any learner showed in any replicate, or nullopt.
  std::optional<RegretRecord> worst_regret() const {
    std::optional<RegretRecord> worst;
    for (const auto& rep : learner_reports) {
      for (const auto& r : rep) {
        if (r && (!worst || r->regret.measured > worst->measured)) worst = r->regret;
      }
    }
    return worst;
  }

  std::uint64_t digest() const {
    std::uint64_t h = 1469598103934665603ULL;
    for (std::uint64_t d : replicate_digests) {
      h ^= d;
      h *= 1099511628211ULL;
    }
    return h;
  }
};

struct RunResult {
  RunMetrics metrics;
  Trace trace;
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

inline double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

class Fnv {
 public:
  void add(std::uint64_t v) {
    for (int b = 0; b < 8; ++b) {
      h_ ^= (v >> (8 * b)) & 0xFF;
      h_ *= 1099511628211ULL;
    }
  }
  void add_double(double d) {
    std::uint64_t bits;
    std::memcpy(&bits, &d, sizeof bits);
    add(bits);
  }
  std::uint64_t value() const noexcept { return h_; }

 private:
  std::uint64_t h_ = 1469598103934665603ULL;
};

using CacheKey = std::vector<std::uintptr_t>;

struct CacheKeyHash {
  std::size_t operator()(const CacheKey& k) const noexcept {
    std::uint64_t h = 0;
    for (std::uintptr_t v : k) h = splitmix64(h ^ static_cast<std::uint64_t>(v));
    return static_cast<std::size_t>(h);
  }
};

inline std::uintptr_t key_part(const Play& p) {
  auto v = reinterpret_cast<std::uintptr_t>(p.identity);
  return p.correlated() ? (v | 1U) : v;
}

struct Evaluation {
  std::vector<double> payoffs;
  double expected_min = 0.0;
  std::vector<std::vector<double>> feedback;  // empty for players that need none
};

// Exact expectations for one round's plays, enumerating the atoms of any
// shared joint laws and treating everyone else as independent.
class PlayEvaluator {
 public:
  PlayEvaluator(PriceGrid grid, int n) : grid_(grid), n_(n), points_(grid.points()) {}

  void evaluate(std::span<const Play> plays, std::span<const char> needs, Evaluation& out) {
    out.payoffs.assign(n_, 0.0);
    out.expected_min = 0.0;
    out.feedback.resize(n_);
    for (int i = 0; i < n_; ++i) {
      if (needs[i]) {
        out.feedback[i].assign(grid_.points(), 0.0);
      } else {
        out.feedback[i].clear();
      }
    }
    laws_.clear();
    for (const Play& p : plays) {
      if (p.correlated() && std::find(laws_.begin(), laws_.end(), p.law) == laws_.end()) laws_.push_back(p.law);
    }
    dists_.assign(n_, nullptr);
    for (int i = 0; i < n_; ++i) {
      if (!plays[i].correlated()) dists_[i] = plays[i].dist;
    }
    expand(plays, needs, 0, 1.0, out);
  }

  const PriceDist& point(PriceIndex p) {
    auto& slot = points_[p];
    if (!slot) slot = std::make_unique<PriceDist>(PriceDist::point(grid_, p));
    return *slot;
  }

 private:
  void expand(std::span<const Play> plays, std::span<const char> needs, std::size_t g, double weight, Evaluation& out) {
    if (g == laws_.size()) {
      accumulate(needs, weight, out);
      return;
    }
    const JointLaw* law = laws_[g];
    for (std::size_t a = 0; a < law->atoms().size(); ++a) {
      const double pr = law->probs()[a];
      if (pr == 0.0) continue;
      for (int i = 0; i < n_; ++i) {
        if (plays[i].law == law) dists_[i] = &point(law->atoms()[a][plays[i].coordinate]);
      }
      expand(plays, needs, g + 1, weight * pr, out);
    }
  }

  void accumulate(std::span<const char> needs, double weight, Evaluation& out) {
    const auto u = expected_payoffs(dists_, grid_);
    for (int i = 0; i < n_; ++i) out.payoffs[i] += weight * u[i];
    out.expected_min += weight * expected_min(dists_, grid_);
    for (int i = 0; i < n_; ++i) {
      if (!needs[i]) continue;
      others_.clear();
      for (int j = 0; j < n_; ++j) {
        if (j != i) others_.push_back(dists_[j]);
      }
      const auto fb = fixed_price_payoffs(others_, grid_);
      auto& dst = out.feedback[i];
      for (std::size_t p = 0; p < fb.size(); ++p) dst[p] += weight * fb[p];
    }
  }

  PriceGrid grid_;
  int n_;
  std::vector<std::unique_ptr<PriceDist>> points_;
  std::vector<const JointLaw*> laws_;
  DistRefs dists_;
  DistRefs others_;
};

inline double welfare_gap(const Evaluation& e) {
  double s = 0.0;
  for (double u : e.payoffs) s += u;
  return std::abs(s - e.expected_min);
}

struct ReplicateOutcome {
  double market_sum = 0.0;
  std::vector<double> utility_sum;
  std::uint64_t digest = 0;
  std::vector<std::optional<LearnerReport>> reports;
};

// One Monte Carlo run over all replicates. Evaluations of stable play
// combinations are cached for the whole run: a combination of stable plays
// always has the same expectations, whatever replicate reaches it.
class MonteCarloRunner {
 public:
  MonteCarloRunner(const GameConfig& cfg, const Profile& profile)
      : cfg_(cfg), profile_(profile), n_(static_cast<int>(profile.size())), evaluator_(cfg.grid, n_) {}

  double welfare_residual() const noexcept { return welfare_residual_; }

  ReplicateOutcome replicate(std::uint64_t seed, Trace* trace) {
    const int n = n_;
    std::vector<std::unique_ptr<Strategy>> strat;
    std::vector<char> needs(n, 0);
    for (int i = 0; i < n; ++i) {
      strat.push_back(profile_[i]->fresh());
      needs[i] = strat.back()->needs_payoffs() ? 1 : 0;
    }
    int feedback_players = 0;
    for (char c : needs) feedback_players += c;

    std::mt19937_64 rng(seed);
    ReplicateOutcome out;
    out.utility_sum.assign(n, 0.0);
    Fnv fnv;
    std::vector<Play> plays(n);
    std::vector<PriceIndex> realized(n, 0);
    std::vector<double> obtained(n, 0.0);
    std::vector<std::span<const double>> fb(n);
    std::vector<const void*> fb_id(n, nullptr);
    std::vector<const JointLaw*> laws;
    std::vector<std::size_t> law_atom;
    CacheKey key(n);

    for (int t = 0; t < cfg_.rounds; ++t) {
      int unstable = 0;
      int learner = -1;
      bool any_correlated = false;
      for (int i = 0; i < n; ++i) {
        plays[i] = strat[i]->play(t);
        if (!plays[i].dist) throw ContractViolation("strategy produced no distribution");
        if (!plays[i].identity) {
          ++unstable;
          learner = i;
        }
        any_correlated = any_correlated || plays[i].correlated();
        key[i] = key_part(plays[i]);
      }

      RoundRecord* rec = nullptr;
      if (trace) {
        trace->rounds.emplace_back();
        rec = &trace->rounds.back();
        rec->round = t;
        if (cfg_.record_distributions) {
          for (int i = 0; i < n; ++i) rec->distributions.emplace_back(plays[i].dist->mass().begin(), plays[i].dist->mass().end());
        }
      }

      if (!cfg_.cache_evaluations) unstable = n + 1;
      const bool linear = unstable == 1 && !any_correlated && feedback_players - needs[learner] == 0;
      if (unstable == 0) {
        const FullEntry& e = full_entry(key, plays, needs);
        for (int i = 0; i < n; ++i) {
          out.utility_sum[i] += e.eval.payoffs[i];
          obtained[i] = e.eval.payoffs[i];
          fb[i] = e.eval.feedback[i];
          fb_id[i] = needs[i] ? static_cast<const void*>(&e.eval.feedback[i]) : nullptr;
        }
        out.market_sum += e.eval.expected_min;
        if (rec) {
          rec->expected_min = e.eval.expected_min;
          rec->payoffs = e.eval.payoffs;
        }
      } else if (linear) {
        key[learner] = 0;
        LinearEntry& e = linear_entry(key, plays, learner);
        const PriceDist& d = *plays[learner].dist;
        const PriceIndex lo = d.lowest(), hi = d.highest();
        const std::size_t len = hi - lo + 1;
        const double* pm = d.mass().data() + lo;
        double* acc = e.acc.data() + lo;
        for (std::size_t j = 0; j < len; ++j) acc[j] += pm[j];
        if (!e.touched) {
          e.touched = true;
          touched_.push_back(&e);
        }
        const std::span<const double> pspan(pm, len);
        for (int i = 0; i < n; ++i) {
          obtained[i] = 0.0;
          fb[i] = {};
          fb_id[i] = nullptr;
        }
        obtained[learner] = dot(pspan, std::span<const double>(e.u).subspan(lo, len));
        if (needs[learner]) {
          fb[learner] = e.u;
          fb_id[learner] = &e.u;
        }
        if (rec) {
          rec->payoffs.assign(n, 0.0);
          for (int i = 0; i < n; ++i) {
            rec->payoffs[i] = i == learner ? obtained[i] : dot(pspan, std::span<const double>(e.v[i]).subspan(lo, len));
          }
          rec->expected_min = dot(pspan, std::span<const double>(e.m).subspan(lo, len));
        }
      } else {
        evaluator_.evaluate(plays, needs, scratch_);
        welfare_residual_ = std::max(welfare_residual_, welfare_gap(scratch_));
        for (int i = 0; i < n; ++i) {
          out.utility_sum[i] += scratch_.payoffs[i];
          obtained[i] = scratch_.payoffs[i];
          fb[i] = scratch_.feedback[i];
          fb_id[i] = nullptr;
        }
        out.market_sum += scratch_.expected_min;
        if (rec) {
          rec->expected_min = scratch_.expected_min;
          rec->payoffs = scratch_.payoffs;
        }
      }

      // Shared laws draw first, then one uniform per player in index order,
      // so the stream layout does not depend on who is correlated.
      laws.clear();
      law_atom.clear();
      for (int i = 0; i < n; ++i) {
        if (plays[i].correlated() && std::find(laws.begin(), laws.end(), plays[i].law) == laws.end()) {
          laws.push_back(plays[i].law);
        }
      }
      for (const JointLaw* law : laws) law_atom.push_back(law->sample(uniform01(rng)));
      for (int i = 0; i < n; ++i) {
        const double u = uniform01(rng);
        if (plays[i].correlated()) {
          const std::size_t g = std::find(laws.begin(), laws.end(), plays[i].law) - laws.begin();
          realized[i] = plays[i].law->atoms()[law_atom[g]][plays[i].coordinate];
        } else {
          realized[i] = plays[i].dist->sample(u);
        }
        fnv.add(static_cast<std::uint64_t>(realized[i]));
      }
      if (rec) rec->realized = realized;

      for (int i = 0; i < n; ++i) {
        Observation obs;
        obs.round = t;
        obs.realized = realized;
        obs.payoffs = fb[i];
        obs.payoffs_identity = fb_id[i];
        obs.obtained = obtained[i];
        strat[i]->observe(obs);
      }
    }

    flush_linear(out);
    for (int i = 0; i < n; ++i) fnv.add_double(out.utility_sum[i]);
    fnv.add_double(out.market_sum);
    out.digest = fnv.value();
    for (int i = 0; i < n; ++i) out.reports.push_back(strat[i]->report());
    return out;
  }

 private:
  struct FullEntry {
    Evaluation eval;
  };

  // One unstable independent player L against stable others: per own price p,
  // L's payoff u[p], the expected minimum m[p] and every other player's
  // payoff v[j][p]. Round contributions are linear in L's distribution, so
  // the run accumulates L's masses in `acc` and settles the dot products at
  // the end of each replicate.
  struct LinearEntry {
    std::vector<double> u;
    std::vector<double> m;
    std::vector<std::vector<double>> v;
    std::vector<double> acc;
    bool touched = false;
  };

  static double dot(std::span<const double> a, std::span<const double> b) { return bertrand::detail::dot(a, b); }

  const FullEntry& full_entry(const CacheKey& key, std::span<const Play> plays, std::span<const char> needs) {
    auto it = full_.find(key);
    if (it != full_.end()) return *it->second;
    auto e = std::make_unique<FullEntry>();
    evaluator_.evaluate(plays, needs, e->eval);
    welfare_residual_ = std::max(welfare_residual_, welfare_gap(e->eval));
    return *full_.emplace(key, std::move(e)).first->second;
  }

  LinearEntry& linear_entry(const CacheKey& key, std::span<const Play> plays, int learner) {
    auto it = linear_.find(key);
    if (it != linear_.end()) return *it->second;
    const int points = cfg_.grid.points();
    auto e = std::make_unique<LinearEntry>();
    e->u.assign(points, 0.0);
    e->m.assign(points, 0.0);
    e->v.assign(n_, std::vector<double>(points, 0.0));
    e->acc.assign(points, 0.0);
    std::vector<Play> probe(plays.begin(), plays.end());
    const std::vector<char> none(n_, 0);
    Evaluation ev;
    for (PriceIndex p = 0; p < points; ++p) {
      const PriceDist& at = evaluator_.point(p);
      probe[learner] = Play{&at, &at};
      evaluator_.evaluate(probe, none, ev);
      welfare_residual_ = std::max(welfare_residual_, welfare_gap(ev));
      e->u[p] = ev.payoffs[learner];
      e->m[p] = ev.expected_min;
      for (int j = 0; j < n_; ++j) e->v[j][p] = ev.payoffs[j];
    }
    return *linear_.emplace(key, std::move(e)).first->second;
  }

  void flush_linear(ReplicateOutcome& out) {
    for (LinearEntry* e : touched_) {
      out.market_sum += dot(e->acc, e->m);
      for (int j = 0; j < n_; ++j) out.utility_sum[j] += dot(e->acc, e->v[j]);
      std::fill(e->acc.begin(), e->acc.end(), 0.0);
      e->touched = false;
    }
    touched_.clear();
  }

  const GameConfig& cfg_;
  const Profile& profile_;
  int n_;
  PlayEvaluator evaluator_;
  Evaluation scratch_;
  std::unordered_map<CacheKey, std::unique_ptr<FullEntry>, CacheKeyHash> full_;
  std::unordered_map<CacheKey, std::unique_ptr<LinearEntry>, CacheKeyHash> linear_;
  std::vector<LinearEntry*> touched_;
  double welfare_residual_ = 0.0;
};

inline void finish_metrics(RunMetrics& m) {
  const int r = m.replicates;
  const auto mean_se = [r](const std::vector<double>& xs) {
    double mean = 0.0;
    for (double x : xs) mean += x;
    mean /= r;
    double var = 0.0;
    for (double x : xs) var += (x - mean) * (x - mean);
    const double se = r > 1 ? std::sqrt(var / (r - 1) / r) : 0.0;
    return std::pair{mean, se};
  };
  std::tie(m.market_price, m.standard_error) = mean_se(m.replicate_prices);
}

// Distribution over joint automaton states, advanced round by round. Realized
// prices matter only through the threshold buckets the transitions read, so
// each bucket is represented by its lowest price.
inline RunResult run_exact(const GameConfig& cfg, const Profile& profile) {
  const int n = static_cast<int>(profile.size());
  const PriceGrid& grid = cfg.grid;
  std::vector<const StateMachine*> machines;
  for (int i = 0; i < n; ++i) {
    const StateMachine* m = profile[i]->machine();
    if (!m) {
      throw ConfigError("exact evaluation needs automaton or fixed-sequence strategies; player " + std::to_string(i) +
                        " runs " + profile[i]->describe());
    }
    machines.push_back(m);
  }
  std::vector<PriceIndex> edges{0};
  for (const auto* m : machines) {
    for (PriceIndex t : m->thresholds()) {
      if (t >= 1 && t <= grid.top()) edges.push_back(t);
    }
  }
  edges.push_back(grid.top() + 1);
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  const std::size_t buckets = edges.size() - 1;

  RunResult result;
  result.trace.mode = EvalMode::kExactAutomaton;
  RunMetrics& metrics = result.metrics;
  metrics.players = n;
  metrics.rounds = cfg.rounds;
  metrics.replicates = 1;
  metrics.utilities.assign(n, 0.0);
  metrics.utility_stderr.assign(n, 0.0);

  PlayEvaluator evaluator(grid, n);
  std::unordered_map<CacheKey, std::unique_ptr<Evaluation>, CacheKeyHash> cache;
  const std::vector<char> none(n, 0);

  std::map<std::vector<int>, double> current;
  {
    std::vector<int> start(n);
    for (int i = 0; i < n; ++i) start[i] = machines[i]->start_state();
    current.emplace(std::move(start), 1.0);
  }
  double market = 0.0;
  Fnv fnv;
  std::vector<Play> plays(n);
  CacheKey key(n);
  std::vector<std::vector<std::pair<PriceIndex, double>>> options(n);
  std::vector<PriceIndex> realized(n);
  std::vector<int> next_state(n);

  for (int t = 0; t < cfg.rounds; ++t) {
    std::map<std::vector<int>, double> next;
    double round_min = 0.0;
    std::vector<double> round_pay(n, 0.0);
    for (const auto& [state, prob] : current) {
      for (int i = 0; i < n; ++i) {
        const PriceDist* d = &machines[i]->output(state[i], t);
        plays[i] = Play{d, d};
        key[i] = key_part(plays[i]);
      }
      auto it = cache.find(key);
      if (it == cache.end()) {
        auto e = std::make_unique<Evaluation>();
        evaluator.evaluate(plays, none, *e);
        metrics.welfare_residual = std::max(metrics.welfare_residual, welfare_gap(*e));
        it = cache.emplace(key, std::move(e)).first;
      }
      const Evaluation& ev = *it->second;
      round_min += prob * ev.expected_min;
      for (int i = 0; i < n; ++i) round_pay[i] += prob * ev.payoffs[i];

      for (int i = 0; i < n; ++i) {
        options[i].clear();
        const PriceDist& d = *plays[i].dist;
        for (std::size_t b = 0; b < buckets; ++b) {
          double mass = 0.0;
          for (PriceIndex p = std::max(edges[b], d.lowest()); p < std::min(edges[b + 1], d.highest() + 1); ++p) mass += d[p];
          if (mass > 0.0) options[i].emplace_back(edges[b], mass);
        }
      }
      std::function<void(int, double)> branch = [&](int i, double pr) {
        if (i == n) {
          for (int j = 0; j < n; ++j) next_state[j] = machines[j]->next_state(state[j], realized, t);
          next[next_state] += pr;
          return;
        }
        for (const auto& [price, mass] : options[i]) {
          realized[i] = price;
          branch(i + 1, pr * mass);
        }
      };
      branch(0, prob);
    }
    market += round_min;
    for (int i = 0; i < n; ++i) metrics.utilities[i] += round_pay[i];
    fnv.add_double(round_min);
    if (cfg.record_trace) {
      RoundRecord rec;
      rec.round = t;
      rec.expected_min = round_min;
      rec.payoffs = round_pay;
      result.trace.rounds.push_back(std::move(rec));
    }
    current = std::move(next);
  }
  metrics.market_price = market / cfg.rounds;
  for (double& u : metrics.utilities) u /= cfg.rounds;
  metrics.replicate_prices = {metrics.market_price};
  metrics.replicate_digests = {fnv.value()};
  metrics.learner_reports.assign(1, std::vector<std::optional<LearnerReport>>(n));
  return result;
}

}  // namespace detail

/// Seed for replicate r, derived from the master seed by a fixed splitting rule.
inline std::uint64_t replicate_seed(std::uint64_t master, int replicate) {
  return detail::splitmix64(master ^ detail::splitmix64(static_cast<std::uint64_t>(replicate) + 1));
}

inline RunResult run(const GameConfig& cfg) {
  if (cfg.rounds < 1) throw ConfigError("rounds must be >= 1");
  if (cfg.replicates < 1) throw ConfigError("replicates must be >= 1");
  if (cfg.profile.empty()) throw ConfigError("profile has no players");
  const Profile profile = apply_defection(cfg.profile, cfg.defection ? &*cfg.defection : nullptr);
  if (cfg.mode == EvalMode::kExactAutomaton) {
    RunResult r = detail::run_exact(cfg, profile);
    r.trace.master_seed = cfg.seed;
    return r;
  }

  const int n = static_cast<int>(profile.size());
  RunResult result;
  result.trace.mode = EvalMode::kMonteCarlo;
  result.trace.master_seed = cfg.seed;
  RunMetrics& m = result.metrics;
  m.players = n;
  m.rounds = cfg.rounds;
  m.replicates = cfg.replicates;

  detail::MonteCarloRunner runner(cfg, profile);
  std::vector<std::vector<double>> utils(n);
  for (int r = 0; r < cfg.replicates; ++r) {
    const std::uint64_t seed = replicate_seed(cfg.seed, r);
    result.trace.replicate_seeds.push_back(seed);
    detail::ReplicateOutcome o = runner.replicate(seed, (cfg.record_trace && r == 0) ? &result.trace : nullptr);
    m.replicate_prices.push_back(o.market_sum / cfg.rounds);
    for (int i = 0; i < n; ++i) utils[i].push_back(o.utility_sum[i] / cfg.rounds);
    m.replicate_digests.push_back(o.digest);
    m.learner_reports.push_back(std::move(o.reports));
  }
  detail::finish_metrics(m);
  for (int i = 0; i < n; ++i) {
    RunMetrics tmp;
    tmp.replicates = cfg.replicates;
    tmp.replicate_prices = utils[i];
    detail::finish_metrics(tmp);
    m.utilities.push_back(tmp.market_price);
    m.utility_stderr.push_back(tmp.standard_error);
  }
  m.welfare_residual = runner.welfare_residual();
  return result;
}

struct DefectedPrice {
  RunMetrics defected;
  std::optional<RunMetrics> baseline;  // absent when the baseline has open slots
};

/// Runs the profile with the defection installed, and the untouched profile
/// for comparison when it is complete.
inline DefectedPrice defected_price(const Profile& baseline, const DefectionSpec& defection, GameConfig params) {
  DefectedPrice out;
  params.profile = baseline;
  params.defection = defection;
  out.defected = run(params).metrics;
  const bool complete = std::all_of(baseline.begin(), baseline.end(), [](const StrategyPtr& s) { return s != nullptr; });
  if (complete) {
    params.defection.reset();
    out.baseline = run(params).metrics;
  }
  return out;
}

struct Lemma2Cap {
  double value = 1.0;
  bool vacuous = false;

  double reported() const noexcept { return std::min(value, 1.0); }
};

/// c + 1/K + (c + r/T)(1 + ln(1/c)): ceiling on the market price when the
/// no-regret defector averages utility c.
inline Lemma2Cap lemma2_cap(double c, double r_over_t, const PriceGrid& grid) {
  if (!(c > 0.0)) return {1.0, true};
  return {c + grid.step() + (c + r_over_t) * (1.0 + std::log(1.0 / std::min(c, 1.0))), false};
}

}  // namespace bertrand
