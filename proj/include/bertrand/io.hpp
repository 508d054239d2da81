#pragma once

// JSON configuration and output documents. Profiles are described by
// construction name and parameters; run configs add a horizon, an optional
// defection, and the evaluation mode.

#include <fstream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "bertrand/auditor.hpp"
#include "bertrand/cce.hpp"
#include "bertrand/constructions.hpp"
#include "bertrand/engine.hpp"
#include "bertrand/learners.hpp"

namespace bertrand {

using Json = nlohmann::json;

struct ProfileSpec {
  std::string construction;
  int n = 2;
  int k = 100;
  std::optional<double> perturb;
  int i_star = 0;
  int ignored = 0;
  int leader = 1;
  double c = 0.36787944117144233;
  std::uint64_t seed = 1;  // random_automaton only
};

inline const std::vector<std::string>& construction_names() {
  static const std::vector<std::string> names{"simple_grim",       "zero_grim",      "pathological",
                                              "cyclic_erd",        "multidefector_base", "defection_aware",
                                              "welfare_aware",     "random_automaton"};
  return names;
}

/// `horizon` picks the default cyclic perturbation when none is given.
inline Profile build_profile(const ProfileSpec& s, int horizon) {
  const PriceGrid grid(s.k);
  if (s.construction == "simple_grim") return make_simple_grim(s.n, grid);
  if (s.construction == "zero_grim") return make_zero_grim(s.n, grid);
  if (s.construction == "pathological") return make_pathological(s.i_star, s.n, grid);
  if (s.construction == "cyclic_erd") {
    return s.perturb ? make_cyclic_erd(s.n, grid, *s.perturb) : make_cyclic_erd_for_horizon(s.n, grid, horizon);
  }
  if (s.construction == "multidefector_base") return make_multidefector_base(s.n, grid);
  if (s.construction == "defection_aware") return make_defection_aware(s.ignored, s.n, grid);
  if (s.construction == "welfare_aware") return make_welfare_aware(s.ignored, s.leader, s.n, grid, s.c, s.perturb.value_or(0.05));
  if (s.construction == "random_automaton") {
    std::mt19937_64 rng(s.seed);
    return random_automaton_profile(s.n, grid, rng);
  }
  throw UsageError("unknown construction '" + s.construction + "'");
}

enum class LearnerKind { kHedge, kGuarded };

struct DefectionConfig {
  std::vector<int> defectors;
  LearnerKind learner = LearnerKind::kHedge;
  SamplingMode sampling = SamplingMode::kCorrelated;
};

struct RunConfig {
  ProfileSpec profile;
  int rounds = 1000;
  std::optional<DefectionConfig> defection;
  EvalMode mode = EvalMode::kMonteCarlo;
  int replicates = 100;
  std::uint64_t seed = 1;
  bool record_trace = false;
  bool record_distributions = false;
};

namespace detail {

// Typed field access that names the offending path on failure.
class Reader {
 public:
  Reader(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw UsageError(where() + ": expected an object");
  }

  bool has(const char* key) const { return j_.contains(key) && !j_.at(key).is_null(); }

  template <class T>
  T get(const char* key) const {
    if (!has(key)) throw UsageError(field(key) + ": missing");
    return as<T>(j_.at(key), field(key));
  }

  template <class T>
  T get(const char* key, T fallback) const {
    return has(key) ? as<T>(j_.at(key), field(key)) : fallback;
  }

  template <class T>
  std::optional<T> maybe(const char* key) const {
    if (!has(key)) return std::nullopt;
    return as<T>(j_.at(key), field(key));
  }

  Reader child(const char* key) const {
    if (!has(key)) throw UsageError(field(key) + ": missing");
    return Reader(j_.at(key), field(key));
  }

  std::vector<int> int_list(const char* key) const {
    if (!has(key)) throw UsageError(field(key) + ": missing");
    const Json& a = j_.at(key);
    if (!a.is_array()) throw UsageError(field(key) + ": expected an array of integers");
    std::vector<int> out;
    for (std::size_t k = 0; k < a.size(); ++k) out.push_back(as<int>(a[k], field(key) + "[" + std::to_string(k) + "]"));
    return out;
  }

  void reject_unknown(std::initializer_list<const char*> known) const {
    for (const auto& [key, _] : j_.items()) {
      bool ok = false;
      for (const char* k : known) ok = ok || key == k;
      if (!ok) throw UsageError(field(key.c_str()) + ": unknown field");
    }
  }

  std::string field(const char* key) const { return path_.empty() ? std::string(key) : path_ + "." + key; }

 private:
  std::string where() const { return path_.empty() ? std::string("<root>") : path_; }

  template <class T>
  static T as(const Json& v, const std::string& path) {
    if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) throw UsageError(path + ": expected a boolean");
      return v.get<bool>();
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) throw UsageError(path + ": expected a string");
      return v.get<std::string>();
    } else if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer()) throw UsageError(path + ": expected an integer");
      if constexpr (std::is_unsigned_v<T>) {
        if (v.is_number_unsigned()) return v.get<T>();
        if (v.get<long long>() < 0) throw UsageError(path + ": expected a non-negative integer");
      }
      return v.get<T>();
    } else {
      if (!v.is_number()) throw UsageError(path + ": expected a number");
      return v.get<T>();
    }
  }

  const Json& j_;
  std::string path_;
};

}  // namespace detail

inline ProfileSpec parse_profile_spec(const Json& j, const std::string& path = "") {
  const detail::Reader r(j, path);
  r.reject_unknown({"construction", "N", "K", "params"});
  ProfileSpec s;
  s.construction = r.get<std::string>("construction");
  bool known = false;
  for (const auto& n : construction_names()) known = known || n == s.construction;
  if (!known) throw UsageError(r.field("construction") + ": unknown construction '" + s.construction + "'");
  s.n = r.get<int>("N");
  s.k = r.get<int>("K", s.k);
  if (r.has("params")) {
    const detail::Reader p = r.child("params");
    p.reject_unknown({"perturb", "i_star", "ignored", "leader", "c", "seed"});
    s.perturb = p.maybe<double>("perturb");
    s.i_star = p.get<int>("i_star", s.i_star);
    s.ignored = p.get<int>("ignored", s.ignored);
    s.leader = p.get<int>("leader", s.leader);
    s.c = p.get<double>("c", s.c);
    s.seed = p.get<std::uint64_t>("seed", s.seed);
  }
  return s;
}

inline Json to_json(const ProfileSpec& s) {
  Json params = Json::object();
  if (s.perturb) params["perturb"] = *s.perturb;
  if (s.construction == "pathological") params["i_star"] = s.i_star;
  if (s.construction == "defection_aware" || s.construction == "welfare_aware") params["ignored"] = s.ignored;
  if (s.construction == "welfare_aware") {
    params["leader"] = s.leader;
    params["c"] = s.c;
  }
  if (s.construction == "random_automaton") params["seed"] = s.seed;
  return {{"construction", s.construction}, {"N", s.n}, {"K", s.k}, {"params", params}};
}

inline EvalMode parse_eval_mode(const std::string& s) {
  if (s == "monte_carlo") return EvalMode::kMonteCarlo;
  if (s == "exact_automaton" || s == "exact") return EvalMode::kExactAutomaton;
  throw UsageError("unknown mode '" + s + "' (expected monte_carlo or exact_automaton)");
}

inline RunConfig parse_run_config(const Json& j) {
  const detail::Reader r(j, "");
  r.reject_unknown({"profile", "T", "defection", "mode", "replicates", "seed", "record_trace", "record_distributions"});
  RunConfig c;
  if (!r.has("profile")) throw UsageError("profile: missing");
  c.profile = parse_profile_spec(j.at("profile"), "profile");
  c.rounds = r.get<int>("T");
  if (c.rounds < 1) throw UsageError("T: must be at least 1");
  if (r.has("defection")) {
    const detail::Reader d = r.child("defection");
    d.reject_unknown({"defectors", "learner", "sampling_mode"});
    DefectionConfig dc;
    dc.defectors = d.int_list("defectors");
    const std::string learner = d.get<std::string>("learner", "hedge");
    if (learner == "hedge") {
      dc.learner = LearnerKind::kHedge;
    } else if (learner == "guarded") {
      dc.learner = LearnerKind::kGuarded;
    } else {
      throw UsageError(d.field("learner") + ": expected hedge or guarded, got '" + learner + "'");
    }
    const std::string sm = d.get<std::string>("sampling_mode", "correlated");
    try {
      dc.sampling = parse_sampling_mode(sm);
    } catch (const UsageError& e) {
      throw UsageError(d.field("sampling_mode") + ": " + e.what());
    }
    c.defection = dc;
  }
  if (r.has("mode")) {
    try {
      c.mode = parse_eval_mode(r.get<std::string>("mode"));
    } catch (const UsageError& e) {
      throw UsageError(std::string("mode: ") + e.what());
    }
  }
  c.replicates = r.get<int>("replicates", c.replicates);
  if (c.replicates < 1) throw UsageError("replicates: must be at least 1");
  c.seed = r.get<std::uint64_t>("seed", c.seed);
  c.record_trace = r.get<bool>("record_trace", c.record_trace);
  c.record_distributions = r.get<bool>("record_distributions", c.record_distributions);
  return c;
}

inline Json read_json_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw UsageError("cannot open " + path);
  try {
    return Json::parse(f);
  } catch (const Json::parse_error& e) {
    throw UsageError(path + ": " + e.what());
  }
}

/// Replacement strategies for the configured defectors. Guarded groups follow
/// the extremal CCE for as many players as there are defectors.
inline DefectionSpec build_defection(const DefectionConfig& d, const PriceGrid& grid, int rounds) {
  DefectionSpec spec;
  spec.defectors = d.defectors;
  if (d.learner == LearnerKind::kHedge) {
    for (std::size_t k = 0; k < d.defectors.size(); ++k) spec.replacements.push_back(make_hedge(grid, rounds));
    return spec;
  }
  const int m = static_cast<int>(d.defectors.size());
  if (m < 2) throw UsageError("defection.learner: guarded defectors need at least two defectors");
  const CceSolution sol = solve_extremal_cce(m, grid);
  const CcePlay play = cce_play(sol, d.sampling);
  for (int k = 0; k < m; ++k) {
    if (d.sampling == SamplingMode::kCorrelated) {
      spec.replacements.push_back(std::make_shared<GuardedLearner>(grid, rounds, play.law, k, GuardConfig::standard(grid)));
    } else {
      spec.replacements.push_back(std::make_shared<GuardedLearner>(grid, rounds, play.marginal, GuardConfig::standard(grid)));
    }
  }
  return spec;
}

inline GameConfig build_game(const RunConfig& c) {
  GameConfig g;
  g.grid = PriceGrid(c.profile.k);
  g.rounds = c.rounds;
  g.profile = build_profile(c.profile, c.rounds);
  if (c.defection) g.defection = build_defection(*c.defection, g.grid, c.rounds);
  g.mode = c.mode;
  g.replicates = c.replicates;
  g.seed = c.seed;
  g.record_trace = c.record_trace;
  g.record_distributions = c.record_distributions;
  return g;
}

inline Json to_json(const Trace& t) {
  Json rounds = Json::array();
  for (const RoundRecord& r : t.rounds) {
    Json j{{"round", r.round}, {"expected_min", r.expected_min}, {"payoffs", r.payoffs}};
    if (!r.realized.empty()) j["realized"] = r.realized;
    if (!r.distributions.empty()) j["distributions"] = r.distributions;
    rounds.push_back(std::move(j));
  }
  return {{"mode", to_string(t.mode)},
          {"master_seed", t.master_seed},
          {"replicate_seeds", t.replicate_seeds},
          {"rounds", std::move(rounds)}};
}

inline Json to_json(const LearnerReport& r) {
  Json j{{"kind", r.kind},
         {"regret_measured", r.regret.measured},
         {"regret_bound", r.regret.theoretical_bound},
         {"best_fixed_price", r.regret.best_fixed_price}};
  if (r.breach_round) j["breach_round"] = *r.breach_round;
  if (r.off_watch_mass) j["off_watch_mass"] = *r.off_watch_mass;
  return j;
}

inline Json to_json(const RunMetrics& m) {
  Json reports = Json::array();
  for (const auto& rep : m.learner_reports) {
    Json row = Json::array();
    for (const auto& r : rep) row.push_back(r ? to_json(*r) : Json());
    reports.push_back(std::move(row));
  }
  return {{"players", m.players},
          {"rounds", m.rounds},
          {"replicates", m.replicates},
          {"market_price", m.market_price},
          {"stderr", m.standard_error},
          {"utilities", m.utilities},
          {"utility_stderr", m.utility_stderr},
          {"replicate_prices", m.replicate_prices},
          {"welfare_residual", m.welfare_residual},
          {"replicate_digests", m.replicate_digests},
          {"learner_reports", std::move(reports)}};
}

inline Json to_json(const AuditReport& r) {
  Json players = Json::array();
  for (const PlayerAudit& p : r.players) {
    players.push_back({{"player", p.player},
                       {"equilibrium_utility", p.equilibrium_utility},
                       {"deviation_utility", p.deviation_utility},
                       {"gain", p.gain},
                       {"stderr", p.standard_error},
                       {"witness", p.witness}});
  }
  return {{"method", to_string(r.method)},
          {"T", r.rounds},
          {"eq_slack", r.eq_slack()},
          {"players", std::move(players)},
          {"warnings", r.warnings}};
}

inline Json to_json(const CceSolution& s, SamplingMode mode) {
  const PriceDist marginal = s.marginal();
  Json table = Json::array();
  for (std::size_t k = 0; k < s.outcomes.size(); ++k) table.push_back({{"prices", s.outcomes[k]}, {"prob", s.probs[k]}});
  return {{"M", s.players},
          {"K", s.grid.resolution()},
          {"objective", s.objective},
          {"mode", to_string(mode)},
          {"table", std::move(table)},
          {"marginal", std::vector<double>(marginal.mass().begin(), marginal.mass().end())},
          {"columns", s.columns},
          {"pivots", s.iterations}};
}

inline void write_json_file(const Json& j, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw UsageError("cannot open " + path + " for writing");
  f << j.dump(2) << "\n";
  if (!f) throw UsageError("failed writing " + path);
}

}  // namespace bertrand
