// bertrand: run, sweep, audit, cce and verify subcommands.
// Exit codes: 0 success, 1 usage or configuration error, 2 a bound check failed.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "bertrand/bertrand.hpp"

namespace fs = std::filesystem;
using namespace bertrand;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitBound = 2;

struct Options {
  std::string config;
  std::string profile;
  std::string out = ".";
  std::string mode;
  std::string suite;
  std::string sampling = "correlated";
  std::string method = "exact";
  std::optional<std::uint64_t> seed;
  std::optional<int> replicates;
  std::vector<int> n;
  std::optional<int> k;
  std::optional<int> t;
  std::vector<int> m;
  std::optional<double> max_slack;
};

fs::path out_dir(const Options& o) {
  fs::path p(o.out);
  std::error_code ec;
  fs::create_directories(p, ec);
  if (ec) throw UsageError("--out: cannot create " + p.string() + ": " + ec.message());
  return p;
}

std::string csv_defectors(const std::vector<int>& d) {
  std::string s;
  for (std::size_t k = 0; k < d.size(); ++k) s += (k ? ";" : "") + std::to_string(d[k]);
  return s;
}

CsvRow metrics_row(const std::string& id, const RunConfig& rc, const GameConfig& g, const RunMetrics& m,
                   const std::optional<RunMetrics>& baseline) {
  CsvRow r;
  r.experiment_id = id;
  r.construction = rc.profile.construction;
  r.n = rc.profile.n;
  r.k = rc.profile.k;
  r.t = rc.rounds;
  r.replicates = g.mode == EvalMode::kMonteCarlo ? g.replicates : 1;
  r.seed = g.seed;
  r.mode = to_string(g.mode);
  r.market_price = m.market_price;
  r.standard_error = m.standard_error;
  if (baseline) r.baseline_price = baseline->market_price;
  if (rc.defection) {
    const auto& d = rc.defection->defectors;
    r.m = static_cast<int>(d.size());
    r.defectors = csv_defectors(d);
    r.learner = rc.defection->learner == LearnerKind::kHedge ? "hedge" : "guarded";
    if (rc.defection->learner == LearnerKind::kGuarded) r.sampling_mode = to_string(rc.defection->sampling);
    double u = 0.0;
    for (int i : d) u += m.utilities.at(i) / static_cast<double>(d.size());
    r.defector_utility_mean = u;
    bool any = false;
    for (const auto& rep : m.learner_reports) {
      for (int i : d) {
        if (!rep[i]) continue;
        r.regret_measured_max = any ? std::max(*r.regret_measured_max, rep[i]->regret.measured) : rep[i]->regret.measured;
        r.regret_bound = any ? std::max(*r.regret_bound, rep[i]->regret.theoretical_bound) : rep[i]->regret.theoretical_bound;
        any = true;
      }
    }
  }
  r.pass = true;
  return r;
}

void apply_overrides(RunConfig& rc, const Options& o) {
  if (o.seed) rc.seed = *o.seed;
  if (o.replicates) {
    if (*o.replicates < 1) throw UsageError("--replicates: must be at least 1");
    rc.replicates = *o.replicates;
  }
  if (!o.mode.empty()) rc.mode = parse_eval_mode(o.mode);
  if (o.k) rc.profile.k = *o.k;
  if (o.t) rc.rounds = *o.t;
  if (!o.n.empty()) rc.profile.n = o.n.front();
}

int cmd_run(const Options& o) {
  if (o.config.empty()) throw UsageError("run: --config is required");
  RunConfig rc = parse_run_config(read_json_file(o.config));
  apply_overrides(rc, o);
  rc.record_trace = true;
  const GameConfig g = build_game(rc);
  const RunResult res = run(g);
  std::optional<RunMetrics> baseline;
  const bool complete = std::all_of(g.profile.begin(), g.profile.end(), [](const StrategyPtr& s) { return s != nullptr; });
  if (g.defection && complete) {
    GameConfig b = g;
    b.defection.reset();
    b.record_trace = false;
    baseline = run(b).metrics;
  }
  const fs::path dir = out_dir(o);
  Json doc{{"config", {{"profile", to_json(rc.profile)}, {"T", rc.rounds}, {"mode", to_string(rc.mode)},
                       {"replicates", rc.replicates}, {"seed", rc.seed}}},
           {"metrics", to_json(res.metrics)},
           {"trace", to_json(res.trace)}};
  if (baseline) doc["baseline_market_price"] = baseline->market_price;
  write_json_file(doc, (dir / "trace.json").string());
  emit_csv({metrics_row("run", rc, g, res.metrics, baseline)}, (dir / "metrics.csv").string());
  std::printf("market_price %.6f (stderr %.2e)\n", res.metrics.market_price, res.metrics.standard_error);
  for (int i = 0; i < res.metrics.players; ++i) std::printf("U[%d] %.6f\n", i, res.metrics.utilities[i]);
  if (baseline) std::printf("baseline_price %.6f\n", baseline->market_price);
  return kExitOk;
}

// Sweep document: a run config whose profile N/K and T may be arrays, plus a
// defector rule {"rule": median_profit | fixed_index | all_subsets_of_size_M}.
int cmd_sweep(const Options& o) {
  if (o.config.empty()) throw UsageError("sweep: --config is required");
  Json doc = read_json_file(o.config);
  if (!doc.is_object()) throw UsageError("<root>: expected an object");
  auto values = [&](Json& parent, const char* key, const std::string& path) {
    std::vector<Json> out;
    if (!parent.contains(key)) return out;
    if (parent[key].is_array()) {
      for (auto& v : parent[key]) out.push_back(v);
    } else {
      out.push_back(parent[key]);
    }
    if (out.empty()) throw UsageError(path + ": empty range");
    return out;
  };
  if (!doc.contains("profile") || !doc["profile"].is_object()) throw UsageError("profile: missing");
  const auto ns = values(doc["profile"], "N", "profile.N");
  const auto ks = values(doc["profile"], "K", "profile.K");
  const auto ts = values(doc, "T", "T");
  Json rule = doc.contains("defectors") ? doc["defectors"] : Json{{"rule", "median_profit"}};
  doc.erase("defectors");
  const detail::Reader rr(rule, "defectors");
  rr.reject_unknown({"rule", "index", "M", "learner", "sampling_mode"});
  const std::string rule_name = rr.get<std::string>("rule", "median_profit");
  if (rule_name != "median_profit" && rule_name != "fixed_index" && rule_name != "all_subsets_of_size_M") {
    throw UsageError("defectors.rule: expected median_profit, fixed_index or all_subsets_of_size_M");
  }
  const std::string learner = rr.get<std::string>("learner", "hedge");
  const std::string sampling = rr.get<std::string>("sampling_mode", "correlated");

  std::vector<CsvRow> rows;
  for (const Json& n : ns) {
    for (const Json& k : ks) {
      for (const Json& t : ts) {
        Json cell = doc;
        cell["profile"]["N"] = n;
        if (!k.is_null()) cell["profile"]["K"] = k;
        cell["T"] = t;
        RunConfig rc = parse_run_config(cell);
        apply_overrides(rc, o);
        GameConfig g = build_game(rc);
        std::optional<RunMetrics> baseline;
        const bool complete = std::all_of(g.profile.begin(), g.profile.end(), [](const StrategyPtr& s) { return s != nullptr; });
        if (complete) {
          GameConfig b = g;
          b.mode = detail::all_machines(g.profile) ? EvalMode::kExactAutomaton : g.mode;
          baseline = run(b).metrics;
        }
        std::vector<std::vector<int>> groups;
        if (rule_name == "median_profit") {
          if (!baseline) throw UsageError("defectors.rule: median_profit needs a complete profile");
          for (int d : median_profit_set(baseline->utilities)) groups.push_back({d});
        } else if (rule_name == "fixed_index") {
          groups.push_back({rr.get<int>("index")});
        } else {
          const int m = rr.get<int>("M");
          if (m < 1 || m > rc.profile.n) throw UsageError("defectors.M: must lie in [1, N]");
          std::vector<int> pick(m);
          for (int j = 0; j < m; ++j) pick[j] = j;
          while (true) {
            groups.push_back(pick);
            int j = m - 1;
            while (j >= 0 && pick[j] == rc.profile.n - m + j) --j;
            if (j < 0) break;
            ++pick[j];
            for (int q = j + 1; q < m; ++q) pick[q] = pick[q - 1] + 1;
          }
        }
        for (const auto& group : groups) {
          Json dj{{"defectors", group}, {"learner", learner}, {"sampling_mode", sampling}};
          cell["defection"] = dj;
          RunConfig cc = parse_run_config(cell);
          apply_overrides(cc, o);
          const GameConfig gc = build_game(cc);
          const RunMetrics m = run(gc).metrics;
          const std::string id = "sweep/" + cc.profile.construction + "/N=" + std::to_string(cc.profile.n) +
                                 "/K=" + std::to_string(cc.profile.k) + "/T=" + std::to_string(cc.rounds) +
                                 "/defectors=" + csv_defectors(group);
          rows.push_back(metrics_row(id, cc, gc, m, baseline));
          std::printf("%s price %.6f (stderr %.2e)\n", id.c_str(), m.market_price, m.standard_error);
        }
      }
    }
  }
  emit_csv(rows, (out_dir(o) / "sweep.csv").string());
  return kExitOk;
}

int cmd_audit(const Options& o) {
  if (o.profile.empty()) throw UsageError("audit: --profile is required");
  ProfileSpec spec = parse_profile_spec(read_json_file(o.profile));
  if (o.k) spec.k = *o.k;
  if (!o.n.empty()) spec.n = o.n.front();
  const int rounds = o.t.value_or(1000);
  if (rounds < 1) throw UsageError("--T: must be at least 1");
  const PriceGrid grid(spec.k);
  const Profile profile = build_profile(spec, rounds);
  AuditReport rep;
  const bool open_slot = spec.construction == "defection_aware" || spec.construction == "welfare_aware";
  if (open_slot) {
    // The known defector is stood in by a fixed price just below 1.
    const StrategyPtr stand_in = make_fixed_strategy(PriceDist::point(grid, grid.top() - 1), "fixed 1-1/K");
    std::optional<std::vector<int>> players;
    if (spec.construction == "welfare_aware") players = all_players_except(spec.n, {spec.ignored, spec.leader});
    rep = audit_defection_aware(profile, spec.ignored, stand_in, grid, rounds, players);
  } else if (o.method == "adoption") {
    rep = audit_adoption(profile, grid, rounds, hedge_factory(), std::nullopt,
                         AdoptionOptions{o.replicates.value_or(20), o.seed.value_or(1)});
  } else if (o.method == "canonical") {
    rep = audit_canonical(profile, grid, rounds, std::nullopt, CanonicalOptions{o.replicates.value_or(20), o.seed.value_or(1)});
  } else if (o.method == "exact") {
    rep = audit_exact(profile, grid, rounds);
  } else {
    throw UsageError("--method: expected exact, adoption or canonical");
  }
  write_json_file({{"profile", to_json(spec)}, {"audit", to_json(rep)}}, (out_dir(o) / "audit.json").string());
  std::printf("method %s\n", to_string(rep.method).c_str());
  for (const auto& p : rep.players) {
    std::printf("player %d gain %.3e (equilibrium %.6f, deviation %.6f) %s\n", p.player, p.gain, p.equilibrium_utility,
                p.deviation_utility, p.witness.c_str());
  }
  for (const auto& w : rep.warnings) std::printf("warning: %s\n", w.c_str());
  std::printf("eq_slack %.6e (2/T = %.6e)\n", rep.eq_slack(), 2.0 / rounds);
  if (o.max_slack && rep.eq_slack() > *o.max_slack) {
    std::printf("FAIL: eq_slack exceeds --max-slack %.6e\n", *o.max_slack);
    return kExitBound;
  }
  return kExitOk;
}

int cmd_cce(const Options& o) {
  const int m = o.m.empty() ? 2 : o.m.front();
  const PriceGrid grid(o.k.value_or(50));
  const SamplingMode mode = parse_sampling_mode(o.sampling);
  const CceSolution sol = solve_extremal_cce(m, grid);
  const CceCertificate cert = certify_cce(*sol.joint_law());
  Json doc = to_json(sol, mode);
  doc["certificate"] = {{"max_violation", cert.max_violation}, {"max_asymmetry", cert.max_asymmetry}};
  write_json_file(doc, (out_dir(o) / "cce.json").string());
  std::printf("objective %.6f  M/e^(M-1) %.6f  max violation %.2e  support %zu\n", sol.objective, extremal_cce_price(m),
              cert.max_violation, sol.outcomes.size());
  return cert.max_violation <= 1e-8 ? kExitOk : kExitBound;
}

int cmd_verify(const Options& o) {
  if (o.suite.empty()) throw UsageError("verify: --suite is required");
  std::vector<std::string> suites;
  if (o.suite == "all") {
    suites = suite_ids();
  } else {
    suites.push_back(o.suite);
  }
  std::vector<CsvRow> rows;
  bool ok = true;
  for (const std::string& s : suites) {
    SuiteParams p = default_suite_params(s);
    if (!o.n.empty()) p.n = o.n;
    if (o.k) p.k = *o.k;
    if (o.t) p.t = *o.t;
    if (!o.m.empty()) p.m = o.m;
    if (o.replicates) p.replicates = *o.replicates;
    if (o.seed) p.seed = *o.seed;
    const SuiteResult r = verify_suite(s, p);
    for (const BoundCheck& c : r.checks) {
      std::printf("%s %s measured %.6f %s %.6f (tolerance %.4f)\n", c.pass ? "PASS" : "FAIL", c.name.c_str(), c.measured,
                  c.upper ? "<=" : ">=", c.bound, c.tolerance);
    }
    for (const IdentityCheck& c : r.identities) {
      if (!c.pass()) {
        std::printf("FAIL identity %s residual %.2e gap %.2e deterministic %d\n", c.label.c_str(), c.welfare_residual,
                    c.welfare_gap, c.deterministic ? 1 : 0);
      }
    }
    for (const std::string& n : r.notes) std::printf("  %s\n", n.c_str());
    ok = ok && r.passed() && r.identities_hold();
    const auto more = r.rows();
    rows.insert(rows.end(), more.begin(), more.end());
  }
  emit_csv(rows, (out_dir(o) / (o.suite + ".csv")).string());
  return ok ? kExitOk : kExitBound;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Repeated Bertrand pricing games: simulation, auditing and bound checks"};
  app.require_subcommand(1);
  Options o;

  auto common = [&](CLI::App* c) {
    c->add_option("--out", o.out, "Output directory");
    c->add_option("--seed", o.seed, "Master seed");
    c->add_option("--replicates", o.replicates, "Monte Carlo replicates");
    c->add_option("--N", o.n, "Number of players")->delimiter(',');
    c->add_option("--K", o.k, "Grid resolution");
    c->add_option("--T", o.t, "Rounds");
  };
  CLI::App* run_cmd = app.add_subcommand("run", "Run one configured game");
  run_cmd->add_option("--config", o.config, "Run config (JSON)");
  run_cmd->add_option("--mode", o.mode, "monte_carlo or exact_automaton");
  common(run_cmd);

  CLI::App* sweep_cmd = app.add_subcommand("sweep", "Run a grid of defection experiments");
  sweep_cmd->add_option("--config", o.config, "Sweep config (JSON)")->required();
  sweep_cmd->add_option("--mode", o.mode, "monte_carlo or exact_automaton");
  common(sweep_cmd);

  CLI::App* audit_cmd = app.add_subcommand("audit", "Certify approximate equilibrium of a profile");
  audit_cmd->add_option("--profile", o.profile, "Profile (JSON)");
  audit_cmd->add_option("--config", o.profile, "Alias for --profile");
  audit_cmd->add_option("--method", o.method, "exact, adoption or canonical");
  audit_cmd->add_option("--max-slack", o.max_slack, "Exit 2 when the certified slack exceeds this");
  common(audit_cmd);

  CLI::App* cce_cmd = app.add_subcommand("cce", "Solve the extremal symmetric CCE");
  cce_cmd->add_option("--M", o.m, "Number of defectors");
  cce_cmd->add_option("--mode", o.sampling, "iid or correlated");
  common(cce_cmd);

  CLI::App* verify_cmd = app.add_subcommand("verify", "Run a bound-verification suite");
  verify_cmd->add_option("--suite", o.suite, "Suite id or 'all'");
  verify_cmd->add_option("--M", o.m, "Defector counts")->delimiter(',');
  common(verify_cmd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*run_cmd) return cmd_run(o);
    if (*sweep_cmd) return cmd_sweep(o);
    if (*audit_cmd) return cmd_audit(o);
    if (*cce_cmd) return cmd_cce(o);
    if (*verify_cmd) return cmd_verify(o);
  } catch (const UsageError& e) {
    std::fprintf(stderr, "usage error: %s\n", e.what());
    return kExitUsage;
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "configuration error: %s\n", e.what());
    return kExitUsage;
  } catch (const nlohmann::json::exception& e) {
    std::fprintf(stderr, "usage error: %s\n", e.what());
    return kExitUsage;
  }
  return kExitUsage;
}
