#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "bertrand/experiments.hpp"

namespace bertrand {
namespace {

const char* kHeader =
    "experiment_id,construction,N,K,T,M,defectors,learner,mode,sampling_mode,replicates,seed,market_price,stderr,"
    "baseline_price,defector_utility_mean,regret_measured_max,regret_bound,bound_id,bound_value,pass\r\n";

TEST(Csv, EmptySweepIsHeaderOnly) { EXPECT_EQ(to_csv({}), kHeader); }

TEST(Csv, QuotesAndBlanks) {
  CsvRow r;
  r.experiment_id = "a,b";
  r.construction = "say \"hi\"";
  r.n = 4;
  r.k = 1000;
  r.t = 20000;
  r.m = 2;
  r.defectors = "0;1";
  r.learner = "guarded";
  r.mode = "monte_carlo";
  r.sampling_mode = "iid";
  r.replicates = 100;
  r.seed = 7;
  r.market_price = 0.25;
  r.standard_error = 1e-3;
  r.bound_id = "prop1_lower";
  r.bound_value = 1.0 / 3.0;
  r.pass = true;
  const std::string csv = to_csv({r});
  EXPECT_EQ(csv.substr(std::string(kHeader).size()),
            "\"a,b\",\"say \"\"hi\"\"\",4,1000,20000,2,0;1,guarded,monte_carlo,iid,100,7,0.25,0.001,,,,,prop1_lower,"
            "0.3333333333,true\r\n");
}

TEST(Csv, WriteFailureNamesThePath) {
  try {
    emit_csv({}, "/nonexistent_dir/x.csv");
    FAIL();
  } catch (const UsageError& e) {
    EXPECT_NE(std::string(e.what()).find("/nonexistent_dir/x.csv"), std::string::npos);
  }
  const auto path = std::filesystem::temp_directory_path() / "bertrand_empty.csv";
  emit_csv({}, path.string());
  std::ifstream f(path, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  EXPECT_EQ(ss.str(), kHeader);
}

TEST(BoundCheckRule, LowerAndUpper) {
  const BoundCheck lo = detail::make_check("x", "prop1_lower", 0.24, 0.25, 0.02, false, {});
  EXPECT_TRUE(lo.pass);
  EXPECT_NEAR(lo.slack(), 0.01, 1e-12);
  EXPECT_FALSE(detail::make_check("x", "prop1_lower", 0.2, 0.25, 0.02, false, {}).pass);
  const BoundCheck up = detail::make_check("y", "thm4_upper", 0.81, 0.8, 0.0, true, {});
  EXPECT_FALSE(up.pass);
  EXPECT_EQ(up.row.bound_id, "thm4_upper");
  EXPECT_FALSE(up.row.pass);
}

SuiteParams small(const std::string& suite) {
  SuiteParams p = default_suite_params(suite);
  p.k = 40;
  p.t = 300;
  p.replicates = 4;
  return p;
}

TEST(Suites, DeterministicCsvBytes) {
  SuiteParams p = small("prop1");
  p.n = {2, 3};
  const std::string a = to_csv(verify_suite("prop1", p).rows());
  const std::string b = to_csv(verify_suite("prop1", p).rows());
  EXPECT_EQ(a, b);
  p.seed += 1;
  EXPECT_NE(a, to_csv(verify_suite("prop1", p).rows()));
}

TEST(Suites, IdentitiesHoldOnSmallRuns) {
  SuiteParams p = small("lemma2");
  p.profiles = 12;
  const SuiteResult r = verify_suite("lemma2", p);
  EXPECT_EQ(r.checks.size(), 12u);
  EXPECT_EQ(r.identities.size(), 12u);
  EXPECT_TRUE(r.identities_hold());
  EXPECT_TRUE(r.passed());
}

TEST(Suites, DefectionAwareRowsHaveNoBaseline) {
  SuiteParams p = small("thm5");
  p.n = {3};
  const SuiteResult r = verify_suite("thm5", p);
  ASSERT_EQ(r.checks.size(), 1u);
  EXPECT_FALSE(r.checks[0].row.baseline_price);
  EXPECT_EQ(r.checks[0].bound_id, "thm5_lower");
  EXPECT_NE(to_csv(r.rows()).find(",monte_carlo,,4,"), std::string::npos);
}

TEST(Suites, CceSuiteReportsMonotoneObjectives) {
  const SuiteResult r = verify_suite("cce", default_suite_params("cce"));
  EXPECT_TRUE(r.passed());
  int monotone = 0;
  for (const auto& c : r.checks) monotone += c.name.find("/monotone") != std::string::npos;
  EXPECT_EQ(monotone, 2);
}

TEST(Suites, EveryIdHasDefaults) {
  for (const std::string& id : suite_ids()) EXPECT_NO_THROW(default_suite_params(id)) << id;
  EXPECT_THROW(default_suite_params("thm99"), UsageError);
  EXPECT_THROW(verify_suite("thm99", SuiteParams{}), UsageError);
}

}  // namespace
}  // namespace bertrand
