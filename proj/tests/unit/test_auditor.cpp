#include <gtest/gtest.h>

#include <string>
#include <vector>

#include "bertrand/auditor.hpp"
#include "bertrand/constructions.hpp"

namespace bertrand {
namespace {

TEST(Auditor, GrimBestDeviationIsALastRoundUndercut) {
  // Undercutting earlier triggers punishment that pays less than cooperating,
  // so the best deviation waits for the final round.
  for (int n : {2, 3, 5}) {
    const PriceGrid g(10);
    const int t = 40;
    const AuditReport r = audit_exact(make_simple_grim(n, g), g, t);
    ASSERT_EQ(r.method, AuditMethod::kExactDp);
    ASSERT_EQ(static_cast<int>(r.players.size()), n);
    const double expected = ((1.0 - 0.1) - 1.0 / n) / t;
    for (const PlayerAudit& p : r.players) {
      EXPECT_NEAR(p.equilibrium_utility, 1.0 / n, 1e-12);
      EXPECT_NEAR(p.gain, expected, 1e-12) << "N=" << n;
      EXPECT_NE(p.witness.find("9/10"), std::string::npos) << p.witness;
    }
    EXPECT_NEAR(r.eq_slack(), expected, 1e-12);
  }
}

TEST(Auditor, ProfileWithoutAThreatIsFarFromEquilibrium) {
  // Everyone posts 1 no matter what: undercutting every round is free.
  const PriceGrid g(20);
  const int n = 4;
  const Profile naive(n, make_fixed_strategy(PriceDist::point(g, g.top()), "always 1"));
  const AuditReport r = audit_exact(naive, g, 30);
  EXPECT_NEAR(r.eq_slack(), 1.0 - 1.0 / 20 - 1.0 / n, 1e-12);
}

TEST(Auditor, DpDominatesScriptedDeviations) {
  const PriceGrid g(12);
  for (const Profile& prof : {make_simple_grim(3, g), make_zero_grim(3, g), make_multidefector_base(3, g),
                              make_pathological(2, 3, g), make_cyclic_erd(3, g, 0.1)}) {
    const ScriptedCheck s = check_scripted_deviations(prof, 0, g, 60, 40, 9);
    EXPECT_EQ(s.scripts, 40);
    EXPECT_LE(s.max_excess, 1e-9) << s.worst;
  }
}

TEST(Auditor, ShippedProfilesWithinTwoOverT) {
  const PriceGrid g(20);
  const int t = 200;
  for (int n : {2, 3, 4}) {
    EXPECT_LE(audit_exact(make_simple_grim(n, g), g, t).eq_slack(), 2.0 / t);
    EXPECT_LE(audit_exact(make_zero_grim(n, g), g, t).eq_slack(), 2.0 / t);
    EXPECT_LE(audit_exact(make_multidefector_base(n, g), g, t).eq_slack(), 2.0 / t);
  }
  EXPECT_LE(audit_exact(make_pathological(2, 3, g), g, t).eq_slack(), 2.0 / t);
}

TEST(Auditor, DefectionAwareNeedsSomeoneToPunish) {
  const PriceGrid g(20);
  const StrategyPtr human = make_fixed_strategy(PriceDist::point(g, 19), "fixed 19/20");
  const int t = 100;
  EXPECT_LE(audit_defection_aware(make_defection_aware(0, 3, g), 0, human, g, t).eq_slack(), 2.0 / t);
  // Alone in J, the remaining player undercuts the stand-in unpunished.
  EXPECT_GT(audit_defection_aware(make_defection_aware(0, 2, g), 0, human, g, t).eq_slack(), 0.5);
}

TEST(Auditor, LearnersFallBackToCanonicalDeviations) {
  const PriceGrid g(10);
  Profile prof = make_simple_grim(3, g);
  prof[1] = make_hedge(g, 50);
  const AuditReport r = audit_exact(prof, g, 50, std::vector<int>{0});
  EXPECT_EQ(r.method, AuditMethod::kCanonicalDeviations);
  EXPECT_FALSE(r.warnings.empty());
  ASSERT_EQ(r.players.size(), 1u);
}

TEST(Auditor, AdoptingHedgeAgainstGrimDoesNotPay) {
  const PriceGrid g(20);
  const AuditReport r = audit_adoption(make_simple_grim(3, g), g, 300, hedge_factory(), std::nullopt, {4, 3});
  EXPECT_EQ(r.method, AuditMethod::kNoRegretOnly);
  for (const PlayerAudit& p : r.players) EXPECT_LT(p.gain, 0.0);
}

TEST(Auditor, BestDeviationValueMatchesReport) {
  const PriceGrid g(10);
  const Profile prof = make_zero_grim(2, g);
  std::string witness;
  const double v = best_deviation_value(prof, 1, g, 25, &witness);
  const AuditReport r = audit_exact(prof, g, 25);
  EXPECT_NEAR(v, r.players[1].deviation_utility, 1e-12);
  EXPECT_EQ(witness, r.players[1].witness);
}

}  // namespace
}  // namespace bertrand
