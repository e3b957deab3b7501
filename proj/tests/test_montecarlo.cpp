#include <gtest/gtest.h>

#include <cmath>

#include "mnacgt/montecarlo.hpp"

using namespace mnacgt;

namespace {

struct SmallSystem {
  SystemParams sp = SystemParams::from_snr(50, 0.1, 1e-2);
  DiscoveryConfig cfg = DiscoveryConfig::defaults_for(sp, 300, 1.5);
};

}  // namespace

TEST(Wilson, KnownInterval) {
  const RateEstimate e = wilson(10, 100);
  EXPECT_DOUBLE_EQ(e.rate, 0.1);
  EXPECT_NEAR(e.lo, 0.0552, 1e-4);
  EXPECT_NEAR(e.hi, 0.1744, 1e-4);
  const RateEstimate zero = wilson(0, 50);
  EXPECT_EQ(zero.lo, 0.0);
  EXPECT_GT(zero.hi, 0.0);
  EXPECT_FALSE(wilson(0, 0).available());
}

TEST(Trials, DeterministicAcrossWorkers) {
  const SmallSystem s;
  TrialOptions one;
  TrialOptions four;
  four.workers = 4;
  const TrialStats a = run_discovery_trials(s.sp, s.cfg, 100, Seed{77}, one);
  const TrialStats b = run_discovery_trials(s.sp, s.cfg, 100, Seed{77}, four);
  EXPECT_EQ(a, b);
  EXPECT_EQ(a.csv_row(), b.csv_row());
  const TrialStats c = run_discovery_trials(s.sp, s.cfg, 100, Seed{78}, one);
  EXPECT_FALSE(a == c);
}

TEST(Trials, CountersAreConsistent) {
  const SmallSystem s;
  const TrialStats t = run_discovery_trials(s.sp, s.cfg, 64, Seed{3});
  EXPECT_EQ(t.trials, 64u);
  EXPECT_EQ(t.active_user_total + t.inactive_user_total, 64u * 50u);
  EXPECT_LE(t.md_union_count, t.trials);
  EXPECT_LE(t.md_union_count, t.md_user_total);
  EXPECT_LE(t.md_user_total, t.active_user_total);
  EXPECT_LE(t.fp_user_total, t.inactive_user_total);
}

TEST(Trials, NoActiveUsersMeansNoMisses) {
  const SystemParams sp = SystemParams::from_snr(40, 0.0, 1e-2);
  DiscoveryConfig cfg = DiscoveryConfig::defaults_for(sp, 100, 1.0);
  cfg.p = 0.1;
  TrialOptions opt;
  opt.decoder_q1 = 0.3;
  const TrialStats t = run_discovery_trials(sp, cfg, 50, Seed{1}, opt);
  EXPECT_EQ(t.md_union_count, 0u);
  EXPECT_EQ(t.pmd().rate, 0.0);
}

TEST(Trials, FixedMatrixDiffersFromRedraw) {
  const SmallSystem s;
  TrialOptions fixed;
  fixed.fixed_matrix = true;
  const TrialStats a = run_discovery_trials(s.sp, s.cfg, 48, Seed{5}, fixed);
  const TrialStats b = run_discovery_trials(s.sp, s.cfg, 48, Seed{5});
  EXPECT_EQ(a.trials, b.trials);
  EXPECT_FALSE(a == b);
}

TEST(Trials, ArgumentChecks) {
  SmallSystem s;
  EXPECT_THROW(run_discovery_trials(s.sp, s.cfg, 0, Seed{1}), DomainError);
  s.cfg.n = 0;
  EXPECT_THROW(run_discovery_trials(s.sp, s.cfg, 1, Seed{1}), DomainError);
}

TEST(Trials, RoundTallyMatchesOutcomes) {
  const SmallSystem s;
  const SignatureMatrix m = gen_signature_matrix(50, 300, s.cfg.p, Seed{2});
  const RoundResult r = run_round(m, s.sp, s.cfg, 0.4, Seed{9});
  std::uint64_t q1_draws = 0;
  for (std::size_t j = 0; j < 50; ++j)
    if (r.activity.bits[j]) q1_draws += m.column_weight(j);
  EXPECT_EQ(r.stats.q1_draws, q1_draws);
  EXPECT_EQ(r.stats.md_user_total, r.errors.md_count);
}

TEST(ConditionalDraws, AgreeWithExactValues) {
  const SystemParams sp = SystemParams::from_snr(100, 0.1, 1e-2);
  DiscoveryConfig cfg = DiscoveryConfig::defaults_for(sp, 1, 1.0);
  cfg.p = 1.0 / 11.0;
  const std::uint64_t draws = 100000;
  const TrialStats t = estimate_q1_q2(sp, cfg, draws, Seed{21});
  EXPECT_EQ(t.q1_draws, draws);
  EXPECT_EQ(t.q2_draws, draws);
  const double q1 = q1_exact(sp, cfg);
  const double q2 = q2_exact(sp, cfg);
  EXPECT_NEAR(t.q1().rate, q1, 4.0 * std::sqrt(q1 * (1 - q1) / draws));
  EXPECT_NEAR(t.q2().rate, q2, 4.0 * std::sqrt(q2 * (1 - q2) / draws));
}

TEST(ConditionalDraws, WorkerIndependent) {
  const SystemParams sp = SystemParams::from_snr(30, 0.2, 1e-2);
  const DiscoveryConfig cfg = DiscoveryConfig::defaults_for(sp, 1, 1.0);
  EXPECT_EQ(estimate_q1_q2(sp, cfg, 20000, Seed{4}, 1), estimate_q1_q2(sp, cfg, 20000, Seed{4}, 3));
}

TEST(Rng, SeedChildrenDiffer) {
  const Seed s{1, 0};
  EXPECT_NE(s.child(0).stream, s.child(1).stream);
  Engine m1 = make_engine(Seed{1, 0}, Purpose::noise);
  Engine m2 = make_engine(Seed{2, 0}, Purpose::noise);
  EXPECT_NE(m1(), m2());
  Engine a = make_engine(s, Purpose::noise);
  Engine b = make_engine(s, Purpose::fading);
  EXPECT_NE(a(), b());
}
