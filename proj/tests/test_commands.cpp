#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "mnacgt/commands.hpp"

using namespace mnacgt;
using namespace mnacgt::cli;

namespace {

template <class Cmd>
CsvTable run(Cmd cmd, const RunConfig& rc, int expect_code = kExitOk) {
  std::ostringstream os;
  EXPECT_EQ(cmd(rc, os), expect_code);
  return parse_csv(os.str());
}

std::string first_line(const std::string& s) { return s.substr(0, s.find('\n')); }

RunConfig small_sweep() {
  RunConfig rc;
  rc.sweep = {"users", "log", 100, 1000, 4};
  rc.n = 200;
  rc.grid_points = 40;
  return rc;
}

}  // namespace

TEST(Sweep, GridValues) {
  SweepSpec s{"snr", "log", 1e-4, 1e-2, 3};
  const std::vector<double> v = s.values();
  EXPECT_DOUBLE_EQ(v[0], 1e-4);
  EXPECT_NEAR(v[1], 1e-3, 1e-15);
  EXPECT_DOUBLE_EQ(v[2], 1e-2);
  s.scale = "linear";
  EXPECT_NEAR(s.values()[1], 0.00505, 1e-15);
  EXPECT_THROW((SweepSpec{"snr", "log", 1e-2, 1e-4, 3}.validate()), ConfigError);
  EXPECT_THROW((SweepSpec{"bogus", "log", 1, 2, 3}.validate()), ConfigError);
  EXPECT_THROW((SweepSpec{"n", "log", 0, 2, 3}.validate()), ConfigError);
}

TEST(Config, MergeAndValidate) {
  RunConfig rc;
  rc.merge_json(nlohmann::json::parse(R"({"ell": 500, "alpha": 0.2, "sweep": {"points": 3}})"));
  EXPECT_EQ(rc.ell, 500u);
  EXPECT_EQ(*rc.alpha, 0.2);
  EXPECT_EQ(rc.sweep.points, 3u);
  EXPECT_THROW(rc.merge_json(nlohmann::json::parse(R"({"bogus": 1})")), ConfigError);
  rc.gamma = 0.5;
  EXPECT_THROW(rc.validate(), ConfigError);
  rc.alpha.reset();
  rc.gamma = 1.5;
  EXPECT_THROW(rc.validate(), ConfigError);
}

TEST(Config, HeaderOmitsExecutionSettings) {
  RunConfig rc;
  rc.workers = 8;
  rc.out = "x.csv";
  rc.progress = true;
  const nlohmann::json j = rc.to_json();
  EXPECT_FALSE(j.contains("workers"));
  EXPECT_FALSE(j.contains("out"));
  EXPECT_FALSE(j.contains("progress"));
}

TEST(CapacityCurve, InterceptAndSlope) {
  RunConfig rc;
  rc.sweep = {"n", "linear", 2000, 20000, 10};
  const CsvTable t = run(cmd_capacity_curve, rc);
  ASSERT_EQ(t.rows.size(), 40u);
  const std::size_t n_col = t.column("n");
  const std::size_t m_col = t.column("lnM_nats");
  const double c = c_su(1e-4);
  for (std::size_t i = 0; i < t.rows.size(); i += 10) {
    const double n0 = std::stod(t.rows[i][n_col]);
    const double n1 = std::stod(t.rows[i + 9][n_col]);
    const double m0 = std::stod(t.rows[i][m_col]);
    const double m1 = std::stod(t.rows[i + 9][m_col]);
    const double slope = (m1 - m0) / (n1 - n0);
    EXPECT_NEAR(slope, c, 1e-9 * c);
    const SystemParams sp = SystemParams::from_scaling(std::stoull(t.rows[i][0]), 0.5, 1e-4);
    const double intercept = n0 - m0 / slope;
    const double want = min_user_id_cost_lb(sp, CapacityFn::low_snr_rayleigh());
    EXPECT_NEAR(intercept, want, 1e-6 * want);
  }
  for (const auto& row : t.rows) EXPECT_GE(std::stod(row[t.column("M_bits_clamped")]), 0.0);
}

TEST(CapacityCurve, ValidityViolationsAreRowErrors) {
  RunConfig rc;
  rc.snr = 0.5;
  rc.sweep = {"n", "linear", 100, 200, 2};
  rc.ells = {100};
  const CsvTable t = run(cmd_capacity_curve, rc);
  ASSERT_EQ(t.rows.size(), 2u);
  EXPECT_EQ(t.rows[0][t.column("status")].rfind("error", 0), 0u);
}

TEST(GapSweep, ByteIdenticalAcrossWorkers) {
  RunConfig rc = small_sweep();
  rc.trials = 20;
  rc.seed = 5;
  std::ostringstream a;
  std::ostringstream b;
  rc.workers = 1;
  ASSERT_EQ(cmd_gap_sweep(rc, a), kExitOk);
  rc.workers = 4;
  ASSERT_EQ(cmd_gap_sweep(rc, b), kExitOk);
  EXPECT_EQ(a.str(), b.str());
  EXPECT_EQ(first_line(a.str()).rfind("# {", 0), 0u);
  const CsvTable t = parse_csv(a.str());
  EXPECT_EQ(t.rows.size(), 4u);
  EXPECT_EQ(t.rows[0][t.column("mc_trials")], "20");
}

TEST(GapSweep, InfeasiblePointsAreMarked) {
  RunConfig rc = small_sweep();
  rc.alpha = 1.0;
  const CsvTable t = run([](const RunConfig& r, std::ostream& o) { return cmd_gap_sweep(r, o); }, rc, kExitNumerical);
  for (const auto& row : t.rows) EXPECT_EQ(row[t.column("status")].rfind("error", 0), 0u);
}

TEST(Simulate, NoActiveUsers) {
  RunConfig rc;
  rc.ell = 50;
  rc.alpha = 0.0;
  rc.n = 100;
  rc.p = 0.1;
  rc.tau2 = 1.0;
  rc.trials = 30;
  rc.q1_mode = "exact";
  const CsvTable t = run([](const RunConfig& r, std::ostream& o) { return cmd_simulate(r, o); }, rc);
  ASSERT_EQ(t.rows.size(), 1u);
  EXPECT_EQ(t.rows[0][t.column("pmd_emp")], "0");
}

TEST(Simulate, SameSeedSameBytes) {
  RunConfig rc;
  rc.ell = 100;
  rc.alpha = 0.05;
  rc.snr = 1e-2;
  rc.n = 500;
  rc.trials = 40;
  std::ostringstream a;
  std::ostringstream b;
  cmd_simulate(rc, a);
  rc.workers = 3;
  cmd_simulate(rc, b);
  EXPECT_EQ(a.str(), b.str());
}

TEST(Bounds, SingleRow) {
  RunConfig rc;
  rc.ell = 200;
  rc.alpha = 0.07;
  rc.snr = 1e-2;
  rc.n = 2000;
  rc.tau2 = 1.0;
  const CsvTable t = run(cmd_bounds, rc);
  ASSERT_EQ(t.rows.size(), 1u);
  EXPECT_EQ(t.rows[0][t.column("n")], "2000");
  EXPECT_EQ(t.rows[0][t.column("tau2")], "1");
}

TEST(IdCost, SnrSweep) {
  RunConfig rc;
  rc.sweep = {"snr", "log", 1e-4, 1e-2, 3};
  const CsvTable t = run(cmd_id_cost, rc);
  ASSERT_EQ(t.rows.size(), 3u);
  const double a = std::stod(t.rows[0][t.column("n0")]);
  const double b = std::stod(t.rows[2][t.column("n0")]);
  EXPECT_GT(a, b);
}

TEST(Validate, PerturbedGoldenFails) {
  const auto dir = std::filesystem::temp_directory_path();
  const std::string path = (dir / "mnacgt_perturbed_golden.json").string();
  {
    std::ofstream f(path);
    f << R"j({"c_su(1e-4)": {"value": 5.8e-05, "rel_tol": 1e-9}})j";
  }
  RunConfig rc;
  rc.golden = path;
  std::ostringstream os;
  EXPECT_EQ(cmd_validate(rc, os), kExitNumerical);
  EXPECT_NE(os.str().find("[FAIL] golden c_su(1e-4)"), std::string::npos);
  std::remove(path.c_str());
  rc.golden = (dir / "does_not_exist.json").string();
  EXPECT_THROW(cmd_validate(rc, os), ConfigError);
}
