#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <mutex>
#include <numbers>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "mnacgt/channel_sim.hpp"
#include "mnacgt/csv.hpp"
#include "mnacgt/entropy_capacity.hpp"
#include "mnacgt/errors.hpp"
#include "mnacgt/gt_bounds.hpp"
#include "mnacgt/montecarlo.hpp"
#include "mnacgt/oracles.hpp"
#include "mnacgt/parallel.hpp"

namespace mnacgt::cli {

enum ExitCode : int { kExitOk = 0, kExitUsage = 1, kExitNumerical = 2 };

struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Sweep variable and grid. The grid is log- or linearly spaced between
// positive, ordered endpoints.
struct SweepSpec {
  std::string variable = "users";  // users | snr | n
  std::string scale = "log";       // log | linear
  double from = 1e3;
  double to = 1e6;
  std::size_t points = 7;

  void validate() const {
    if (variable != "users" && variable != "snr" && variable != "n") {
      throw ConfigError("sweep variable must be one of users, snr, n");
    }
    if (scale != "log" && scale != "linear") throw ConfigError("sweep scale must be log or linear");
    if (!(from > 0.0) || !(to >= from)) throw ConfigError("sweep endpoints must be positive and ordered");
    if (points < 1) throw ConfigError("sweep needs at least one point");
    if (points == 1 && to != from) throw ConfigError("a one-point sweep needs equal endpoints");
  }

  std::vector<double> values() const {
    validate();
    std::vector<double> v(points);
    for (std::size_t i = 0; i < points; ++i) {
      const double f = points == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(points - 1);
      v[i] = scale == "log" ? std::exp(std::log(from) + f * (std::log(to) - std::log(from))) : from + f * (to - from);
    }
    v.back() = to;
    v.front() = from;
    return v;
  }
};

// Effective configuration of one command: defaults, then the --config JSON
// file, then explicit flags.
struct RunConfig {
  std::uint64_t ell = 10000;
  std::optional<double> alpha;
  std::optional<double> gamma;
  double snr = 1e-4;
  std::optional<std::uint64_t> n;
  std::optional<double> p;
  double delta = 0.05;
  double delta_exp = 1.0;
  std::optional<double> tau2;
  bool optimize_tau = false;
  std::size_t grid_points = 200;
  std::uint64_t trials = 0;
  std::uint64_t seed = 0;
  std::string q1_mode = "jensen_lb";
  std::string fading = "block";
  bool fixed_matrix = false;
  bool allow_outside_validity = false;
  SweepSpec sweep;
  std::vector<double> ells = {2.0, 1e2, 1e4, 1e6};
  std::string golden;

  // execution-only settings, never echoed (outputs must not depend on them)
  std::optional<std::size_t> workers;
  std::optional<std::string> out;
  bool progress = false;

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["ell"] = ell;
    if (alpha) j["alpha"] = *alpha;
    if (gamma) j["gamma"] = *gamma;
    j["snr"] = snr;
    if (n) j["n"] = *n;
    if (p) j["p"] = *p;
    j["delta"] = delta;
    j["delta_exp"] = delta_exp;
    if (tau2) j["tau2"] = *tau2;
    j["optimize_tau"] = optimize_tau;
    j["grid_points"] = grid_points;
    j["trials"] = trials;
    j["seed"] = seed;
    j["q1_mode"] = q1_mode;
    j["fading"] = fading;
    j["fixed_matrix"] = fixed_matrix;
    j["allow_outside_validity"] = allow_outside_validity;
    j["sweep"] = {{"variable", sweep.variable},
                  {"scale", sweep.scale},
                  {"from", sweep.from},
                  {"to", sweep.to},
                  {"points", sweep.points}};
    j["ells"] = ells;
    return j;
  }

  // Applies every key present in j. Unknown keys are rejected.
  void merge_json(const nlohmann::json& j) {
    if (!j.is_object()) throw ConfigError("config file must hold a JSON object");
    for (const auto& [key, v] : j.items()) {
      if (key == "ell") ell = v.get<std::uint64_t>();
      else if (key == "alpha") alpha = v.get<double>();
      else if (key == "gamma") gamma = v.get<double>();
      else if (key == "snr") snr = v.get<double>();
      else if (key == "n") n = v.get<std::uint64_t>();
      else if (key == "p") p = v.get<double>();
      else if (key == "delta") delta = v.get<double>();
      else if (key == "delta_exp") delta_exp = v.get<double>();
      else if (key == "tau2") tau2 = v.get<double>();
      else if (key == "optimize_tau") optimize_tau = v.get<bool>();
      else if (key == "grid_points") grid_points = v.get<std::size_t>();
      else if (key == "trials") trials = v.get<std::uint64_t>();
      else if (key == "seed") seed = v.get<std::uint64_t>();
      else if (key == "q1_mode") q1_mode = v.get<std::string>();
      else if (key == "fading") fading = v.get<std::string>();
      else if (key == "fixed_matrix") fixed_matrix = v.get<bool>();
      else if (key == "allow_outside_validity") allow_outside_validity = v.get<bool>();
      else if (key == "ells") ells = v.get<std::vector<double>>();
      else if (key == "golden") golden = v.get<std::string>();
      else if (key == "workers") workers = v.get<std::size_t>();
      else if (key == "out") out = v.get<std::string>();
      else if (key == "progress") progress = v.get<bool>();
      else if (key == "sweep") {
        if (!v.is_object()) throw ConfigError("'sweep' must be an object");
        for (const auto& [sk, sv] : v.items()) {
          if (sk == "variable") sweep.variable = sv.get<std::string>();
          else if (sk == "scale") sweep.scale = sv.get<std::string>();
          else if (sk == "from") sweep.from = sv.get<double>();
          else if (sk == "to") sweep.to = sv.get<double>();
          else if (sk == "points") sweep.points = sv.get<std::size_t>();
          else throw ConfigError("unknown sweep key '" + sk + "'");
        }
      } else {
        throw ConfigError("unknown config key '" + key + "'");
      }
    }
  }

  void validate() const {
    if (alpha && gamma) throw ConfigError("--alpha and --gamma are mutually exclusive");
    if (gamma && !(*gamma > 0.0 && *gamma < 1.0)) throw ConfigError("gamma must lie in (0, 1)");
    if (tau2 && optimize_tau) throw ConfigError("--tau2 and --optimize-tau are mutually exclusive");
    if (q1_mode != "jensen_lb" && q1_mode != "exact") throw ConfigError("q1_mode must be jensen_lb or exact");
    if (fading != "block" && fading != "per_use") throw ConfigError("fading must be block or per_use");
    if (ell < 1) throw ConfigError("ell must be >= 1");
    if (!(snr > 0.0)) throw ConfigError("snr must be > 0");
    sweep.validate();
  }

  std::size_t worker_threads() const { return worker_count(workers); }
  Q1Mode mode() const { return q1_mode == "exact" ? Q1Mode::exact : Q1Mode::jensen_lb; }
  FadingMode fading_mode() const { return fading == "per_use" ? FadingMode::per_use : FadingMode::block; }
  CapacityFn capacity() const { return CapacityFn::low_snr_rayleigh(allow_outside_validity); }
  ErrorTarget target() const { return ErrorTarget{delta_exp}; }

  // Activity: explicit alpha, else k = ell^gamma (gamma defaults to 1/2).
  SystemParams params_for(std::uint64_t ell_value, double snr_value) const {
    if (alpha) return SystemParams::from_snr(ell_value, *alpha, snr_value);
    return SystemParams::from_scaling(ell_value, gamma.value_or(0.5), snr_value);
  }
  SystemParams params() const { return params_for(ell, snr); }

  // p defaults to 1/(k+1); tau2 is a placeholder until resolved.
  DiscoveryConfig discovery_for(const SystemParams& sp) const {
    DiscoveryConfig cfg;
    cfg.n = n.value_or(1);
    cfg.p = p.value_or(1.0 / (sp.k() + 1.0));
    cfg.delta_margin = delta;
    cfg.tau2 = tau2.value_or(max_threshold(sp));
    cfg.q1_mode = mode();
    return cfg;
  }
};

inline void write_header(std::ostream& os, const std::string& command, const RunConfig& rc) {
  nlohmann::json j = rc.to_json();
  j["command"] = command;
  os << "# " << j.dump() << '\n';
}

inline std::string sanitize(std::string s) {
  std::replace(s.begin(), s.end(), '\n', ' ');
  return s;
}

inline std::uint64_t to_count(double v, const char* what) {
  if (!(v >= 0.0) || v > 1.8e19) throw ConfigError(std::string(what) + " out of range");
  return static_cast<std::uint64_t>(std::llround(v));
}

// ---------------------------------------------------------------------------
// capacity-curve: ln M upper bound against n, one block of rows per ell.

inline int cmd_capacity_curve(const RunConfig& rc, std::ostream& os) {
  rc.validate();
  if (rc.sweep.variable != "n") throw ConfigError("capacity-curve sweeps n");
  const CapacityFn cap = rc.capacity();
  write_header(os, "capacity-curve", rc);
  os << "ell,alpha,n,lnM_nats,M_bits_clamped,status\n";
  const std::vector<double> ns = rc.sweep.values();
  for (double ell_d : rc.ells) {
    const std::uint64_t ell = to_count(ell_d, "ell");
    const SystemParams sp = rc.params_for(ell, rc.snr);
    for (double n : ns) {
      CsvRow row;
      row.add(ell).add(sp.alpha()).add(n);
      try {
        const double ln_m = capacity_upper_bound(n, sp, cap);
        row.add(ln_m).add(std::max(0.0, ln_m / std::numbers::ln2)).add("ok");
      } catch (const std::exception& e) {
        row.add(std::numeric_limits<double>::quiet_NaN())
            .add(std::numeric_limits<double>::quiet_NaN())
            .add("error: " + sanitize(e.what()));
      }
      os << row.str() << '\n';
    }
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// id-cost: lower bound n0 on channel uses over a users or snr sweep.

struct SweepPoint {
  std::uint64_t ell;
  double snr;
  std::optional<std::uint64_t> n;
};

inline std::vector<SweepPoint> sweep_points(const RunConfig& rc) {
  std::vector<SweepPoint> pts;
  for (double v : rc.sweep.values()) {
    if (rc.sweep.variable == "users") pts.push_back({to_count(v, "ell"), rc.snr, rc.n});
    else if (rc.sweep.variable == "snr") pts.push_back({rc.ell, v, rc.n});
    else pts.push_back({rc.ell, rc.snr, to_count(v, "n")});
  }
  return pts;
}

inline int cmd_id_cost(const RunConfig& rc, std::ostream& os) {
  rc.validate();
  const CapacityFn cap = rc.capacity();
  write_header(os, "id-cost", rc);
  os << "ell,alpha,k,rho,c_su,n0,status\n";
  bool any_ok = false;
  for (const SweepPoint& pt : sweep_points(rc)) {
    CsvRow row;
    try {
      const SystemParams sp = rc.params_for(pt.ell, pt.snr);
      row.add(sp.ell()).add(sp.alpha()).add(sp.k()).add(sp.rho());
      const double c = cap(sp.rho());
      row.add(c).add(min_user_id_cost_lb(sp, cap)).add("ok");
      any_ok = true;
    } catch (const std::exception& e) {
      row = CsvRow();
      const double nan = std::numeric_limits<double>::quiet_NaN();
      row.add(pt.ell).add(nan).add(nan).add(pt.snr).add(nan).add(nan).add("error: " + sanitize(e.what()));
    }
    os << row.str() << '\n';
  }
  return any_ok ? kExitOk : kExitNumerical;
}

// ---------------------------------------------------------------------------
// bounds / optimize-tau: one configuration.

struct ResolvedPoint {
  SystemParams params;
  DiscoveryConfig cfg;
  BoundReport report;
  std::size_t feasible_points = 0;
  std::size_t grid_points = 0;
};

// Resolves tau2 (given, or optimised when requested or unset) and n (given,
// or ceil(n_gt)), then evaluates the report at that n.
inline ResolvedPoint resolve_point(const RunConfig& rc, const SweepPoint& pt, bool force_optimize) {
  const SystemParams sp = rc.params_for(pt.ell, pt.snr);
  DiscoveryConfig cfg = rc.discovery_for(sp);
  const CapacityFn cap = rc.capacity();
  const ErrorTarget target = rc.target();
  ResolvedPoint r{sp, cfg, {}, 0, 0};
  if (force_optimize || rc.optimize_tau || !rc.tau2) {
    const ThresholdSearch s = optimize_threshold(sp, cfg, target, rc.grid_points, cap);
    r.cfg.tau2 = s.tau2;
    r.feasible_points = s.feasible_points;
    r.grid_points = s.grid_points;
  }
  const double ngt = n_gt(sp, r.cfg, target);
  if (pt.n) {
    r.cfg.n = *pt.n;
  } else {
    if (!(ngt < 1.8e19)) throw NumericalFailure("n_gt too large to evaluate the bounds at");
    r.cfg.n = static_cast<std::uint64_t>(std::ceil(ngt));
  }
  r.report = compute_bound_report(sp, r.cfg, target, cap);
  return r;
}

inline int cmd_bounds(const RunConfig& rc, std::ostream& os) {
  rc.validate();
  const ResolvedPoint r = resolve_point(rc, {rc.ell, rc.snr, rc.n}, false);
  write_header(os, "bounds", rc);
  os << BoundReport::csv_header() << ",pmd_chain,pmd_log_alpha,pfp_log_alpha,beta1_solved,beta1_feasible\n";
  CsvRow row;
  r.report.append_to(row)
      .add(r.report.pmd_chain)
      .add(r.report.pmd_log_alpha)
      .add(r.report.pfp_log_alpha)
      .add(r.report.beta1_solved)
      .add(r.report.beta1_feasible);
  os << row.str() << '\n';
  return kExitOk;
}

inline int cmd_optimize_tau(const RunConfig& rc, std::ostream& os) {
  rc.validate();
  if (rc.tau2) throw ConfigError("optimize-tau does not take --tau2");
  const ResolvedPoint r = resolve_point(rc, {rc.ell, rc.snr, rc.n}, true);
  write_header(os, "optimize-tau", rc);
  os << BoundReport::csv_header() << ",feasible_points,grid_points\n";
  CsvRow row;
  r.report.append_to(row).add(static_cast<std::uint64_t>(r.feasible_points)).add(static_cast<std::uint64_t>(r.grid_points));
  os << row.str() << '\n';
  return kExitOk;
}

// ---------------------------------------------------------------------------
// Monte Carlo helpers shared by gap-sweep and simulate.

// Empirical rate <= bound + z standard errors; vacuous when the bound is >= 1.
inline bool dominated(const RateEstimate& emp, double bound, double z = 3.0) {
  if (!(bound < 1.0)) return true;
  const double b = std::max(bound, 0.0);
  const double se = std::sqrt(b * (1.0 - b) / static_cast<double>(emp.draws));
  return emp.rate <= b + z * se;
}

inline TrialOptions trial_options(const RunConfig& rc, std::ostream* progress) {
  TrialOptions opt;
  opt.fixed_matrix = rc.fixed_matrix;
  opt.fading = rc.fading_mode();
  opt.workers = rc.worker_threads();
  if (progress) {
    opt.progress = [progress, step = std::max<std::uint64_t>(1, rc.trials / 20)](std::uint64_t done,
                                                                                 std::uint64_t total) {
      static std::mutex m;
      std::lock_guard lock(m);
      if (done % step < 16 || done == total) *progress << "progress " << done << "/" << total << '\n';
    };
  }
  return opt;
}

// ---------------------------------------------------------------------------
// gap-sweep: optimise tau2 per grid point and emit the BoundReport row.

inline int cmd_gap_sweep(const RunConfig& rc, std::ostream& os, std::ostream* progress = nullptr) {
  rc.validate();
  if (rc.sweep.variable == "n") throw ConfigError("gap-sweep sweeps users or snr");
  if (rc.tau2) throw ConfigError("gap-sweep always optimises tau2");
  const std::vector<SweepPoint> pts = sweep_points(rc);
  const bool mc = rc.trials > 0;

  struct Row {
    std::string text;
    bool ok = false;
  };
  std::vector<Row> rows(pts.size());
  const std::size_t workers = rc.worker_threads();
  // points run concurrently; Monte Carlo inside a point stays single-threaded
  parallel_for(pts.size(), mc ? 1 : workers, [&](std::size_t i) {
    CsvRow row;
    row.add(static_cast<std::uint64_t>(i));
    try {
      const ResolvedPoint r = resolve_point(rc, pts[i], true);
      r.report.append_to(row).add(static_cast<std::uint64_t>(r.feasible_points)).add("ok");
      if (mc) {
        TrialOptions opt = trial_options(rc, progress);
        opt.workers = 1;
        const TrialStats st = run_discovery_trials(r.params, r.cfg, rc.trials, Seed{rc.seed}.child(i), opt);
        st.append_to(row).add(dominated(st.pmd(), r.report.pmd_ub)).add(dominated(st.pfp(), r.report.pfp_ub));
      }
      rows[i].ok = true;
    } catch (const std::exception& e) {
      row = CsvRow();
      row.add(static_cast<std::uint64_t>(i));
      const double nan = std::numeric_limits<double>::quiet_NaN();
      const std::size_t cols = BoundReport::csv_columns().size();
      for (std::size_t c = 0; c < cols; ++c) {
        if (c == 0) row.add(pts[i].ell);
        else if (c == 3) row.add(pts[i].snr);
        else row.add(nan);
      }
      row.add(std::uint64_t{0}).add("error: " + sanitize(e.what()));
      if (mc) {
        for (std::size_t c = 0; c < TrialStats::csv_columns().size(); ++c) row.add(nan);
        row.add(false).add(false);
      }
    }
    rows[i].text = row.str();
  });

  write_header(os, "gap-sweep", rc);
  os << "point," << BoundReport::csv_header() << ",feasible_points,status";
  if (mc) {
    for (const auto& c : TrialStats::csv_columns()) os << ",mc_" << c;
    os << ",pmd_dominated,pfp_dominated";
  }
  os << '\n';
  bool any_ok = false;
  for (const Row& r : rows) {
    os << r.text << '\n';
    any_ok = any_ok || r.ok;
  }
  return any_ok ? kExitOk : kExitNumerical;
}

// ---------------------------------------------------------------------------
// simulate: Monte Carlo run plus the closed-form report at the same point.

inline int cmd_simulate(const RunConfig& rc, std::ostream& os, std::ostream* progress = nullptr) {
  rc.validate();
  const std::uint64_t trials = rc.trials == 0 ? 1000 : rc.trials;
  const SystemParams sp = rc.params();
  DiscoveryConfig cfg = rc.discovery_for(sp);
  const ErrorTarget target = rc.target();
  const CapacityFn cap = rc.capacity();

  if (!rc.tau2) cfg.tau2 = optimize_threshold(sp, cfg, target, rc.grid_points, cap).tau2;
  if (!rc.n) {
    // n_gt is only defined for 0 < alpha < 1
    const double ngt = n_gt(sp, cfg, target);
    if (!(ngt <= 4.0e9)) throw ConfigError("n_gt is too large to simulate; pass --n");
    cfg.n = static_cast<std::uint64_t>(std::ceil(ngt));
  }

  RunConfig effective = rc;
  effective.trials = trials;
  effective.tau2 = cfg.tau2;
  effective.n = cfg.n;
  effective.optimize_tau = false;

  TrialOptions opt = trial_options(effective, progress);
  const TrialStats st = run_discovery_trials(sp, cfg, trials, Seed{rc.seed}, opt);

  write_header(os, "simulate", effective);
  std::vector<std::string> cols = {"ell", "alpha", "k", "rho", "n", "p", "delta", "tau2", "q1_design"};
  os << join_header(cols) << ",pmd_ub,pfp_ub," << TrialStats::csv_header() << ",pmd_dominated,pfp_dominated\n";

  CsvRow row;
  row.add(sp.ell()).add(sp.alpha()).add(sp.k()).add(sp.rho()).add(cfg.n).add(cfg.p).add(cfg.delta_margin).add(cfg.tau2);
  row.add(decoder_q1_for(sp, cfg));
  double pmd = std::numeric_limits<double>::quiet_NaN();
  double pfp = std::numeric_limits<double>::quiet_NaN();
  try {
    pmd = pmd_upper_bound(sp, cfg).product;
  } catch (const DomainError&) {
  }
  try {
    pfp = pfp_upper_bound(sp, cfg).product;
  } catch (const DomainError&) {
  }
  row.add(pmd).add(pfp);
  st.append_to(row);
  row.add(std::isnan(pmd) || dominated(st.pmd(), pmd)).add(std::isnan(pfp) || dominated(st.pfp(), pfp));
  os << row.str() << '\n';
  return kExitOk;
}

// ---------------------------------------------------------------------------
// validate: golden values plus the oracle checks, one line per check.

struct CheckResult {
  std::string name;
  bool pass = false;
  std::string detail;
};

// Library value for each golden key written by the high-precision oracle.
inline std::optional<double> golden_library_value(const std::string& key) {
  const CapacityFn cap = CapacityFn::low_snr_rayleigh();
  const ErrorTarget target{1.0};
  auto cfg_at = [](const SystemParams& sp, double tau2, std::uint64_t n) {
    return DiscoveryConfig::defaults_for(sp, n, tau2);
  };
  const SystemParams q_params = SystemParams::from_snr(100, 0.1, 1e-2);
  DiscoveryConfig q_cfg = cfg_at(q_params, 1.0, 1);
  q_cfg.p = 1.0 / 11.0;

  const SystemParams p4 = SystemParams::from_snr(10000, 1e-2, 1e-4);
  auto tuned4 = [&] { return optimize_threshold(p4, cfg_at(p4, 1.0, 100000), target, 200, cap); };
  const SystemParams p6 = SystemParams::from_snr(1000000, 1e-3, 1e-4);

  if (key == "binary_entropy_nats(0.01)") return binary_entropy_nats(0.01);
  if (key == "x1_sq(1e-4)") return solve_x1(1e-4).x1_sq;
  if (key == "x1_sq(1e-3)") return solve_x1(1e-3).x1_sq;
  if (key == "x1_sq(1e-2)") return solve_x1(1e-2).x1_sq;
  if (key == "c_su(1e-4)") return c_su(1e-4);
  if (key == "c_su(1e-3)") return c_su(1e-3);
  if (key == "c_su(1e-2)") return c_su(1e-2);
  if (key == "capacity_upper_bound(rho=1e-4,alpha=1e-3,n=20000)")
    return capacity_upper_bound(20000.0, SystemParams::from_snr(1000000, 1e-3, 1e-4), cap);
  if (key == "min_user_id_cost_lb(rho=1e-4,alpha=1e-2)") return min_user_id_cost_lb(p4, cap);
  if (key == "q1_exact(l=100,a=0.1,rho=1e-2,tau2=1)") return q1_exact(q_params, q_cfg);
  if (key == "q2_exact(l=100,a=0.1,rho=1e-2,tau2=1)") return q2_exact(q_params, q_cfg);
  if (key == "q1_lower_bound(l=100,a=0.1,rho=1e-2,tau2=1)") return q1_lower_bound(q_params, q_cfg);
  if (key == "tau2_star(l=1e4,k=1e2,rho=1e-4,grid=200)") return tuned4().tau2;
  if (key == "pmd_upper_bound(l=1e4,n=1e5)") return tuned4().report.pmd_ub;
  if (key == "pmd_chain_exponential(l=1e4,n=1e5)") return tuned4().report.pmd_chain;
  if (key == "pfp_upper_bound(l=1e4,n=1e5)") return tuned4().report.pfp_ub;
  if (key == "beta1_formula(l=1e4,delta=1)") return tuned4().report.beta1;
  if (key == "beta2(l=1e4,delta=1)") return tuned4().report.beta2;
  if (key == "n_gt(l=1e4,k=1e2,rho=1e-4)") return tuned4().report.n_gt;
  if (key == "gap_G(l=1e4,k=1e2,rho=1e-4)") return tuned4().report.gap_g;
  if (key == "n0(l=1e4,k=1e2,rho=1e-4)") return tuned4().report.n0;
  if (key == "n_gt(l=1e6,k=1e3,rho=1e-4)")
    return optimize_threshold(p6, cfg_at(p6, 1.0, 1), target, 200, cap).n_gt;
  if (key == "gap_G(l=1e6,k=1e3,rho=1e-4)")
    return optimize_threshold(p6, cfg_at(p6, 1.0, 1), target, 200, cap).report.gap_g;
  return std::nullopt;
}

inline std::vector<CheckResult> golden_checks(const nlohmann::json& golden) {
  std::vector<CheckResult> out;
  for (const auto& [key, entry] : golden.items()) {
    CheckResult c{"golden " + key, false, ""};
    try {
      const double want = entry.at("value").get<double>();
      const double tol = entry.at("rel_tol").get<double>();
      const std::optional<double> got = golden_library_value(key);
      if (!got) {
        c.detail = "no library counterpart for this key";
      } else {
        const double rel = std::abs(*got - want) / std::max(std::abs(want), 1e-300);
        c.pass = rel <= tol;
        c.detail = "got " + format_double(*got) + " want " + format_double(want) + " rel " + format_double(rel);
      }
    } catch (const std::exception& e) {
      c.detail = sanitize(e.what());
    }
    out.push_back(c);
  }
  return out;
}

inline std::vector<CheckResult> oracle_checks(std::uint64_t seed, std::size_t workers) {
  std::vector<CheckResult> out;

  {  // root residuals and capacity range on a log grid
    CheckResult c{"root residual and 0 < C_su < rho on 50 log-spaced rho", true, ""};
    double worst = 0.0;
    for (int i = 0; i < 50; ++i) {
      const double rho = std::pow(10.0, -6.0 + 4.0 * i / 49.0);
      const X1Root r = solve_x1(std::min(rho, kLowSnrLimit));
      const double cap = c_su_at(rho, r.x1_sq);
      worst = std::max(worst, std::abs(r.residual));
      c.pass = c.pass && std::abs(r.residual) < 1e-10 && cap > 0.0 && cap < rho;
    }
    c.detail = "max |residual| " + format_double(worst);
    out.push_back(c);
  }

  {  // q1/q2 Monte Carlo agreement
    const SystemParams sp = SystemParams::from_snr(100, 0.1, 1e-2);
    DiscoveryConfig cfg = DiscoveryConfig::defaults_for(sp, 1, 1.0);
    cfg.p = 1.0 / 11.0;
    const std::uint64_t draws = 200000;
    const TrialStats st = estimate_q1_q2(sp, cfg, draws, Seed{seed, 11}, workers);
    const double q1 = q1_exact(sp, cfg);
    const double q2 = q2_exact(sp, cfg);
    const double se1 = std::sqrt(q1 * (1 - q1) / static_cast<double>(draws));
    const double se2 = std::sqrt(q2 * (1 - q2) / static_cast<double>(draws));
    const double z1 = (st.q1().rate - q1) / se1;
    const double z2 = (st.q2().rate - q2) / se2;
    out.push_back({"q1 Monte Carlo within 4 SE of q1_exact", std::abs(z1) <= 4.0, "z = " + format_double(z1)});
    out.push_back({"q2 Monte Carlo within 4 SE of q2_exact", std::abs(z2) <= 4.0, "z = " + format_double(z2)});
  }

  {  // orderings on random valid configurations
    std::mt19937_64 gen(seed ^ 0x5EEDULL);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    int ordering_fail = 0;
    int identity_fail = 0;
    for (int i = 0; i < 1000; ++i) {
      const std::uint64_t ell = 1 + static_cast<std::uint64_t>(u(gen) * 2000);
      const double alpha = u(gen);
      const double rho = std::pow(10.0, -6.0 + 6.0 * u(gen));
      const SystemParams sp = SystemParams::from_snr(ell, alpha, rho);
      DiscoveryConfig cfg = DiscoveryConfig::defaults_for(sp, 1, u(gen) * max_threshold(sp));
      cfg.p = u(gen);
      if (q1_lower_bound(sp, cfg) > q1_exact(sp, cfg) + 1e-12) ++ordering_fail;
      if (q2_upper_bound(sp, cfg) != 1.0 - q1_lower_bound(sp, cfg)) ++identity_fail;
    }
    out.push_back({"q1_LB <= q1_exact on 1000 random configs", ordering_fail == 0,
                   std::to_string(ordering_fail) + " violations"});
    out.push_back({"q2_UB == 1 - q1_LB on 1000 random configs", identity_fail == 0,
                   std::to_string(identity_fail) + " violations"});
  }

  {  // noiseless COMP reduction
    const oracle::CompReductionResult r = oracle::comp_reduction(10, 40, 0.2, Seed{0, 0});
    out.push_back({"noiseless COMP: no misdetections over 2^10 patterns",
                   r.misdetections == 0 && r.threshold_violations == 0,
                   std::to_string(r.misdetections) + " misdetections"});
    out.push_back({"noiseless COMP: false positives equal the hidden-user set", r.fp_mismatches == 0,
                   std::to_string(r.fp_mismatches) + " mismatching patterns"});
  }

  {  // product-form P_MD bound below the exponential form; threshold argmin
    const SystemParams sp = SystemParams::from_snr(10000, 1e-2, 1e-4);
    const CapacityFn cap = CapacityFn::low_snr_rayleigh();
    const ThresholdSearch s =
        optimize_threshold(sp, DiscoveryConfig::defaults_for(sp, 100000, 1.0), ErrorTarget{1.0}, 200, cap);
    out.push_back({"P_MD product form <= exponential form", s.report.pmd_ub <= s.report.pmd_chain,
                   format_double(s.report.pmd_ub) + " <= " + format_double(s.report.pmd_chain)});
    bool argmin = true;
    for (double t : threshold_grid(sp, 200)) {
      DiscoveryConfig c = DiscoveryConfig::defaults_for(sp, 1, t);
      try {
        argmin = argmin && s.n_gt <= n_gt(sp, c, ErrorTarget{1.0});
      } catch (const DomainError&) {
      }
    }
    out.push_back({"optimised threshold minimises n_gt over the grid", argmin, "tau2* = " + format_double(s.tau2)});
    out.push_back({"gap identity G == (n_gt - n0)/n0",
                   std::abs(s.report.gap_g - (s.report.n_gt - s.report.n0) / s.report.n0) <=
                       1e-9 * std::abs(s.report.gap_g),
                   "G = " + format_double(s.report.gap_g)});
  }
  return out;
}

inline int cmd_validate(const RunConfig& rc, std::ostream& os) {
  std::ifstream in(rc.golden);
  if (!in) throw ConfigError("cannot open golden value file '" + rc.golden + "'");
  nlohmann::json golden;
  try {
    in >> golden;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("golden value file is not valid JSON: ") + e.what());
  }
  std::vector<CheckResult> checks = golden_checks(golden);
  for (auto& c : oracle_checks(rc.seed, rc.worker_threads())) checks.push_back(std::move(c));
  std::size_t failed = 0;
  for (const auto& c : checks) {
    os << (c.pass ? "[PASS] " : "[FAIL] ") << c.name << ": " << c.detail << '\n';
    failed += c.pass ? 0 : 1;
  }
  os << (checks.size() - failed) << "/" << checks.size() << " checks passed\n";
  return failed == 0 ? kExitOk : kExitNumerical;
}

}  // namespace mnacgt::cli
