#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "mnacgt/commands.hpp"

#ifndef MNACGT_GOLDEN_PATH
#define MNACGT_GOLDEN_PATH "data/golden.json"
#endif

using mnacgt::cli::RunConfig;

namespace {

// Raw flag storage; only options actually given on the command line are
// applied on top of the config file.
struct Flags {
  std::uint64_t ell = 0;
  double alpha = 0, gamma = 0, snr = 0, p = 0, delta = 0, delta_exp = 0, tau2 = 0;
  std::uint64_t n = 0, trials = 0, seed = 0;
  std::size_t grid_points = 0, workers = 0, sweep_points = 0;
  bool optimize_tau = false, progress = false, fixed_matrix = false, allow_outside = false;
  std::string out, config, q1_mode, fading, sweep, scale, golden;
  double from = 0, to = 0;
  std::vector<double> ells;
};

struct Registered {
  CLI::App* app;
  std::map<std::string, CLI::Option*> opts;
};

Registered add_subcommand(CLI::App& root, const std::string& name, const std::string& help, Flags& f) {
  Registered r{root.add_subcommand(name, help), {}};
  CLI::App* a = r.app;
  auto& o = r.opts;
  o["ell"] = a->add_option("--ell", f.ell, "number of users");
  o["alpha"] = a->add_option("--alpha", f.alpha, "activity probability");
  o["gamma"] = a->add_option("--gamma", f.gamma, "activity scaling k = ell^gamma");
  o["alpha"]->excludes(o["gamma"]);
  o["snr"] = a->add_option("--snr", f.snr, "SNR rho = P sigma_h^2 / sigma_w^2");
  o["n"] = a->add_option("--n", f.n, "number of channel uses");
  o["p"] = a->add_option("--p", f.p, "signature density");
  o["delta"] = a->add_option("--delta", f.delta, "decoder margin");
  o["delta_exp"] = a->add_option("--delta-exp", f.delta_exp, "error target exponent");
  o["tau2"] = a->add_option("--tau2", f.tau2, "energy threshold");
  o["optimize_tau"] = a->add_flag("--optimize-tau", f.optimize_tau, "optimise the threshold on a grid");
  o["tau2"]->excludes(o["optimize_tau"]);
  o["grid_points"] = a->add_option("--grid-points", f.grid_points, "threshold grid size");
  o["trials"] = a->add_option("--trials", f.trials, "Monte Carlo trials (0 = analytic only)");
  o["seed"] = a->add_option("--seed", f.seed, "master seed");
  o["out"] = a->add_option("--out", f.out, "output file (default stdout)");
  o["config"] = a->add_option("--config", f.config, "JSON config file")->check(CLI::ExistingFile);
  o["workers"] = a->add_option("--workers", f.workers, "worker threads (capped by MNAC_GT_WORKERS)");
  o["progress"] = a->add_flag("--progress", f.progress, "report progress on stderr");
  o["q1_mode"] = a->add_option("--q1-mode", f.q1_mode, "jensen_lb | exact")->check(CLI::IsMember({"jensen_lb", "exact"}));
  o["fading"] = a->add_option("--fading", f.fading, "block | per_use")->check(CLI::IsMember({"block", "per_use"}));
  o["fixed_matrix"] = a->add_flag("--fixed-matrix", f.fixed_matrix, "reuse one signature matrix");
  o["allow_outside_validity"] =
      a->add_flag("--allow-outside-validity", f.allow_outside, "evaluate capacity above rho = 1e-2");
  o["sweep"] = a->add_option("--sweep", f.sweep, "users | snr | n")->check(CLI::IsMember({"users", "snr", "n"}));
  o["scale"] = a->add_option("--scale", f.scale, "log | linear")->check(CLI::IsMember({"log", "linear"}));
  o["from"] = a->add_option("--from", f.from, "sweep start");
  o["to"] = a->add_option("--to", f.to, "sweep end");
  o["points"] = a->add_option("--points", f.sweep_points, "sweep points");
  o["ells"] = a->add_option("--ells", f.ells, "user counts for capacity-curve")->delimiter(',');
  o["golden"] = a->add_option("--golden", f.golden, "golden value file for validate");
  return r;
}

RunConfig command_defaults(const std::string& name) {
  RunConfig rc;
  rc.golden = MNACGT_GOLDEN_PATH;
  if (name == "capacity-curve") rc.sweep = {"n", "linear", 2000, 20000, 10};
  if (name == "simulate") rc.trials = 1000;
  return rc;
}

RunConfig build_config(const std::string& name, const Registered& r, const Flags& f) {
  RunConfig rc = command_defaults(name);
  if (r.opts.at("config")->count()) {
    std::ifstream in(f.config);
    nlohmann::json j;
    try {
      in >> j;
      rc.merge_json(j);
    } catch (const nlohmann::json::exception& e) {
      throw mnacgt::cli::ConfigError(std::string("bad config file: ") + e.what());
    }
  }
  auto given = [&](const char* key) { return r.opts.at(key)->count() > 0; };
  if (given("ell")) rc.ell = f.ell;
  if (given("alpha")) rc.alpha = f.alpha, rc.gamma.reset();
  if (given("gamma")) rc.gamma = f.gamma, rc.alpha.reset();
  if (given("snr")) rc.snr = f.snr;
  if (given("n")) rc.n = f.n;
  if (given("p")) rc.p = f.p;
  if (given("delta")) rc.delta = f.delta;
  if (given("delta_exp")) rc.delta_exp = f.delta_exp;
  if (given("tau2")) rc.tau2 = f.tau2, rc.optimize_tau = false;
  if (given("optimize_tau")) rc.optimize_tau = true, rc.tau2.reset();
  if (given("grid_points")) rc.grid_points = f.grid_points;
  if (given("trials")) rc.trials = f.trials;
  if (given("seed")) rc.seed = f.seed;
  if (given("out")) rc.out = f.out;
  if (given("workers")) rc.workers = f.workers;
  if (given("progress")) rc.progress = true;
  if (given("q1_mode")) rc.q1_mode = f.q1_mode;
  if (given("fading")) rc.fading = f.fading;
  if (given("fixed_matrix")) rc.fixed_matrix = true;
  if (given("allow_outside_validity")) rc.allow_outside_validity = true;
  if (given("sweep")) rc.sweep.variable = f.sweep;
  if (given("scale")) rc.sweep.scale = f.scale;
  if (given("from")) rc.sweep.from = f.from;
  if (given("to")) rc.sweep.to = f.to;
  if (given("points")) rc.sweep.points = f.sweep_points;
  if (given("ells")) rc.ells = f.ells;
  if (given("golden")) rc.golden = f.golden;
  return rc;
}

int dispatch(const std::string& name, const RunConfig& rc, std::ostream& os) {
  namespace c = mnacgt::cli;
  std::ostream* progress = rc.progress ? &std::cerr : nullptr;
  if (name == "capacity-curve") return c::cmd_capacity_curve(rc, os);
  if (name == "id-cost") return c::cmd_id_cost(rc, os);
  if (name == "bounds") return c::cmd_bounds(rc, os);
  if (name == "optimize-tau") return c::cmd_optimize_tau(rc, os);
  if (name == "gap-sweep") return c::cmd_gap_sweep(rc, os, progress);
  if (name == "simulate") return c::cmd_simulate(rc, os, progress);
  return c::cmd_validate(rc, os);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Activity discovery bounds and simulation for non-coherent massive access"};
  app.require_subcommand(1);
  Flags flags;
  std::vector<std::pair<std::string, Registered>> subs;
  const std::pair<const char*, const char*> commands[] = {
      {"capacity-curve", "upper bound on ln M against n"},
      {"id-cost", "lower bound on channel uses for identification"},
      {"bounds", "closed-form bound report at one configuration"},
      {"optimize-tau", "threshold optimisation at one configuration"},
      {"gap-sweep", "optimised gap over a users or snr sweep"},
      {"simulate", "Monte Carlo discovery rounds with the bound report"},
      {"validate", "run the golden-value and oracle checks"},
  };
  for (const auto& [name, help] : commands) subs.emplace_back(name, add_subcommand(app, name, help, flags));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return mnacgt::cli::kExitUsage;
  }

  for (const auto& [name, reg] : subs) {
    if (!reg.app->parsed()) continue;
    try {
      const RunConfig rc = build_config(name, reg, flags);
      std::ostringstream buffer;
      const int code = dispatch(name, rc, buffer);
      if (rc.out) {
        std::ofstream file(*rc.out, std::ios::binary);
        if (!file) throw mnacgt::cli::ConfigError("cannot write '" + *rc.out + "'");
        file << buffer.str();
      } else {
        std::cout << buffer.str();
      }
      return code;
    } catch (const mnacgt::NumericalFailure& e) {
      std::cerr << "numerical failure: " << e.what() << '\n';
      return mnacgt::cli::kExitNumerical;
    } catch (const std::invalid_argument& e) {
      std::cerr << "error: " << e.what() << "\n\n" << reg.app->help();
      return mnacgt::cli::kExitUsage;
    } catch (const std::domain_error& e) {
      std::cerr << "error: " << e.what() << '\n';
      return mnacgt::cli::kExitUsage;
    }
  }
  return mnacgt::cli::kExitUsage;
}
