#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "mnacgt/csv.hpp"
#include "mnacgt/entropy_capacity.hpp"
#include "mnacgt/errors.hpp"
#include "mnacgt/parallel.hpp"
#include "mnacgt/system_params.hpp"

namespace mnacgt {

// Which q1/q2 values feed the bound formulas and the decoder.
enum class Q1Mode { jensen_lb, exact };

// n = 0 is accepted so the bounds can be evaluated at their limit; a
// simulated round needs n >= 1.
struct DiscoveryConfig {
  std::uint64_t n = 1;
  double p = 0.5;
  double delta_margin = 0.05;
  double tau2 = 1.0;
  Q1Mode q1_mode = Q1Mode::jensen_lb;

  void validate() const {
    if (!(p >= 0.0 && p <= 1.0)) throw DomainError("DiscoveryConfig: p must lie in [0, 1]");
    if (!(delta_margin >= 0.0)) throw DomainError("DiscoveryConfig: delta margin must be >= 0");
    if (!(tau2 >= 0.0)) throw DomainError("DiscoveryConfig: tau2 must be >= 0");
  }

  // p = 1/(k+1), margin 0.05.
  static DiscoveryConfig defaults_for(const SystemParams& params, std::uint64_t n, double tau2) {
    DiscoveryConfig cfg;
    cfg.n = n;
    cfg.p = 1.0 / (params.k() + 1.0);
    cfg.delta_margin = 0.05;
    cfg.tau2 = tau2;
    return cfg;
  }
};

// Error probabilities are driven below ell^(-delta_exp).
struct ErrorTarget {
  double delta_exp = 1.0;

  void validate() const {
    if (!(delta_exp > 0.0)) throw DomainError("ErrorTarget: delta exponent must be > 0");
  }
};

// Largest threshold for which the Jensen step behind q1_LB is valid.
inline double max_threshold(const SystemParams& params) {
  return 2.0 * (params.sigma2_h() * params.power() + params.sigma2_w());
}

namespace detail {

// Sum over g ~ Binomial(trials, prob) of pmf(g) * f(g). Terms past the mean
// are dropped once the Chernoff bound on the remaining upper tail is below
// tail_tol; f is assumed bounded by 1 in magnitude.
template <class F>
double binomial_expectation(std::uint64_t trials, double prob, F&& f, double tail_tol = 1e-12) {
  if (trials == 0 || prob <= 0.0) return f(std::uint64_t{0});
  if (prob >= 1.0) return f(trials);
  const double nt = static_cast<double>(trials);
  const double mean = nt * prob;
  const double log_p = std::log(prob);
  const double log_q = std::log1p(-prob);
  const double lg_n = std::lgamma(nt + 1.0);
  double sum = 0.0;
  for (std::uint64_t g = 0; g <= trials; ++g) {
    const double gd = static_cast<double>(g);
    const double log_pmf = lg_n - std::lgamma(gd + 1.0) - std::lgamma(nt - gd + 1.0) + gd * log_p + (nt - gd) * log_q;
    sum += std::exp(log_pmf) * f(g);
    const double next = gd + 1.0;
    if (next > mean && g < trials) {
      const double a = next / nt;
      const double kl = a >= 1.0 ? -log_p : a * std::log(a / prob) + (1.0 - a) * std::log((1.0 - a) / (1.0 - prob));
      if (-nt * kl < std::log(tail_tol)) break;
    }
  }
  return sum;
}

inline void check_inputs(const SystemParams&, const DiscoveryConfig& cfg) { cfg.validate(); }

// exp(-(tau2/sigma_w^2) / ((p alpha (ell-1) + 1) rho + 1)), shared by q1_LB and q2_UB.
inline double jensen_exponential(const SystemParams& params, const DiscoveryConfig& cfg) {
  const double others = cfg.p * params.alpha() * static_cast<double>(params.ell() - 1);
  return std::exp(-(cfg.tau2 / params.sigma2_w()) / ((others + 1.0) * params.rho() + 1.0));
}

}  // namespace detail

// P(energy <= tau2 | a designated active user is in the test).
inline double q1_exact(const SystemParams& params, const DiscoveryConfig& cfg) {
  detail::check_inputs(params, cfg);
  const double sp = params.sigma2_h() * params.power();
  const double above = detail::binomial_expectation(params.ell() - 1, cfg.p * params.alpha(), [&](std::uint64_t g) {
    return std::exp(-cfg.tau2 / (sp * (1.0 + static_cast<double>(g)) + params.sigma2_w()));
  });
  return std::clamp(1.0 - above, 0.0, 1.0);
}

// P(energy > tau2 | a designated inactive user is in the test).
inline double q2_exact(const SystemParams& params, const DiscoveryConfig& cfg) {
  detail::check_inputs(params, cfg);
  const double sp = params.sigma2_h() * params.power();
  const double v = detail::binomial_expectation(params.ell() - 1, cfg.p * params.alpha(), [&](std::uint64_t g) {
    return std::exp(-cfg.tau2 / (sp * static_cast<double>(g) + params.sigma2_w()));
  });
  return std::clamp(v, 0.0, 1.0);
}

// Jensen lower bound on q1; needs tau2 <= 2 (sigma^2 P + sigma_w^2).
inline double q1_lower_bound(const SystemParams& params, const DiscoveryConfig& cfg) {
  detail::check_inputs(params, cfg);
  if (cfg.tau2 > max_threshold(params)) {
    throw ValidityError("q1_lower_bound: tau2 exceeds 2 (sigma^2 P + sigma_w^2)");
  }
  return 1.0 - detail::jensen_exponential(params, cfg);
}

// Upper bound paired with q1_lower_bound; equals 1 - q1_LB bit for bit.
inline double q2_upper_bound(const SystemParams& params, const DiscoveryConfig& cfg) {
  detail::check_inputs(params, cfg);
  return 1.0 - (1.0 - detail::jensen_exponential(params, cfg));
}

struct DetectionProbabilities {
  double q1 = 0.0;
  double q2 = 0.0;
};

// q1/q2 as consumed by the bound formulas and the decoder, per cfg.q1_mode.
inline DetectionProbabilities design_probabilities(const SystemParams& params, const DiscoveryConfig& cfg) {
  if (cfg.q1_mode == Q1Mode::exact) return {q1_exact(params, cfg), q2_exact(params, cfg)};
  return {q1_lower_bound(params, cfg), q2_upper_bound(params, cfg)};
}

inline double bernoulli_kl(double a, double b) {
  if (!(a >= 0.0 && a <= 1.0 && b > 0.0 && b < 1.0)) throw DomainError("bernoulli_kl: arguments out of range");
  const double t0 = a == 0.0 ? 0.0 : a * std::log(a / b);
  const double t1 = a == 1.0 ? 0.0 : (1.0 - a) * std::log((1.0 - a) / (1.0 - b));
  return t0 + t1;
}

struct PmdBound {
  // alpha ell (1 - p + p exp(-2 (q1 delta)^2))^n; the headline value
  double product = 0.0;
  // alpha ell exp(-n p (1 - e^-2) (q1 delta)^2), i.e. beta1 H2(alpha)/alpha = n
  double chain_exponential = 0.0;
  // same exponent with ln(1/alpha) in place of H2(alpha)/alpha
  double log_alpha_form = 0.0;
  double beta1 = 0.0;  // n alpha / H2(alpha)

  double value() const { return product; }
};

inline PmdBound pmd_upper_bound(const SystemParams& params, const DiscoveryConfig& cfg) {
  detail::check_inputs(params, cfg);
  const double alpha = params.alpha();
  const double a_ell = alpha * static_cast<double>(params.ell());
  const double q1 = design_probabilities(params, cfg).q1;
  const double m2 = (q1 * cfg.delta_margin) * (q1 * cfg.delta_margin);
  const double n = static_cast<double>(cfg.n);

  PmdBound b;
  // log1p form keeps (1 - p(1 - e^{-2m2}))^n accurate for tiny margins
  b.product = a_ell * std::exp(n * std::log1p(-cfg.p * -std::expm1(-2.0 * m2)));
  const double c = cfg.p * (1.0 - std::exp(-2.0)) * m2;
  b.chain_exponential = a_ell * std::exp(-n * c);
  if (alpha > 0.0 && alpha < 1.0) {
    const double h = binary_entropy_nats(alpha);
    b.beta1 = n * alpha / h;
    b.log_alpha_form = a_ell * std::exp(-b.beta1 * std::log(1.0 / alpha) * c);
  } else {
    b.beta1 = std::numeric_limits<double>::quiet_NaN();
    b.log_alpha_form = a_ell;
  }
  return b;
}

struct PfpBound {
  // ell (1 - alpha) (1 - (1 - p + p eta)^n); the headline value
  double product = 0.0;
  // ell (1 - alpha) (1 - exp(-beta2 ln(1/alpha) p (1 - eta))), beta2 = n alpha / H2
  double log_alpha_form = 0.0;
  double eta = 1.0;

  double value() const { return product; }
};

// eta = exp(-D(q2 - q1 delta || q2) / sqrt(2 pi q1 q2)).
inline double pfp_eta(const DetectionProbabilities& q, double delta_margin) {
  const double shifted = q.q2 - q.q1 * delta_margin;
  if (!(shifted > 0.0)) throw DomainError("pfp bound: q2 - q1 delta must be > 0");
  if (!(q.q1 * q.q2 > 0.0)) throw DomainError("pfp bound: q1 q2 must be > 0");
  if (!(q.q2 < 1.0)) throw DomainError("pfp bound: q2 must be < 1");
  return std::exp(-bernoulli_kl(shifted, q.q2) / std::sqrt(2.0 * std::numbers::pi * q.q1 * q.q2));
}

inline PfpBound pfp_upper_bound(const SystemParams& params, const DiscoveryConfig& cfg) {
  detail::check_inputs(params, cfg);
  const double alpha = params.alpha();
  const double scale = static_cast<double>(params.ell()) * (1.0 - alpha);
  PfpBound b;
  b.eta = pfp_eta(design_probabilities(params, cfg), cfg.delta_margin);
  const double n = static_cast<double>(cfg.n);
  b.product = scale * -std::expm1(n * std::log1p(-cfg.p * (1.0 - b.eta)));
  if (alpha > 0.0 && alpha < 1.0) {
    const double beta2 = n * alpha / binary_entropy_nats(alpha);
    b.log_alpha_form = scale * -std::expm1(-beta2 * std::log(1.0 / alpha) * cfg.p * (1.0 - b.eta));
  } else {
    b.log_alpha_form = b.product;
  }
  return b;
}

struct Beta1Result {
  // ln2 / (p (1 - e^-2) (q1 delta)^2) * ((1 + delta_exp) ln ell / ln(1/alpha) - 1)
  double formula = 0.0;
  // smallest beta1 with ln(1/alpha)-form P_MD bound <= ell^-delta_exp, by bisection
  double solved = 0.0;
  // false when the formula is negative ((1 + delta_exp) ln ell <= ln(1/alpha))
  bool feasible_by_formula = true;
};

namespace detail {

inline void check_alpha_open(double alpha, const char* what) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError(std::string(what) + ": requires 0 < alpha < 1");
}

}  // namespace detail

inline Beta1Result beta1_min(const SystemParams& params, const DiscoveryConfig& cfg, const ErrorTarget& target) {
  detail::check_inputs(params, cfg);
  target.validate();
  const double alpha = params.alpha();
  detail::check_alpha_open(alpha, "beta1_min");
  if (!(cfg.p > 0.0)) throw DomainError("beta1_min: p must be > 0");
  const double q1 = design_probabilities(params, cfg).q1;
  const double m2 = (q1 * cfg.delta_margin) * (q1 * cfg.delta_margin);
  if (!(m2 > 0.0)) throw DomainError("beta1_min: q1 * delta must be > 0");

  const double c = cfg.p * (1.0 - std::exp(-2.0)) * m2;
  const double ln_ell = std::log(static_cast<double>(params.ell()));
  const double ln_inv_alpha = std::log(1.0 / alpha);

  Beta1Result r;
  r.formula = std::numbers::ln2 / c * ((1.0 + target.delta_exp) * ln_ell / ln_inv_alpha - 1.0);
  r.feasible_by_formula = r.formula >= 0.0;

  // alpha ell exp(-beta ln(1/alpha) c) <= ell^-delta
  const double a_ell = alpha * static_cast<double>(params.ell());
  const double goal = std::exp(-target.delta_exp * ln_ell);
  auto bound = [&](double beta) { return a_ell * std::exp(-beta * ln_inv_alpha * c); };
  if (bound(0.0) <= goal) {
    r.solved = 0.0;
    return r;
  }
  double lo = 0.0;
  double hi = 1.0;
  while (bound(hi) > goal) {
    lo = hi;
    hi *= 2.0;
    if (!std::isfinite(hi)) throw NumericalFailure("beta1_min: failed to bracket the solved factor");
  }
  for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (bound(mid) > goal ? lo : hi) = mid;
  }
  r.solved = hi;
  return r;
}

// (1/(p(1-eta))) (1/ln(1/alpha)) ln(R/(R-1)), R = (1-alpha) ell^(delta_exp+1).
inline double beta2_min(const SystemParams& params, const DiscoveryConfig& cfg, const ErrorTarget& target) {
  detail::check_inputs(params, cfg);
  target.validate();
  const double alpha = params.alpha();
  detail::check_alpha_open(alpha, "beta2_min");
  if (!(cfg.p > 0.0)) throw DomainError("beta2_min: p must be > 0");
  const double ln_r = std::log1p(-alpha) + (target.delta_exp + 1.0) * std::log(static_cast<double>(params.ell()));
  if (!(ln_r > 0.0)) throw DomainError("beta2_min: requires (1 - alpha) ell^(1 + delta_exp) > 1");
  const double eta = pfp_eta(design_probabilities(params, cfg), cfg.delta_margin);
  if (!(eta < 1.0)) throw DomainError("beta2_min: eta = 1 leaves no margin");
  // ln(R/(R-1)) = -ln(1 - 1/R)
  const double log_ratio = -std::log1p(-std::exp(-ln_r));
  return 1.0 / (cfg.p * (1.0 - eta)) / std::log(1.0 / alpha) * log_ratio;
}

struct GtRequirement {
  Beta1Result beta1;
  double beta2 = 0.0;
  double beta = 0.0;  // max(beta1 formula, beta2)
  double n_gt = 0.0;
};

inline GtRequirement gt_requirement(const SystemParams& params, const DiscoveryConfig& cfg, const ErrorTarget& target) {
  GtRequirement r;
  r.beta1 = beta1_min(params, cfg, target);
  r.beta2 = beta2_min(params, cfg, target);
  r.beta = std::max(r.beta1.formula, r.beta2);
  r.n_gt = r.beta * static_cast<double>(params.ell()) * binary_entropy_nats(params.alpha());
  return r;
}

// max(beta1, beta2) ell H2(alpha)
inline double n_gt(const SystemParams& params, const DiscoveryConfig& cfg, const ErrorTarget& target) {
  return gt_requirement(params, cfg, target).n_gt;
}

// max(beta1, beta2) k C_su(rho) - 1
inline double gap_G(const SystemParams& params, const DiscoveryConfig& cfg, const ErrorTarget& target,
                    const CapacityFn& cap) {
  return gt_requirement(params, cfg, target).beta * params.k() * cap(params.rho()) - 1.0;
}

struct BoundReport {
  std::uint64_t ell = 0;
  double alpha = 0.0;
  double k = 0.0;
  double rho = 0.0;
  std::uint64_t n = 0;
  double p = 0.0;
  double delta = 0.0;
  double tau2 = 0.0;
  double q1_exact = 0.0;
  double q1_lb = 0.0;
  double q2_exact = 0.0;
  double q2_ub = 0.0;
  double pmd_ub = 0.0;
  double pfp_ub = 0.0;
  double beta1 = 0.0;
  double beta2 = 0.0;
  double n_gt = 0.0;
  double n0 = 0.0;
  double gap_g = 0.0;

  // not serialised to the fixed CSV row
  double pmd_chain = 0.0;
  double pmd_log_alpha = 0.0;
  double pfp_log_alpha = 0.0;
  double beta1_solved = 0.0;
  bool beta1_feasible = true;

  double tau2_used() const { return tau2; }

  static std::vector<std::string> csv_columns() {
    return {"ell",    "alpha",  "k",      "rho",   "n",     "p",     "delta", "tau2", "q1_exact", "q1_lb",
            "q2_exact", "q2_ub", "pmd_ub", "pfp_ub", "beta1", "beta2", "n_gt", "n0",   "gap_g"};
  }
  static std::string csv_header() { return join_header(csv_columns()); }

  CsvRow& append_to(CsvRow& row) const {
    return row.add(ell)
        .add(alpha)
        .add(k)
        .add(rho)
        .add(n)
        .add(p)
        .add(delta)
        .add(tau2)
        .add(q1_exact)
        .add(q1_lb)
        .add(q2_exact)
        .add(q2_ub)
        .add(pmd_ub)
        .add(pfp_ub)
        .add(beta1)
        .add(beta2)
        .add(n_gt)
        .add(n0)
        .add(gap_g);
  }
  std::string csv_row() const {
    CsvRow row;
    return append_to(row).str();
  }
};

// All closed-form quantities at one configuration. P_MD / P_FP bounds are
// evaluated at cfg.n.
inline BoundReport compute_bound_report(const SystemParams& params, const DiscoveryConfig& cfg,
                                        const ErrorTarget& target, const CapacityFn& cap) {
  BoundReport r;
  r.ell = params.ell();
  r.alpha = params.alpha();
  r.k = params.k();
  r.rho = params.rho();
  r.n = cfg.n;
  r.p = cfg.p;
  r.delta = cfg.delta_margin;
  r.tau2 = cfg.tau2;
  r.q1_exact = q1_exact(params, cfg);
  r.q2_exact = q2_exact(params, cfg);
  if (cfg.tau2 <= max_threshold(params)) {
    r.q1_lb = q1_lower_bound(params, cfg);
  } else {
    r.q1_lb = std::numeric_limits<double>::quiet_NaN();
  }
  r.q2_ub = q2_upper_bound(params, cfg);

  const PmdBound pmd = pmd_upper_bound(params, cfg);
  r.pmd_ub = pmd.product;
  r.pmd_chain = pmd.chain_exponential;
  r.pmd_log_alpha = pmd.log_alpha_form;
  const PfpBound pfp = pfp_upper_bound(params, cfg);
  r.pfp_ub = pfp.product;
  r.pfp_log_alpha = pfp.log_alpha_form;

  const GtRequirement req = gt_requirement(params, cfg, target);
  r.beta1 = req.beta1.formula;
  r.beta1_solved = req.beta1.solved;
  r.beta1_feasible = req.beta1.feasible_by_formula;
  r.beta2 = req.beta2;
  r.n_gt = req.n_gt;
  r.n0 = min_user_id_cost_lb(params, cap);
  r.gap_g = req.beta * params.k() * cap(params.rho()) - 1.0;
  return r;
}

struct GridFailure {
  std::size_t index = 0;
  double tau2 = 0.0;
  std::string reason;
};

struct ThresholdSearch {
  double tau2 = 0.0;
  double n_gt = 0.0;
  BoundReport report;
  std::size_t grid_points = 0;
  std::size_t feasible_points = 0;
  std::vector<GridFailure> failures;
};

// Uniform grid tau2_i = i T / G, i = 1..G, T = 2 (sigma^2 P + sigma_w^2).
inline std::vector<double> threshold_grid(const SystemParams& params, std::size_t grid_points) {
  std::vector<double> grid(grid_points);
  const double top = max_threshold(params);
  for (std::size_t i = 0; i < grid_points; ++i) {
    grid[i] = top * static_cast<double>(i + 1) / static_cast<double>(grid_points);
  }
  return grid;
}

// Exhaustive search for the threshold minimising n_gt. Grid points where a
// bound is undefined are skipped and listed in `failures`; ties go to the
// smaller threshold. cfg.tau2 is ignored.
inline ThresholdSearch optimize_threshold(const SystemParams& params, const DiscoveryConfig& cfg,
                                          const ErrorTarget& target, std::size_t grid_points, const CapacityFn& cap,
                                          std::size_t workers = 1) {
  if (grid_points < 2) throw DomainError("optimize_threshold: grid_points must be >= 2");
  const std::vector<double> grid = threshold_grid(params, grid_points);
  std::vector<std::optional<double>> value(grid_points);
  std::vector<std::string> reason(grid_points);
  parallel_for(grid_points, workers, [&](std::size_t i) {
    DiscoveryConfig c = cfg;
    c.tau2 = grid[i];
    try {
      const double v = n_gt(params, c, target);
      if (std::isfinite(v)) {
        value[i] = v;
      } else {
        reason[i] = "non-finite n_gt";
      }
    } catch (const DomainError& e) {
      reason[i] = e.what();
    }
  });

  ThresholdSearch out;
  out.grid_points = grid_points;
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < grid_points; ++i) {
    if (!value[i]) {
      out.failures.push_back({i, grid[i], reason[i]});
      continue;
    }
    ++out.feasible_points;
    if (!best || *value[i] < *value[*best]) best = i;
  }
  if (!best) throw OptimizationFailure("optimize_threshold: no feasible threshold on the grid");
  out.tau2 = grid[*best];
  out.n_gt = *value[*best];
  DiscoveryConfig c = cfg;
  c.tau2 = out.tau2;
  out.report = compute_bound_report(params, c, target, cap);
  return out;
}

}  // namespace mnacgt
