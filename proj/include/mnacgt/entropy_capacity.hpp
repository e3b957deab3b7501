#pragma once

#include <cmath>
#include <functional>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "mnacgt/errors.hpp"
#include "mnacgt/system_params.hpp"

namespace mnacgt {

// Binary entropy in nats, with 0 ln 0 := 0.
inline double binary_entropy_nats(double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw DomainError("binary_entropy_nats: alpha must lie in [0, 1]");
  if (alpha == 0.0 || alpha == 1.0) return 0.0;
  return -alpha * std::log(alpha) - (1.0 - alpha) * std::log1p(-alpha);
}

// Upper end of the SNR range where the low-SNR capacity expression is valid.
inline constexpr double kLowSnrLimit = 1e-2;

namespace detail {

// ln(rho / (t + t^2)), where t = x1^2.
inline double log_ratio(double rho, double t) { return std::log(rho) - std::log(t) - std::log1p(t); }

}  // namespace detail

// Residual of the stationarity condition that defines x1, as a function of
// t = x1^2 (t > 1 keeps pi/t inside (0, pi), clear of the cosecant poles).
inline double x1_residual(double x1_sq, double rho) {
  const double t = x1_sq;
  const double lr = detail::log_ratio(rho, t);
  const double amp = std::exp(lr / t);
  const double s = std::numbers::pi / t;
  const double csc = 1.0 / std::sin(s);
  const double cot = std::cos(s) / std::sin(s);
  return t - (1.0 + t) * std::log1p(t) - std::numbers::pi * amp * csc * (1.0 + t - std::numbers::pi * cot + lr);
}

// Low-SNR non-coherent Rayleigh capacity (nats/use) at a given x1^2.
inline double c_su_at(double rho, double x1_sq) {
  const double t = x1_sq;
  const double amp = std::exp(detail::log_ratio(rho, t) / t);
  const double csc = 1.0 / std::sin(std::numbers::pi / t);
  return rho - rho * std::log1p(t) / t - std::numbers::pi * rho * csc * amp / (1.0 + t);
}

struct X1Root {
  double x1 = 0.0;
  double x1_sq = 0.0;
  double residual = 0.0;
  // final bisection bracket on x1^2 and the residuals at its ends
  double bracket_lo = 0.0;
  double bracket_hi = 0.0;
  double residual_lo = 0.0;
  double residual_hi = 0.0;
  std::vector<std::pair<double, double>> scan_brackets;
  std::vector<std::string> warnings;
};

struct RootSearchOptions {
  double t_min = 1.0 + 1e-6;
  double t_max = 1e6;
  int scan_points = 2000;
  double width_tol = 1e-12;
  double residual_tol = 1e-10;
  bool allow_outside_validity = false;
};

// Solves for x1 by a log-grid sign-change scan over x1^2 followed by bisection.
// Throws NumericalFailure when no bracket exists or the residual tolerance is
// not met; never clamps.
inline X1Root solve_x1(double rho, const RootSearchOptions& opt = {}) {
  if (!(rho > 0.0) || !std::isfinite(rho)) throw DomainError("solve_x1: rho must be > 0");
  if (rho > kLowSnrLimit && !opt.allow_outside_validity) {
    throw ValidityError("solve_x1: rho outside the low-SNR validity range (0, 1e-2]");
  }

  X1Root out;
  const double log_lo = std::log(opt.t_min);
  const double log_hi = std::log(opt.t_max);
  double prev_t = opt.t_min;
  double prev_f = x1_residual(prev_t, rho);
  for (int i = 1; i < opt.scan_points; ++i) {
    const double t = std::exp(log_lo + (log_hi - log_lo) * i / (opt.scan_points - 1));
    const double f = x1_residual(t, rho);
    if (std::isfinite(prev_f) && std::isfinite(f) && ((prev_f < 0.0) != (f < 0.0))) {
      out.scan_brackets.emplace_back(prev_t, t);
    }
    prev_t = t;
    prev_f = f;
  }
  if (out.scan_brackets.empty()) {
    throw NumericalFailure("solve_x1: no sign change of the x1 residual on the search interval");
  }

  struct Candidate {
    double lo, hi, f_lo, f_hi, t, f;
  };
  auto bisect = [&](double lo, double hi) {
    double f_lo = x1_residual(lo, rho);
    double f_hi = x1_residual(hi, rho);
    while (hi - lo > opt.width_tol) {
      const double mid = 0.5 * (lo + hi);
      if (mid <= lo || mid >= hi) break;
      const double f_mid = x1_residual(mid, rho);
      if (f_mid == 0.0) return Candidate{lo, hi, f_lo, f_hi, mid, 0.0};
      if ((f_mid < 0.0) == (f_lo < 0.0)) {
        lo = mid;
        f_lo = f_mid;
      } else {
        hi = mid;
        f_hi = f_mid;
      }
    }
    const double t = std::abs(f_lo) <= std::abs(f_hi) ? lo : hi;
    return Candidate{lo, hi, f_lo, f_hi, t, std::abs(f_lo) <= std::abs(f_hi) ? f_lo : f_hi};
  };

  std::vector<Candidate> roots;
  roots.reserve(out.scan_brackets.size());
  for (const auto& [lo, hi] : out.scan_brackets) roots.push_back(bisect(lo, hi));

  std::size_t pick = 0;
  if (roots.size() > 1) {
    out.warnings.push_back("solve_x1: " + std::to_string(roots.size()) +
                           " sign changes found; selecting the root that maximises the capacity");
    for (std::size_t i = 1; i < roots.size(); ++i) {
      if (c_su_at(rho, roots[i].t) > c_su_at(rho, roots[pick].t)) pick = i;
    }
  }
  const Candidate& c = roots[pick];
  if (!(std::abs(c.f) < opt.residual_tol)) {
    throw NumericalFailure("solve_x1: residual " + std::to_string(c.f) + " above tolerance");
  }
  out.x1_sq = c.t;
  out.x1 = std::sqrt(c.t);
  out.residual = c.f;
  out.bracket_lo = c.lo;
  out.bracket_hi = c.hi;
  out.residual_lo = c.f_lo;
  out.residual_hi = c.f_hi;
  return out;
}

inline double c_su(double rho, const RootSearchOptions& opt = {}) { return c_su_at(rho, solve_x1(rho, opt).x1_sq); }

// Pluggable single-user capacity model rho -> nats per channel use, with its
// declared validity range (rho_min, rho_max].
class CapacityFn {
 public:
  using Fn = std::function<double(double)>;

  CapacityFn(std::string name, Fn fn, double rho_min, double rho_max, bool allow_outside_range = false)
      : name_(std::move(name)), fn_(std::move(fn)), rho_min_(rho_min), rho_max_(rho_max),
        allow_outside_range_(allow_outside_range) {}

  static CapacityFn low_snr_rayleigh(bool allow_outside_range = false) {
    RootSearchOptions opt;
    opt.allow_outside_validity = true;
    return CapacityFn(
        "low_snr_rayleigh", [opt](double rho) { return c_su(rho, opt); }, 0.0, kLowSnrLimit, allow_outside_range);
  }

  bool in_range(double rho) const { return rho > rho_min_ && rho <= rho_max_; }

  double operator()(double rho) const {
    if (!in_range(rho) && !allow_outside_range_) {
      throw ValidityError("capacity model '" + name_ + "' evaluated outside its validity range");
    }
    const double c = fn_(rho);
    if (!std::isfinite(c) || !(c > 0.0)) {
      throw NumericalFailure("capacity model '" + name_ + "' returned a non-positive or non-finite value");
    }
    return c;
  }

  CapacityFn with_override(bool allow) const {
    CapacityFn copy = *this;
    copy.allow_outside_range_ = allow;
    return copy;
  }

  const std::string& name() const { return name_; }
  double rho_min() const { return rho_min_; }
  double rho_max() const { return rho_max_; }
  bool allows_outside_range() const { return allow_outside_range_; }

 private:
  std::string name_;
  Fn fn_;
  double rho_min_;
  double rho_max_;
  bool allow_outside_range_;
};

namespace detail {

inline double entropy_per_active_user(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("H2(alpha)/alpha requires 0 < alpha < 1");
  return binary_entropy_nats(alpha) / alpha;
}

}  // namespace detail

// Upper bound on ln M after n channel uses. Raw value, may be negative.
inline double capacity_upper_bound(double n, const SystemParams& params, const CapacityFn& cap) {
  if (!(n >= 0.0)) throw DomainError("capacity_upper_bound: n must be >= 0");
  const double h = detail::entropy_per_active_user(params.alpha());
  return n * cap(params.rho()) - h;
}

// Lower bound on the channel uses needed to identify the active users.
inline double min_user_id_cost_lb(const SystemParams& params, const CapacityFn& cap) {
  const double h = detail::entropy_per_active_user(params.alpha());
  return h / cap(params.rho());
}

}  // namespace mnacgt
