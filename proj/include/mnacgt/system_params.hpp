#pragma once

#include <cmath>
#include <cstdint>
#include <string>

#include "mnacgt/errors.hpp"

namespace mnacgt {

// Population and link parameters of one many-access configuration.
// All powers and variances are linear.
class SystemParams {
 public:
  SystemParams(std::uint64_t ell, double alpha, double power, double sigma2_h, double sigma2_w)
      : ell_(ell), alpha_(alpha), power_(power), sigma2_h_(sigma2_h), sigma2_w_(sigma2_w) {
    if (ell < 1) throw DomainError("SystemParams: ell must be >= 1");
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw DomainError("SystemParams: alpha must lie in [0, 1]");
    if (!(power > 0.0) || !(sigma2_h > 0.0) || !(sigma2_w > 0.0) || !std::isfinite(power) ||
        !std::isfinite(sigma2_h) || !std::isfinite(sigma2_w)) {
      throw DomainError("SystemParams: power, sigma2_h and sigma2_w must be finite and > 0");
    }
    rho_ = power_ * sigma2_h_ / sigma2_w_;
  }

  // Unit fading and noise variances; the transmit power carries the SNR.
  static SystemParams from_snr(std::uint64_t ell, double alpha, double rho) {
    return SystemParams(ell, alpha, rho, 1.0, 1.0);
  }

  // alpha chosen so that the expected number of active users is ell^gamma.
  static SystemParams from_scaling(std::uint64_t ell, double gamma, double rho) {
    if (!(gamma > 0.0 && gamma < 1.0)) throw DomainError("SystemParams: gamma must lie in (0, 1)");
    const double l = static_cast<double>(ell);
    return from_snr(ell, std::pow(l, gamma) / l, rho);
  }

  std::uint64_t ell() const { return ell_; }
  double alpha() const { return alpha_; }
  double power() const { return power_; }
  double sigma2_h() const { return sigma2_h_; }
  double sigma2_w() const { return sigma2_w_; }
  double rho() const { return rho_; }
  double k() const { return alpha_ * static_cast<double>(ell_); }

 private:
  std::uint64_t ell_;
  double alpha_;
  double power_;
  double sigma2_h_;
  double sigma2_w_;
  double rho_;
};

}  // namespace mnacgt
