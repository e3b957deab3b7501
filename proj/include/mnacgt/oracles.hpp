#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "mnacgt/channel_sim.hpp"
#include "mnacgt/ncomp_decoder.hpp"

namespace mnacgt::oracle {

// Inactive users whose every test also contains an active user. Untested
// users are excluded (the decoder declares them inactive).
inline std::vector<std::uint8_t> hidden_users(const SignatureMatrix& s, const ActivityVector& b) {
  const std::vector<std::uint8_t> dense = s.dense();
  std::vector<std::uint8_t> hidden(s.ell(), 0);
  for (std::size_t j = 0; j < s.ell(); ++j) {
    if (b.bits[j]) continue;
    bool tested = false;
    bool covered = true;
    for (std::size_t i = 0; i < s.n(); ++i) {
      if (!dense[i * s.ell() + j]) continue;
      tested = true;
      bool any_active = false;
      for (std::size_t u = 0; u < s.ell(); ++u) any_active = any_active || (b.bits[u] && dense[i * s.ell() + u]);
      covered = covered && any_active;
    }
    hidden[j] = tested && covered ? 1 : 0;
  }
  return hidden;
}

struct CompReductionResult {
  std::uint64_t patterns = 0;
  std::uint64_t misdetections = 0;
  std::uint64_t fp_mismatches = 0;  // patterns whose FP set differs from the hidden set
  std::uint64_t threshold_violations = 0;  // active tests whose energy fell below tau2
};

// Exhaustive noiseless COMP check over all 2^ell activity vectors on one
// signature matrix, with q1 = 0 fed to the decoder.
inline CompReductionResult comp_reduction(std::size_t ell, std::size_t n, double p, Seed seed, double tau2 = 1e-30) {
  const SystemParams params(ell, 0.5, 1.0, 1.0, 1e-60);
  const SignatureMatrix s = gen_signature_matrix(ell, n, p, seed);
  CompReductionResult out;
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << ell); ++mask) {
    ActivityVector b;
    b.bits.resize(ell);
    for (std::size_t j = 0; j < ell; ++j) b.bits[j] = (mask >> j) & 1U;
    const ReceivedVector y = sample_received(s, b, params, Seed{seed.master, mask});
    const TestOutcomes t = energy_detect(y, tau2);
    for (std::size_t j = 0; j < ell; ++j) {
      if (!b.bits[j]) continue;
      for (std::uint32_t i : s.column(j)) out.threshold_violations += t.bits[i] ? 0 : 1;
    }
    const NcompDecoding d = ncomp_decode(s, t, 0.0, 0.05);
    const ErrorTally e = count_errors(b, d.estimate);
    out.misdetections += e.md_count;
    const std::vector<std::uint8_t> hidden = hidden_users(s, b);
    for (std::size_t j = 0; j < ell; ++j) {
      const bool fp = !b.bits[j] && d.estimate.bits[j];
      if (fp != static_cast<bool>(hidden[j])) {
        ++out.fp_mismatches;
        break;
      }
    }
    ++out.patterns;
  }
  return out;
}

}  // namespace mnacgt::oracle
