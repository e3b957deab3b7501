#pragma once

#include <cstdint>
#include <vector>

#include "mnacgt/channel_sim.hpp"
#include "mnacgt/errors.hpp"

namespace mnacgt {

struct DecodedActivity {
  std::vector<std::uint8_t> bits;

  std::size_t size() const { return bits.size(); }
  std::size_t popcount() const { return static_cast<std::size_t>(std::count(bits.begin(), bits.end(), 1)); }
  friend bool operator==(const DecodedActivity&, const DecodedActivity&) = default;
};

// Per-user test counts: tests[j] = N_j (uses that include user j),
// positives[j] = S_j (those uses that read positive).
struct UserTestCounts {
  std::vector<std::uint32_t> tests;
  std::vector<std::uint32_t> positives;
};

inline UserTestCounts count_user_tests(const SignatureMatrix& s, const TestOutcomes& y_tilde) {
  if (y_tilde.size() != s.n()) throw DimensionError("count_user_tests: outcome length differs from n");
  UserTestCounts c;
  c.tests.resize(s.ell());
  c.positives.resize(s.ell());
  for (std::size_t j = 0; j < s.ell(); ++j) {
    std::uint32_t pos = 0;
    const auto col = s.column(j);
    for (std::uint32_t i : col) pos += y_tilde.bits[i];
    c.tests[j] = static_cast<std::uint32_t>(col.size());
    c.positives[j] = pos;
  }
  return c;
}

struct NcompDecoding {
  DecodedActivity estimate;
  double threshold = 1.0;  // 1 - q1 (1 + delta)
  // q1 (1 + delta) > 1: every tested user is declared active
  bool degenerate = false;
};

inline double ncomp_threshold(double q1, double delta) {
  if (!(q1 >= 0.0 && q1 <= 1.0)) throw DomainError("ncomp: q1 must lie in [0, 1]");
  if (!(delta >= 0.0)) throw DomainError("ncomp: delta must be >= 0");
  return 1.0 - q1 * (1.0 + delta);
}

// User j is active iff S_j / N_j >= 1 - q1 (1 + delta). Untested users
// (N_j = 0) are declared inactive.
inline NcompDecoding ncomp_decide(const UserTestCounts& counts, double q1, double delta) {
  NcompDecoding out;
  out.threshold = ncomp_threshold(q1, delta);
  out.degenerate = q1 * (1.0 + delta) > 1.0;
  out.estimate.bits.resize(counts.tests.size());
  for (std::size_t j = 0; j < counts.tests.size(); ++j) {
    const std::uint32_t n = counts.tests[j];
    if (n == 0) continue;
    const double frac = static_cast<double>(counts.positives[j]) / static_cast<double>(n);
    out.estimate.bits[j] = frac >= out.threshold ? 1 : 0;
  }
  return out;
}

inline NcompDecoding ncomp_decode(const SignatureMatrix& s, const TestOutcomes& y_tilde, double q1, double delta) {
  ncomp_threshold(q1, delta);  // reject bad arguments before counting
  return ncomp_decide(count_user_tests(s, y_tilde), q1, delta);
}

struct ErrorTally {
  std::uint64_t md_count = 0;
  std::uint64_t fp_count = 0;
  bool md_any = false;
  bool fp_any = false;
};

inline ErrorTally count_errors(const ActivityVector& b, const DecodedActivity& b_hat) {
  if (b.size() != b_hat.size()) throw DimensionError("count_errors: length mismatch");
  ErrorTally t;
  for (std::size_t j = 0; j < b.size(); ++j) {
    if (b.bits[j] && !b_hat.bits[j]) ++t.md_count;
    if (!b.bits[j] && b_hat.bits[j]) ++t.fp_count;
  }
  t.md_any = t.md_count > 0;
  t.fp_any = t.fp_count > 0;
  return t;
}

}  // namespace mnacgt
