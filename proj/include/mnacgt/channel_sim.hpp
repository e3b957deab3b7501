#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <ostream>
#include <random>
#include <span>
#include <vector>

#include "mnacgt/csv.hpp"
#include "mnacgt/errors.hpp"
#include "mnacgt/rng.hpp"
#include "mnacgt/system_params.hpp"

namespace mnacgt {

// Binary n x ell matrix assigning users to channel uses. Stored column-sparse:
// column j holds the sorted channel-use indices in which user j transmits.
class SignatureMatrix {
 public:
  SignatureMatrix(std::size_t n, std::size_t ell, std::vector<std::size_t> col_ptr, std::vector<std::uint32_t> rows,
                  double p = std::numeric_limits<double>::quiet_NaN())
      : n_(n), ell_(ell), p_(p), col_ptr_(std::move(col_ptr)), rows_(std::move(rows)) {
    if (n_ == 0 || ell_ == 0) throw DimensionError("SignatureMatrix: dimensions must be positive");
    if (col_ptr_.size() != ell_ + 1 || col_ptr_.front() != 0 || col_ptr_.back() != rows_.size()) {
      throw DimensionError("SignatureMatrix: malformed column pointer array");
    }
    for (std::size_t j = 0; j < ell_; ++j) {
      if (col_ptr_[j] > col_ptr_[j + 1]) throw DimensionError("SignatureMatrix: column pointers must be monotone");
      for (std::size_t k = col_ptr_[j]; k < col_ptr_[j + 1]; ++k) {
        if (rows_[k] >= n_ || (k > col_ptr_[j] && rows_[k] <= rows_[k - 1])) {
          throw DimensionError("SignatureMatrix: row indices must be sorted, unique and < n");
        }
      }
    }
  }

  // dense is row-major, dense[i * ell + j] = s_ij
  static SignatureMatrix from_dense(std::size_t n, std::size_t ell, std::span<const std::uint8_t> dense) {
    if (dense.size() != n * ell) throw DimensionError("SignatureMatrix::from_dense: size mismatch");
    std::vector<std::size_t> col_ptr(ell + 1, 0);
    std::vector<std::uint32_t> rows;
    for (std::size_t j = 0; j < ell; ++j) {
      for (std::size_t i = 0; i < n; ++i) {
        const std::uint8_t v = dense[i * ell + j];
        if (v > 1) throw DomainError("SignatureMatrix::from_dense: entries must be 0 or 1");
        if (v) rows.push_back(static_cast<std::uint32_t>(i));
      }
      col_ptr[j + 1] = rows.size();
    }
    return SignatureMatrix(n, ell, std::move(col_ptr), std::move(rows));
  }

  std::size_t n() const { return n_; }
  std::size_t ell() const { return ell_; }
  double p() const { return p_; }
  std::size_t nnz() const { return rows_.size(); }

  std::span<const std::uint32_t> column(std::size_t j) const {
    return {rows_.data() + col_ptr_[j], col_ptr_[j + 1] - col_ptr_[j]};
  }
  std::size_t column_weight(std::size_t j) const { return col_ptr_[j + 1] - col_ptr_[j]; }

  bool at(std::size_t i, std::size_t j) const {
    const auto col = column(j);
    return std::binary_search(col.begin(), col.end(), static_cast<std::uint32_t>(i));
  }

  std::vector<std::uint8_t> dense() const {
    std::vector<std::uint8_t> out(n_ * ell_, 0);
    for (std::size_t j = 0; j < ell_; ++j) {
      for (std::uint32_t i : column(j)) out[i * ell_ + j] = 1;
    }
    return out;
  }

  friend bool operator==(const SignatureMatrix& a, const SignatureMatrix& b) {
    return a.n_ == b.n_ && a.ell_ == b.ell_ && a.col_ptr_ == b.col_ptr_ && a.rows_ == b.rows_;
  }

 private:
  std::size_t n_;
  std::size_t ell_;
  double p_;
  std::vector<std::size_t> col_ptr_;
  std::vector<std::uint32_t> rows_;
};

struct ActivityVector {
  std::vector<std::uint8_t> bits;

  std::size_t size() const { return bits.size(); }
  std::size_t popcount() const { return static_cast<std::size_t>(std::count(bits.begin(), bits.end(), 1)); }
  friend bool operator==(const ActivityVector&, const ActivityVector&) = default;
};

struct ReceivedVector {
  std::vector<std::complex<double>> samples;

  std::size_t size() const { return samples.size(); }
  friend bool operator==(const ReceivedVector&, const ReceivedVector&) = default;
};

struct TestOutcomes {
  std::vector<std::uint8_t> bits;

  std::size_t size() const { return bits.size(); }
  friend bool operator==(const TestOutcomes&, const TestOutcomes&) = default;
};

// block: one coefficient per user per discovery round.
// per_use: fresh coefficient for every channel use (sensitivity studies).
enum class FadingMode { block, per_use };

// i.i.d. Bernoulli(p) entries. Each column is filled by geometric skipping
// over the gaps between ones, which has the same law as n coin flips.
inline SignatureMatrix gen_signature_matrix(std::size_t ell, std::size_t n, double p, Seed seed) {
  if (!(p >= 0.0 && p <= 1.0)) throw DomainError("gen_signature_matrix: p must lie in [0, 1]");
  if (n == 0 || ell == 0) throw DimensionError("gen_signature_matrix: dimensions must be positive");
  if (n > std::numeric_limits<std::uint32_t>::max()) throw DimensionError("gen_signature_matrix: n too large");

  std::vector<std::size_t> col_ptr(ell + 1, 0);
  std::vector<std::uint32_t> rows;
  rows.reserve(static_cast<std::size_t>(static_cast<double>(n) * static_cast<double>(ell) * p * 1.05) + 16);
  if (p == 1.0) {
    for (std::size_t j = 0; j < ell; ++j) {
      for (std::size_t i = 0; i < n; ++i) rows.push_back(static_cast<std::uint32_t>(i));
      col_ptr[j + 1] = rows.size();
    }
  } else if (p > 0.0) {
    Engine eng = make_engine(seed, Purpose::signature);
    std::geometric_distribution<std::uint64_t> gap(p);
    for (std::size_t j = 0; j < ell; ++j) {
      std::uint64_t i = gap(eng);
      while (i < n) {
        rows.push_back(static_cast<std::uint32_t>(i));
        i += 1 + gap(eng);
      }
      col_ptr[j + 1] = rows.size();
    }
  }
  return SignatureMatrix(n, ell, std::move(col_ptr), std::move(rows), p);
}

inline ActivityVector sample_activity(std::size_t ell, double alpha, Seed seed) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw DomainError("sample_activity: alpha must lie in [0, 1]");
  ActivityVector b;
  b.bits.resize(ell);
  Engine eng = make_engine(seed, Purpose::activity);
  std::bernoulli_distribution coin(alpha);
  for (auto& bit : b.bits) bit = coin(eng) ? 1 : 0;
  return b;
}

namespace detail {

// Circularly-symmetric complex Gaussian with total variance `variance`.
class ComplexGaussian {
 public:
  explicit ComplexGaussian(double variance) : part_(0.0, std::sqrt(variance / 2.0)) {}
  std::complex<double> operator()(Engine& eng) {
    const double re = part_(eng);
    const double im = part_(eng);
    return {re, im};
  }

 private:
  std::normal_distribution<double> part_;
};

}  // namespace detail

// y = sqrt(P) * sum_j h_j b_j s_j + w.
inline ReceivedVector sample_received(const SignatureMatrix& s, const ActivityVector& b, const SystemParams& params,
                                      Seed seed, FadingMode fading = FadingMode::block) {
  if (b.size() != s.ell()) throw DimensionError("sample_received: activity length differs from the user count");
  ReceivedVector y;
  y.samples.resize(s.n());
  Engine noise_eng = make_engine(seed, Purpose::noise);
  detail::ComplexGaussian noise(params.sigma2_w());
  for (auto& v : y.samples) v = noise(noise_eng);

  Engine fade_eng = make_engine(seed, Purpose::fading);
  detail::ComplexGaussian fade(params.sigma2_h());
  const double amplitude = std::sqrt(params.power());
  for (std::size_t j = 0; j < s.ell(); ++j) {
    if (!b.bits[j]) continue;
    if (fading == FadingMode::block) {
      const std::complex<double> h = amplitude * fade(fade_eng);
      for (std::uint32_t i : s.column(j)) y.samples[i] += h;
    } else {
      for (std::uint32_t i : s.column(j)) y.samples[i] += amplitude * fade(fade_eng);
    }
  }
  return y;
}

// Non-coherent 1-bit energy decision: outcome_i = 1 iff |y_i|^2 > tau2.
inline TestOutcomes energy_detect(const ReceivedVector& y, double tau2) {
  if (!(tau2 >= 0.0)) throw DomainError("energy_detect: tau2 must be >= 0");
  TestOutcomes out;
  out.bits.resize(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) out.bits[i] = std::norm(y.samples[i]) > tau2 ? 1 : 0;
  return out;
}

// Debug dump of one round: channel_use,re_y,im_y,energy,outcome
inline void write_round_csv(std::ostream& os, const ReceivedVector& y, const TestOutcomes& outcomes) {
  if (y.size() != outcomes.size()) throw DimensionError("write_round_csv: length mismatch");
  os << "channel_use,re_y,im_y,energy,outcome\n";
  for (std::size_t i = 0; i < y.size(); ++i) {
    CsvRow row;
    row.add(static_cast<std::uint64_t>(i))
        .add(y.samples[i].real())
        .add(y.samples[i].imag())
        .add(std::norm(y.samples[i]))
        .add(static_cast<std::uint64_t>(outcomes.bits[i]));
    os << row.str() << '\n';
  }
}

}  // namespace mnacgt
