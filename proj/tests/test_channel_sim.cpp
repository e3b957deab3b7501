#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "mnacgt/channel_sim.hpp"
#include "mnacgt/csv.hpp"

using namespace mnacgt;

TEST(SignatureMatrix, DenseRoundTrip) {
  const std::vector<std::uint8_t> dense = {1, 0, 1,  //
                                           0, 0, 1,  //
                                           1, 1, 0};
  const SignatureMatrix s = SignatureMatrix::from_dense(3, 3, dense);
  EXPECT_EQ(s.dense(), dense);
  EXPECT_EQ(s.nnz(), 5u);
  EXPECT_EQ(s.column_weight(2), 2u);
  EXPECT_TRUE(s.at(2, 1));
  EXPECT_FALSE(s.at(1, 0));
}

TEST(SignatureMatrix, RejectsMalformedInput) {
  EXPECT_THROW(SignatureMatrix::from_dense(2, 2, std::vector<std::uint8_t>{1, 0, 1}), DimensionError);
  EXPECT_THROW(SignatureMatrix::from_dense(1, 2, std::vector<std::uint8_t>{2, 0}), DomainError);
  EXPECT_THROW(SignatureMatrix(2, 1, {0, 2}, {1, 0}), DimensionError);
  EXPECT_THROW(SignatureMatrix(2, 1, {0, 1}, {5}), DimensionError);
  EXPECT_THROW(gen_signature_matrix(0, 4, 0.5, Seed{1}), DimensionError);
  EXPECT_THROW(gen_signature_matrix(4, 4, 1.5, Seed{1}), DomainError);
}

TEST(SignatureMatrix, DegenerateDensities) {
  const SignatureMatrix zero = gen_signature_matrix(5, 7, 0.0, Seed{3});
  EXPECT_EQ(zero.nnz(), 0u);
  const SignatureMatrix ones = gen_signature_matrix(5, 7, 1.0, Seed{3});
  EXPECT_EQ(ones.nnz(), 35u);
}

TEST(SignatureMatrix, SeedDeterminism) {
  EXPECT_EQ(gen_signature_matrix(50, 80, 0.1, Seed{9, 2}), gen_signature_matrix(50, 80, 0.1, Seed{9, 2}));
  EXPECT_FALSE(gen_signature_matrix(50, 80, 0.1, Seed{9, 2}) == gen_signature_matrix(50, 80, 0.1, Seed{9, 3}));
}

TEST(SignatureMatrix, DensityMatchesP) {
  // 2e6 Bernoulli(0.03) entries; 5 sigma band
  const SignatureMatrix s = gen_signature_matrix(1000, 2000, 0.03, Seed{42});
  const double cells = 2e6;
  const double sd = std::sqrt(cells * 0.03 * 0.97);
  EXPECT_NEAR(static_cast<double>(s.nnz()), cells * 0.03, 5 * sd);
}

TEST(SignatureMatrix, GapLawMatchesCoinFlips) {
  // each row index is hit with probability p, not biased toward either end
  const std::size_t n = 10;
  std::vector<double> hits(n, 0.0);
  const SignatureMatrix s = gen_signature_matrix(100000, n, 0.3, Seed{5});
  for (std::size_t j = 0; j < s.ell(); ++j)
    for (std::uint32_t i : s.column(j)) hits[i] += 1.0;
  const double sd = std::sqrt(1e5 * 0.3 * 0.7);
  for (double h : hits) EXPECT_NEAR(h, 3e4, 5 * sd);
}

TEST(Activity, RateAndEdges) {
  EXPECT_EQ(sample_activity(100, 0.0, Seed{1}).popcount(), 0u);
  EXPECT_EQ(sample_activity(100, 1.0, Seed{1}).popcount(), 100u);
  const double k = static_cast<double>(sample_activity(100000, 0.2, Seed{1}).popcount());
  EXPECT_NEAR(k, 2e4, 5 * std::sqrt(1e5 * 0.16));
  EXPECT_THROW(sample_activity(10, -0.1, Seed{1}), DomainError);
}

TEST(Received, InactiveUsersContributeNothing) {
  const SignatureMatrix s = gen_signature_matrix(20, 30, 0.5, Seed{7});
  const SystemParams sp(20, 0.1, 2.0, 1.0, 1.0);
  ActivityVector none;
  none.bits.assign(20, 0);
  ActivityVector one = none;
  one.bits[4] = 1;
  const ReceivedVector y0 = sample_received(s, none, sp, Seed{11});
  const ReceivedVector y1 = sample_received(s, one, sp, Seed{11});
  // same noise stream; only the tests containing user 4 change
  for (std::size_t i = 0; i < s.n(); ++i) {
    if (s.at(i, 4)) EXPECT_NE(y0.samples[i], y1.samples[i]);
    else EXPECT_EQ(y0.samples[i], y1.samples[i]);
  }
}

TEST(Received, BlockFadingSharesOneCoefficient) {
  const SignatureMatrix s = gen_signature_matrix(1, 50, 1.0, Seed{1});
  const SystemParams sp(1, 1.0, 1.0, 1.0, 1e-60);
  ActivityVector b;
  b.bits = {1};
  const ReceivedVector block = sample_received(s, b, sp, Seed{2}, FadingMode::block);
  for (const auto& v : block.samples) EXPECT_NEAR(std::abs(v - block.samples[0]), 0.0, 1e-12);
  const ReceivedVector per_use = sample_received(s, b, sp, Seed{2}, FadingMode::per_use);
  EXPECT_GT(std::abs(per_use.samples[0] - per_use.samples[1]), 1e-6);
}

TEST(Received, EnergyMomentsMatchModel) {
  // E|y|^2 = P sigma_h^2 (#active in test) + sigma_w^2
  const std::size_t n = 200000;
  const SignatureMatrix s = gen_signature_matrix(3, n, 1.0, Seed{1});
  const SystemParams sp(3, 0.5, 0.5, 2.0, 0.25);
  ActivityVector b;
  b.bits = {1, 0, 1};
  const ReceivedVector y = sample_received(s, b, sp, Seed{4}, FadingMode::per_use);
  double mean = 0.0;
  for (const auto& v : y.samples) mean += std::norm(v);
  mean /= static_cast<double>(n);
  EXPECT_NEAR(mean, 2.25, 0.02);
}

TEST(EnergyDetector, StrictThreshold) {
  ReceivedVector y;
  y.samples = {{1.0, 0.0}, {0.0, 2.0}, {0.5, 0.5}};
  const TestOutcomes t = energy_detect(y, 1.0);
  EXPECT_EQ(t.bits, (std::vector<std::uint8_t>{0, 1, 0}));
  EXPECT_THROW(energy_detect(y, -1.0), DomainError);
}

TEST(RoundCsv, HeaderAndRows) {
  ReceivedVector y;
  y.samples = {{1.5, -0.5}, {0.0, 0.0}};
  std::ostringstream os;
  write_round_csv(os, y, energy_detect(y, 1.0));
  const CsvTable t = parse_csv(os.str());
  ASSERT_EQ(t.rows.size(), 2u);
  EXPECT_EQ(t.rows[0][t.column("energy")], "2.5");
  EXPECT_EQ(t.rows[0][t.column("outcome")], "1");
  EXPECT_EQ(t.rows[1][t.column("outcome")], "0");
}

TEST(Csv, ShortestRoundTrip) {
  for (double v : {0.1, 1.0 / 3.0, 1e-300, 123456789.125, -2.5e-7}) {
    EXPECT_EQ(std::stod(format_double(v)), v);
  }
  EXPECT_EQ(format_double(0.1), "0.1");
  const auto cells = split_csv_line("a,\"b,c\",d");
  ASSERT_EQ(cells.size(), 3u);
  EXPECT_EQ(cells[1], "b,c");
}
