#pragma once

#include <atomic>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "mnacgt/channel_sim.hpp"
#include "mnacgt/csv.hpp"
#include "mnacgt/gt_bounds.hpp"
#include "mnacgt/ncomp_decoder.hpp"
#include "mnacgt/parallel.hpp"
#include "mnacgt/rng.hpp"

namespace mnacgt {

inline constexpr double kWilsonZ95 = 1.959963984540054;

struct RateEstimate {
  std::uint64_t hits = 0;
  std::uint64_t draws = 0;
  double rate = std::numeric_limits<double>::quiet_NaN();
  double lo = std::numeric_limits<double>::quiet_NaN();
  double hi = std::numeric_limits<double>::quiet_NaN();
  // binomial standard error sqrt(rate (1 - rate) / draws)
  double std_error = std::numeric_limits<double>::quiet_NaN();

  bool available() const { return draws > 0; }
};

// Wilson score interval.
inline RateEstimate wilson(std::uint64_t hits, std::uint64_t draws, double z = kWilsonZ95) {
  RateEstimate e;
  e.hits = hits;
  e.draws = draws;
  if (draws == 0) return e;
  const double n = static_cast<double>(draws);
  const double ph = static_cast<double>(hits) / n;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / n;
  const double centre = (ph + z2 / (2.0 * n)) / denom;
  const double half = z * std::sqrt(ph * (1.0 - ph) / n + z2 / (4.0 * n * n)) / denom;
  e.rate = ph;
  e.lo = std::max(0.0, std::min(ph, centre - half));
  e.hi = std::min(1.0, std::max(ph, centre + half));
  e.std_error = std::sqrt(ph * (1.0 - ph) / n);
  return e;
}

struct TrialStats {
  std::uint64_t trials = 0;
  std::uint64_t md_union_count = 0;
  std::uint64_t fp_union_count = 0;
  std::uint64_t md_user_total = 0;
  std::uint64_t fp_user_total = 0;
  std::uint64_t active_user_total = 0;
  std::uint64_t inactive_user_total = 0;
  std::uint64_t q1_hits = 0;
  std::uint64_t q1_draws = 0;
  std::uint64_t q2_hits = 0;
  std::uint64_t q2_draws = 0;

  TrialStats& operator+=(const TrialStats& o) {
    trials += o.trials;
    md_union_count += o.md_union_count;
    fp_union_count += o.fp_union_count;
    md_user_total += o.md_user_total;
    fp_user_total += o.fp_user_total;
    active_user_total += o.active_user_total;
    inactive_user_total += o.inactive_user_total;
    q1_hits += o.q1_hits;
    q1_draws += o.q1_draws;
    q2_hits += o.q2_hits;
    q2_draws += o.q2_draws;
    return *this;
  }
  friend bool operator==(const TrialStats&, const TrialStats&) = default;

  // union-over-users error events, one draw per trial
  RateEstimate pmd() const { return wilson(md_union_count, trials); }
  RateEstimate pfp() const { return wilson(fp_union_count, trials); }
  // per-user rates
  RateEstimate pmd_per_user() const { return wilson(md_user_total, active_user_total); }
  RateEstimate pfp_per_user() const { return wilson(fp_user_total, inactive_user_total); }
  RateEstimate q1() const { return wilson(q1_hits, q1_draws); }
  RateEstimate q2() const { return wilson(q2_hits, q2_draws); }

  static std::vector<std::string> csv_columns() {
    return {"trials",        "md_union_count",    "fp_union_count",      "md_user_total", "fp_user_total",
            "active_user_total", "inactive_user_total", "q1_hits",     "q1_draws",      "q2_hits",
            "q2_draws",      "pmd_emp",           "pmd_lo",              "pmd_hi",        "pfp_emp",
            "pfp_lo",        "pfp_hi",            "q1_emp",              "q2_emp"};
  }
  static std::string csv_header() { return join_header(csv_columns()); }

  CsvRow& append_to(CsvRow& row) const {
    const RateEstimate md = pmd();
    const RateEstimate fp = pfp();
    return row.add(trials)
        .add(md_union_count)
        .add(fp_union_count)
        .add(md_user_total)
        .add(fp_user_total)
        .add(active_user_total)
        .add(inactive_user_total)
        .add(q1_hits)
        .add(q1_draws)
        .add(q2_hits)
        .add(q2_draws)
        .add(md.rate)
        .add(md.lo)
        .add(md.hi)
        .add(fp.rate)
        .add(fp.lo)
        .add(fp.hi)
        .add(q1().rate)
        .add(q2().rate);
  }
  std::string csv_row() const {
    CsvRow row;
    return append_to(row).str();
  }
};

struct TrialOptions {
  // reuse one signature matrix for every trial instead of redrawing
  bool fixed_matrix = false;
  FadingMode fading = FadingMode::block;
  // q1 fed to the decoder; defaults to the cfg.q1_mode design value
  std::optional<double> decoder_q1;
  std::size_t workers = 1;
  // called with (completed, total) from worker threads
  std::function<void(std::uint64_t, std::uint64_t)> progress;
};

struct RoundResult {
  ActivityVector activity;
  TestOutcomes outcomes;
  NcompDecoding decoding;
  ErrorTally errors;
  TrialStats stats;
};

// One discovery round on a given signature matrix.
inline RoundResult run_round(const SignatureMatrix& s, const SystemParams& params, const DiscoveryConfig& cfg,
                             double decoder_q1, Seed seed, FadingMode fading = FadingMode::block) {
  RoundResult r;
  r.activity = sample_activity(s.ell(), params.alpha(), seed);
  const ReceivedVector y = sample_received(s, r.activity, params, seed, fading);
  r.outcomes = energy_detect(y, cfg.tau2);
  const UserTestCounts counts = count_user_tests(s, r.outcomes);
  r.decoding = ncomp_decide(counts, decoder_q1, cfg.delta_margin);
  r.errors = count_errors(r.activity, r.decoding.estimate);

  TrialStats& t = r.stats;
  t.trials = 1;
  t.md_union_count = r.errors.md_any ? 1 : 0;
  t.fp_union_count = r.errors.fp_any ? 1 : 0;
  t.md_user_total = r.errors.md_count;
  t.fp_user_total = r.errors.fp_count;
  // (user, test) pairs: negatives seen by active users, positives by inactive ones
  for (std::size_t j = 0; j < s.ell(); ++j) {
    if (r.activity.bits[j]) {
      ++t.active_user_total;
      t.q1_draws += counts.tests[j];
      t.q1_hits += counts.tests[j] - counts.positives[j];
    } else {
      ++t.inactive_user_total;
      t.q2_draws += counts.tests[j];
      t.q2_hits += counts.positives[j];
    }
  }
  return r;
}

inline double decoder_q1_for(const SystemParams& params, const DiscoveryConfig& cfg) {
  return cfg.q1_mode == Q1Mode::exact ? q1_exact(params, cfg) : q1_lower_bound(params, cfg);
}

// Repeated independent discovery rounds. Trial t draws from seed.child(t), so
// the result does not depend on the worker count or schedule.
inline TrialStats run_discovery_trials(const SystemParams& params, const DiscoveryConfig& cfg, std::uint64_t trials,
                                       Seed seed, const TrialOptions& opt = {}) {
  if (trials < 1) throw DomainError("run_discovery_trials: trials must be >= 1");
  cfg.validate();
  if (cfg.n < 1) throw DomainError("run_discovery_trials: n must be >= 1");
  const double q1 = opt.decoder_q1 ? *opt.decoder_q1 : decoder_q1_for(params, cfg);
  ncomp_threshold(q1, cfg.delta_margin);

  std::optional<SignatureMatrix> fixed;
  if (opt.fixed_matrix) fixed = gen_signature_matrix(params.ell(), cfg.n, cfg.p, seed.child(~std::uint64_t{0}));

  // fixed-size chunks keep the merge order independent of the worker count
  constexpr std::uint64_t kChunk = 16;
  const std::uint64_t chunks = (trials + kChunk - 1) / kChunk;
  std::vector<TrialStats> partial(chunks);
  std::atomic<std::uint64_t> done{0};
  parallel_for(chunks, opt.workers, [&](std::size_t c) {
    const std::uint64_t begin = c * kChunk;
    const std::uint64_t end = std::min(trials, begin + kChunk);
    for (std::uint64_t t = begin; t < end; ++t) {
      const Seed ts = seed.child(t);
      if (fixed) {
        partial[c] += run_round(*fixed, params, cfg, q1, ts, opt.fading).stats;
      } else {
        const SignatureMatrix s = gen_signature_matrix(params.ell(), cfg.n, cfg.p, ts);
        partial[c] += run_round(s, params, cfg, q1, ts, opt.fading).stats;
      }
    }
    const std::uint64_t total = done.fetch_add(end - begin) + (end - begin);
    if (opt.progress) opt.progress(total, trials);
  });
  TrialStats out;
  for (const auto& p : partial) out += p;
  return out;
}

// Independent conditional draws of the test energy around a designated user:
// q1 draws put an active user in the test, q2 draws an inactive one. Each of
// the other ell - 1 users is active w.p. alpha and included w.p. p. Fills
// only the q1/q2 counters of the returned stats.
inline TrialStats estimate_q1_q2(const SystemParams& params, const DiscoveryConfig& cfg, std::uint64_t draws, Seed seed,
                                 std::size_t workers = 1) {
  if (draws < 1) throw DomainError("estimate_q1_q2: draws must be >= 1");
  cfg.validate();
  constexpr std::uint64_t kChunk = 8192;
  const std::uint64_t chunks = (draws + kChunk - 1) / kChunk;
  std::vector<TrialStats> partial(chunks);
  const double amplitude = std::sqrt(params.power());
  const std::uint64_t others = params.ell() - 1;

  parallel_for(chunks, workers, [&](std::size_t c) {
    const std::uint64_t count = std::min(draws, (c + 1) * kChunk) - c * kChunk;
    const Seed cs = seed.child(c);
    TrialStats& t = partial[c];
    for (int designated_active = 1; designated_active >= 0; --designated_active) {
      Engine eng = make_engine(cs, designated_active ? Purpose::q1_draws : Purpose::q2_draws);
      std::bernoulli_distribution active(params.alpha());
      std::bernoulli_distribution included(cfg.p);
      detail::ComplexGaussian fade(params.sigma2_h());
      detail::ComplexGaussian noise(params.sigma2_w());
      for (std::uint64_t d = 0; d < count; ++d) {
        std::complex<double> z = noise(eng);
        if (designated_active) z += amplitude * fade(eng);
        for (std::uint64_t j = 0; j < others; ++j) {
          const bool a = active(eng);
          const bool in = included(eng);
          if (a && in) z += amplitude * fade(eng);
        }
        const bool positive = std::norm(z) > cfg.tau2;
        if (designated_active) {
          ++t.q1_draws;
          t.q1_hits += positive ? 0 : 1;
        } else {
          ++t.q2_draws;
          t.q2_hits += positive ? 1 : 0;
        }
      }
    }
    t.trials = count;
  });
  TrialStats out;
  for (const auto& p : partial) out += p;
  return out;
}

}  // namespace mnacgt
