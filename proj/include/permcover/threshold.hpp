#pragma once

// Monte Carlo and exact analysis of the Bernoulli-p ensemble over S_{n+1}:
// coverage probability, threshold sweeps, the uncovered count X and its
// Poisson approximation.
//
// Concurrency: trials are independent. Trial t draws only from
// StreamRng(master_seed, t) and reads the shared CoverageGraph; aggregation
// is by integer counts and index-ordered sums, so every report is
// bit-identical for any worker count.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "bitmap.hpp"
#include "coverage_graph.hpp"
#include "errors.hpp"
#include "parallel.hpp"
#include "permutation.hpp"
#include "poisson.hpp"
#include "rng.hpp"

namespace permcover {

/// Largest n for which the exact pairwise variance is computed by default.
inline constexpr int kDefaultVarianceMaxN = 7;

/**
 * Bernoulli-p subset of S_{n+1}. Realized as K ~ Binomial((n+1)!, p) and a
 * uniform K-subset (Floyd's algorithm, or its complement when K > N/2);
 * this has the same law as independent per-rank coin flips.
 */
inline PermSetBitmap sample_selection(int n, double p, StreamRng &rng) {
  if (!(p >= 0 && p <= 1))
    throw RangeError("sample_selection: p must lie in [0, 1]");
  const std::uint64_t N = factorial(n + 1);
  if (p == 0)
    return PermSetBitmap(n + 1);
  if (p == 1)
    return PermSetBitmap::full(n + 1);
  std::binomial_distribution<std::uint64_t> binomial(N, p);
  const std::uint64_t k = binomial(rng);
  const bool complement = k > N / 2;
  const std::uint64_t draw = complement ? N - k : k;
  PermSetBitmap chosen(n + 1);
  for (std::uint64_t j = N - draw; j < N; ++j) {
    const std::uint64_t t = rng.below(j + 1);
    chosen.set(chosen.test_unchecked(t) ? j : t);
  }
  if (!complement)
    return chosen;
  PermSetBitmap out = PermSetBitmap::full(n + 1);
  for (auto r : chosen.ranks())
    out.reset(r);
  return out;
}

/// Reference sampler: one coin flip per rank.
inline PermSetBitmap sample_selection_bernoulli(int n, double p, StreamRng &rng) {
  if (!(p >= 0 && p <= 1))
    throw RangeError("sample_selection: p must lie in [0, 1]");
  PermSetBitmap out(n + 1);
  for (std::uint64_t r = 0; r < out.universe(); ++r)
    if (rng.uniform() < p)
      out.set(r);
  return out;
}

/// X: patterns with no selected cover.
inline std::uint64_t count_uncovered(const CoverageGraph &g, const PermSetBitmap &sel) {
  if (sel.level() != g.n() + 1)
    throw InvalidInput("selection is over S_" + std::to_string(sel.level()) + ", expected S_" +
                       std::to_string(g.n() + 1));
  std::uint64_t x = 0;
  for (std::uint64_t pi = 0; pi < g.num_patterns(); ++pi) {
    bool hit = false;
    for (auto r : g.cover_list(pi))
      if (sel.test_unchecked(r)) {
        hit = true;
        break;
      }
    x += !hit;
  }
  return x;
}

/// lambda = E(X) = n! (1-p)^(n^2+1), in log space.
inline double exact_mean(int n, double p) {
  if (!(p >= 0 && p <= 1))
    throw RangeError("exact_mean: p must lie in [0, 1]");
  if (p == 1)
    return 0.0;
  const double m = static_cast<double>(n) * n + 1;
  return std::exp(std::lgamma(n + 1.0) + m * std::log1p(-p));
}

/**
 * Exact V(X). Indicators of patterns with disjoint cover sets are
 * independent, so only co-coverable pairs contribute covariance
 * (1-p)^(2m - |C|) - q^2 with m = n^2+1, q = (1-p)^m.
 */
inline double exact_variance(const CoverageGraph &g, double p, int max_n = kDefaultVarianceMaxN,
                             int workers = 0) {
  if (!(p >= 0 && p <= 1))
    throw RangeError("exact_variance: p must lie in [0, 1]");
  if (g.n() > max_n)
    throw ResourceLimit("exact variance for n=" + std::to_string(g.n()) +
                            " exceeds the pair budget",
                        max_n);
  const int m = g.cover_degree();
  const double q = std::pow(1 - p, m);
  std::vector<double> pow_table(2 * m + 1);
  for (int k = 0; k <= 2 * m; ++k)
    pow_table[k] = std::pow(1 - p, k);
  std::vector<double> row_cov(g.num_patterns(), 0.0);
  parallel_blocks(g.num_patterns(), workers, [&](std::uint64_t begin, std::uint64_t end) {
    JointCounter counter(g);
    for (auto pi = begin; pi < end; ++pi) {
      double s = 0;
      counter.for_each_partner(pi, [&](std::uint64_t, int c) { s += pow_table[2 * m - c] - q * q; });
      row_cov[pi] = s;
    }
  });
  double v = static_cast<double>(g.num_patterns()) * (q - q * q);
  for (double c : row_cov)
    v += c;
  return v;
}

struct SteinChenBound {
  double lambda = 0;
  double variance = 0;
  /// V/lambda - 1 + 2(1-p)^(n^2+1).
  double raw = 0;
  /// max(raw, 0).
  double value = 0;
};

inline SteinChenBound stein_chen_bound(const CoverageGraph &g, double p,
                                       int max_n = kDefaultVarianceMaxN, int workers = 0) {
  SteinChenBound out;
  out.lambda = exact_mean(g.n(), p);
  out.variance = exact_variance(g, p, max_n, workers);
  const double q = std::pow(1 - p, g.cover_degree());
  // lambda = 0 only at p = 1, where X = 0 = Po(0) exactly.
  out.raw = out.lambda > 0 ? out.variance / out.lambda - 1 + 2 * q : 0.0;
  out.value = std::max(0.0, out.raw);
  return out;
}

struct ThresholdBoundaries {
  double p_zero = 0;
  double p_one = 0;
  bool ordered = true;
};

/**
 * Analytic coverage boundaries: below p_zero coverage fails w.h.p., above
 * p_one it succeeds w.h.p.
 *   p_zero = (log n - 1 + (log n)/(2n) - omega/n) / n
 *   p_one  = log n/n - 1/n + (log n)/(2n^2) + omega/n^2
 */
inline ThresholdBoundaries threshold_boundaries(int n, double omega) {
  if (n < 2)
    throw InvalidInput("threshold_boundaries: n must be >= 2");
  if (!(omega > 0))
    throw InvalidInput("threshold_boundaries: omega must be > 0");
  const double nn = n;
  const double L = std::log(nn);
  ThresholdBoundaries b;
  b.p_zero = (L - 1 + 0.5 * L / nn - omega / nn) / nn;
  b.p_one = L / nn - 1 / nn + L / (2 * nn * nn) + omega / (nn * nn);
  b.ordered = b.p_zero < b.p_one;
  return b;
}

/// p = (log n - 1 + (log n)/(2n) - K/n) / n, literally.
inline double gap_p_paper(int n, double K) {
  if (n < 1)
    throw InvalidInput("gap_p_paper: n must be >= 1");
  const double nn = n;
  const double L = std::log(nn);
  const double p = (L - 1 + 0.5 * L / nn - K / nn) / nn;
  if (!(p > 0 && p < 1))
    throw RangeError("gap_p_paper: p=" + std::to_string(p) + " outside (0, 1)");
  return p;
}

/// The unique p in [0, 1) with exact_mean(n, p) = target, by bisection.
inline double p_for_mean(int n, double target) {
  const double top = static_cast<double>(factorial(n));
  if (!(target > 0 && target <= top))
    throw RangeError("p_for_mean: target must lie in (0, n!]");
  if (target == top)
    return 0.0;
  double lo = 0, hi = 1;
  while (hi - lo > 1e-13) {
    const double mid = 0.5 * (lo + hi);
    if (exact_mean(n, mid) > target)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

struct ProportionEstimate {
  std::uint64_t successes = 0;
  std::uint64_t trials = 0;
  double estimate = 0;
  double ci_lo = 0;
  double ci_hi = 0;
};

/// Wilson score interval at 95%.
inline ProportionEstimate wilson_interval(std::uint64_t successes, std::uint64_t trials) {
  ProportionEstimate e{successes, trials};
  if (trials == 0)
    return e;
  constexpr double z = 1.959963984540054;
  const double t = static_cast<double>(trials);
  const double ph = static_cast<double>(successes) / t;
  const double denom = 1 + z * z / t;
  const double centre = (ph + z * z / (2 * t)) / denom;
  const double half = z * std::sqrt(ph * (1 - ph) / t + z * z / (4 * t * t)) / denom;
  e.estimate = ph;
  e.ci_lo = std::max(0.0, centre - half);
  e.ci_hi = std::min(1.0, centre + half);
  if (successes == 0)
    e.ci_lo = 0;
  if (successes == trials)
    e.ci_hi = 1;
  return e;
}

/// X for trials 0..trials-1 of the given master seed, in trial order.
inline std::vector<std::uint64_t> uncovered_counts(const CoverageGraph &g, double p,
                                                   std::uint64_t trials, std::uint64_t master_seed,
                                                   int workers = 0) {
  std::vector<std::uint64_t> xs(trials);
  parallel_blocks(trials, workers, [&](std::uint64_t begin, std::uint64_t end) {
    for (auto t = begin; t < end; ++t) {
      StreamRng rng(master_seed, t);
      xs[t] = count_uncovered(g, sample_selection(g.n(), p, rng));
    }
  });
  return xs;
}

inline ProportionEstimate mc_cover_probability(const CoverageGraph &g, double p,
                                               std::uint64_t trials, std::uint64_t master_seed,
                                               int workers = 0) {
  if (trials < 1)
    throw InvalidInput("mc_cover_probability: trials must be >= 1");
  const auto xs = uncovered_counts(g, p, trials, master_seed, workers);
  const auto covers = static_cast<std::uint64_t>(std::count(xs.begin(), xs.end(), 0ULL));
  return wilson_interval(covers, trials);
}

struct SweepRow {
  double p = 0;
  ProportionEstimate cover;
  double lambda_exact = 0;
};

struct SweepReport {
  int n = 0;
  std::uint64_t trials = 0;
  std::uint64_t master_seed = 0;
  ThresholdBoundaries boundaries;
  double omega = 1;
  std::vector<SweepRow> rows;
};

/// One coverage estimate per grid point; every point reuses the master seed.
inline SweepReport threshold_sweep(const CoverageGraph &g, std::span<const double> grid,
                                   std::uint64_t trials, std::uint64_t master_seed,
                                   int workers = 0, double omega = 1.0) {
  if (!std::is_sorted(grid.begin(), grid.end()))
    throw InvalidInput("threshold_sweep: grid must be sorted ascending");
  SweepReport rep;
  rep.n = g.n();
  rep.trials = trials;
  rep.master_seed = master_seed;
  rep.omega = omega;
  if (g.n() >= 2)
    rep.boundaries = threshold_boundaries(g.n(), omega);
  for (double p : grid)
    rep.rows.push_back({p, mc_cover_probability(g, p, trials, master_seed, workers),
                        exact_mean(g.n(), p)});
  return rep;
}

/// Evenly spaced grid with `steps` points over [lo, hi].
inline std::vector<double> linear_grid(double lo, double hi, int steps) {
  if (steps < 1)
    throw InvalidInput("grid needs at least one point");
  std::vector<double> out(steps);
  for (int i = 0; i < steps; ++i)
    out[i] = steps == 1 ? lo : lo + (hi - lo) * i / (steps - 1);
  return out;
}

struct GapReport {
  int n = 0;
  double p = 0;
  std::optional<double> K_nominal;
  std::uint64_t trials = 0;
  std::uint64_t master_seed = 0;
  double lambda_exact = 0;
  std::map<std::uint64_t, std::uint64_t> counts;
  std::map<std::uint64_t, double> empirical_pmf;
  double empirical_mean = 0;
  double empirical_variance = 0;
  double tv_to_poisson = 0;
  double poisson_truncated_mass = 0;
  /// Estimated standard error of the empirical TV: 1/2 sum_k sqrt(pi_k(1-pi_k)/T).
  double tv_standard_error = 0;
  ProportionEstimate cover_probability;
  std::optional<SteinChenBound> stein_chen;
  /// exact mean over sqrt(2 pi) e^{-K} and over sqrt(2 pi) e^{+K}, when K was given.
  std::optional<double> ratio_to_asymptotic_minus;
  std::optional<double> ratio_to_asymptotic_plus;
  bool low_trials_warning = false;
};

inline constexpr std::uint64_t kMinTrialsForTv = 1000;

/**
 * Distribution of X over seeded trials, compared with Poisson(exact mean).
 * The Poisson reference is truncated where its tail drops below 1e-12 and
 * the discarded mass is added to the reported TV.
 */
inline GapReport gap_experiment(const CoverageGraph &g, double p, std::uint64_t trials,
                                std::uint64_t master_seed, int workers = 0,
                                std::optional<double> K = std::nullopt,
                                int variance_max_n = kDefaultVarianceMaxN) {
  if (trials < 1)
    throw InvalidInput("gap_experiment: trials must be >= 1");
  GapReport rep;
  rep.n = g.n();
  rep.p = p;
  rep.K_nominal = K;
  rep.trials = trials;
  rep.master_seed = master_seed;
  rep.low_trials_warning = trials < kMinTrialsForTv;
  rep.lambda_exact = exact_mean(g.n(), p);

  const auto xs = uncovered_counts(g, p, trials, master_seed, workers);
  std::uint64_t max_x = 0;
  for (auto x : xs) {
    ++rep.counts[x];
    max_x = std::max(max_x, x);
  }
  const double T = static_cast<double>(trials);
  double sum = 0;
  for (auto [k, c] : rep.counts) {
    rep.empirical_pmf[k] = static_cast<double>(c) / T;
    sum += static_cast<double>(k) * static_cast<double>(c);
  }
  rep.empirical_mean = sum / T;
  double ss = 0;
  for (auto [k, c] : rep.counts) {
    const double d = static_cast<double>(k) - rep.empirical_mean;
    ss += d * d * static_cast<double>(c);
  }
  rep.empirical_variance = trials > 1 ? ss / (T - 1) : 0.0;

  const auto k_max = std::max<std::uint64_t>(poisson_support(rep.lambda_exact), max_x);
  const auto po = poisson_pmf(rep.lambda_exact, k_max);
  std::vector<double> emp(k_max + 1, 0.0);
  for (auto [k, c] : rep.counts)
    emp[k] = static_cast<double>(c) / T;
  double d = 0, se = 0;
  for (std::uint64_t k = 0; k <= k_max; ++k) {
    d += std::abs(emp[k] - po.pmf[k]);
    se += std::sqrt(po.pmf[k] * (1 - po.pmf[k]) / T);
  }
  rep.poisson_truncated_mass = po.tail;
  rep.tv_to_poisson = std::min(1.0, d / 2 + po.tail);
  rep.tv_standard_error = se / 2;

  rep.cover_probability = wilson_interval(rep.counts.count(0) ? rep.counts.at(0) : 0, trials);
  if (g.n() <= variance_max_n)
    rep.stein_chen = stein_chen_bound(g, p, variance_max_n, workers);
  if (K) {
    const double base = std::sqrt(2 * std::numbers::pi);
    rep.ratio_to_asymptotic_minus = rep.lambda_exact / (base * std::exp(-*K));
    rep.ratio_to_asymptotic_plus = rep.lambda_exact / (base * std::exp(*K));
  }
  return rep;
}

} // namespace permcover
