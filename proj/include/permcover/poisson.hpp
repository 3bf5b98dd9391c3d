#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "errors.hpp"

namespace permcover {

/// Truncated Poisson pmf over 0..k_max plus the exact mass beyond k_max.
struct PoissonPmf {
  std::vector<double> pmf;
  double tail = 0;
};

inline constexpr double kPoissonTailTolerance = 1e-12;

namespace detail {

inline double poisson_term(double lambda, std::uint64_t k) {
  if (lambda == 0)
    return k == 0 ? 1.0 : 0.0;
  const double kk = static_cast<double>(k);
  return std::exp(kk * std::log(lambda) - lambda - std::lgamma(kk + 1));
}

} // namespace detail

/// Smallest k_max >= lambda whose upper tail is below `tolerance`.
inline std::uint64_t poisson_support(double lambda, double tolerance = kPoissonTailTolerance) {
  if (!(lambda >= 0))
    throw InvalidInput("poisson: lambda must be >= 0");
  if (lambda == 0)
    return 0;
  auto k = static_cast<std::uint64_t>(std::ceil(lambda));
  for (;; ++k) {
    // Terms past k+1 fall off at least geometrically with ratio lambda/(k+2).
    const double next = detail::poisson_term(lambda, k + 1);
    const double ratio = lambda / static_cast<double>(k + 2);
    if (next / (1 - ratio) < tolerance)
      return k;
  }
}

/**
 * e^-lambda lambda^k / k! for k = 0..k_max, each term evaluated in log
 * space. Not renormalized; `tail` is summed term by term beyond k_max.
 */
inline PoissonPmf poisson_pmf(double lambda, std::uint64_t k_max) {
  if (!(lambda >= 0))
    throw InvalidInput("poisson: lambda must be >= 0");
  PoissonPmf out;
  out.pmf.resize(k_max + 1);
  for (std::uint64_t k = 0; k <= k_max; ++k)
    out.pmf[k] = detail::poisson_term(lambda, k);
  for (std::uint64_t k = k_max + 1;; ++k) {
    const double t = detail::poisson_term(lambda, k);
    out.tail += t;
    if (static_cast<double>(k) > lambda && t <= out.tail * 1e-17)
      break;
  }
  return out;
}

inline PoissonPmf poisson_pmf(double lambda) { return poisson_pmf(lambda, poisson_support(lambda)); }

/// 1/2 sum |a_k - b_k|; both inputs must be nonnegative and sum to 1 within 1e-9.
inline double tv_distance(std::span<const double> a, std::span<const double> b) {
  auto check = [](std::span<const double> p, const char *name) {
    double s = 0;
    for (double x : p) {
      if (!(x >= 0))
        throw InvalidInput(std::string("tv_distance: negative mass in ") + name);
      s += x;
    }
    if (std::abs(s - 1) > 1e-9)
      throw InvalidInput(std::string("tv_distance: ") + name + " sums to " + std::to_string(s));
  };
  check(a, "first pmf");
  check(b, "second pmf");
  double d = 0;
  const std::size_t len = std::max(a.size(), b.size());
  for (std::size_t k = 0; k < len; ++k) {
    const double x = k < a.size() ? a[k] : 0.0;
    const double y = k < b.size() ? b[k] : 0.0;
    d += std::abs(x - y);
  }
  return std::min(1.0, d / 2);
}

} // namespace permcover
