#pragma once

// Covers of S_n by subsets of S_{n+1}: verification, analytic bounds,
// greedy / alteration / lambda-cover constructions and an exact
// branch-and-bound minimum (multi)cover solver.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bitmap.hpp"
#include "coverage_graph.hpp"
#include "errors.hpp"
#include "rng.hpp"

namespace permcover {

enum class CoverStatus { optimal, feasible, infeasible_budget };
enum class CoverMethod { exact, greedy, alteration, lambda_sample, external };

inline std::string to_string(CoverStatus s) {
  switch (s) {
  case CoverStatus::optimal: return "optimal";
  case CoverStatus::feasible: return "feasible";
  case CoverStatus::infeasible_budget: return "infeasible-budget";
  }
  return "?";
}

inline std::string to_string(CoverMethod m) {
  switch (m) {
  case CoverMethod::exact: return "exact";
  case CoverMethod::greedy: return "greedy";
  case CoverMethod::alteration: return "alteration";
  case CoverMethod::lambda_sample: return "lambda";
  case CoverMethod::external: return "external";
  }
  return "?";
}

inline CoverStatus parse_status(const std::string &s) {
  if (s == "optimal") return CoverStatus::optimal;
  if (s == "feasible") return CoverStatus::feasible;
  if (s == "infeasible-budget") return CoverStatus::infeasible_budget;
  throw InvalidInput("unknown certificate status '" + s + "'");
}

inline CoverMethod parse_method(const std::string &s) {
  if (s == "exact") return CoverMethod::exact;
  if (s == "greedy") return CoverMethod::greedy;
  if (s == "alteration") return CoverMethod::alteration;
  if (s == "lambda" || s == "lambda-sample") return CoverMethod::lambda_sample;
  if (s == "external") return CoverMethod::external;
  throw InvalidInput("unknown cover method '" + s + "'");
}

struct CoverCertificate {
  int n = 0;
  int lambda = 1;
  CoverMethod method = CoverMethod::external;
  CoverStatus status = CoverStatus::feasible;
  PermSetBitmap selected;
  std::uint64_t size = 0;
  std::uint64_t lower_bound = 0;
  std::optional<std::uint64_t> seed;
  /// Initial random draws before patching (alteration and lambda methods).
  std::optional<std::uint64_t> initial_draws;
  double wall_time_ms = 0;
};

struct CoverVerification {
  bool ok = true;
  /// (pattern rank, coverage count) for every pattern below the multiplicity.
  std::vector<std::pair<std::uint64_t, int>> deficient;
};

inline void check_lambda(const CoverageGraph &g, int lambda) {
  if (lambda < 1)
    throw InvalidInput("multiplicity must be >= 1");
  if (lambda > g.cover_degree())
    throw InvalidInput("multiplicity " + std::to_string(lambda) +
                       " exceeds the n^2+1 = " + std::to_string(g.cover_degree()) +
                       " covers each pattern has");
}

inline CoverVerification verify_cover(const CoverageGraph &g, const PermSetBitmap &sel,
                                      int lambda = 1) {
  if (sel.level() != g.n() + 1)
    throw InvalidInput("selection is over S_" + std::to_string(sel.level()) + ", expected S_" +
                       std::to_string(g.n() + 1));
  CoverVerification out;
  for (std::uint64_t pi = 0; pi < g.num_patterns(); ++pi) {
    int c = 0;
    for (auto r : g.cover_list(pi))
      c += sel.test_unchecked(r);
    if (c < lambda) {
      out.ok = false;
      out.deficient.emplace_back(pi, c);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Analytic bounds. log is natural log throughout.

/// ceil(lambda * n! / (n+1)).
inline std::uint64_t pigeonhole_lower(int n, int lambda = 1) {
  if (n < 1 || lambda < 1)
    throw InvalidInput("pigeonhole_lower: need n >= 1 and lambda >= 1");
  const std::uint64_t num = static_cast<std::uint64_t>(lambda) * factorial(n);
  const auto den = static_cast<std::uint64_t>(n + 1);
  return (num + den - 1) / den;
}

/// Alteration upper bound with the exact n^2+1 normalization.
inline double thm2_upper(int n) {
  if (n < 2)
    throw InvalidInput("thm2_upper: n must be >= 2");
  const double nn = static_cast<double>(n);
  const double ratio = static_cast<double>(factorial(n + 1)) / (nn * nn + 1);
  return ratio * (1.0 + std::log((nn * nn + 1) / (nn + 1)));
}

/// Leading-order form with n^2 in the denominator: (n+1)! log n / n^2.
inline double thm2_leading(int n) {
  if (n < 2)
    throw InvalidInput("thm2_leading: n must be >= 2");
  const double nn = static_cast<double>(n);
  return static_cast<double>(factorial(n + 1)) * std::log(nn) / (nn * nn);
}

/// Initial sample size minimizing Y + n! exp(-Y (n^2+1)/(n+1)!).
inline double alteration_optimal_draws(int n) {
  const double nn = static_cast<double>(n);
  const double ratio = static_cast<double>(factorial(n + 1)) / (nn * nn + 1);
  return ratio * std::log((nn * nn + 1) / (nn + 1));
}

/// Initial with-replacement draws for a lambda-cover: ((n+1)!/(n^2+1))(log n + (lambda-1) log log n).
inline double lambda_cover_draws(int n, int lambda) {
  const double nn = static_cast<double>(n);
  const double ratio = static_cast<double>(factorial(n + 1)) / (nn * nn + 1);
  return ratio * (std::log(nn) + (lambda - 1) * std::log(std::log(nn)));
}

/**
 * Explicit lambda-cover bound before the O(1) is absorbed:
 * ((n+1)!/(n^2+1)) (log n + (lambda-1) log log n + lambda/(lambda-1)!).
 */
inline double thm3_upper(int n, int lambda) {
  if (n < 3)
    throw InvalidInput("thm3_upper: n must be >= 3 so that log log n > 0");
  if (lambda < 2)
    throw InvalidInput("thm3_upper: lambda must be >= 2");
  const double nn = static_cast<double>(n);
  const double ratio = static_cast<double>(factorial(n + 1)) / (nn * nn + 1);
  return ratio * (std::log(nn) + (lambda - 1) * std::log(std::log(nn)) +
                  lambda / std::tgamma(static_cast<double>(lambda)));
}

/**
 * Expected uncovered patterns after Y draws without replacement:
 * n! C(N-m, Y) / C(N, Y) with N = (n+1)!, m = n^2+1. The binomial ratio
 * telescopes to prod_{i<m} (N-Y-i)/(N-i), summed in log space.
 */
inline double expected_uncovered_wor(int n, std::uint64_t draws) {
  const std::uint64_t N = factorial(n + 1);
  if (draws > N)
    throw RangeError("expected_uncovered_wor: Y=" + std::to_string(draws) + " exceeds (n+1)!");
  const std::uint64_t m = static_cast<std::uint64_t>(n) * n + 1;
  if (draws > N - m)
    return 0.0;
  double log_ratio = 0;
  for (std::uint64_t i = 0; i < m; ++i)
    log_ratio += std::log1p(-static_cast<double>(draws) / static_cast<double>(N - i));
  return static_cast<double>(factorial(n)) * std::exp(log_ratio);
}

namespace detail {

using Clock = std::chrono::steady_clock;

inline double elapsed_ms(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

inline CoverCertificate make_certificate(const CoverageGraph &g, int lambda, CoverMethod method,
                                         CoverStatus status, PermSetBitmap sel) {
  CoverCertificate c;
  c.n = g.n();
  c.lambda = lambda;
  c.method = method;
  c.status = status;
  c.size = sel.count();
  c.selected = std::move(sel);
  c.lower_bound = pigeonhole_lower(g.n(), lambda);
  return c;
}

// Floyd's algorithm: `k` distinct ranks of [0, universe), uniform.
inline void sample_distinct(StreamRng &rng, std::uint64_t universe, std::uint64_t k,
                            PermSetBitmap &out) {
  for (std::uint64_t j = universe - k; j < universe; ++j) {
    const std::uint64_t t = rng.below(j + 1);
    out.set(out.test_unchecked(t) ? j : t);
  }
}

// Adds lowest-rank unselected covers until every pattern reaches `lambda`.
// Patterns are visited in rank order; coverage is recounted as picks land.
inline void patch_lowest_rank(const CoverageGraph &g, int lambda, PermSetBitmap &sel) {
  for (std::uint64_t pi = 0; pi < g.num_patterns(); ++pi) {
    auto covers = g.cover_list(pi);
    int have = 0;
    for (auto r : covers)
      have += sel.test_unchecked(r);
    for (auto r : covers) {
      if (have >= lambda)
        break;
      if (!sel.test_unchecked(r)) {
        sel.set(r);
        ++have;
      }
    }
  }
}

// Max-score argmax with lowest-index ties, over a fixed universe.
class MaxTree {
public:
  explicit MaxTree(std::span<const int> values) {
    size_ = 1;
    while (size_ < values.size())
      size_ <<= 1;
    tree_.assign(2 * size_, {-1, 0});
    for (std::size_t i = 0; i < values.size(); ++i)
      tree_[size_ + i] = {values[i], i};
    for (std::size_t i = size_ - 1; i >= 1; --i)
      tree_[i] = better(tree_[2 * i], tree_[2 * i + 1]);
  }

  void update(std::size_t i, int value) {
    i += size_;
    tree_[i].first = value;
    for (i >>= 1; i >= 1; i >>= 1)
      tree_[i] = better(tree_[2 * i], tree_[2 * i + 1]);
  }

  std::pair<int, std::size_t> top() const { return tree_[1]; }

private:
  static std::pair<int, std::size_t> better(const std::pair<int, std::size_t> &a,
                                            const std::pair<int, std::size_t> &b) {
    if (a.first != b.first)
      return a.first > b.first ? a : b;
    return a.second < b.second ? a : b;
  }

  std::size_t size_ = 1;
  std::vector<std::pair<int, std::size_t>> tree_;
};

} // namespace detail

/**
 * Classical greedy multicover: repeatedly take the cover that helps the most
 * still-deficient patterns, lowest rank on ties. Deterministic.
 */
inline CoverCertificate greedy_cover(const CoverageGraph &g, int lambda = 1) {
  check_lambda(g, lambda);
  const auto start = detail::Clock::now();
  std::vector<int> need(g.num_patterns(), lambda);
  std::vector<int> score(g.num_covers());
  for (std::uint64_t r = 0; r < g.num_covers(); ++r)
    score[r] = static_cast<int>(g.pattern_list(r).size());
  detail::MaxTree tree(score);
  PermSetBitmap sel(g.n() + 1);
  std::uint64_t remaining = g.num_patterns();
  while (remaining > 0) {
    const auto [best, r] = tree.top();
    if (best <= 0)
      break; // unreachable while lambda <= n^2+1
    sel.set(r);
    tree.update(r, -1);
    score[r] = -1;
    for (auto pi : g.pattern_list(r)) {
      if (need[pi] == 0)
        continue;
      if (--need[pi] == 0) {
        --remaining;
        for (auto other : g.cover_list(pi))
          if (score[other] > 0)
            tree.update(other, --score[other]);
      }
    }
  }
  auto cert = detail::make_certificate(g, lambda, CoverMethod::greedy, CoverStatus::feasible,
                                       std::move(sel));
  cert.wall_time_ms = detail::elapsed_ms(start);
  return cert;
}

/**
 * Alteration construction: Y distinct uniform covers, then one patch per
 * pattern left uncovered (lowest-rank cover first). Y defaults to the
 * rounded minimizer of Y + n! exp(-Y (n^2+1)/(n+1)!).
 */
inline CoverCertificate alteration_cover(const CoverageGraph &g, std::uint64_t seed,
                                         std::optional<std::uint64_t> draws = std::nullopt) {
  const auto start = detail::Clock::now();
  const std::uint64_t N = g.num_covers();
  std::uint64_t Y = draws.value_or(g.n() >= 2 ? static_cast<std::uint64_t>(std::llround(
                                                     alteration_optimal_draws(g.n())))
                                               : 0);
  if (Y > N)
    throw RangeError("alteration_cover: Y=" + std::to_string(Y) + " exceeds (n+1)!");
  StreamRng rng(seed);
  PermSetBitmap sel(g.n() + 1);
  detail::sample_distinct(rng, N, Y, sel);
  detail::patch_lowest_rank(g, 1, sel);
  auto cert = detail::make_certificate(g, 1, CoverMethod::alteration, CoverStatus::feasible,
                                       std::move(sel));
  cert.seed = seed;
  cert.initial_draws = Y;
  cert.wall_time_ms = detail::elapsed_ms(start);
  return cert;
}

/**
 * Lambda-cover: Y uniform draws with replacement (duplicates collapse), then
 * each pattern covered j < lambda times gets lambda - j more distinct
 * covers, lowest rank first.
 */
inline CoverCertificate lambda_cover(const CoverageGraph &g, int lambda, std::uint64_t seed,
                                     std::optional<std::uint64_t> draws = std::nullopt) {
  if (lambda < 2)
    throw InvalidInput("lambda_cover needs lambda >= 2; use alteration or greedy for lambda = 1");
  if (g.n() < 3 && !draws)
    throw InvalidInput("lambda_cover: default draw count needs n >= 3 (log log n > 0)");
  check_lambda(g, lambda);
  const auto start = detail::Clock::now();
  const std::uint64_t Y =
      draws.value_or(static_cast<std::uint64_t>(std::llround(lambda_cover_draws(g.n(), lambda))));
  StreamRng rng(seed);
  PermSetBitmap sel(g.n() + 1);
  for (std::uint64_t i = 0; i < Y; ++i)
    sel.set(rng.below(g.num_covers()));
  detail::patch_lowest_rank(g, lambda, sel);
  auto cert = detail::make_certificate(g, lambda, CoverMethod::lambda_sample,
                                       CoverStatus::feasible, std::move(sel));
  cert.seed = seed;
  cert.initial_draws = Y;
  cert.wall_time_ms = detail::elapsed_ms(start);
  return cert;
}

// ---------------------------------------------------------------------------
// Exact branch-and-bound.

/// Read-only view of the solver state handed to branching rules.
struct SearchView {
  const CoverageGraph &graph;
  std::span<const int> need;     // residual multiplicity per pattern
  std::span<const int> score;    // residual coverage per cover; -1 if unavailable
};

/// Branch on the most deficient pattern, lowest rank on ties.
struct MostDeficientLowestRank {
  std::uint64_t operator()(const SearchView &view) const {
    std::uint64_t best = 0;
    int best_need = -1;
    for (std::uint64_t pi = 0; pi < view.need.size(); ++pi)
      if (view.need[pi] > best_need) {
        best_need = view.need[pi];
        best = pi;
      }
    return best;
  }
};

template <class Rule>
concept BranchingRule = requires(const Rule &rule, const SearchView &view) {
  { rule(view) } -> std::convertible_to<std::uint64_t>;
};

namespace detail {

template <BranchingRule Rule>
class BranchAndBound {
public:
  BranchAndBound(const CoverageGraph &g, int lambda, double budget_seconds, Rule rule)
      : g_(g), lambda_(lambda), rule_(std::move(rule)),
        deadline_(Clock::now() + std::chrono::duration_cast<Clock::duration>(
                                     std::chrono::duration<double>(budget_seconds))),
        need_(g.num_patterns(), lambda), score_(g.num_covers()),
        histogram_(static_cast<std::size_t>(g.n()) + 2, 0), chosen_(g.n() + 1) {
    total_need_ = static_cast<std::uint64_t>(lambda) * g.num_patterns();
    for (std::uint64_t r = 0; r < g.num_covers(); ++r) {
      score_[r] = static_cast<int>(g.pattern_list(r).size());
      ++histogram_[score_[r]];
    }
  }

  /// Returns true when the search space was exhausted.
  bool run(std::uint64_t incumbent_size, PermSetBitmap incumbent) {
    best_size_ = incumbent_size;
    best_ = std::move(incumbent);
    root_bound_ = bound();
    search();
    return !timed_out_;
  }

  std::uint64_t best_size() const { return best_size_; }
  const PermSetBitmap &best() const { return best_; }
  std::uint64_t root_bound() const { return root_bound_; }
  std::uint64_t nodes() const { return nodes_; }

private:
  int max_score() const {
    for (int s = static_cast<int>(histogram_.size()) - 1; s > 0; --s)
      if (histogram_[s])
        return s;
    return 0;
  }

  std::uint64_t bound() const {
    if (total_need_ == 0)
      return depth_;
    const int ms = max_score();
    if (ms == 0)
      return UINT64_MAX;
    return depth_ + (total_need_ + ms - 1) / static_cast<std::uint64_t>(ms);
  }

  void set_score(std::uint64_t r, int value) {
    if (score_[r] >= 0)
      --histogram_[score_[r]];
    score_[r] = value;
    if (value >= 0)
      ++histogram_[value];
  }

  // Patterns whose residual need `take` decremented, flagged when it hit zero.
  using Step = std::vector<std::pair<CoverageGraph::Rank, bool>>;

  Step take(std::uint64_t r) {
    Step step;
    chosen_.set(r);
    ++depth_;
    set_score(r, -1);
    for (auto pi : g_.pattern_list(r)) {
      if (need_[pi] == 0)
        continue;
      --total_need_;
      const bool emptied = --need_[pi] == 0;
      step.emplace_back(pi, emptied);
      if (emptied)
        for (auto other : g_.cover_list(pi))
          if (score_[other] >= 0)
            set_score(other, score_[other] - 1);
    }
    return step;
  }

  void untake(std::uint64_t r, int restored_score, const Step &step) {
    for (auto it = step.rbegin(); it != step.rend(); ++it) {
      const auto [pi, emptied] = *it;
      if (emptied)
        for (auto other : g_.cover_list(pi))
          if (score_[other] >= 0)
            set_score(other, score_[other] + 1);
      ++need_[pi];
      ++total_need_;
    }
    chosen_.reset(r);
    --depth_;
    set_score(r, restored_score);
  }

  void search() {
    if (timed_out_)
      return;
    if ((++nodes_ & 0x3ff) == 0 && Clock::now() > deadline_) {
      timed_out_ = true;
      return;
    }
    if (total_need_ == 0) {
      if (depth_ < best_size_) {
        best_size_ = depth_;
        best_ = chosen_;
      }
      return;
    }
    if (bound() >= best_size_)
      return;

    const std::uint64_t pi = rule_(SearchView{g_, need_, score_});
    std::vector<std::uint64_t> candidates;
    for (auto r : g_.cover_list(pi))
      if (score_[r] > 0)
        candidates.push_back(r);
    if (candidates.size() < static_cast<std::size_t>(need_[pi]))
      return;
    std::stable_sort(candidates.begin(), candidates.end(),
                     [&](auto a, auto b) { return score_[a] > score_[b]; });

    // Each sibling excludes the ones tried before it.
    std::vector<std::pair<std::uint64_t, int>> excluded;
    for (auto r : candidates) {
      const int saved = score_[r];
      const Step step = take(r);
      search();
      untake(r, saved, step);
      if (timed_out_)
        break;
      excluded.emplace_back(r, saved);
      set_score(r, -1);
      if (bound() >= best_size_)
        break;
    }
    for (auto it = excluded.rbegin(); it != excluded.rend(); ++it)
      set_score(it->first, it->second);
  }

  const CoverageGraph &g_;
  int lambda_;
  Rule rule_;
  Clock::time_point deadline_;
  std::vector<int> need_;
  std::vector<int> score_;
  std::vector<std::uint64_t> histogram_;
  PermSetBitmap chosen_;
  PermSetBitmap best_;
  std::uint64_t total_need_ = 0;
  std::uint64_t depth_ = 0;
  std::uint64_t best_size_ = UINT64_MAX;
  std::uint64_t root_bound_ = 0;
  std::uint64_t nodes_ = 0;
  bool timed_out_ = false;
};

} // namespace detail

inline constexpr double kDefaultSolveBudgetSeconds = 60.0;

/**
 * Minimum lambda-cover by depth-first branch-and-bound over set multicover.
 * Branches on the pattern chosen by `rule`, trying its available covers in
 * decreasing residual coverage (rank on ties); earlier siblings are excluded
 * from later branches. Prunes with size + ceil(residual / max coverage).
 * The greedy cover seeds the incumbent. Single-threaded, so the witness is
 * the first optimum in this fixed search order.
 */
template <BranchingRule Rule = MostDeficientLowestRank>
CoverCertificate exact_min_cover(const CoverageGraph &g, int lambda = 1,
                                 double budget_seconds = kDefaultSolveBudgetSeconds,
                                 Rule rule = {}) {
  check_lambda(g, lambda);
  if (!(budget_seconds > 0))
    throw InvalidInput("exact_min_cover: budget must be positive");
  const auto start = detail::Clock::now();
  auto greedy = greedy_cover(g, lambda);
  detail::BranchAndBound<Rule> bb(g, lambda, budget_seconds, std::move(rule));
  const bool complete = bb.run(greedy.size, greedy.selected);
  auto cert = detail::make_certificate(
      g, lambda, CoverMethod::exact, complete ? CoverStatus::optimal : CoverStatus::feasible,
      bb.best());
  cert.lower_bound = complete ? cert.size
                              : std::max<std::uint64_t>(cert.lower_bound, bb.root_bound());
  cert.wall_time_ms = detail::elapsed_ms(start);
  return cert;
}

} // namespace permcover
