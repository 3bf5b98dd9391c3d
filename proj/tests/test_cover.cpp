#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <set>

#include "oracles.hpp"
#include "permcover/cover.hpp"

using namespace permcover;

namespace {

Permutation P(const char *s) { return Permutation::parse(s); }

PermSetBitmap selection(int level, std::initializer_list<const char *> perms) {
  PermSetBitmap out(level);
  for (const char *s : perms)
    out.set(rank(P(s)).r);
  return out;
}

std::set<std::string> names(const PermSetBitmap &b) {
  std::set<std::string> out;
  for (const auto &p : b.members())
    out.insert(p.to_string());
  return out;
}

const CoverageGraph &graph(int n) {
  static std::map<int, CoverageGraph> cache;
  auto it = cache.find(n);
  if (it == cache.end())
    it = cache.emplace(n, CoverageGraph::build(n)).first;
  return it->second;
}

} // namespace

TEST(VerifyCover, Examples) {
  const auto &g = graph(3);
  EXPECT_TRUE(verify_cover(g, selection(4, {"1342", "4213"})).ok);

  const auto v = verify_cover(g, selection(4, {"1342"}));
  EXPECT_FALSE(v.ok);
  std::vector<std::uint64_t> deficient;
  for (auto [pi, c] : v.deficient) {
    deficient.push_back(pi);
    EXPECT_EQ(c, 0);
  }
  std::vector<std::uint64_t> expected{rank(P("213")).r, rank(P("312")).r, rank(P("321")).r};
  EXPECT_EQ(deficient, expected);

  for (int n = 1; n <= 5; ++n)
    EXPECT_TRUE(verify_cover(graph(n), PermSetBitmap::full(n + 1)).ok);
  EXPECT_THROW(verify_cover(g, PermSetBitmap(3)), InvalidInput);
}

TEST(VerifyCover, CountsMultiplicity) {
  const auto &g = graph(3);
  const auto full = PermSetBitmap::full(4);
  EXPECT_TRUE(verify_cover(g, full, 10).ok);
  const auto v = verify_cover(g, full, 11);
  EXPECT_EQ(v.deficient.size(), 6u);
  EXPECT_EQ(v.deficient.front().second, 10);
}

TEST(Bounds, Pigeonhole) {
  EXPECT_EQ(pigeonhole_lower(3, 1), 2u);
  EXPECT_EQ(pigeonhole_lower(4, 1), 5u);
  EXPECT_EQ(pigeonhole_lower(1, 1), 1u);
  EXPECT_EQ(pigeonhole_lower(3, 2), 3u);
}

TEST(Bounds, AlterationUpper) {
  EXPECT_NEAR(thm2_upper(3), 2.4 * (1 + std::log(2.5)), 1e-12);
  EXPECT_NEAR(thm2_upper(3), 4.599, 1e-3);
  EXPECT_NEAR(thm2_upper(6), 5040.0 / 37 * (1 + std::log(37.0 / 7)), 1e-9);
  for (int n = 2; n <= 12; ++n)
    EXPECT_GE(thm2_upper(n), static_cast<double>(pigeonhole_lower(n, 1))) << n;
  EXPECT_THROW(thm2_upper(1), InvalidInput);
}

TEST(Bounds, LambdaUpper) {
  const double r = 5040.0 / 37;
  EXPECT_NEAR(thm3_upper(6, 2), r * (std::log(6.0) + std::log(std::log(6.0)) + 2), 1e-9);
  EXPECT_NEAR(thm3_upper(6, 2), 596.0, 0.5);
  EXPECT_GT(thm3_upper(3, 2), 0);
  EXPECT_NEAR(std::log(std::log(3.0)), 0.0940, 1e-4);
  // The lambda/(lambda-1)! term falls faster than the log log term grows at
  // lambda = 3 -> 4; the expression is not monotone there.
  EXPECT_GT(thm3_upper(6, 3), thm3_upper(6, 2));
  EXPECT_LT(thm3_upper(6, 4), thm3_upper(6, 3));
  EXPECT_GT(thm3_upper(6, 5), thm3_upper(6, 4));
  EXPECT_THROW(thm3_upper(2, 2), InvalidInput);
  EXPECT_THROW(thm3_upper(6, 1), InvalidInput);
}

TEST(Bounds, ExpectedUncoveredWithoutReplacement) {
  EXPECT_DOUBLE_EQ(expected_uncovered_wor(3, 0), 6.0);
  EXPECT_DOUBLE_EQ(expected_uncovered_wor(3, 24), 0.0);
  EXPECT_NEAR(expected_uncovered_wor(3, 1), 3.5, 1e-12);
  EXPECT_THROW(expected_uncovered_wor(3, 25), RangeError);
  for (int n = 2; n <= 8; ++n) {
    double prev = expected_uncovered_wor(n, 0);
    EXPECT_DOUBLE_EQ(prev, static_cast<double>(factorial(n)));
    const auto N = factorial(n + 1);
    for (std::uint64_t y = 1; y <= N; y += 1 + N / 200) {
      const double cur = expected_uncovered_wor(n, y);
      ASSERT_LE(cur, prev + 1e-9);
      prev = cur;
    }
  }
}

// n! C(N-m, Y) / C(N, Y) evaluated with exact rational arithmetic in long double.
TEST(Bounds, ExpectedUncoveredMatchesBinomialRatio) {
  const int n = 4;
  const std::uint64_t N = 120, m = 17;
  for (std::uint64_t y : {1u, 5u, 20u, 60u, 103u}) {
    long double ratio = 1;
    for (std::uint64_t i = 0; i < y; ++i)
      ratio *= static_cast<long double>(N - m - i) / static_cast<long double>(N - i);
    EXPECT_NEAR(expected_uncovered_wor(n, y), 24.0 * static_cast<double>(ratio),
                1e-9 * std::max(1.0, 24.0 * static_cast<double>(ratio)));
  }
}

TEST(Greedy, HandSimulatedAtThree) {
  const auto c = greedy_cover(graph(3));
  EXPECT_EQ(c.size, 3u);
  EXPECT_EQ(names(c.selected), (std::set<std::string>{"2413", "1234", "1432"}));
  EXPECT_EQ(c.status, CoverStatus::feasible);
  EXPECT_EQ(c.method, CoverMethod::greedy);
}

TEST(Greedy, SmallCases) {
  EXPECT_EQ(greedy_cover(graph(1)).size, 1u);
  const auto c4 = greedy_cover(graph(4));
  EXPECT_TRUE(verify_cover(graph(4), c4.selected).ok);
  EXPECT_GE(c4.size, 5u);
  EXPECT_LE(static_cast<double>(c4.size), thm2_upper(4));
  for (int lambda = 1; lambda <= 10; ++lambda)
    EXPECT_TRUE(verify_cover(graph(3), greedy_cover(graph(3), lambda).selected, lambda).ok);
  EXPECT_EQ(greedy_cover(graph(3), 10).size, 24u);
  EXPECT_THROW(greedy_cover(graph(3), 11), InvalidInput);
  EXPECT_THROW(greedy_cover(graph(3), 0), InvalidInput);
}

TEST(Alteration, DegenerateDraws) {
  const auto &g = graph(3);
  const auto none = alteration_cover(g, 5, 0);
  EXPECT_TRUE(verify_cover(g, none.selected).ok);
  EXPECT_LE(none.size, 6u);
  const auto all = alteration_cover(g, 5, 24);
  EXPECT_EQ(all.size, 24u);
  EXPECT_THROW(alteration_cover(g, 5, 25), RangeError);
}

TEST(Alteration, ReproducibleBySeed) {
  const auto &g = graph(5);
  const auto a = alteration_cover(g, 42);
  const auto b = alteration_cover(g, 42);
  EXPECT_EQ(a.selected, b.selected);
  EXPECT_EQ(a.seed, std::optional<std::uint64_t>(42));
  EXPECT_EQ(*a.initial_draws, static_cast<std::uint64_t>(std::llround(alteration_optimal_draws(5))));
  EXPECT_TRUE(verify_cover(g, a.selected).ok);
}

TEST(Alteration, BestOfManySeedsBeatsBoundAtSix) {
  const auto &g = graph(6);
  std::uint64_t best = ~0ull;
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    const auto c = alteration_cover(g, seed);
    ASSERT_TRUE(verify_cover(g, c.selected).ok);
    best = std::min(best, c.size);
  }
  EXPECT_LE(static_cast<double>(best), thm2_upper(6));
}

TEST(LambdaCover, Examples) {
  const auto c3 = lambda_cover(graph(3), 2, 7);
  EXPECT_TRUE(verify_cover(graph(3), c3.selected, 2).ok);
  EXPECT_GE(c3.size, pigeonhole_lower(3, 2));

  const auto c6 = lambda_cover(graph(6), 2, 1);
  EXPECT_TRUE(verify_cover(graph(6), c6.selected, 2).ok);
  EXPECT_EQ(*c6.initial_draws, static_cast<std::uint64_t>(std::llround(lambda_cover_draws(6, 2))));
  EXPECT_LE(c6.size, *c6.initial_draws + 720u * 2u);

  const auto top = lambda_cover(graph(3), 10, 3);
  EXPECT_EQ(top.size, 24u);

  EXPECT_THROW(lambda_cover(graph(3), 1, 7), InvalidInput);
  EXPECT_THROW(lambda_cover(graph(3), 11, 7), InvalidInput);
  EXPECT_THROW(lambda_cover(graph(2), 2, 7), InvalidInput);
  EXPECT_TRUE(verify_cover(graph(2), lambda_cover(graph(2), 2, 7, 3).selected, 2).ok);
}

TEST(Exact, KnownSmallValues) {
  const auto c1 = exact_min_cover(graph(1));
  EXPECT_EQ(c1.size, 1u);
  EXPECT_EQ(c1.status, CoverStatus::optimal);
  const auto c2 = exact_min_cover(graph(2));
  EXPECT_EQ(c2.size, 1u);
  EXPECT_EQ(c2.status, CoverStatus::optimal);
  const auto c3 = exact_min_cover(graph(3));
  EXPECT_EQ(c3.size, 2u);
  EXPECT_EQ(c3.status, CoverStatus::optimal);
  EXPECT_EQ(c3.lower_bound, 2u);
  EXPECT_TRUE(verify_cover(graph(3), c3.selected).ok);
}

TEST(Exact, MatchesExhaustiveOracle) {
  for (int n = 1; n <= 4; ++n) {
    const auto inc = oracle::small_incidence(n);
    const auto [k, witness] = oracle::min_cover_exhaustive(inc, 10);
    ASSERT_GT(k, 0);
    const auto c = exact_min_cover(graph(n));
    EXPECT_EQ(c.status, CoverStatus::optimal);
    EXPECT_EQ(c.size, static_cast<std::uint64_t>(k)) << n;
    EXPECT_TRUE(verify_cover(graph(n), c.selected).ok);
  }
}

TEST(Exact, MultiplicityAgainstGreedyAndPigeonhole) {
  const auto &g = graph(3);
  for (int lambda = 1; lambda <= 4; ++lambda) {
    const auto c = exact_min_cover(g, lambda);
    EXPECT_EQ(c.status, CoverStatus::optimal);
    EXPECT_TRUE(verify_cover(g, c.selected, lambda).ok);
    EXPECT_GE(c.size, pigeonhole_lower(3, lambda));
    EXPECT_LE(c.size, greedy_cover(g, lambda).size);
  }
}

TEST(Exact, BudgetExhaustionIsFeasible) {
  const auto &g = graph(5);
  const auto c = exact_min_cover(g, 1, 0.05);
  EXPECT_EQ(c.status, CoverStatus::feasible);
  EXPECT_TRUE(verify_cover(g, c.selected).ok);
  EXPECT_GE(c.lower_bound, pigeonhole_lower(5, 1));
  EXPECT_LE(c.lower_bound, c.size);
  EXPECT_LE(c.size, greedy_cover(g).size);
  EXPECT_THROW(exact_min_cover(g, 1, 0.0), InvalidInput);
}

TEST(Exact, NoLargerThanOtherConstructions) {
  const auto &g = graph(4);
  const auto exact = exact_min_cover(g);
  EXPECT_LE(exact.size, greedy_cover(g).size);
  for (std::uint64_t seed = 0; seed < 10; ++seed)
    EXPECT_LE(exact.size, alteration_cover(g, seed).size);
}

struct HighestRankFirst {
  std::uint64_t operator()(const SearchView &view) const {
    for (std::uint64_t pi = view.need.size(); pi-- > 0;)
      if (view.need[pi] > 0)
        return pi;
    return 0;
  }
};

TEST(Exact, OptimumIndependentOfBranchingRule) {
  for (int n = 2; n <= 4; ++n) {
    const auto a = exact_min_cover(graph(n));
    const auto b = exact_min_cover(graph(n), 1, kDefaultSolveBudgetSeconds, HighestRankFirst{});
    EXPECT_EQ(a.size, b.size);
    EXPECT_TRUE(verify_cover(graph(n), b.selected).ok);
  }
}

TEST(Covers, ReverseImageStillCovers) {
  for (int n = 3; n <= 5; ++n) {
    const auto &g = graph(n);
    for (const auto &c : {greedy_cover(g), alteration_cover(g, 11)}) {
      PermSetBitmap image(n + 1);
      for (const auto &rho : c.selected.members())
        image.set(rank(symmetry(rho, Symmetry::reverse)).r);
      EXPECT_EQ(image.count(), c.size);
      EXPECT_TRUE(verify_cover(g, image).ok);
    }
  }
}
