#pragma once

// Bipartite incidence between S_n (patterns) and S_{n+1} (covers), and the
// joint-coverage queries built on top of it.

#include <algorithm>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bitmap.hpp"
#include "errors.hpp"
#include "parallel.hpp"
#include "permutation.hpp"
#include "rng.hpp"

namespace permcover {

/// Default largest pattern length a graph may be built for (9! covers).
inline constexpr int kDefaultMaxGraphN = 8;
/// Ranks are stored as 32-bit; 11! covers is the largest that is sane in memory.
inline constexpr int kHardMaxGraphN = 10;
/// Default largest n for the exhaustive joint-coverage audit.
inline constexpr int kDefaultAuditMaxN = 6;

/**
 * Immutable after build. Adjacency is stored as CSR lists in both
 * directions (sorted by rank); bitmap views are materialized on request.
 */
class CoverageGraph {
public:
  using Rank = std::uint32_t;

  static CoverageGraph build(int n, int max_n = kDefaultMaxGraphN, int workers = 0) {
    if (n < 1)
      throw RangeError("coverage graph: n must be >= 1");
    const int cap = std::min(max_n, kHardMaxGraphN);
    if (n > cap)
      throw ResourceLimit("coverage graph for n=" + std::to_string(n) +
                              " exceeds the configured maximum n",
                          cap);

    CoverageGraph g;
    g.n_ = n;
    const int m = n + 1;
    g.num_patterns_ = factorial(n);
    g.num_covers_ = factorial(m);

    std::uint64_t fact[16];
    for (int i = 0; i < 16 && i <= 20; ++i)
      fact[i] = factorial(i);

    // Pass 1: fixed stride of m slots per cover, then compact.
    std::vector<Rank> scratch(g.num_covers_ * m);
    std::vector<std::uint8_t> degree(g.num_covers_);
    parallel_blocks(g.num_covers_, workers, [&](std::uint64_t begin, std::uint64_t end) {
      for (std::uint64_t r = begin; r < end; ++r) {
        const Permutation rho = unrank(m, r);
        const int *v = rho.values().data();
        Rank *slot = &scratch[r * m];
        for (int i = 0; i < m; ++i)
          slot[i] = detail::deletion_rank(v, m, i, fact);
        std::sort(slot, slot + m);
        degree[r] = static_cast<std::uint8_t>(std::unique(slot, slot + m) - slot);
      }
    });

    g.pattern_offsets_.resize(g.num_covers_ + 1, 0);
    for (std::uint64_t r = 0; r < g.num_covers_; ++r)
      g.pattern_offsets_[r + 1] = g.pattern_offsets_[r] + degree[r];
    g.pattern_data_.resize(g.pattern_offsets_.back());
    std::vector<std::uint64_t> cover_count(g.num_patterns_ + 1, 0);
    for (std::uint64_t r = 0; r < g.num_covers_; ++r) {
      std::copy_n(&scratch[r * m], degree[r], &g.pattern_data_[g.pattern_offsets_[r]]);
      for (int k = 0; k < degree[r]; ++k)
        ++cover_count[scratch[r * m + k] + 1];
    }
    scratch.clear();
    scratch.shrink_to_fit();

    // Counting sort by pattern; visiting covers in rank order keeps lists sorted.
    g.cover_offsets_.assign(g.num_patterns_ + 1, 0);
    for (std::uint64_t p = 0; p < g.num_patterns_; ++p)
      g.cover_offsets_[p + 1] = g.cover_offsets_[p] + cover_count[p + 1];
    g.cover_data_.resize(g.cover_offsets_.back());
    std::vector<std::uint64_t> cursor(g.cover_offsets_.begin(), g.cover_offsets_.end() - 1);
    for (std::uint64_t r = 0; r < g.num_covers_; ++r)
      for (Rank p : g.pattern_list(r))
        g.cover_data_[cursor[p]++] = static_cast<Rank>(r);
    return g;
  }

  int n() const noexcept { return n_; }
  std::uint64_t num_patterns() const noexcept { return num_patterns_; }
  std::uint64_t num_covers() const noexcept { return num_covers_; }
  /// n^2 + 1: the common size of every cover list.
  int cover_degree() const noexcept { return n_ * n_ + 1; }

  std::span<const Rank> cover_list(std::uint64_t pi) const {
    check_pattern(pi);
    return {cover_data_.data() + cover_offsets_[pi], cover_data_.data() + cover_offsets_[pi + 1]};
  }

  std::span<const Rank> pattern_list(std::uint64_t rho) const {
    check_cover(rho);
    return {pattern_data_.data() + pattern_offsets_[rho],
            pattern_data_.data() + pattern_offsets_[rho + 1]};
  }

  PermSetBitmap covers_of(std::uint64_t pi) const {
    PermSetBitmap out(n_ + 1);
    for (Rank r : cover_list(pi))
      out.set(r);
    return out;
  }

  PermSetBitmap covers_of(const Permutation &pi) const { return covers_of(pattern_rank(pi)); }

  PermSetBitmap patterns_of(std::uint64_t rho) const {
    PermSetBitmap out(n_);
    for (Rank p : pattern_list(rho))
      out.set(p);
    return out;
  }

  PermSetBitmap patterns_of(const Permutation &rho) const { return patterns_of(cover_rank(rho)); }

  /// C_{pi,pi2}: covers containing both patterns.
  PermSetBitmap joint_covers(std::uint64_t pi, std::uint64_t pi2) const {
    auto a = cover_list(pi);
    auto b = cover_list(pi2);
    PermSetBitmap out(n_ + 1);
    std::size_t i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
      if (a[i] < b[j]) {
        ++i;
      } else if (b[j] < a[i]) {
        ++j;
      } else {
        out.set(a[i]);
        ++i;
        ++j;
      }
    }
    return out;
  }

  /// J_pi: patterns other than pi sharing at least one cover with pi.
  PermSetBitmap co_coverable(std::uint64_t pi) const {
    PermSetBitmap out(n_);
    for (Rank r : cover_list(pi))
      for (Rank p : pattern_list(r))
        if (p != pi)
          out.set(p);
    return out;
  }

  std::uint64_t pattern_rank(const Permutation &pi) const {
    if (pi.size() != n_)
      throw InvalidInput("expected a pattern of length " + std::to_string(n_));
    return rank(pi).r;
  }

  std::uint64_t cover_rank(const Permutation &rho) const {
    if (rho.size() != n_ + 1)
      throw InvalidInput("expected a cover of length " + std::to_string(n_ + 1));
    return rank(rho).r;
  }

private:
  void check_pattern(std::uint64_t pi) const {
    if (pi >= num_patterns_)
      throw RangeError("pattern rank " + std::to_string(pi) + " outside S_" + std::to_string(n_));
  }
  void check_cover(std::uint64_t rho) const {
    if (rho >= num_covers_)
      throw RangeError("cover rank " + std::to_string(rho) + " outside S_" +
                       std::to_string(n_ + 1));
  }

  int n_ = 0;
  std::uint64_t num_patterns_ = 0;
  std::uint64_t num_covers_ = 0;
  std::vector<std::uint64_t> cover_offsets_;
  std::vector<Rank> cover_data_;
  std::vector<std::uint64_t> pattern_offsets_;
  std::vector<Rank> pattern_data_;
};

/**
 * Row-wise co-coverage counter: for a fixed pi, the number of common covers
 * with every other pattern, in O(n^3) per row. Not thread-safe; use one per
 * worker.
 */
class JointCounter {
public:
  explicit JointCounter(const CoverageGraph &g) : g_(&g), counts_(g.num_patterns(), 0) {}

  /// Calls fn(pi2, common) for each pi2 != pi with common > 0, in rank order.
  template <class Fn>
  void for_each_partner(std::uint64_t pi, Fn &&fn) {
    touched_.clear();
    for (auto r : g_->cover_list(pi))
      for (auto p : g_->pattern_list(r)) {
        if (p == pi)
          continue;
        if (counts_[p]++ == 0)
          touched_.push_back(p);
      }
    std::sort(touched_.begin(), touched_.end());
    for (auto p : touched_) {
      fn(static_cast<std::uint64_t>(p), static_cast<int>(counts_[p]));
      counts_[p] = 0;
    }
  }

private:
  const CoverageGraph *g_;
  std::vector<std::uint16_t> counts_;
  std::vector<CoverageGraph::Rank> touched_;
};

/// One pair where |C| = 4 and adjacent-swap status disagree.
struct SwapMismatch {
  std::string pi;
  std::string pi2;
  int common_covers = 0;
  bool position_adjacent_swap = false;
  bool values_also_adjacent = false;
};

/// Outcome of checking "|C| = 4 iff adjacent swap" under one reading of "adjacent".
struct SwapInterpretation {
  std::string name;
  bool swap_implies_four = true;
  bool four_implies_swap = true;
  std::uint64_t swap_pairs = 0;
  std::uint64_t mismatches = 0;

  bool iff_holds() const noexcept { return swap_implies_four && four_implies_swap; }
};

struct JointReport {
  int n = 0;
  std::uint64_t rows_audited = 0;
  bool exhaustive = true;
  std::uint64_t max_J = 0;
  std::string argmax_J;
  int max_C = 0;
  std::uint64_t four_cover_pairs = 0;
  /// Ordered pairs with |C| = 4, capped at the first few in rank order.
  std::vector<std::pair<std::string, std::string>> four_cover_examples;
  /// Swap positions i, i+1 of the one-line notation.
  SwapInterpretation position_adjacent{"adjacent_positions"};
  /// Swap positions i, i+1 whose values also differ by one.
  SwapInterpretation position_and_value_adjacent{"adjacent_positions_and_values"};
  bool adjacent_swap_iff_holds = true;
  std::uint64_t counterexample_count = 0;
  std::vector<SwapMismatch> counterexamples;
  std::vector<std::string> violations;
};

namespace detail {

inline constexpr std::size_t kMaxListedExamples = 50;

// Index 0: adjacent positions. Index 1: adjacent positions with consecutive values.
struct AuditRow {
  std::uint64_t J = 0;
  int max_C = 0;
  std::uint64_t fours = 0;
  std::vector<std::uint64_t> four_partners;
  std::uint64_t swaps[2] = {0, 0};
  std::uint64_t four_not_swap[2] = {0, 0};
  std::uint64_t swap_not_four[2] = {0, 0};
  std::uint64_t mismatches = 0;
  std::vector<SwapMismatch> examples;
};

inline AuditRow audit_row(const CoverageGraph &g, JointCounter &counter, std::uint64_t pi) {
  AuditRow row;
  const int n = g.n();
  const Permutation p = unrank(n, pi);

  // (partner rank, values consecutive) for each swap of positions i, i+1.
  std::vector<std::pair<std::uint64_t, bool>> swaps;
  for (int i = 0; i + 1 < n; ++i) {
    std::vector<int> v(p.values().begin(), p.values().end());
    std::swap(v[i], v[i + 1]);
    const bool value_adjacent = v[i] - v[i + 1] == 1 || v[i + 1] - v[i] == 1;
    swaps.emplace_back(rank_of(v).r, value_adjacent);
  }
  std::sort(swaps.begin(), swaps.end());

  std::vector<std::pair<std::uint64_t, int>> partners;
  counter.for_each_partner(pi, [&](std::uint64_t pi2, int c) { partners.emplace_back(pi2, c); });

  auto record = [&](std::uint64_t pi2, int c, bool is_swap, bool value_adjacent) {
    ++row.mismatches;
    if (row.examples.size() < kMaxListedExamples)
      row.examples.push_back(
          {p.to_string(), unrank(n, pi2).to_string(), c, is_swap, value_adjacent});
  };

  for (auto [pi2, c] : partners) {
    ++row.J;
    row.max_C = std::max(row.max_C, c);
    if (c != 4)
      continue;
    ++row.fours;
    if (row.four_partners.size() < kMaxListedExamples)
      row.four_partners.push_back(pi2);
    auto it = std::lower_bound(swaps.begin(), swaps.end(), std::pair{pi2, false});
    const bool is_swap = it != swaps.end() && it->first == pi2;
    const bool value_adjacent = is_swap && it->second;
    row.four_not_swap[0] += !is_swap;
    row.four_not_swap[1] += !value_adjacent;
    if (!is_swap || !value_adjacent)
      record(pi2, c, is_swap, value_adjacent);
  }

  for (auto [pi2, value_adjacent] : swaps) {
    auto it = std::lower_bound(partners.begin(), partners.end(), std::pair{pi2, 0});
    const int c = (it != partners.end() && it->first == pi2) ? it->second : 0;
    ++row.swaps[0];
    row.swaps[1] += value_adjacent;
    if (c != 4) {
      ++row.swap_not_four[0];
      row.swap_not_four[1] += value_adjacent;
      record(pi2, c, true, value_adjacent);
    }
  }
  return row;
}

inline JointReport merge_audit(const CoverageGraph &g, std::span<const std::uint64_t> rows_pi,
                               const std::vector<AuditRow> &rows, bool exhaustive) {
  JointReport rep;
  const int n = g.n();
  rep.n = n;
  rep.exhaustive = exhaustive;
  rep.rows_audited = rows.size();
  SwapInterpretation *interp[2] = {&rep.position_adjacent, &rep.position_and_value_adjacent};
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto &row = rows[i];
    if (i == 0 || row.J > rep.max_J) {
      rep.max_J = row.J;
      rep.argmax_J = unrank(n, rows_pi[i]).to_string();
    }
    rep.max_C = std::max(rep.max_C, row.max_C);
    rep.four_cover_pairs += row.fours;
    for (auto pi2 : row.four_partners)
      if (rep.four_cover_examples.size() < kMaxListedExamples)
        rep.four_cover_examples.emplace_back(unrank(n, rows_pi[i]).to_string(),
                                             unrank(n, pi2).to_string());
    for (int k = 0; k < 2; ++k) {
      interp[k]->swap_pairs += row.swaps[k];
      interp[k]->mismatches += row.four_not_swap[k] + row.swap_not_four[k];
      if (row.four_not_swap[k])
        interp[k]->four_implies_swap = false;
      if (row.swap_not_four[k])
        interp[k]->swap_implies_four = false;
    }
    rep.counterexample_count += row.mismatches;
    for (const auto &ex : row.examples)
      if (rep.counterexamples.size() < kMaxListedExamples)
        rep.counterexamples.push_back(ex);
  }
  rep.adjacent_swap_iff_holds =
      rep.position_adjacent.iff_holds() || rep.position_and_value_adjacent.iff_holds();

  const auto cube = static_cast<std::uint64_t>(n) * n * n;
  if (rep.max_C > 4)
    rep.violations.push_back("max |C| = " + std::to_string(rep.max_C) + " exceeds 4");
  if (rep.max_J > cube)
    rep.violations.push_back("max |J| = " + std::to_string(rep.max_J) + " exceeds n^3 = " +
                             std::to_string(cube));
  if (!rep.adjacent_swap_iff_holds)
    rep.violations.push_back(
        "|C| = 4 does not coincide with adjacent-swap pairs under either reading (" +
        std::to_string(rep.counterexample_count) + " mismatching pair records)");
  return rep;
}

inline JointReport audit_rows(const CoverageGraph &g, std::vector<std::uint64_t> rows_pi,
                              bool exhaustive, int workers) {
  std::vector<AuditRow> rows(rows_pi.size());
  parallel_blocks(rows_pi.size(), workers, [&](std::uint64_t begin, std::uint64_t end) {
    JointCounter counter(g);
    for (auto i = begin; i < end; ++i)
      rows[i] = audit_row(g, counter, rows_pi[i]);
  });
  return merge_audit(g, rows_pi, rows, exhaustive);
}

} // namespace detail

/**
 * Exhaustive joint-coverage audit over all ordered pairs of S_n: exact
 * max |J_pi|, max |C_{pi,pi'}|, and whether |C| = 4 occurs exactly on
 * adjacent-swap pairs. Failures are reported in the result, not thrown.
 */
inline JointReport lemma5_audit(const CoverageGraph &g, int max_n = kDefaultAuditMaxN,
                                int workers = 0) {
  if (g.n() > max_n)
    throw ResourceLimit("exhaustive joint-coverage audit for n=" + std::to_string(g.n()) +
                            " exceeds the audit budget; use the sampled audit",
                        max_n);
  std::vector<std::uint64_t> rows(g.num_patterns());
  for (std::uint64_t i = 0; i < rows.size(); ++i)
    rows[i] = i;
  return detail::audit_rows(g, std::move(rows), true, workers);
}

/// Same audit restricted to `samples` patterns drawn uniformly without replacement.
inline JointReport lemma5_audit_sampled(const CoverageGraph &g, std::uint64_t samples,
                                        std::uint64_t seed, int workers = 0) {
  samples = std::min(samples, g.num_patterns());
  StreamRng rng(seed);
  // Floyd's algorithm, then sorted for a deterministic row order.
  std::vector<std::uint64_t> chosen;
  std::vector<bool> taken(g.num_patterns(), false);
  for (std::uint64_t j = g.num_patterns() - samples; j < g.num_patterns(); ++j) {
    std::uint64_t t = rng.below(j + 1);
    if (taken[t])
      t = j;
    taken[t] = true;
    chosen.push_back(t);
  }
  std::sort(chosen.begin(), chosen.end());
  return detail::audit_rows(g, std::move(chosen), samples == g.num_patterns(), workers);
}

} // namespace permcover
