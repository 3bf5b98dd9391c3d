#pragma once

// Permutations in one-line notation over 1..n, lexicographic ranking via the
// factorial number system, and the one-letter-deletion containment test.

#include <algorithm>
#include <charconv>
#include <compare>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "errors.hpp"

namespace permcover {

/// Largest n for which n! fits in 64 bits.
inline constexpr int kMaxRankableLength = 20;

inline std::uint64_t factorial(int n) {
  if (n < 0 || n > kMaxRankableLength)
    throw RangeError("factorial: n=" + std::to_string(n) + " outside 0..20");
  std::uint64_t f = 1;
  for (int i = 2; i <= n; ++i)
    f *= static_cast<std::uint64_t>(i);
  return f;
}

/// Lexicographic position of a permutation within S_n.
struct PermRank {
  int n = 0;
  std::uint64_t r = 0;

  friend bool operator==(const PermRank &, const PermRank &) = default;
};

enum class Symmetry { reverse, complement, inverse };

class Permutation {
public:
  /// Takes ownership of one-line values; they must form a bijection of 1..n.
  explicit Permutation(std::vector<int> values) : values_(std::move(values)) {
    if (values_.empty())
      throw InvalidInput("permutation must have length >= 1");
    std::vector<bool> seen(values_.size() + 1, false);
    const int n = size();
    for (int v : values_) {
      if (v < 1 || v > n || seen[v])
        throw InvalidInput("not a permutation of 1.." + std::to_string(n));
      seen[v] = true;
    }
  }

  static Permutation identity(int n) {
    if (n < 1)
      throw InvalidInput("permutation must have length >= 1");
    std::vector<int> v(n);
    std::iota(v.begin(), v.end(), 1);
    return Permutation(std::move(v), Trusted{});
  }

  int size() const noexcept { return static_cast<int>(values_.size()); }

  /// 1-based position, 1-based value.
  int at(int position) const {
    if (position < 1 || position > size())
      throw RangeError("position " + std::to_string(position) + " outside 1.." +
                       std::to_string(size()));
    return values_[position - 1];
  }

  std::span<const int> values() const noexcept { return values_; }

  /// Digits for n <= 9, comma-separated otherwise.
  std::string to_string() const {
    std::string out;
    if (size() <= 9) {
      for (int v : values_)
        out.push_back(static_cast<char>('0' + v));
      return out;
    }
    for (std::size_t i = 0; i < values_.size(); ++i) {
      if (i)
        out.push_back(',');
      out += std::to_string(values_[i]);
    }
    return out;
  }

  /// Accepts both the digit form and the comma-separated form.
  static Permutation parse(std::string_view text) {
    std::vector<int> v;
    if (text.find(',') == std::string_view::npos) {
      for (char c : text) {
        if (c < '1' || c > '9')
          throw InvalidInput("bad permutation string '" + std::string(text) + "'");
        v.push_back(c - '0');
      }
    } else {
      std::size_t start = 0;
      while (start <= text.size()) {
        std::size_t end = text.find(',', start);
        if (end == std::string_view::npos)
          end = text.size();
        auto field = text.substr(start, end - start);
        int value = 0;
        auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
        if (ec != std::errc{} || ptr != field.data() + field.size() || field.empty())
          throw InvalidInput("bad permutation string '" + std::string(text) + "'");
        v.push_back(value);
        start = end + 1;
      }
    }
    return Permutation(std::move(v));
  }

  friend bool operator==(const Permutation &, const Permutation &) = default;
  friend auto operator<=>(const Permutation &a, const Permutation &b) {
    return a.values_ <=> b.values_;
  }

private:
  struct Trusted {};
  Permutation(std::vector<int> values, Trusted) : values_(std::move(values)) {}

  friend Permutation standardize(std::span<const int>);
  friend Permutation unrank(int, std::uint64_t);
  friend Permutation symmetry(const Permutation &, Symmetry);

  std::vector<int> values_;
};

/// Lehmer-code rank in lexicographic order, 0-based.
inline PermRank rank(const Permutation &p) {
  const int n = p.size();
  if (n > kMaxRankableLength)
    throw RangeError("rank: length " + std::to_string(n) + " exceeds 20");
  auto v = p.values();
  std::uint64_t r = 0;
  for (int i = 0; i < n; ++i) {
    std::uint64_t smaller_after = 0;
    for (int j = i + 1; j < n; ++j)
      smaller_after += v[j] < v[i];
    r += smaller_after * factorial(n - 1 - i);
  }
  return {n, r};
}

inline Permutation unrank(int n, std::uint64_t r) {
  if (n < 1 || n > kMaxRankableLength)
    throw RangeError("unrank: n=" + std::to_string(n) + " outside 1..20");
  if (r >= factorial(n))
    throw RangeError("unrank: r=" + std::to_string(r) + " >= " + std::to_string(n) + "!");
  std::vector<int> pool(n);
  std::iota(pool.begin(), pool.end(), 1);
  std::vector<int> out;
  out.reserve(n);
  for (int i = n - 1; i >= 0; --i) {
    const std::uint64_t f = factorial(i);
    const auto digit = static_cast<std::size_t>(r / f);
    r %= f;
    out.push_back(pool[digit]);
    pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(digit));
  }
  return Permutation(std::move(out), Permutation::Trusted{});
}

inline PermRank rank_of(std::span<const int> one_line) {
  return rank(Permutation(std::vector<int>(one_line.begin(), one_line.end())));
}

/// Replaces each entry by its 1-based order statistic.
inline Permutation standardize(std::span<const int> s) {
  if (s.empty())
    throw InvalidInput("standardize: empty sequence");
  std::vector<int> order(s.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) { return s[a] < s[b]; });
  std::vector<int> out(s.size());
  for (std::size_t k = 0; k < order.size(); ++k) {
    if (k > 0 && s[order[k]] == s[order[k - 1]])
      throw InvalidInput("standardize: duplicate entry " + std::to_string(s[order[k]]));
    out[order[k]] = static_cast<int>(k) + 1;
  }
  return Permutation(std::move(out), Permutation::Trusted{});
}

/// Removes position i (1-based) and standardizes the remainder.
inline Permutation delete_at(const Permutation &p, int i) {
  const int n = p.size();
  if (n < 2)
    throw RangeError("delete_at: length must be >= 2");
  if (i < 1 || i > n)
    throw RangeError("delete_at: position " + std::to_string(i) + " outside 1.." +
                     std::to_string(n));
  auto v = p.values();
  const int removed = v[i - 1];
  std::vector<int> out;
  out.reserve(n - 1);
  for (int j = 0; j < n; ++j)
    if (j != i - 1)
      out.push_back(v[j] - (v[j] > removed ? 1 : 0));
  return Permutation(std::move(out));
}

/// Adjacent positions whose values differ by exactly one.
inline int successions(const Permutation &p) {
  auto v = p.values();
  int count = 0;
  for (std::size_t i = 0; i + 1 < v.size(); ++i)
    count += (v[i + 1] - v[i] == 1 || v[i] - v[i + 1] == 1);
  return count;
}

inline Permutation symmetry(const Permutation &p, Symmetry op) {
  const int n = p.size();
  auto v = p.values();
  std::vector<int> out(n);
  switch (op) {
  case Symmetry::reverse:
    std::reverse_copy(v.begin(), v.end(), out.begin());
    break;
  case Symmetry::complement:
    for (int i = 0; i < n; ++i)
      out[i] = n + 1 - v[i];
    break;
  case Symmetry::inverse:
    for (int i = 0; i < n; ++i)
      out[v[i] - 1] = i + 1;
    break;
  }
  return Permutation(std::move(out), Permutation::Trusted{});
}

/// True iff deleting one letter of rho leaves a sequence order-isomorphic to pi.
inline bool covers(const Permutation &rho, const Permutation &pi) {
  if (rho.size() != pi.size() + 1)
    throw InvalidInput("covers: expected length(rho) = length(pi) + 1, got " +
                       std::to_string(rho.size()) + " and " + std::to_string(pi.size()));
  for (int i = 1; i <= rho.size(); ++i)
    if (delete_at(rho, i) == pi)
      return true;
  return false;
}

namespace detail {

// Rank of rho with position `skip` removed, without materializing a Permutation.
// rho holds 1-based values, length m <= 12.
inline std::uint32_t deletion_rank(const int *rho, int m, int skip,
                                   const std::uint64_t *fact) {
  int w[16] = {};
  const int removed = rho[skip];
  int len = 0;
  for (int j = 0; j < m; ++j)
    if (j != skip)
      w[len++] = rho[j] - (rho[j] > removed ? 1 : 0);
  std::uint64_t r = 0;
  for (int i = 0; i < len; ++i) {
    int smaller_after = 0;
    for (int j = i + 1; j < len; ++j)
      smaller_after += w[j] < w[i];
    r += static_cast<std::uint64_t>(smaller_after) * fact[len - 1 - i];
  }
  return static_cast<std::uint32_t>(r);
}

} // namespace detail

} // namespace permcover
