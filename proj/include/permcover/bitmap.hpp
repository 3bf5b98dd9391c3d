#pragma once

#include <bit>
#include <cstdint>
#include <string>
#include <vector>

#include "errors.hpp"
#include "permutation.hpp"

namespace permcover {

/**
 * Dense set of permutations of one fixed length, indexed by lexicographic
 * rank. The universe is all of S_level, so the bitmap has level! bits and
 * bits past the universe are never set.
 */
class PermSetBitmap {
public:
  using Word = std::uint64_t;
  static constexpr int bits_per_word = 64;

  PermSetBitmap() = default;

  explicit PermSetBitmap(int level)
      : level_(level), universe_(factorial(level)),
        words_((universe_ + bits_per_word - 1) / bits_per_word, 0) {}

  static PermSetBitmap full(int level) {
    PermSetBitmap b(level);
    for (auto &w : b.words_)
      w = ~Word{0};
    b.trim();
    return b;
  }

  int level() const noexcept { return level_; }
  std::uint64_t universe() const noexcept { return universe_; }

  void set(std::uint64_t r) {
    check(r);
    words_[r / bits_per_word] |= Word{1} << (r % bits_per_word);
  }

  void reset(std::uint64_t r) {
    check(r);
    words_[r / bits_per_word] &= ~(Word{1} << (r % bits_per_word));
  }

  bool test(std::uint64_t r) const {
    check(r);
    return (words_[r / bits_per_word] >> (r % bits_per_word)) & 1U;
  }

  // Unchecked membership for inner loops.
  bool test_unchecked(std::uint64_t r) const noexcept {
    return (words_[r / bits_per_word] >> (r % bits_per_word)) & 1U;
  }

  std::uint64_t count() const noexcept {
    std::uint64_t c = 0;
    for (Word w : words_)
      c += static_cast<std::uint64_t>(std::popcount(w));
    return c;
  }

  bool empty() const noexcept {
    for (Word w : words_)
      if (w)
        return false;
    return true;
  }

  PermSetBitmap &operator&=(const PermSetBitmap &other) {
    same_universe(other);
    for (std::size_t i = 0; i < words_.size(); ++i)
      words_[i] &= other.words_[i];
    return *this;
  }

  PermSetBitmap &operator|=(const PermSetBitmap &other) {
    same_universe(other);
    for (std::size_t i = 0; i < words_.size(); ++i)
      words_[i] |= other.words_[i];
    return *this;
  }

  friend PermSetBitmap operator&(PermSetBitmap a, const PermSetBitmap &b) { return a &= b; }
  friend PermSetBitmap operator|(PermSetBitmap a, const PermSetBitmap &b) { return a |= b; }

  /// Set ranks in increasing order.
  std::vector<std::uint64_t> ranks() const {
    std::vector<std::uint64_t> out;
    for (std::size_t i = 0; i < words_.size(); ++i) {
      Word w = words_[i];
      while (w) {
        out.push_back(i * bits_per_word + static_cast<std::uint64_t>(std::countr_zero(w)));
        w &= w - 1;
      }
    }
    return out;
  }

  std::vector<Permutation> members() const {
    std::vector<Permutation> out;
    for (auto r : ranks())
      out.push_back(unrank(level_, r));
    return out;
  }

  void same_universe(const PermSetBitmap &other) const {
    if (other.level_ != level_)
      throw InvalidInput("bitmap universe mismatch: S_" + std::to_string(level_) +
                         " vs S_" + std::to_string(other.level_));
  }

  friend bool operator==(const PermSetBitmap &, const PermSetBitmap &) = default;

private:
  void check(std::uint64_t r) const {
    if (r >= universe_)
      throw RangeError("rank " + std::to_string(r) + " outside S_" + std::to_string(level_));
  }

  void trim() {
    const auto tail = universe_ % bits_per_word;
    if (tail && !words_.empty())
      words_.back() &= (Word{1} << tail) - 1;
  }

  int level_ = 0;
  std::uint64_t universe_ = 0;
  std::vector<Word> words_;
};

} // namespace permcover
