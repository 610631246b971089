#pragma once

#include <bit>
#include <cstddef>
#include <cstdint>
#include <span>

namespace wcrl::bits {

using Word = std::uint64_t;

constexpr std::size_t words_for(std::size_t n) { return (n + 63) / 64; }

inline bool test(std::span<const Word> s, std::size_t i) {
  return (s[i / 64] >> (i % 64)) & 1u;
}
inline void set(std::span<Word> s, std::size_t i) { s[i / 64] |= Word{1} << (i % 64); }
inline void reset(std::span<Word> s, std::size_t i) {
  s[i / 64] &= ~(Word{1} << (i % 64));
}

inline std::size_t popcount(std::span<const Word> s) {
  std::size_t n = 0;
  for (Word w : s) n += static_cast<std::size_t>(std::popcount(w));
  return n;
}

inline bool intersects(std::span<const Word> a, std::span<const Word> b) {
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] & b[i]) return true;
  }
  return false;
}

// Calls fn(index) for every set bit, ascending.
template <typename Fn>
void for_each(std::span<const Word> s, Fn&& fn) {
  for (std::size_t w = 0; w < s.size(); ++w) {
    Word word = s[w];
    while (word) {
      const int b = std::countr_zero(word);
      fn(w * 64 + static_cast<std::size_t>(b));
      word &= word - 1;
    }
  }
}

}  // namespace wcrl::bits
