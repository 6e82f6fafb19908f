#pragma once

#include <array>
#include <bit>
#include <cstddef>
#include <cstdint>

namespace normsim {

/// Fixed-capacity bitset with cheap copies. Used for per-cell layers of the
/// world (apples, dirt) and for norm masks, where the hot planning loop copies
/// states many thousands of times per step.
template <std::size_t Capacity>
class FixedBits {
 public:
  static constexpr std::size_t kWords = (Capacity + 63) / 64;
  static constexpr std::size_t kCapacity = Capacity;

  constexpr bool test(std::size_t i) const noexcept {
    return (words_[i >> 6] >> (i & 63)) & 1u;
  }
  constexpr void set(std::size_t i) noexcept { words_[i >> 6] |= std::uint64_t{1} << (i & 63); }
  constexpr void reset(std::size_t i) noexcept { words_[i >> 6] &= ~(std::uint64_t{1} << (i & 63)); }
  constexpr void assign(std::size_t i, bool v) noexcept {
    if (v) set(i); else reset(i);
  }
  constexpr void clear() noexcept { words_.fill(0); }

  std::size_t count() const noexcept {
    std::size_t n = 0;
    for (auto w : words_) n += static_cast<std::size_t>(std::popcount(w));
    return n;
  }
  bool any() const noexcept {
    for (auto w : words_) if (w) return true;
    return false;
  }
  bool none() const noexcept { return !any(); }

  bool intersects(const FixedBits& o) const noexcept {
    for (std::size_t k = 0; k < kWords; ++k) if (words_[k] & o.words_[k]) return true;
    return false;
  }

  /// Up to 64 bits starting at `pos`, little-endian within the result.
  std::uint64_t extract(std::size_t pos, std::size_t len) const noexcept {
    if (len == 0) return 0;
    const std::size_t w = pos >> 6, off = pos & 63;
    std::uint64_t v = words_[w] >> off;
    if (off != 0 && off + len > 64 && w + 1 < kWords) v |= words_[w + 1] << (64 - off);
    return len >= 64 ? v : v & ((std::uint64_t{1} << len) - 1);
  }

  /// Calls f(index) for every set bit in increasing order.
  template <class F>
  void for_each(F&& f) const {
    for (std::size_t k = 0; k < kWords; ++k) {
      std::uint64_t w = words_[k];
      while (w) {
        const int b = std::countr_zero(w);
        f(k * 64 + static_cast<std::size_t>(b));
        w &= w - 1;
      }
    }
  }

  FixedBits& operator|=(const FixedBits& o) noexcept {
    for (std::size_t k = 0; k < kWords; ++k) words_[k] |= o.words_[k];
    return *this;
  }
  FixedBits& operator&=(const FixedBits& o) noexcept {
    for (std::size_t k = 0; k < kWords; ++k) words_[k] &= o.words_[k];
    return *this;
  }
  friend FixedBits operator|(FixedBits a, const FixedBits& b) noexcept { return a |= b; }
  friend FixedBits operator&(FixedBits a, const FixedBits& b) noexcept { return a &= b; }

  const std::array<std::uint64_t, kWords>& words() const noexcept { return words_; }

  friend bool operator==(const FixedBits&, const FixedBits&) = default;

 private:
  std::array<std::uint64_t, kWords> words_{};
};

}  // namespace normsim
