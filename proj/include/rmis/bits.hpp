#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rmis/tensor.hpp"

namespace rmis {

// A point of {0,1}^d, packed 64 bits per word. Bits past d are always zero.
class BitVector {
 public:
  BitVector() = default;
  explicit BitVector(std::size_t d);
  // Parses "0101..." (first character is bit 0).
  static BitVector from_string(std::string_view bits);
  static BitVector from_bits(std::span<const std::uint8_t> bits);

  std::size_t dim() const noexcept { return d_; }
  bool get(std::size_t i) const noexcept { return (words_[i >> 6] >> (i & 63)) & 1u; }
  void set(std::size_t i, bool v) noexcept {
    const std::uint64_t mask = std::uint64_t{1} << (i & 63);
    if (v) {
      words_[i >> 6] |= mask;
    } else {
      words_[i >> 6] &= ~mask;
    }
  }
  void flip(std::size_t i) noexcept { words_[i >> 6] ^= std::uint64_t{1} << (i & 63); }
  // Copy with bit i flipped; the neighbor x_{-i}.
  BitVector flipped(std::size_t i) const {
    BitVector out = *this;
    out.flip(i);
    return out;
  }

  std::size_t popcount() const noexcept;
  std::string to_string() const;
  std::vector<double> to_doubles() const;

  std::span<const std::uint64_t> words() const noexcept { return words_; }
  std::span<std::uint64_t> words() noexcept { return words_; }

  bool operator==(const BitVector&) const = default;

 private:
  std::size_t d_ = 0;
  std::vector<std::uint64_t> words_;
};

std::size_t hamming_distance(const BitVector& a, const BitVector& b);

// n rows of d bits, each row packed into whole words.
class BitBatch {
 public:
  BitBatch() = default;
  explicit BitBatch(std::size_t d, std::size_t n = 0);

  std::size_t dim() const noexcept { return d_; }
  std::size_t rows() const noexcept { return n_; }
  std::size_t words_per_row() const noexcept { return wpr_; }
  bool empty() const noexcept { return n_ == 0; }

  bool get(std::size_t r, std::size_t i) const noexcept {
    return (words_[r * wpr_ + (i >> 6)] >> (i & 63)) & 1u;
  }
  void set(std::size_t r, std::size_t i, bool v) noexcept {
    std::uint64_t& w = words_[r * wpr_ + (i >> 6)];
    const std::uint64_t mask = std::uint64_t{1} << (i & 63);
    w = v ? (w | mask) : (w & ~mask);
  }
  void flip(std::size_t r, std::size_t i) noexcept {
    words_[r * wpr_ + (i >> 6)] ^= std::uint64_t{1} << (i & 63);
  }

  BitVector row(std::size_t r) const;
  std::span<const std::uint64_t> row_words(std::size_t r) const noexcept {
    return {words_.data() + r * wpr_, wpr_};
  }
  void set_row(std::size_t r, const BitVector& v);
  void push_back(const BitVector& v);

  // n x d tensor of 0.0 / 1.0.
  Tensor to_tensor() const;

  std::span<const std::uint64_t> words() const noexcept { return words_; }

  bool operator==(const BitBatch&) const = default;

 private:
  std::size_t d_ = 0;
  std::size_t n_ = 0;
  std::size_t wpr_ = 0;
  std::vector<std::uint64_t> words_;
};

BitBatch batch_of(std::span<const BitVector> rows);

}  // namespace rmis
