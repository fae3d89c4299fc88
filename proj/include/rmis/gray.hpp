#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "rmis/bits.hpp"

namespace rmis {

inline std::uint64_t gray_code(std::uint64_t idx) noexcept { return idx ^ (idx >> 1); }

inline std::uint64_t gray_decode(std::uint64_t gray) noexcept {
  for (std::uint64_t shift = 1; shift < 64; shift <<= 1) gray ^= gray >> shift;
  return gray;
}

// Quantises a real coordinate in [lo, hi] to a k-bit binary-reflected Gray code.
//
//   idx  = round((clamp(v) - lo) / (hi - lo) * (2^k - 1))   (half away from zero)
//   bits = idx XOR (idx >> 1), most significant bit first
//
// k may exceed 64; index arithmetic is exact for any k.
class GrayCodec {
 public:
  GrayCodec(std::size_t k, double lo, double hi);

  std::size_t bits() const noexcept { return k_; }
  double lo() const noexcept { return lo_; }
  double hi() const noexcept { return hi_; }
  // Width of one quantisation step, (hi - lo) / (2^k - 1).
  double bin_width() const;

  std::vector<std::uint8_t> encode(double v) const;
  // Throws ShapeError unless bits.size() == k.
  double decode(std::span<const std::uint8_t> bits) const;

  // Writes k bits of encode(v) into out[offset, offset + k).
  void encode_into(double v, BitVector& out, std::size_t offset) const;
  double decode_from(const BitVector& in, std::size_t offset) const;

 private:
  std::size_t k_;
  double lo_;
  double hi_;
};

}  // namespace rmis
