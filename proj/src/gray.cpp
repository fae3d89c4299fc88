#include "rmis/gray.hpp"

#include <algorithm>
#include <boost/multiprecision/cpp_int.hpp>
#include <cmath>

#include "rmis/error.hpp"

namespace rmis {

using boost::multiprecision::cpp_int;

namespace {

cpp_int levels(std::size_t k) { return (cpp_int(1) << k) - 1; }

// idx / (2^k - 1) as a double.
double index_fraction(const cpp_int& idx, std::size_t k) {
  if (k <= 53) {
    return idx.convert_to<double>() / levels(k).convert_to<double>();
  }
  // For large k, idx / (2^k - 1) = (idx / 2^k)(1 + O(2^-k)); keep the top 64 bits.
  const cpp_int top = idx >> (k - 64);
  return std::ldexp(top.convert_to<double>(), -64);
}

}  // namespace

GrayCodec::GrayCodec(std::size_t k, double lo, double hi) : k_(k), lo_(lo), hi_(hi) {
  if (k == 0) throw ConfigError("Gray codec needs k >= 1");
  if (!(lo < hi) || !std::isfinite(lo) || !std::isfinite(hi)) {
    throw ConfigError("Gray codec needs finite lo < hi");
  }
}

double GrayCodec::bin_width() const {
  if (k_ >= 1023) return 0.0;
  return (hi_ - lo_) / (std::ldexp(1.0, int(k_)) - 1.0);
}

std::vector<std::uint8_t> GrayCodec::encode(double v) const {
  if (std::isnan(v)) throw NumericError("Gray encode of NaN");
  const double t = (std::clamp(v, lo_, hi_) - lo_) / (hi_ - lo_);
  cpp_int idx = 0;
  if (t > 0.0) {
    // t = m * 2^e exactly, m a 53-bit integer.
    int exp = 0;
    const double frac = std::frexp(t, &exp);
    const auto mantissa = static_cast<std::uint64_t>(std::ldexp(frac, 53));
    const int e = exp - 53;
    const cpp_int scaled = cpp_int(mantissa) * levels(k_);
    if (e >= 0) {
      idx = scaled << e;
    } else {
      // Round half away from zero; everything here is non-negative.
      const unsigned shift = unsigned(-e);
      idx = (scaled + (cpp_int(1) << (shift - 1))) >> shift;
    }
  }
  const cpp_int gray = idx ^ (idx >> 1);
  std::vector<std::uint8_t> out(k_);
  for (std::size_t j = 0; j < k_; ++j) out[j] = bit_test(gray, unsigned(k_ - 1 - j)) ? 1 : 0;
  return out;
}

double GrayCodec::decode(std::span<const std::uint8_t> bits) const {
  if (bits.size() != k_) {
    throw ShapeError("Gray decode expects " + std::to_string(k_) + " bits, got " +
                     std::to_string(bits.size()));
  }
  cpp_int idx = 0;
  std::uint8_t running = 0;
  for (std::size_t j = 0; j < k_; ++j) {
    if (bits[j] > 1) throw ConfigError("Gray decode: bit values must be 0 or 1");
    running ^= bits[j];
    idx <<= 1;
    if (running) idx |= 1;
  }
  return lo_ + index_fraction(idx, k_) * (hi_ - lo_);
}

void GrayCodec::encode_into(double v, BitVector& out, std::size_t offset) const {
  if (offset + k_ > out.dim()) throw ShapeError("Gray encode_into: target too short");
  const auto code = encode(v);
  for (std::size_t j = 0; j < k_; ++j) out.set(offset + j, code[j] != 0);
}

double GrayCodec::decode_from(const BitVector& in, std::size_t offset) const {
  if (offset + k_ > in.dim()) throw ShapeError("Gray decode_from: source too short");
  std::vector<std::uint8_t> code(k_);
  for (std::size_t j = 0; j < k_; ++j) code[j] = in.get(offset + j) ? 1 : 0;
  return decode(code);
}

}  // namespace rmis
