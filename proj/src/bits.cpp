#include "rmis/bits.hpp"

#include <bit>

#include "rmis/error.hpp"

namespace rmis {

namespace {

std::size_t words_for(std::size_t d) { return (d + 63) / 64; }

}  // namespace

BitVector::BitVector(std::size_t d) : d_(d), words_(words_for(d), 0) {
  if (d == 0) throw ConfigError("bit vectors need d > 0");
}

BitVector BitVector::from_string(std::string_view bits) {
  BitVector v(bits.size());
  for (std::size_t i = 0; i < bits.size(); ++i) {
    if (bits[i] != '0' && bits[i] != '1') {
      throw ConfigError("bit string may only contain '0' and '1'");
    }
    v.set(i, bits[i] == '1');
  }
  return v;
}

BitVector BitVector::from_bits(std::span<const std::uint8_t> bits) {
  BitVector v(bits.size());
  for (std::size_t i = 0; i < bits.size(); ++i) {
    if (bits[i] > 1) throw ConfigError("bit values must be 0 or 1");
    v.set(i, bits[i] == 1);
  }
  return v;
}

std::size_t BitVector::popcount() const noexcept {
  std::size_t n = 0;
  for (auto w : words_) n += std::popcount(w);
  return n;
}

std::string BitVector::to_string() const {
  std::string s(d_, '0');
  for (std::size_t i = 0; i < d_; ++i) s[i] = get(i) ? '1' : '0';
  return s;
}

std::vector<double> BitVector::to_doubles() const {
  std::vector<double> out(d_);
  for (std::size_t i = 0; i < d_; ++i) out[i] = get(i) ? 1.0 : 0.0;
  return out;
}

std::size_t hamming_distance(const BitVector& a, const BitVector& b) {
  if (a.dim() != b.dim()) {
    throw ShapeError("hamming distance between d=" + std::to_string(a.dim()) + " and d=" +
                     std::to_string(b.dim()));
  }
  std::size_t n = 0;
  auto wa = a.words();
  auto wb = b.words();
  for (std::size_t k = 0; k < wa.size(); ++k) n += std::popcount(wa[k] ^ wb[k]);
  return n;
}

BitBatch::BitBatch(std::size_t d, std::size_t n)
    : d_(d), n_(n), wpr_(words_for(d)), words_(n * words_for(d), 0) {
  if (d == 0) throw ConfigError("bit batches need d > 0");
}

BitVector BitBatch::row(std::size_t r) const {
  BitVector v(d_);
  auto src = row_words(r);
  std::copy(src.begin(), src.end(), v.words().begin());
  return v;
}

void BitBatch::set_row(std::size_t r, const BitVector& v) {
  if (v.dim() != d_) {
    throw ShapeError("row of d=" + std::to_string(v.dim()) + " in batch of d=" +
                     std::to_string(d_));
  }
  std::copy(v.words().begin(), v.words().end(), words_.begin() + std::ptrdiff_t(r * wpr_));
}

void BitBatch::push_back(const BitVector& v) {
  if (v.dim() != d_) {
    throw ShapeError("row of d=" + std::to_string(v.dim()) + " in batch of d=" +
                     std::to_string(d_));
  }
  words_.insert(words_.end(), v.words().begin(), v.words().end());
  ++n_;
}

Tensor BitBatch::to_tensor() const {
  Tensor t({n_, d_});
  for (std::size_t r = 0; r < n_; ++r) {
    double* out = t.raw() + r * d_;
    for (std::size_t i = 0; i < d_; ++i) out[i] = get(r, i) ? 1.0 : 0.0;
  }
  return t;
}

BitBatch batch_of(std::span<const BitVector> rows) {
  if (rows.empty()) throw ConfigError("batch_of needs at least one row");
  BitBatch b(rows.front().dim());
  for (const auto& r : rows) b.push_back(r);
  return b;
}

}  // namespace rmis
