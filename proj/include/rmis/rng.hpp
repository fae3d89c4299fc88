#pragma once

#include <cstdint>
#include <random>
#include <string>

namespace rmis {

// Seedable random stream. Same (seed, stream id) gives the same draws; the
// engine is seeded from both values, so streams with different ids are
// unrelated.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream);

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream_id() const noexcept { return stream_; }

  std::uint64_t next_u64() { return engine_(); }
  // Uniform on [0, 1).
  double uniform();
  // Uniform on {0, ..., n - 1}.
  std::size_t uniform_index(std::size_t n);
  double normal();

  // Full engine + distribution state, restorable bit-exactly.
  std::string state() const;
  void restore(const std::string& state);

  std::mt19937_64& engine() noexcept { return engine_; }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::mt19937_64 engine_;
  std::uniform_real_distribution<double> unit_{0.0, 1.0};
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace rmis
