#include "rmis/rng.hpp"

#include <sstream>

#include "rmis/error.hpp"

namespace rmis {

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream) : seed_(seed), stream_(stream) {
  std::seed_seq seq{std::uint32_t(seed), std::uint32_t(seed >> 32), std::uint32_t(stream),
                    std::uint32_t(stream >> 32), 0x9e3779b9u};
  engine_.seed(seq);
}

double RngStream::uniform() { return unit_(engine_); }

std::size_t RngStream::uniform_index(std::size_t n) {
  if (n == 0) throw ConfigError("uniform_index over an empty range");
  std::uniform_int_distribution<std::size_t> dist(0, n - 1);
  return dist(engine_);
}

double RngStream::normal() { return normal_(engine_); }

std::string RngStream::state() const {
  std::ostringstream os;
  os << seed_ << ' ' << stream_ << ' ' << engine_ << ' ' << unit_ << ' ' << normal_;
  return os.str();
}

void RngStream::restore(const std::string& state) {
  std::istringstream is(state);
  is >> seed_ >> stream_ >> engine_ >> unit_ >> normal_;
  if (!is) throw FormatError("malformed rng state");
}

}  // namespace rmis
