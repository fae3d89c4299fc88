#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "rmis/rng.hpp"

namespace rmis {

struct Point2 {
  double x;
  double y;
};

// Fixed coordinate range shared by every generator.
inline constexpr double kToyLo = -4.0;
inline constexpr double kToyHi = 4.0;

// 2spirals, 8gaussians, circles, moons, pinwheel, swissroll, checkerboard.
const std::vector<std::string>& toy_distributions();

// n i.i.d. draws from the named distribution, clipped to [kToyLo, kToyHi]^2.
// Throws ConfigError for an unknown name.
std::vector<Point2> sample_2d(std::string_view name, std::size_t n, RngStream& rng);

// Human-readable generator constants, recorded in dataset manifests.
std::string toy_generator_constants(std::string_view name);

}  // namespace rmis
