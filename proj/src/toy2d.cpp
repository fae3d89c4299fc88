#include "rmis/toy2d.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "rmis/error.hpp"

namespace rmis {

namespace {

constexpr double kPi = std::numbers::pi;

Point2 clip(Point2 p) {
  return {std::clamp(p.x, kToyLo, kToyHi), std::clamp(p.y, kToyLo, kToyHi)};
}

Point2 two_spirals(RngStream& rng) {
  const double t = std::sqrt(rng.uniform());
  const double angle = 3.0 * kPi * t;
  const double r = 3.0 * t;
  const double arm = rng.uniform() < 0.5 ? 1.0 : -1.0;
  const double nx = 0.1 * rng.normal();
  const double ny = 0.1 * rng.normal();
  return {arm * -std::cos(angle) * r + nx, arm * std::sin(angle) * r + ny};
}

Point2 eight_gaussians(RngStream& rng) {
  const double angle = 2.0 * kPi * double(rng.uniform_index(8)) / 8.0;
  const double nx = 0.2 * rng.normal();
  const double ny = 0.2 * rng.normal();
  return {2.0 * std::cos(angle) + nx, 2.0 * std::sin(angle) + ny};
}

Point2 circles(RngStream& rng) {
  const double radius = rng.uniform() < 0.5 ? 3.0 : 1.5;
  const double angle = 2.0 * kPi * rng.uniform();
  const double nx = 0.1 * rng.normal();
  const double ny = 0.1 * rng.normal();
  return {radius * std::cos(angle) + nx, radius * std::sin(angle) + ny};
}

Point2 moons(RngStream& rng) {
  const bool upper = rng.uniform() < 0.5;
  const double t = kPi * rng.uniform();
  const double bx = upper ? std::cos(t) : 1.0 - std::cos(t);
  const double by = upper ? std::sin(t) : 0.5 - std::sin(t);
  const double nx = 0.1 * rng.normal();
  const double ny = 0.1 * rng.normal();
  return {2.0 * bx - 1.0 + nx, 2.0 * by - 0.2 + ny};
}

Point2 pinwheel(RngStream& rng) {
  const double blade = 2.0 * kPi * double(rng.uniform_index(5)) / 5.0;
  const double radial = 1.0 + 0.3 * rng.normal();
  const double tangential = 0.1 * rng.normal();
  const double angle = blade + 0.25 * std::exp(radial);
  const double c = std::cos(angle), s = std::sin(angle);
  return {2.0 * (radial * c - tangential * s), 2.0 * (radial * s + tangential * c)};
}

Point2 swissroll(RngStream& rng) {
  const double t = 1.5 * kPi * (1.0 + 2.0 * rng.uniform());
  const double nx = 0.1 * rng.normal();
  const double ny = 0.1 * rng.normal();
  return {t * std::cos(t) / 5.0 + nx, t * std::sin(t) / 5.0 + ny};
}

// Unit squares over [-4, 4]^2 with floor(x) + floor(y) even.
Point2 checkerboard(RngStream& rng) {
  const double x = kToyLo + (kToyHi - kToyLo) * rng.uniform();
  const auto col = static_cast<long>(std::floor(x));
  long row = -4 + 2 * static_cast<long>(rng.uniform_index(4));
  if (((col % 2) + 2) % 2 != 0) row += 1;
  return {x, double(row) + rng.uniform()};
}

}  // namespace

const std::vector<std::string>& toy_distributions() {
  static const std::vector<std::string> names = {"2spirals", "8gaussians", "circles", "moons",
                                                 "pinwheel", "swissroll",  "checkerboard"};
  return names;
}

std::vector<Point2> sample_2d(std::string_view name, std::size_t n, RngStream& rng) {
  Point2 (*gen)(RngStream&) = nullptr;
  if (name == "2spirals") gen = two_spirals;
  else if (name == "8gaussians") gen = eight_gaussians;
  else if (name == "circles") gen = circles;
  else if (name == "moons") gen = moons;
  else if (name == "pinwheel") gen = pinwheel;
  else if (name == "swissroll") gen = swissroll;
  else if (name == "checkerboard") gen = checkerboard;
  else throw ConfigError("unknown distribution '" + std::string(name) + "'");

  std::vector<Point2> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(clip(gen(rng)));
  return out;
}

std::string toy_generator_constants(std::string_view name) {
  if (name == "2spirals") return "t=sqrt(U);angle=3pi*t;r=3t;mirrored arms;noise=0.1";
  if (name == "8gaussians") return "centers on circle r=2;sigma=0.2";
  if (name == "circles") return "radii 3 and 1.5;noise=0.1";
  if (name == "moons") return "two half circles scaled x2, shifted (-1,-0.2);noise=0.1";
  if (name == "pinwheel") return "5 blades;radial 1+0.3N;tangential 0.1N;warp 0.25*exp(r);scale 2";
  if (name == "swissroll") return "t=1.5pi(1+2U);(t cos t, t sin t)/5;noise=0.1";
  if (name == "checkerboard") return "unit squares on [-4,4]^2 with floor(x)+floor(y) even";
  throw ConfigError("unknown distribution '" + std::string(name) + "'");
}

}  // namespace rmis
