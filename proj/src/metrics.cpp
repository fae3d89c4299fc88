#include "rmis/metrics.hpp"

#include <bit>
#include <cmath>
#include <cstdio>

#include "rmis/binary_io.hpp"
#include "rmis/error.hpp"
#include "rmis/objectives.hpp"

namespace rmis {

double hamming_kernel(const BitVector& x, const BitVector& y) {
  if (x.dim() != y.dim()) {
    throw ShapeError("hamming kernel: dimensions " + std::to_string(x.dim()) + " and " +
                     std::to_string(y.dim()) + " differ");
  }
  return double(x.dim() - hamming_distance(x, y));
}

namespace {

// Sum over all (a, b) pairs of the number of agreeing bits.
unsigned __int128 agreement_sum(const BitBatch& a, const BitBatch& b) {
  const std::size_t d = a.dim();
  const std::size_t w = a.words_per_row();
  unsigned __int128 total = 0;
  for (std::size_t r = 0; r < a.rows(); ++r) {
    const auto ra = a.row_words(r);
    std::uint64_t row_total = 0;
    for (std::size_t q = 0; q < b.rows(); ++q) {
      const auto rb = b.row_words(q);
      std::size_t diff = 0;
      for (std::size_t k = 0; k < w; ++k) diff += std::popcount(ra[k] ^ rb[k]);
      row_total += d - diff;
    }
    total += row_total;
  }
  return total;
}

}  // namespace

MmdReport mmd_linear(const BitBatch& x, const BitBatch& y) {
  if (x.dim() != y.dim()) throw ShapeError("mmd: sample sets have different dimensions");
  if (x.empty() || y.empty()) throw ConfigError("mmd: empty sample set");
  const double nx = double(x.rows());
  const double ny = double(y.rows());
  const double kxx = double(agreement_sum(x, x)) / (nx * nx);
  const double kyy = double(agreement_sum(y, y)) / (ny * ny);
  const double kxy = double(agreement_sum(x, y)) / (nx * ny);
  MmdReport out;
  out.mmd_sq = kxx + kyy - 2.0 * kxy;
  out.n_x = x.rows();
  out.n_y = y.rows();
  return out;
}

double rmse_connectivity(const Tensor& j_hat, const Tensor& j_true) {
  if (!j_hat.same_shape(j_true)) {
    throw ShapeError("rmse: shapes " + shape_string(j_hat.shape()) + " and " + shape_string(j_true.shape()) +
                     " differ");
  }
  if (j_hat.size() == 0) throw ShapeError("rmse: empty matrices");
  double acc = 0.0;
  for (std::size_t i = 0; i < j_hat.size(); ++i) {
    const double e = j_hat.data()[i] - j_true.data()[i];
    acc += e * e;
  }
  return std::sqrt(acc / double(j_hat.size()));
}

double objective_value_eval(const EnergyModel& model, const BitBatch& samples,
                            double exponent_clamp) {
  if (samples.empty()) throw ConfigError("objective: empty sample set");
  double acc = 0.0;
  for (std::size_t r = 0; r < samples.rows(); ++r) {
    acc += rm_full_loss(model, samples.row(r), exponent_clamp).value;
  }
  return acc / double(samples.rows());
}

LandscapeGrid energy_landscape(const EnergyModel& model, const GrayCodec& codec,
                               std::size_t resolution) {
  if (resolution == 0) throw ConfigError("landscape resolution must be positive");
  const std::size_t k = codec.bits();
  if (model.dim() != 2 * k) {
    throw ShapeError("landscape: model dimension " + std::to_string(model.dim()) +
                     " is not 2 x " + std::to_string(k) + " codec bits");
  }
  std::vector<double> axis(resolution);
  for (std::size_t i = 0; i < resolution; ++i) {
    axis[i] = resolution == 1 ? codec.lo()
                              : codec.lo() + (codec.hi() - codec.lo()) * double(i) /
                                                 double(resolution - 1);
  }
  LandscapeGrid grid;
  grid.resolution = resolution;
  BitBatch batch(2 * k);
  BitVector row(2 * k);
  for (std::size_t iy = 0; iy < resolution; ++iy) {
    for (std::size_t ix = 0; ix < resolution; ++ix) {
      grid.xs.push_back(axis[ix]);
      grid.ys.push_back(axis[iy]);
      codec.encode_into(axis[ix], row, 0);
      codec.encode_into(axis[iy], row, k);
      batch.push_back(row);
    }
  }
  grid.energies = model.energy(batch);
  return grid;
}

void write_landscape_csv(const std::string& path, const LandscapeGrid& grid) {
  std::string out = "x,y,energy\n";
  char line[96];
  for (std::size_t i = 0; i < grid.energies.size(); ++i) {
    std::snprintf(line, sizeof line, "%.17g,%.17g,%.17g\n", grid.xs[i], grid.ys[i],
                  grid.energies[i]);
    out += line;
  }
  io::write_file_atomic(path, out);
}

}  // namespace rmis
