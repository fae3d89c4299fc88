#pragma once

#include <string>
#include <vector>

#include "rmis/bits.hpp"
#include "rmis/energy.hpp"
#include "rmis/gray.hpp"

namespace rmis {

// d - Hamming(x, y). Throws ShapeError on dimension mismatch.
double hamming_kernel(const BitVector& x, const BitVector& y);

struct MmdReport {
  double mmd_sq = 0.0;
  std::size_t n_x = 0;
  std::size_t n_y = 0;
  std::string kernel = "d - Hamming";
};

// Biased V-statistic over all pairs, diagonals included:
//   mean_XX k + mean_YY k - 2 mean_XY k
// Kernel sums are exact integers, so identical multisets give exactly 0.
MmdReport mmd_linear(const BitBatch& x, const BitBatch& y);

// sqrt(mean over all entries of (a - b)^2).
double rmse_connectivity(const Tensor& j_hat, const Tensor& j_true);

// Mean of rm_full_loss over the rows.
double objective_value_eval(const EnergyModel& model, const BitBatch& samples,
                            double exponent_clamp = 30.0);

struct LandscapeGrid {
  std::size_t resolution = 0;
  std::vector<double> xs;
  std::vector<double> ys;
  std::vector<double> energies;
};

// resolution x resolution grid over [lo, hi]^2 (end points included), x
// varying fastest. Each point is encoded as gray(x) || gray(y) and scored.
LandscapeGrid energy_landscape(const EnergyModel& model, const GrayCodec& codec,
                               std::size_t resolution = 100);

// CSV with header "x,y,energy".
void write_landscape_csv(const std::string& path, const LandscapeGrid& grid);

}  // namespace rmis
