#pragma once

#include <map>
#include <string>

#include "rmis/bits.hpp"
#include "rmis/gray.hpp"
#include "rmis/ising_energy.hpp"
#include "rmis/rng.hpp"

namespace rmis {

struct BitDataset {
  BitBatch bits;
  std::map<std::string, std::string> manifest;

  std::size_t dim() const noexcept { return bits.dim(); }
  std::size_t size() const noexcept { return bits.rows(); }
};

struct Synthetic2DSpec {
  std::string name;
  std::size_t n = 0;
  GrayCodec codec{16, -4.0, 4.0};
};

// Each 2-D point becomes gray(x) followed by gray(y); d = 2k.
BitDataset encode_dataset(const Synthetic2DSpec& spec, RngStream& rng);

// n samples from the true model: n parallel chains, each run for
// ceil(steps / d) sweeps (one step = one single-site update).
BitDataset gen_ising_data(const IsingEnergy& true_model, std::size_t n, std::size_t steps,
                          RngStream& rng);

// File layout (little-endian):
//   "RMISDATA" | u32 version | u64 d | u64 n
//   n rows of ceil(d/8) bytes, bit j at byte j/8, mask 0x80 >> (j%8)
//   u64 manifest length | manifest text (key=value lines)
inline constexpr std::uint32_t kDatasetVersion = 1;

void save_dataset(const std::string& path, const BitDataset& ds);
BitDataset load_dataset(const std::string& path);

}  // namespace rmis
