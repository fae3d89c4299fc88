#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace rmis {

struct BenchConfig {
  std::vector<std::size_t> dims = {32, 64, 128, 256, 512, 1024, 2048};
  std::size_t batch_size = 256;
  std::size_t samples = 10;
  std::size_t warmup = 5;
  std::size_t batches = 50;
  std::size_t width = 256;
  std::size_t depth = 3;
  std::uint64_t seed = 0;
  std::size_t max_chunk_rows = 8192;

  void validate() const;
};

struct BenchRow {
  std::size_t d = 0;
  double full_ms = 0.0;  // mean per-batch train step, rm-full
  double adv_ms = 0.0;   // same for rmwggis-adv
  double speedup = 0.0;  // full_ms / adv_ms
  // Largest autodiff tape footprint of one chunk; a rough, non-normative
  // memory indicator.
  std::size_t full_tape_bytes = 0;
  std::size_t adv_tape_bytes = 0;
};

// For each d: 2spirals data at k = d/2 bits per coordinate, a fresh MLP, and
// `warmup` discarded plus `batches` timed train steps per estimator.
std::vector<BenchRow> run_bench(const BenchConfig& config,
                                const std::function<void(const BenchRow&)>& on_row = {});

std::string format_bench_table(const std::vector<BenchRow>& rows);

}  // namespace rmis
