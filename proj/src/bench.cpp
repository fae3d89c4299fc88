#include "rmis/bench.hpp"

#include <chrono>
#include <cstdio>

#include "rmis/dataset.hpp"
#include "rmis/error.hpp"
#include "rmis/mlp_energy.hpp"
#include "rmis/toy2d.hpp"
#include "rmis/trainer.hpp"

namespace rmis {

void BenchConfig::validate() const {
  if (dims.empty()) throw ConfigError("bench needs at least one dimension");
  for (std::size_t d : dims) {
    if (d < 2 || d % 2 != 0) throw ConfigError("bench dimensions must be even and >= 2");
    if (samples > d) throw ConfigError("bench s exceeds d=" + std::to_string(d));
  }
  if (batch_size < 1 || samples < 1 || batches < 1) {
    throw ConfigError("bench batch size, s and batch count must be positive");
  }
  if (width < 1 || depth < 1) throw ConfigError("bench MLP width and depth must be positive");
}

namespace {

struct Timing {
  double mean_ms = 0.0;
  std::size_t tape_bytes = 0;
};

Timing time_estimator(const BenchConfig& cfg, const BitBatch& data, EstimatorKind kind) {
  const std::size_t d = data.dim();
  RngStream init(cfg.seed, 0);
  auto model = std::make_unique<MlpEnergy>(MlpArchitecture{d, cfg.width, cfg.depth}, init);
  TrainConfig tc;
  tc.estimator.kind = kind;
  tc.estimator.samples = cfg.samples;
  tc.batch_size = cfg.batch_size;
  tc.iterations = cfg.warmup + cfg.batches;
  tc.seed = cfg.seed;
  tc.max_chunk_rows = cfg.max_chunk_rows;
  Trainer trainer(tc, data, std::move(model));
  for (std::size_t i = 0; i < cfg.warmup; ++i) trainer.step();
  Timing t;
  double total = 0.0;
  for (std::size_t i = 0; i < cfg.batches; ++i) {
    const auto start = std::chrono::steady_clock::now();
    trainer.step();
    total += std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
                 .count();
    t.tape_bytes = std::max(t.tape_bytes, trainer.last_tape_bytes());
  }
  t.mean_ms = total / double(cfg.batches);
  return t;
}

}  // namespace

std::vector<BenchRow> run_bench(const BenchConfig& cfg,
                                const std::function<void(const BenchRow&)>& on_row) {
  cfg.validate();
  std::vector<BenchRow> rows;
  for (std::size_t d : cfg.dims) {
    RngStream data_rng(cfg.seed, 7);
    Synthetic2DSpec spec{"2spirals", 4 * cfg.batch_size, GrayCodec(d / 2, kToyLo, kToyHi)};
    const BitDataset ds = encode_dataset(spec, data_rng);
    const Timing full = time_estimator(cfg, ds.bits, EstimatorKind::RmFull);
    const Timing adv = time_estimator(cfg, ds.bits, EstimatorKind::RmwggisAdvanced);
    BenchRow row;
    row.d = d;
    row.full_ms = full.mean_ms;
    row.adv_ms = adv.mean_ms;
    row.speedup = full.mean_ms / adv.mean_ms;
    row.full_tape_bytes = full.tape_bytes;
    row.adv_tape_bytes = adv.tape_bytes;
    if (on_row) on_row(row);
    rows.push_back(row);
  }
  return rows;
}

std::string format_bench_table(const std::vector<BenchRow>& rows) {
  std::string out;
  char line[160];
  std::snprintf(line, sizeof line, "%8s %14s %14s %9s %16s %16s\n", "d", "rm-full ms",
                "rmwggis-adv ms", "speedup", "full tape MiB*", "adv tape MiB*");
  out += line;
  for (const auto& r : rows) {
    std::snprintf(line, sizeof line, "%8zu %14.3f %14.3f %8.2fx %16.1f %16.1f\n", r.d, r.full_ms,
                  r.adv_ms, r.speedup, double(r.full_tape_bytes) / 1048576.0,
                  double(r.adv_tape_bytes) / 1048576.0);
    out += line;
  }
  out += "* peak autodiff tape per chunk; a rough CPU indicator, not comparable to GPU memory\n";
  return out;
}

}  // namespace rmis
