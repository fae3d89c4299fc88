#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "rmis/bits.hpp"
#include "rmis/checkpoint.hpp"
#include "rmis/energy.hpp"
#include "rmis/ising_energy.hpp"
#include "rmis/objectives.hpp"
#include "rmis/params.hpp"
#include "rmis/rng.hpp"
#include "rmis/samplers.hpp"

namespace rmis {

struct TrainConfig {
  EstimatorSpec estimator;
  AdamConfig adam;
  std::size_t batch_size = 256;
  std::uint64_t iterations = 1000;
  std::uint64_t seed = 0;
  // 0 disables periodic evaluation (start and end are still evaluated).
  std::uint64_t eval_every = 0;
  std::uint64_t checkpoint_every = 0;
  // Penalty l1 * sum_ij |J_ij| over the full matrix; learnable Ising only.
  double l1_strength = 0.0;
  // Upper bound on energy rows (points plus neighbours) per tape. Batches are
  // split into chunks of whole points and gradients summed in chunk order.
  std::size_t max_chunk_rows = 8192;
  // Where to dump a checkpoint when training diverges; empty skips the dump.
  std::string divergence_dump;

  void validate() const;
};

// FNV-1a over everything that shapes the trajectory: estimator, optimiser,
// batch size, seed, l1, chunking, model description and the dataset bits.
// Iteration count, evaluation and checkpoint cadence are excluded.
std::uint64_t config_hash(const TrainConfig& config, const EnergyModel& model,
                          const BitBatch& data);

struct EvalSpec {
  // Objective uses the first min(n, objective_samples) training rows.
  std::size_t objective_samples = 4000;
  bool mmd = false;
  GibbsConfig gibbs;
  // MMD compares Gibbs samples to the first min(n, mmd_data_samples) rows.
  std::size_t mmd_data_samples = 4000;
  // Set for Ising runs to report RMSE of the learned couplings.
  std::shared_ptr<const IsingEnergy> true_model;
};

struct MetricEntry {
  std::uint64_t iteration = 0;
  std::optional<double> loss;
  double objective = 0.0;
  std::optional<double> mmd_sq;
  std::optional<double> rmse;
  double wall_ms = 0.0;
  std::size_t clamp_events = 0;
};

// One JSON object, no trailing newline.
std::string to_json(const MetricEntry& entry);

MetricEntry evaluate(const EnergyModel& model, const BitBatch& data, const EvalSpec& spec,
                     RngStream& rng);

class Trainer {
 public:
  Trainer(TrainConfig config, BitBatch data, std::unique_ptr<EnergyModel> model);

  // Restores model, optimiser, rng streams and batch cursor. `config` may
  // change only fields excluded from config_hash; otherwise ConfigError.
  static Trainer resume(const std::string& checkpoint_path, TrainConfig config, BitBatch data);

  // One training iteration; returns the batch loss including the penalty.
  double step();

  struct Hooks {
    std::function<void(const MetricEntry&)> on_metrics;
    std::function<void(const Trainer&)> on_checkpoint;
  };
  // Steps until config().iterations, evaluating and checkpointing on schedule.
  void run(const EvalSpec& eval, const Hooks& hooks);

  CheckpointFile checkpoint() const;
  void save_checkpoint(const std::string& path) const;

  const EnergyModel& model() const { return *model_; }
  const TrainConfig& config() const { return config_; }
  TrainConfig& mutable_config() { return config_; }
  std::uint64_t iteration() const noexcept { return iteration_; }
  std::uint64_t hash() const noexcept { return hash_; }
  const BitBatch& data() const { return data_; }
  std::size_t last_clamp_events() const noexcept { return last_clamp_events_; }
  // Largest tape footprint among the chunks of the last step.
  std::size_t last_tape_bytes() const noexcept { return last_tape_bytes_; }

 private:
  BitBatch next_batch();
  void reshuffle();

  TrainConfig config_;
  BitBatch data_;
  std::unique_ptr<EnergyModel> model_;
  AdamState adam_;
  RngStream shuffle_rng_;
  RngStream estimator_rng_;
  std::vector<std::size_t> perm_;
  std::size_t cursor_ = 0;
  std::uint64_t epoch_ = 0;
  std::uint64_t iteration_ = 0;
  std::uint64_t hash_ = 0;
  std::size_t j_index_ = SIZE_MAX;  // position of J_upper when the l1 penalty applies
  std::optional<double> last_loss_;
  std::size_t last_clamp_events_ = 0;
  std::size_t last_tape_bytes_ = 0;
};

}  // namespace rmis
