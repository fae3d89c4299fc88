#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "rmis/bits.hpp"
#include "rmis/energy.hpp"
#include "rmis/rng.hpp"

namespace rmis {

// `count` i.i.d. indices (with replacement), index i with probability probs[i].
// Inverts the cumulative sum over half-open intervals [c_{i-1}, c_i), so a
// zero-probability entry is never returned. Throws ConfigError if probs has a
// negative entry or does not sum to 1 within 1e-9.
std::vector<std::size_t> categorical_sample(std::span<const double> probs, std::size_t count,
                                            RngStream& rng);

struct ChainState {
  BitVector current;
  std::uint64_t sweep_count = 0;
};

// One systematic scan over sites 0..d-1, each resampled from
// p(x_i = 1 | rest) = sigmoid(E(x_i = 0) - E(x_i = 1)).
ChainState gibbs_sweep(const EnergyModel& model, ChainState state, RngStream& rng);

struct GibbsConfig {
  std::size_t samples = 4000;
  std::size_t chains = 100;
  std::size_t burn_in = 1000;  // sweeps
  std::size_t thin = 10;       // sweeps between collections
};

// Runs `chains` chains from uniform random starts in lockstep. After burn_in
// sweeps, every thin-th sweep appends each chain's state in chain order until
// `samples` rows are collected. Chain c draws from RngStream(base, c) where
// base comes from `rng`.
BitBatch gibbs_sample_set(const EnergyModel& model, const GibbsConfig& config, RngStream& rng);

}  // namespace rmis
