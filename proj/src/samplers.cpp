#include "rmis/samplers.hpp"

#include <algorithm>
#include <cmath>

#include "rmis/error.hpp"

namespace rmis {

std::vector<std::size_t> categorical_sample(std::span<const double> probs, std::size_t count,
                                            RngStream& rng) {
  if (probs.empty()) throw ConfigError("categorical_sample: empty distribution");
  std::vector<double> cumulative(probs.size());
  double total = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (!(probs[i] >= 0.0) || !std::isfinite(probs[i])) {
      throw ConfigError("categorical_sample: probabilities must be finite and non-negative");
    }
    total += probs[i];
    cumulative[i] = total;
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw ConfigError("categorical_sample: probabilities sum to " + std::to_string(total));
  }
  // Last index with positive mass; guards u * total rounding up to total.
  std::size_t last = probs.size() - 1;
  while (probs[last] == 0.0) --last;

  std::vector<std::size_t> out(count);
  for (auto& idx : out) {
    const double u = rng.uniform() * total;
    const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
    idx = std::min(std::size_t(it - cumulative.begin()), last);
  }
  return out;
}

namespace {

// Lockstep scan of site i for all rows. `energies` tracks E(row).
void resample_site(const EnergyModel& model, BitBatch& states, std::vector<double>& energies,
                   std::size_t site, std::span<RngStream> rngs) {
  const std::vector<double> delta = model.flip_deltas(states, energies, site);
  for (std::size_t r = 0; r < states.rows(); ++r) {
    require_finite(delta[r], "gibbs_sweep");
    const bool bit = states.get(r, site);
    // delta = E(flipped) - E(current); E(x_i=0) - E(x_i=1) in either case:
    const double gap = bit ? delta[r] : -delta[r];
    const bool next = rngs[r].uniform() < sigmoid(gap);
    if (next != bit) {
      states.flip(r, site);
      energies[r] += delta[r];
    }
  }
}

void sweep_all(const EnergyModel& model, BitBatch& states, std::vector<double>& energies,
               std::span<RngStream> rngs) {
  for (std::size_t i = 0; i < states.dim(); ++i) resample_site(model, states, energies, i, rngs);
  // Re-anchor the running energies so rounding drift cannot accumulate.
  energies = model.energy(states);
}

}  // namespace

ChainState gibbs_sweep(const EnergyModel& model, ChainState state, RngStream& rng) {
  if (state.current.dim() != model.dim()) {
    throw ShapeError("gibbs_sweep: chain dimension does not match model");
  }
  BitBatch states(model.dim());
  states.push_back(state.current);
  std::vector<double> energies = model.energy(states);
  sweep_all(model, states, energies, std::span<RngStream>(&rng, 1));
  state.current = states.row(0);
  state.sweep_count += 1;
  return state;
}

BitBatch gibbs_sample_set(const EnergyModel& model, const GibbsConfig& config, RngStream& rng) {
  if (config.samples == 0 || config.chains == 0 || config.burn_in == 0 || config.thin == 0) {
    throw ConfigError("gibbs_sample_set: samples, chains, burn_in and thin must be > 0");
  }
  const std::size_t d = model.dim();
  const std::uint64_t base = rng.next_u64();
  std::vector<RngStream> rngs;
  rngs.reserve(config.chains);
  for (std::size_t c = 0; c < config.chains; ++c) rngs.emplace_back(base, c);

  BitBatch states(d, config.chains);
  for (std::size_t c = 0; c < config.chains; ++c)
    for (std::size_t i = 0; i < d; ++i) states.set(c, i, rngs[c].uniform() < 0.5);
  std::vector<double> energies = model.energy(states);

  for (std::size_t s = 0; s < config.burn_in; ++s) sweep_all(model, states, energies, rngs);

  BitBatch out(d);
  while (out.rows() < config.samples) {
    for (std::size_t s = 0; s < config.thin; ++s) sweep_all(model, states, energies, rngs);
    for (std::size_t c = 0; c < config.chains && out.rows() < config.samples; ++c) {
      out.push_back(states.row(c));
    }
  }
  return out;
}

}  // namespace rmis
