#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "rmis/bits.hpp"
#include "rmis/energy.hpp"
#include "rmis/rng.hpp"

namespace rmis {

// Ratio-matching losses for one point x over its flip neighbours x_{-i}:
//
//   full        sum_i exp(2 (E(x) - E(x_{-i})))
//   g-form      sum_i sigmoid(E(x) - E(x_{-i}))^2
//   basic IS    (1/s) sum_t exp(2 D_t) / n(i_t),  i_t ~ n   (unbiased for full)
//   advanced    sum_t exp(2 D_t),                 i_t ~ n~  (no weights)
//   random      (d/s) sum_t exp(2 D_t),           i_t ~ uniform
//
// with D = E(x) - E(x_{-i}). Proposals and weights never carry gradient;
// only the energies inside the terms do.

enum class EstimatorKind { RmFull, RmGFull, RmwggisBasic, RmwggisAdvanced, Rmwrand };

// Per-term function: squared probability ratio, or the g(u) = 1/(1+u) form.
enum class TermKind { RatioSquared, GForm };

std::string to_string(EstimatorKind kind);
// Accepts rm-full, rm-g, rmwggis-basic, rmwggis-adv, rmwrand.
EstimatorKind estimator_kind_from_string(const std::string& s);
bool is_sampled(EstimatorKind kind) noexcept;

struct EstimatorSpec {
  EstimatorKind kind = EstimatorKind::RmwggisAdvanced;
  std::size_t samples = 10;
  double exponent_clamp = 30.0;
  // Sampled kinds only; RmFull / RmGFull fix their own term.
  TermKind term = TermKind::RatioSquared;

  // Throws ConfigError unless 1 <= samples <= d for sampled kinds and clamp > 0.
  void validate(std::size_t d) const;
};

struct ProposalDistribution {
  BitVector anchor;
  std::vector<double> probs;
};

struct LossValue {
  double value = 0.0;
  std::vector<double> terms;  // weighted contribution of each evaluated flip
  std::size_t clamp_events = 0;
};

LossValue rm_full_loss(const EnergyModel& model, const BitVector& x, double exponent_clamp = 30.0);
LossValue rm_g_loss(const EnergyModel& model, const BitVector& x);

// probs_i proportional to exp(2 (E(x) - E(x_{-i}))); d + 1 energy evaluations.
ProposalDistribution exact_optimal_proposal(const EnergyModel& model, const BitVector& x);

// First-order estimate of E(x) - E(x_{-i}): (2x - 1) * grad_x E(x).
std::vector<double> taylor_delta(const EnergyModel& model, const BitVector& x);

// probs_i proportional to exp(2 taylor_delta_i); one input-gradient evaluation.
ProposalDistribution gradient_guided_proposal(const EnergyModel& model, const BitVector& x);
std::vector<ProposalDistribution> gradient_guided_proposals(const EnergyModel& model,
                                                            const BitBatch& batch);

// Stable softmax of log-weights (max subtracted first).
std::vector<double> normalize_log_weights(std::span<const double> log_weights);

LossValue is_estimate_basic(const EnergyModel& model, const BitVector& x,
                            const ProposalDistribution& proposal,
                            std::span<const std::size_t> indices, double exponent_clamp = 30.0,
                            TermKind term = TermKind::RatioSquared);
LossValue is_estimate_advanced(const EnergyModel& model, const BitVector& x,
                               std::span<const std::size_t> indices,
                               double exponent_clamp = 30.0,
                               TermKind term = TermKind::RatioSquared);
LossValue rmwrand_estimate(const EnergyModel& model, const BitVector& x,
                           std::span<const std::size_t> indices, double exponent_clamp = 30.0,
                           TermKind term = TermKind::RatioSquared);

// Which flips one sample contributes and their constant weights.
struct FlipPlan {
  std::vector<std::size_t> flips;
  std::vector<double> weights;
  TermKind term = TermKind::RatioSquared;
};

// Per-row plans: proposals are built for the whole batch, then each row draws
// its indices from `rng` in row order.
std::vector<FlipPlan> plan_batch(const EnergyModel& model, const BitBatch& batch,
                                 const EstimatorSpec& spec, RngStream& rng);

// Loss of one planned sample from plain energy evaluations.
LossValue evaluate_plan(const EnergyModel& model, const BitVector& x, const FlipPlan& plan,
                        double exponent_clamp);

// Mean per-sample loss with fresh proposals and indices. Throws on empty batch.
LossValue batch_loss(const EnergyModel& model, const BitBatch& batch, const EstimatorSpec& spec,
                     RngStream& rng);

struct LossGraph {
  Var loss;
  std::size_t clamp_events = 0;
};

// Differentiable version of evaluate_plan summed over rows [begin, end) and
// multiplied by `scale` (1/batch for a batch mean). All rows and their
// neighbours go through a single energy_graph call.
LossGraph build_loss_graph(Tape& tape, const EnergyModel& model, std::span<const Var> bound,
                           const BitBatch& batch, std::span<const FlipPlan> plans,
                           std::size_t begin, std::size_t end, double exponent_clamp,
                           double scale);

}  // namespace rmis
