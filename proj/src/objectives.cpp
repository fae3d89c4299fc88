#include "rmis/objectives.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "rmis/error.hpp"
#include "rmis/samplers.hpp"

namespace rmis {

std::string to_string(EstimatorKind kind) {
  switch (kind) {
    case EstimatorKind::RmFull:
      return "rm-full";
    case EstimatorKind::RmGFull:
      return "rm-g";
    case EstimatorKind::RmwggisBasic:
      return "rmwggis-basic";
    case EstimatorKind::RmwggisAdvanced:
      return "rmwggis-adv";
    case EstimatorKind::Rmwrand:
      return "rmwrand";
  }
  return "unknown";
}

EstimatorKind estimator_kind_from_string(const std::string& s) {
  for (auto k : {EstimatorKind::RmFull, EstimatorKind::RmGFull, EstimatorKind::RmwggisBasic,
                 EstimatorKind::RmwggisAdvanced, EstimatorKind::Rmwrand}) {
    if (to_string(k) == s) return k;
  }
  throw ConfigError("unknown estimator '" + s +
                    "' (expected rm-full, rm-g, rmwggis-basic, rmwggis-adv or rmwrand)");
}

bool is_sampled(EstimatorKind kind) noexcept {
  return kind != EstimatorKind::RmFull && kind != EstimatorKind::RmGFull;
}

void EstimatorSpec::validate(std::size_t d) const {
  if (!(exponent_clamp > 0.0)) throw ConfigError("exponent clamp must be positive");
  if (is_sampled(kind) && (samples < 1 || samples > d)) {
    throw ConfigError("sample count s=" + std::to_string(samples) + " must lie in [1, d=" +
                      std::to_string(d) + "]");
  }
}

std::vector<double> normalize_log_weights(std::span<const double> log_weights) {
  if (log_weights.empty()) throw ConfigError("cannot normalise an empty weight vector");
  const double peak = *std::max_element(log_weights.begin(), log_weights.end());
  require_finite(peak, "proposal");
  std::vector<double> p(log_weights.size());
  double total = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    p[i] = std::exp(log_weights[i] - peak);
    total += p[i];
  }
  for (double& v : p) v /= total;
  return p;
}

namespace {

double term_value(TermKind term, double delta, double clamp, std::size_t& clamp_events) {
  if (term == TermKind::GForm) {
    const double g = sigmoid(delta);
    return g * g;
  }
  double a = 2.0 * delta;
  if (a > clamp || a < -clamp) {
    ++clamp_events;
    a = std::clamp(a, -clamp, clamp);
  }
  return std::exp(a);
}

FlipPlan full_plan(std::size_t d, TermKind term) {
  FlipPlan p;
  p.flips.resize(d);
  std::iota(p.flips.begin(), p.flips.end(), std::size_t{0});
  p.weights.assign(d, 1.0);
  p.term = term;
  return p;
}

bool covers_all_flips_once(const FlipPlan& plan, std::size_t d) {
  if (plan.flips.size() != d) return false;
  for (std::size_t i = 0; i < d; ++i) {
    if (plan.flips[i] != i) return false;
  }
  return true;
}

void check_indices(std::span<const std::size_t> indices, std::size_t d) {
  if (indices.empty()) throw ConfigError("estimator needs at least one sampled index");
  for (std::size_t i : indices) {
    if (i >= d) {
      throw ConfigError("sampled index " + std::to_string(i) + " out of range for d=" +
                        std::to_string(d));
    }
  }
}

FlipPlan weighted_plan(std::span<const std::size_t> indices, std::vector<double> weights,
                       TermKind term) {
  FlipPlan p;
  p.flips.assign(indices.begin(), indices.end());
  p.weights = std::move(weights);
  p.term = term;
  return p;
}

FlipPlan basic_plan(const ProposalDistribution& proposal, std::span<const std::size_t> indices,
                    TermKind term) {
  const std::size_t d = proposal.probs.size();
  check_indices(indices, d);
  std::vector<double> w(indices.size());
  const double s = double(indices.size());
  for (std::size_t t = 0; t < indices.size(); ++t) {
    const double n = proposal.probs[indices[t]];
    if (!(n > 0.0)) {
      throw ConfigError("sampled flip " + std::to_string(indices[t]) +
                        " has zero proposal mass");
    }
    // (d/s) * m / n with m = 1/d.
    w[t] = 1.0 / (s * n);
  }
  return weighted_plan(indices, std::move(w), term);
}

ProposalDistribution proposal_from_gradient(const BitVector& x, const double* grad) {
  const std::size_t d = x.dim();
  std::vector<double> logw(d);
  for (std::size_t i = 0; i < d; ++i) logw[i] = 2.0 * (x.get(i) ? grad[i] : -grad[i]);
  return {x, normalize_log_weights(logw)};
}

}  // namespace

LossValue evaluate_plan(const EnergyModel& model, const BitVector& x, const FlipPlan& plan,
                        double exponent_clamp) {
  const std::size_t d = x.dim();
  if (d != model.dim()) throw ShapeError("loss: point dimension does not match model");
  if (plan.flips.size() != plan.weights.size()) {
    throw ShapeError("loss: flips and weights differ in length");
  }
  const double e0 = model.energy(x);
  std::vector<double> nb;
  if (covers_all_flips_once(plan, d)) {
    nb = model.neighbor_energies(x);
  } else {
    BitBatch rows(d);
    for (std::size_t i : plan.flips) rows.push_back(x.flipped(i));
    nb = model.energy(rows);
  }
  LossValue out;
  out.terms.resize(plan.flips.size());
  for (std::size_t t = 0; t < plan.flips.size(); ++t) {
    const double delta = e0 - nb[t];
    require_finite(delta, "loss");
    out.terms[t] = plan.weights[t] * term_value(plan.term, delta, exponent_clamp, out.clamp_events);
    out.value += out.terms[t];
  }
  require_finite(out.value, "loss");
  return out;
}

LossValue rm_full_loss(const EnergyModel& model, const BitVector& x, double exponent_clamp) {
  return evaluate_plan(model, x, full_plan(x.dim(), TermKind::RatioSquared), exponent_clamp);
}

LossValue rm_g_loss(const EnergyModel& model, const BitVector& x) {
  return evaluate_plan(model, x, full_plan(x.dim(), TermKind::GForm), 0.0);
}

ProposalDistribution exact_optimal_proposal(const EnergyModel& model, const BitVector& x) {
  const double e0 = model.energy(x);
  const std::vector<double> nb = model.neighbor_energies(x);
  std::vector<double> logw(nb.size());
  for (std::size_t i = 0; i < nb.size(); ++i) logw[i] = 2.0 * (e0 - nb[i]);
  return {x, normalize_log_weights(logw)};
}

std::vector<double> taylor_delta(const EnergyModel& model, const BitVector& x) {
  BitBatch b(x.dim());
  b.push_back(x);
  const Tensor g = model.grad_input(b);
  std::vector<double> delta(x.dim());
  for (std::size_t i = 0; i < x.dim(); ++i) delta[i] = x.get(i) ? g[i] : -g[i];
  return delta;
}

ProposalDistribution gradient_guided_proposal(const EnergyModel& model, const BitVector& x) {
  BitBatch b(x.dim());
  b.push_back(x);
  return gradient_guided_proposals(model, b).front();
}

std::vector<ProposalDistribution> gradient_guided_proposals(const EnergyModel& model,
                                                            const BitBatch& batch) {
  const Tensor g = model.grad_input(batch);
  std::vector<ProposalDistribution> out;
  out.reserve(batch.rows());
  for (std::size_t r = 0; r < batch.rows(); ++r) {
    out.push_back(proposal_from_gradient(batch.row(r), g.raw() + r * batch.dim()));
  }
  return out;
}

LossValue is_estimate_basic(const EnergyModel& model, const BitVector& x,
                            const ProposalDistribution& proposal,
                            std::span<const std::size_t> indices, double exponent_clamp,
                            TermKind term) {
  if (proposal.probs.size() != x.dim()) {
    throw ShapeError("proposal support size does not match the point dimension");
  }
  return evaluate_plan(model, x, basic_plan(proposal, indices, term), exponent_clamp);
}

LossValue is_estimate_advanced(const EnergyModel& model, const BitVector& x,
                               std::span<const std::size_t> indices, double exponent_clamp,
                               TermKind term) {
  check_indices(indices, x.dim());
  return evaluate_plan(model, x, weighted_plan(indices, std::vector<double>(indices.size(), 1.0), term),
                       exponent_clamp);
}

LossValue rmwrand_estimate(const EnergyModel& model, const BitVector& x,
                           std::span<const std::size_t> indices, double exponent_clamp,
                           TermKind term) {
  check_indices(indices, x.dim());
  const double w = double(x.dim()) / double(indices.size());
  return evaluate_plan(model, x, weighted_plan(indices, std::vector<double>(indices.size(), w), term),
                       exponent_clamp);
}

std::vector<FlipPlan> plan_batch(const EnergyModel& model, const BitBatch& batch,
                                 const EstimatorSpec& spec, RngStream& rng) {
  if (batch.empty()) throw ConfigError("loss over an empty batch");
  if (batch.dim() != model.dim()) throw ShapeError("batch dimension does not match model");
  const std::size_t d = batch.dim();
  spec.validate(d);
  std::vector<FlipPlan> plans;
  plans.reserve(batch.rows());
  switch (spec.kind) {
    case EstimatorKind::RmFull:
    case EstimatorKind::RmGFull: {
      const FlipPlan p = full_plan(d, spec.kind == EstimatorKind::RmFull ? TermKind::RatioSquared
                                                                         : TermKind::GForm);
      plans.assign(batch.rows(), p);
      break;
    }
    case EstimatorKind::RmwggisBasic:
    case EstimatorKind::RmwggisAdvanced: {
      const auto proposals = gradient_guided_proposals(model, batch);
      for (const auto& q : proposals) {
        const auto idx = categorical_sample(q.probs, spec.samples, rng);
        if (spec.kind == EstimatorKind::RmwggisBasic) {
          plans.push_back(basic_plan(q, idx, spec.term));
        } else {
          plans.push_back(weighted_plan(idx, std::vector<double>(idx.size(), 1.0), spec.term));
        }
      }
      break;
    }
    case EstimatorKind::Rmwrand: {
      const std::vector<double> uniform(d, 1.0 / double(d));
      const double w = double(d) / double(spec.samples);
      for (std::size_t r = 0; r < batch.rows(); ++r) {
        const auto idx = categorical_sample(uniform, spec.samples, rng);
        plans.push_back(weighted_plan(idx, std::vector<double>(idx.size(), w), spec.term));
      }
      break;
    }
  }
  return plans;
}

LossValue batch_loss(const EnergyModel& model, const BitBatch& batch, const EstimatorSpec& spec,
                     RngStream& rng) {
  const std::vector<FlipPlan> plans = plan_batch(model, batch, spec, rng);
  LossValue out;
  out.terms.reserve(batch.rows());
  for (std::size_t r = 0; r < batch.rows(); ++r) {
    const LossValue one = evaluate_plan(model, batch.row(r), plans[r], spec.exponent_clamp);
    out.terms.push_back(one.value);
    out.clamp_events += one.clamp_events;
  }
  double total = 0.0;
  for (double v : out.terms) total += v;
  out.value = total / double(batch.rows());
  return out;
}

LossGraph build_loss_graph(Tape& tape, const EnergyModel& model, std::span<const Var> bound,
                           const BitBatch& batch, std::span<const FlipPlan> plans,
                           std::size_t begin, std::size_t end, double exponent_clamp,
                           double scale) {
  if (plans.size() != batch.rows() || begin >= end || end > batch.rows()) {
    throw ShapeError("loss graph: plan count or row range does not match the batch");
  }
  if (batch.dim() != model.dim()) throw ShapeError("batch dimension does not match model");
  const std::size_t d = batch.dim();
  const TermKind term = plans[begin].term;
  std::size_t total_terms = 0;
  for (std::size_t r = begin; r < end; ++r) {
    if (plans[r].term != term) throw ConfigError("loss graph: mixed term kinds in one batch");
    total_terms += plans[r].flips.size();
  }
  const std::size_t anchors = end - begin;

  // Rows 0..anchors-1 are the points; the rest are their planned neighbours.
  Tensor inputs({anchors + total_terms, d});
  std::vector<std::size_t> anchor_of(total_terms), neighbor_row(total_terms);
  Tensor weights({total_terms});
  std::size_t k = 0;
  for (std::size_t r = begin; r < end; ++r) {
    double* a = inputs.raw() + (r - begin) * d;
    for (std::size_t i = 0; i < d; ++i) a[i] = batch.get(r, i) ? 1.0 : 0.0;
    for (std::size_t t = 0; t < plans[r].flips.size(); ++t, ++k) {
      const std::size_t row = anchors + k;
      double* nb = inputs.raw() + row * d;
      std::copy(a, a + d, nb);
      const std::size_t flip = plans[r].flips[t];
      if (flip >= d) throw ConfigError("planned flip out of range");
      nb[flip] = 1.0 - nb[flip];
      anchor_of[k] = r - begin;
      neighbor_row[k] = row;
      weights[k] = plans[r].weights[t] * scale;
    }
  }

  Var x = tape.leaf(std::move(inputs), false);
  Var energies = model.energy_graph(tape, x, bound);
  Var delta = ad::sub(ad::gather(energies, std::move(anchor_of)),
                      ad::gather(energies, std::move(neighbor_row)));

  LossGraph out;
  Var terms;
  if (term == TermKind::GForm) {
    terms = ad::square(ad::sigmoid(delta));
  } else {
    for (double v : delta.value().data()) {
      if (2.0 * v > exponent_clamp || 2.0 * v < -exponent_clamp) ++out.clamp_events;
    }
    terms = ad::exp(ad::clamp(ad::scale(delta, 2.0), -exponent_clamp, exponent_clamp));
  }
  out.loss = ad::sum(ad::mul_const(terms, std::move(weights)));
  return out;
}

}  // namespace rmis
