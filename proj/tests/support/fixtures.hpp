#pragma once

#include <cmath>
#include <memory>
#include <vector>

#include "rmis/autodiff.hpp"
#include "rmis/bits.hpp"
#include "rmis/energy.hpp"
#include "rmis/mlp_energy.hpp"
#include "rmis/rng.hpp"

namespace rmis::testing {

// E(x) = w^T x + c.
class LinearEnergy final : public EnergyModel {
 public:
  LinearEnergy(std::vector<double> w, double c = 0.0) : c_(c) {
    const std::size_t d = w.size();
    params_.add("w", Tensor({d, 1}, w));
  }

  std::size_t dim() const override { return params_[0].value.rows(); }
  std::string kind() const override { return "linear"; }
  ParamSet& params() override { return params_; }
  const ParamSet& params() const override { return params_; }

  Var energy_graph(Tape&, Var inputs, std::span<const Var> bound) const override {
    const std::size_t n = inputs.value().rows();
    return ad::add_scalar(ad::reshape(ad::matmul(inputs, bound[0]), {n}), c_);
  }

  std::unique_ptr<EnergyModel> clone() const override {
    return std::make_unique<LinearEnergy>(*this);
  }
  std::map<std::string, std::string> describe() const override { return {{"model", "linear"}}; }

 private:
  double c_;
  ParamSet params_;
};

inline LinearEnergy constant_energy(std::size_t d, double c) {
  return LinearEnergy(std::vector<double>(d, 0.0), c);
}

// base(x) + c, for shift-invariance checks.
class OffsetEnergy final : public EnergyModel {
 public:
  OffsetEnergy(const EnergyModel& base, double c) : base_(base.clone()), c_(c) {}
  OffsetEnergy(const OffsetEnergy& o) : base_(o.base_->clone()), c_(o.c_) {}

  std::size_t dim() const override { return base_->dim(); }
  std::string kind() const override { return "offset"; }
  ParamSet& params() override { return base_->params(); }
  const ParamSet& params() const override { return base_->params(); }

  Var energy_graph(Tape& tape, Var inputs, std::span<const Var> bound) const override {
    return ad::add_scalar(base_->energy_graph(tape, inputs, bound), c_);
  }

  std::unique_ptr<EnergyModel> clone() const override {
    return std::make_unique<OffsetEnergy>(*this);
  }
  std::map<std::string, std::string> describe() const override { return {{"model", "offset"}}; }

 private:
  std::unique_ptr<EnergyModel> base_;
  double c_;
};

// Rows are the binary expansions of 0 .. 2^d - 1 (bit i of the index is x_i).
inline BitBatch all_states(std::size_t d) {
  BitBatch out(d, std::size_t{1} << d);
  for (std::size_t k = 0; k < (std::size_t{1} << d); ++k) {
    for (std::size_t i = 0; i < d; ++i) out.set(k, i, (k >> i) & 1u);
  }
  return out;
}

inline std::size_t state_index(const BitVector& x) {
  std::size_t k = 0;
  for (std::size_t i = 0; i < x.dim(); ++i) k |= std::size_t(x.get(i)) << i;
  return k;
}

// exp(-E) / Z over all 2^d states, computed with max-shifted exponents.
inline std::vector<double> boltzmann(const EnergyModel& model) {
  const auto e = model.energy(all_states(model.dim()));
  double lo = e[0];
  for (double v : e) lo = std::min(lo, v);
  std::vector<double> p(e.size());
  double z = 0.0;
  for (std::size_t k = 0; k < e.size(); ++k) z += p[k] = std::exp(-(e[k] - lo));
  for (double& v : p) v /= z;
  return p;
}

inline BitVector random_bits(std::size_t d, RngStream& rng) {
  BitVector x(d);
  for (std::size_t i = 0; i < d; ++i) x.set(i, rng.uniform() < 0.5);
  return x;
}

inline MlpEnergy random_mlp(std::size_t d, std::size_t width, std::size_t depth,
                            std::uint64_t seed) {
  RngStream rng(seed, 0);
  return MlpEnergy(MlpArchitecture{d, width, depth}, rng);
}

inline double rel_err(double a, double b) {
  return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)});
}

}  // namespace rmis::testing
