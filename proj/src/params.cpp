#include "rmis/params.hpp"

#include <algorithm>
#include <cmath>

#include "rmis/error.hpp"

namespace rmis {

void ParamSet::add(std::string name, Tensor value) {
  if (contains(name)) throw ConfigError("duplicate parameter name: " + name);
  entries_.push_back({std::move(name), std::move(value)});
}

std::size_t ParamSet::total_count() const noexcept {
  std::size_t n = 0;
  for (const auto& e : entries_) n += e.value.size();
  return n;
}

bool ParamSet::contains(const std::string& name) const noexcept {
  return std::any_of(entries_.begin(), entries_.end(),
                     [&](const NamedTensor& e) { return e.name == name; });
}

Tensor& ParamSet::get(const std::string& name) {
  for (auto& e : entries_) {
    if (e.name == name) return e.value;
  }
  throw ConfigError("no parameter named " + name);
}

const Tensor& ParamSet::get(const std::string& name) const {
  for (const auto& e : entries_) {
    if (e.name == name) return e.value;
  }
  throw ConfigError("no parameter named " + name);
}

ParamBinding bind_params(Tape& tape, const ParamSet& params, bool requires_grad) {
  ParamBinding bound;
  bound.reserve(params.size());
  for (const auto& e : params) bound.push_back(tape.leaf(e.value, requires_grad));
  return bound;
}

GradRecord backward(Var loss, std::span<const Var> bound) {
  Tape& tape = loss.tape();
  tape.backward(loss);
  GradRecord rec;
  rec.grads.reserve(bound.size());
  for (const Var& p : bound) rec.grads.push_back(tape.grad(p.id()));
  return rec;
}

AdamState AdamState::zeros_like(const ParamSet& params) {
  AdamState s;
  for (const auto& e : params) {
    s.m.emplace_back(e.value.shape());
    s.v.emplace_back(e.value.shape());
  }
  return s;
}

void adam_step(ParamSet& params, const GradRecord& grads, AdamState& state,
               const AdamConfig& config) {
  if (grads.grads.size() != params.size() || state.m.size() != params.size() ||
      state.v.size() != params.size()) {
    throw ShapeError("adam_step: parameter, gradient and moment counts differ");
  }
  for (std::size_t k = 0; k < params.size(); ++k) {
    const Tensor& p = params[k].value;
    if (!grads.grads[k].same_shape(p) || !state.m[k].same_shape(p) || !state.v[k].same_shape(p)) {
      throw ShapeError("adam_step: shape mismatch for parameter " + params[k].name);
    }
  }
  state.step += 1;
  const double t = double(state.step);
  const double c1 = 1.0 - std::pow(config.beta1, t);
  const double c2 = 1.0 - std::pow(config.beta2, t);
  for (std::size_t k = 0; k < params.size(); ++k) {
    Tensor& p = params[k].value;
    const Tensor& g = grads.grads[k];
    Tensor& m = state.m[k];
    Tensor& v = state.v[k];
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = config.beta1 * m[i] + (1.0 - config.beta1) * g[i];
      v[i] = config.beta2 * v[i] + (1.0 - config.beta2) * g[i] * g[i];
      const double mhat = m[i] / c1;
      const double vhat = v[i] / c2;
      p[i] -= config.lr * mhat / (std::sqrt(vhat) + config.eps);
    }
  }
}

}  // namespace rmis
