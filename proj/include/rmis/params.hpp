#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "rmis/autodiff.hpp"
#include "rmis/tensor.hpp"

namespace rmis {

struct NamedTensor {
  std::string name;
  Tensor value;
};

// Ordered, named model parameters. Order and shapes are part of the
// checkpoint contract.
class ParamSet {
 public:
  void add(std::string name, Tensor value);

  std::size_t size() const noexcept { return entries_.size(); }
  std::size_t total_count() const noexcept;

  NamedTensor& operator[](std::size_t i) { return entries_[i]; }
  const NamedTensor& operator[](std::size_t i) const { return entries_[i]; }

  // Throws ConfigError when absent.
  Tensor& get(const std::string& name);
  const Tensor& get(const std::string& name) const;
  bool contains(const std::string& name) const noexcept;

  auto begin() { return entries_.begin(); }
  auto end() { return entries_.end(); }
  auto begin() const { return entries_.begin(); }
  auto end() const { return entries_.end(); }

 private:
  std::vector<NamedTensor> entries_;
};

// One gradient per ParamSet entry, same order and shapes.
struct GradRecord {
  std::vector<Tensor> grads;
};

using ParamBinding = std::vector<Var>;

// Puts every parameter on the tape as a leaf.
ParamBinding bind_params(Tape& tape, const ParamSet& params, bool requires_grad);

// Runs the reverse pass from `loss` and collects d(loss)/d(param) for each bound parameter.
GradRecord backward(Var loss, std::span<const Var> bound);

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  std::vector<Tensor> m;
  std::vector<Tensor> v;
  std::uint64_t step = 0;

  static AdamState zeros_like(const ParamSet& params);
};

// Bias-corrected Adam update in place. Throws ShapeError on any mismatch.
void adam_step(ParamSet& params, const GradRecord& grads, AdamState& state,
               const AdamConfig& config);

}  // namespace rmis
