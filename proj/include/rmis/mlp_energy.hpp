#pragma once

#include "rmis/energy.hpp"
#include "rmis/rng.hpp"

namespace rmis {

struct MlpArchitecture {
  std::size_t dim = 0;
  std::size_t width = 256;
  // Number of Swish hidden layers.
  std::size_t depth = 3;
};

// d -> [width, Swish] x depth -> 1.
class MlpEnergy final : public EnergyModel {
 public:
  // Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) initialisation for weights and biases.
  MlpEnergy(MlpArchitecture arch, RngStream& init_rng);
  // Takes parameters as stored in a checkpoint; validates names and shapes.
  MlpEnergy(MlpArchitecture arch, ParamSet params);

  const MlpArchitecture& architecture() const noexcept { return arch_; }

  std::size_t dim() const override { return arch_.dim; }
  std::string kind() const override { return "mlp"; }
  ParamSet& params() override { return params_; }
  const ParamSet& params() const override { return params_; }

  Var energy_graph(Tape& tape, Var inputs, std::span<const Var> bound) const override;
  using EnergyModel::energy;
  std::vector<double> energy(const BitBatch& batch) const override;
  Tensor grad_input(const BitBatch& batch) const override { return grad_input_autodiff(batch); }

  std::unique_ptr<EnergyModel> clone() const override;
  std::map<std::string, std::string> describe() const override;

 private:
  void validate() const;

  MlpArchitecture arch_;
  ParamSet params_;
};

}  // namespace rmis
