#pragma once

#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "rmis/autodiff.hpp"
#include "rmis/bits.hpp"
#include "rmis/params.hpp"

namespace rmis {

// A parameterized energy E_theta over {0,1}^d; the model density is
// proportional to exp(-E_theta(x)).
class EnergyModel {
 public:
  virtual ~EnergyModel() = default;

  virtual std::size_t dim() const = 0;
  virtual std::string kind() const = 0;

  virtual ParamSet& params() = 0;
  virtual const ParamSet& params() const = 0;

  // Differentiable energies of the rows of `inputs` (n x d, continuous
  // extension), shape {n}. `bound` comes from bind_params(params()).
  virtual Var energy_graph(Tape& tape, Var inputs, std::span<const Var> bound) const = 0;

  // E_theta(x) per row.
  virtual std::vector<double> energy(const BitBatch& batch) const;
  double energy(const BitVector& x) const;

  // grad_x E_theta(x) per row (n x d) of the continuous extension.
  virtual Tensor grad_input(const BitBatch& batch) const;

  // [E(x_{-1}), ..., E(x_{-d})].
  virtual std::vector<double> neighbor_energies(const BitVector& x) const;

  // E(row with `site` flipped) - E(row) for every row. `current` holds E(row)
  // and may be ignored by models with a local delta formula.
  virtual std::vector<double> flip_deltas(const BitBatch& states, std::span<const double> current,
                                          std::size_t site) const;

  virtual std::unique_ptr<EnergyModel> clone() const = 0;

  // Architecture description written into checkpoint manifests.
  virtual std::map<std::string, std::string> describe() const = 0;

 protected:
  void require_dim(std::size_t d, const char* op) const;
  // Reverse-mode input gradient shared by subclasses.
  Tensor grad_input_autodiff(const BitBatch& batch) const;
};

// Rebuilds a model from describe() output plus its parameters.
std::unique_ptr<EnergyModel> make_model(const std::map<std::string, std::string>& description,
                                        ParamSet params);

}  // namespace rmis
