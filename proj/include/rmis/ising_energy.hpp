#pragma once

#include <vector>

#include "rmis/energy.hpp"

namespace rmis {

// How stored bits enter the quadratic form.
enum class SpinEncoding {
  PlusMinusOne,  // s = 2x - 1
  ZeroOne,       // s = x
};

std::string to_string(SpinEncoding e);
SpinEncoding spin_encoding_from_string(const std::string& s);

// E(x) = -s^T J s - b^T s with J symmetric and zero on the diagonal.
//
// J is stored as its strict upper triangle ("J_upper", row-major), so symmetry
// and the zero diagonal hold by construction. In fixed mode J = sigma * A with
// A the adjacency of a cyclic lattice; the neighbour list is kept for O(degree)
// flip deltas.
class IsingEnergy final : public EnergyModel {
 public:
  // side x side torus, each node coupled to its 4 neighbours. side >= 3.
  static IsingEnergy lattice(std::size_t side, double sigma,
                             SpinEncoding encoding = SpinEncoding::PlusMinusOne);
  // Cyclic chain of n >= 3 spins (2 neighbours each). Used for small exact checks.
  static IsingEnergy ring(std::size_t n, double sigma,
                          SpinEncoding encoding = SpinEncoding::PlusMinusOne);
  // Trainable model with J = 0 and b = 0.
  static IsingEnergy learnable(std::size_t d, SpinEncoding encoding = SpinEncoding::PlusMinusOne);
  // From checkpointed parameters.
  IsingEnergy(std::size_t d, SpinEncoding encoding, bool learnable, double sigma,
              std::size_t side, ParamSet params);

  std::size_t dim() const override { return d_; }
  std::string kind() const override { return "ising"; }
  ParamSet& params() override { return params_; }
  const ParamSet& params() const override { return params_; }

  bool is_learnable() const noexcept { return learnable_; }
  double sigma() const noexcept { return sigma_; }
  std::size_t side() const noexcept { return side_; }
  SpinEncoding encoding() const noexcept { return encoding_; }

  // Dense d x d coupling matrix.
  Tensor coupling() const;
  const Tensor& bias() const { return params_.get("b"); }
  double coupling_at(std::size_t i, std::size_t j) const;

  Var energy_graph(Tape& tape, Var inputs, std::span<const Var> bound) const override;
  using EnergyModel::energy;
  std::vector<double> energy(const BitBatch& batch) const override;
  // Analytic: for +-1 spins dE/dx = 2 (-2 J s - b); for 0/1 spins dE/dx = -2 J x - b.
  Tensor grad_input(const BitBatch& batch) const override;
  std::vector<double> neighbor_energies(const BitVector& x) const override;
  std::vector<double> flip_deltas(const BitBatch& states, std::span<const double> current,
                                  std::size_t site) const override;

  // E(x_{-i}) - E(x) from the local field; O(degree) in fixed mode, O(d) otherwise.
  double flip_delta(const BitVector& x, std::size_t i) const;

  std::unique_ptr<EnergyModel> clone() const override;
  std::map<std::string, std::string> describe() const override;

  // Reverse-mode input gradient; exposed to cross-check the analytic one.
  Tensor grad_input_reverse_mode(const BitBatch& batch) const {
    return grad_input_autodiff(batch);
  }

 private:
  IsingEnergy(std::size_t d, SpinEncoding encoding);
  void set_graph(std::vector<std::vector<std::size_t>> adjacency, double sigma);
  double spin(bool bit) const noexcept {
    return encoding_ == SpinEncoding::PlusMinusOne ? (bit ? 1.0 : -1.0) : (bit ? 1.0 : 0.0);
  }
  // h_i = sum_j J_ij s_j for one packed row.
  template <typename GetBit>
  double local_field(std::size_t i, GetBit&& bit) const;
  template <typename GetBit>
  double delta_from_field(std::size_t i, GetBit&& bit) const;

  std::size_t d_ = 0;
  SpinEncoding encoding_ = SpinEncoding::PlusMinusOne;
  bool learnable_ = true;
  double sigma_ = 0.0;
  std::size_t side_ = 0;
  std::vector<std::vector<std::size_t>> adjacency_;  // fixed mode only
  ParamSet params_;
};

}  // namespace rmis
