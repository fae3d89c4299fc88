#include "rmis/mlp_energy.hpp"

#include <cmath>

#include "rmis/error.hpp"
#include "kernels.hpp"

namespace rmis {

namespace {

std::string weight_name(std::size_t layer) { return "layer" + std::to_string(layer) + ".weight"; }
std::string bias_name(std::size_t layer) { return "layer" + std::to_string(layer) + ".bias"; }

// Layer l maps fan_in(l) -> fan_out(l); the last layer is the scalar head.
std::size_t fan_in(const MlpArchitecture& a, std::size_t l) { return l == 0 ? a.dim : a.width; }
std::size_t fan_out(const MlpArchitecture& a, std::size_t l) {
  return l == a.depth ? 1 : a.width;
}

void check_arch(const MlpArchitecture& a) {
  if (a.dim == 0 || a.width == 0 || a.depth == 0) {
    throw ConfigError("MLP needs dim, width and depth all > 0");
  }
}

}  // namespace

MlpEnergy::MlpEnergy(MlpArchitecture arch, RngStream& init_rng) : arch_(arch) {
  check_arch(arch_);
  for (std::size_t l = 0; l <= arch_.depth; ++l) {
    const std::size_t in = fan_in(arch_, l), out = fan_out(arch_, l);
    const double bound = 1.0 / std::sqrt(double(in));
    Tensor w({out, in});
    for (double& v : w.data()) v = bound * (2.0 * init_rng.uniform() - 1.0);
    Tensor b({out});
    for (double& v : b.data()) v = bound * (2.0 * init_rng.uniform() - 1.0);
    params_.add(weight_name(l), std::move(w));
    params_.add(bias_name(l), std::move(b));
  }
}

MlpEnergy::MlpEnergy(MlpArchitecture arch, ParamSet params)
    : arch_(arch), params_(std::move(params)) {
  check_arch(arch_);
  validate();
}

void MlpEnergy::validate() const {
  if (params_.size() != 2 * (arch_.depth + 1)) {
    throw FormatError("MLP parameter count does not match depth " + std::to_string(arch_.depth));
  }
  for (std::size_t l = 0; l <= arch_.depth; ++l) {
    const Tensor& w = params_[2 * l].value;
    const Tensor& b = params_[2 * l + 1].value;
    if (params_[2 * l].name != weight_name(l) || params_[2 * l + 1].name != bias_name(l) ||
        w.shape() != std::vector<std::size_t>{fan_out(arch_, l), fan_in(arch_, l)} ||
        b.shape() != std::vector<std::size_t>{fan_out(arch_, l)}) {
      throw FormatError("MLP parameters for layer " + std::to_string(l) +
                        " have unexpected names or shapes");
    }
  }
}

Var MlpEnergy::energy_graph(Tape& tape, Var inputs, std::span<const Var> bound) const {
  (void)tape;
  require_dim(inputs.value().cols(), "energy");
  if (bound.size() != params_.size()) throw ShapeError("MLP energy: wrong parameter binding");
  Var h = inputs;
  for (std::size_t l = 0; l < arch_.depth; ++l) {
    h = ad::swish(ad::affine(h, bound[2 * l], bound[2 * l + 1]));
  }
  Var out = ad::affine(h, bound[2 * arch_.depth], bound[2 * arch_.depth + 1]);
  return ad::reshape(out, {inputs.value().rows()});
}

std::vector<double> MlpEnergy::energy(const BitBatch& batch) const {
  require_dim(batch.dim(), "energy");
  constexpr std::size_t kChunk = 4096;
  std::vector<double> out(batch.rows());
  AlignedDoubles a, z;
  for (std::size_t begin = 0; begin < batch.rows(); begin += kChunk) {
    const std::size_t n = std::min(kChunk, batch.rows() - begin);
    a.assign(n * arch_.dim, 0.0);
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t i = 0; i < arch_.dim; ++i)
        a[r * arch_.dim + i] = batch.get(begin + r, i) ? 1.0 : 0.0;
    std::size_t width_in = arch_.dim;
    for (std::size_t l = 0; l <= arch_.depth; ++l) {
      const Tensor& w = params_[2 * l].value;
      const Tensor& b = params_[2 * l + 1].value;
      const std::size_t width_out = w.rows();
      z.resize(n * width_out);
      for (std::size_t r = 0; r < n; ++r)
        std::copy(b.raw(), b.raw() + width_out, z.data() + r * width_out);
      detail::gemm(false, true, n, width_out, width_in,
                  1.0, a.data(), width_in, w.raw(), width_in, 1.0, z.data(),
                  width_out);
      if (l < arch_.depth) {
        detail::swish(z.data(), z.data(), z.size());
      }
      std::swap(a, z);
      width_in = width_out;
    }
    for (std::size_t r = 0; r < n; ++r) {
      require_finite(a[r], "energy");
      out[begin + r] = a[r];
    }
  }
  return out;
}

std::unique_ptr<EnergyModel> MlpEnergy::clone() const {
  return std::make_unique<MlpEnergy>(*this);
}

std::map<std::string, std::string> MlpEnergy::describe() const {
  return {{"model", "mlp"},
          {"d", std::to_string(arch_.dim)},
          {"width", std::to_string(arch_.width)},
          {"depth", std::to_string(arch_.depth)}};
}

}  // namespace rmis
