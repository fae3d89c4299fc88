#include "rmis/energy.hpp"

#include <algorithm>

#include "rmis/error.hpp"
#include "rmis/ising_energy.hpp"
#include "rmis/mlp_energy.hpp"

namespace rmis {

namespace {

// Rows per tape when evaluating large batches; bounds intermediate memory.
constexpr std::size_t kEvalChunkRows = 4096;

BitBatch slice_rows(const BitBatch& batch, std::size_t begin, std::size_t end) {
  BitBatch out(batch.dim());
  for (std::size_t r = begin; r < end; ++r) out.push_back(batch.row(r));
  return out;
}

}  // namespace

void EnergyModel::require_dim(std::size_t d, const char* op) const {
  if (d != dim()) {
    throw ShapeError(std::string(op) + ": input dimension " + std::to_string(d) +
                     " does not match model dimension " + std::to_string(dim()));
  }
}

std::vector<double> EnergyModel::energy(const BitBatch& batch) const {
  require_dim(batch.dim(), "energy");
  std::vector<double> out;
  out.reserve(batch.rows());
  for (std::size_t begin = 0; begin < batch.rows(); begin += kEvalChunkRows) {
    const std::size_t end = std::min(batch.rows(), begin + kEvalChunkRows);
    const BitBatch part = (begin == 0 && end == batch.rows()) ? batch : slice_rows(batch, begin, end);
    Tape tape;
    const ParamBinding bound = bind_params(tape, params(), false);
    Var x = tape.leaf(part.to_tensor(), false);
    Var e = energy_graph(tape, x, bound);
    auto vals = e.value().data();
    out.insert(out.end(), vals.begin(), vals.end());
  }
  return out;
}

double EnergyModel::energy(const BitVector& x) const {
  BitBatch b(x.dim());
  b.push_back(x);
  return energy(b)[0];
}

Tensor EnergyModel::grad_input(const BitBatch& batch) const { return grad_input_autodiff(batch); }

Tensor EnergyModel::grad_input_autodiff(const BitBatch& batch) const {
  require_dim(batch.dim(), "grad_input");
  const std::size_t d = dim();
  Tensor out({batch.rows(), d});
  for (std::size_t begin = 0; begin < batch.rows(); begin += kEvalChunkRows) {
    const std::size_t end = std::min(batch.rows(), begin + kEvalChunkRows);
    const BitBatch part = (begin == 0 && end == batch.rows()) ? batch : slice_rows(batch, begin, end);
    Tape tape;
    const ParamBinding bound = bind_params(tape, params(), false);
    Var x = tape.leaf(part.to_tensor(), true);
    // Rows are independent, so d(sum E)/dx holds every row's input gradient.
    Var total = ad::sum(energy_graph(tape, x, bound));
    tape.backward(total);
    const Tensor g = tape.grad(x.id());
    std::copy(g.raw(), g.raw() + g.size(), out.raw() + begin * d);
  }
  return out;
}

std::vector<double> EnergyModel::neighbor_energies(const BitVector& x) const {
  require_dim(x.dim(), "neighbor_energies");
  BitBatch nb(x.dim());
  for (std::size_t i = 0; i < x.dim(); ++i) nb.push_back(x.flipped(i));
  return energy(nb);
}

std::vector<double> EnergyModel::flip_deltas(const BitBatch& states,
                                             std::span<const double> current,
                                             std::size_t site) const {
  require_dim(states.dim(), "flip_deltas");
  if (current.size() != states.rows()) {
    throw ShapeError("flip_deltas: one current energy per row required");
  }
  BitBatch flipped = states;
  for (std::size_t r = 0; r < flipped.rows(); ++r) flipped.flip(r, site);
  std::vector<double> e = energy(flipped);
  for (std::size_t r = 0; r < e.size(); ++r) e[r] -= current[r];
  return e;
}

namespace {

const std::string& require_key(const std::map<std::string, std::string>& m,
                               const std::string& key) {
  auto it = m.find(key);
  if (it == m.end()) throw FormatError("model description lacks '" + key + "'");
  return it->second;
}

}  // namespace

std::unique_ptr<EnergyModel> make_model(const std::map<std::string, std::string>& description,
                                        ParamSet params) {
  const std::string& kind = require_key(description, "model");
  if (kind == "mlp") {
    MlpArchitecture arch;
    arch.dim = std::stoul(require_key(description, "d"));
    arch.width = std::stoul(require_key(description, "width"));
    arch.depth = std::stoul(require_key(description, "depth"));
    return std::make_unique<MlpEnergy>(arch, std::move(params));
  }
  if (kind == "ising") {
    return std::make_unique<IsingEnergy>(
        std::stoul(require_key(description, "d")),
        spin_encoding_from_string(require_key(description, "encoding")),
        require_key(description, "learnable") == "1", std::stod(require_key(description, "sigma")),
        std::stoul(require_key(description, "side")), std::move(params));
  }
  throw FormatError("unknown model kind '" + kind + "'");
}

}  // namespace rmis
