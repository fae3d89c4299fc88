#include "rmis/ising_energy.hpp"

#include <sstream>

#include "rmis/error.hpp"

namespace rmis {

std::string to_string(SpinEncoding e) {
  return e == SpinEncoding::PlusMinusOne ? "pm1" : "01";
}

SpinEncoding spin_encoding_from_string(const std::string& s) {
  if (s == "pm1") return SpinEncoding::PlusMinusOne;
  if (s == "01") return SpinEncoding::ZeroOne;
  throw ConfigError("unknown spin encoding '" + s + "' (expected pm1 or 01)");
}

namespace {

std::vector<std::vector<std::size_t>> lattice_adjacency(std::size_t side) {
  const std::size_t d = side * side;
  std::vector<std::vector<std::size_t>> adj(d);
  for (std::size_t r = 0; r < side; ++r) {
    for (std::size_t c = 0; c < side; ++c) {
      auto& nb = adj[r * side + c];
      nb.push_back(((r + side - 1) % side) * side + c);
      nb.push_back(((r + 1) % side) * side + c);
      nb.push_back(r * side + (c + side - 1) % side);
      nb.push_back(r * side + (c + 1) % side);
    }
  }
  return adj;
}

std::vector<std::vector<std::size_t>> ring_adjacency(std::size_t n) {
  std::vector<std::vector<std::size_t>> adj(n);
  for (std::size_t i = 0; i < n; ++i) {
    adj[i] = {(i + n - 1) % n, (i + 1) % n};
  }
  return adj;
}

}  // namespace

IsingEnergy::IsingEnergy(std::size_t d, SpinEncoding encoding) : d_(d), encoding_(encoding) {
  if (d < 2) throw ConfigError("Ising model needs d >= 2");
  params_.add("J_upper", Tensor({d * (d - 1) / 2}));
  params_.add("b", Tensor({d}));
}

void IsingEnergy::set_graph(std::vector<std::vector<std::size_t>> adjacency, double sigma) {
  learnable_ = false;
  sigma_ = sigma;
  adjacency_ = std::move(adjacency);
  Tensor& upper = params_.get("J_upper");
  for (std::size_t i = 0; i < d_; ++i) {
    for (std::size_t j : adjacency_[i]) {
      if (i < j) upper[upper_index(i, j, d_)] = sigma;
    }
  }
}

IsingEnergy IsingEnergy::lattice(std::size_t side, double sigma, SpinEncoding encoding) {
  if (side < 3) throw ConfigError("cyclic lattice needs side >= 3 for 4 distinct neighbours");
  IsingEnergy m(side * side, encoding);
  m.side_ = side;
  m.set_graph(lattice_adjacency(side), sigma);
  return m;
}

IsingEnergy IsingEnergy::ring(std::size_t n, double sigma, SpinEncoding encoding) {
  if (n < 3) throw ConfigError("cyclic ring needs n >= 3");
  IsingEnergy m(n, encoding);
  m.set_graph(ring_adjacency(n), sigma);
  return m;
}

IsingEnergy IsingEnergy::learnable(std::size_t d, SpinEncoding encoding) {
  IsingEnergy m(d, encoding);
  m.learnable_ = true;
  return m;
}

IsingEnergy::IsingEnergy(std::size_t d, SpinEncoding encoding, bool learnable, double sigma,
                         std::size_t side, ParamSet params)
    : IsingEnergy(d, encoding) {
  if (learnable) {
    learnable_ = true;
  } else if (side > 0) {
    if (side * side != d) throw FormatError("Ising lattice side does not match d");
    side_ = side;
    set_graph(lattice_adjacency(side), sigma);
  } else {
    set_graph(ring_adjacency(d), sigma);
  }
  sigma_ = sigma;
  if (params.size() != 2 || params[0].name != "J_upper" || params[1].name != "b" ||
      !params[0].value.same_shape(params_[0].value) ||
      !params[1].value.same_shape(params_[1].value)) {
    throw FormatError("Ising parameters must be J_upper[d(d-1)/2] and b[d]");
  }
  params_ = std::move(params);
}

double IsingEnergy::coupling_at(std::size_t i, std::size_t j) const {
  if (i == j) return 0.0;
  if (i > j) std::swap(i, j);
  return params_[0].value[upper_index(i, j, d_)];
}

Tensor IsingEnergy::coupling() const {
  Tensor J({d_, d_});
  for (std::size_t i = 0; i < d_; ++i)
    for (std::size_t j = 0; j < d_; ++j) J[i * d_ + j] = coupling_at(i, j);
  return J;
}

template <typename GetBit>
double IsingEnergy::local_field(std::size_t i, GetBit&& bit) const {
  const Tensor& upper = params_[0].value;
  double h = 0.0;
  if (!learnable_) {
    for (std::size_t j : adjacency_[i]) {
      h += upper[i < j ? upper_index(i, j, d_) : upper_index(j, i, d_)] * spin(bit(j));
    }
    return h;
  }
  for (std::size_t j = 0; j < i; ++j) h += upper[upper_index(j, i, d_)] * spin(bit(j));
  for (std::size_t j = i + 1; j < d_; ++j) h += upper[upper_index(i, j, d_)] * spin(bit(j));
  return h;
}

template <typename GetBit>
double IsingEnergy::delta_from_field(std::size_t i, GetBit&& bit) const {
  const double h = local_field(i, bit);
  const double b = params_[1].value[i];
  if (encoding_ == SpinEncoding::PlusMinusOne) {
    const double s = spin(bit(i));
    // s_i -> -s_i changes s^T J s by -4 s_i h_i and b^T s by -2 b_i s_i.
    return 4.0 * s * h + 2.0 * b * s;
  }
  const double delta = bit(i) ? -1.0 : 1.0;
  return -2.0 * delta * h - b * delta;
}

double IsingEnergy::flip_delta(const BitVector& x, std::size_t i) const {
  require_dim(x.dim(), "flip_delta");
  return delta_from_field(i, [&](std::size_t j) { return x.get(j); });
}

Var IsingEnergy::energy_graph(Tape& tape, Var inputs, std::span<const Var> bound) const {
  (void)tape;
  require_dim(inputs.value().cols(), "energy");
  if (bound.size() != 2) throw ShapeError("Ising energy: wrong parameter binding");
  const std::size_t n = inputs.value().rows();
  Var s = inputs;
  if (encoding_ == SpinEncoding::PlusMinusOne) s = ad::add_scalar(ad::scale(inputs, 2.0), -1.0);
  Var J = ad::sym_from_upper(bound[0], d_);
  Var quad = ad::rowdot(ad::matmul(s, J), s);
  Var lin = ad::reshape(ad::matmul(s, ad::reshape(bound[1], {d_, 1})), {n});
  return ad::neg(ad::add(quad, lin));
}

std::vector<double> IsingEnergy::energy(const BitBatch& batch) const {
  require_dim(batch.dim(), "energy");
  const Tensor& b = params_[1].value;
  std::vector<double> out(batch.rows());
  for (std::size_t r = 0; r < batch.rows(); ++r) {
    auto bit = [&](std::size_t j) { return batch.get(r, j); };
    double quad = 0.0, lin = 0.0;
    for (std::size_t i = 0; i < d_; ++i) {
      const double s = spin(bit(i));
      if (s == 0.0) continue;
      quad += s * local_field(i, bit);
      lin += b[i] * s;
    }
    out[r] = -quad - lin;
    require_finite(out[r], "energy");
  }
  return out;
}

Tensor IsingEnergy::grad_input(const BitBatch& batch) const {
  require_dim(batch.dim(), "grad_input");
  const Tensor& b = params_[1].value;
  const double chain = encoding_ == SpinEncoding::PlusMinusOne ? 2.0 : 1.0;
  Tensor g({batch.rows(), d_});
  for (std::size_t r = 0; r < batch.rows(); ++r) {
    auto bit = [&](std::size_t j) { return batch.get(r, j); };
    for (std::size_t i = 0; i < d_; ++i) {
      g[r * d_ + i] = chain * (-2.0 * local_field(i, bit) - b[i]);
    }
  }
  return g;
}

std::vector<double> IsingEnergy::neighbor_energies(const BitVector& x) const {
  require_dim(x.dim(), "neighbor_energies");
  const double e0 = EnergyModel::energy(x);
  std::vector<double> out(d_);
  for (std::size_t i = 0; i < d_; ++i) out[i] = e0 + flip_delta(x, i);
  return out;
}

std::vector<double> IsingEnergy::flip_deltas(const BitBatch& states, std::span<const double>,
                                             std::size_t site) const {
  require_dim(states.dim(), "flip_deltas");
  std::vector<double> out(states.rows());
  for (std::size_t r = 0; r < states.rows(); ++r) {
    out[r] = delta_from_field(site, [&](std::size_t j) { return states.get(r, j); });
  }
  return out;
}

std::unique_ptr<EnergyModel> IsingEnergy::clone() const {
  return std::make_unique<IsingEnergy>(*this);
}

std::map<std::string, std::string> IsingEnergy::describe() const {
  std::ostringstream sigma;
  sigma.precision(17);
  sigma << sigma_;
  return {{"model", "ising"},
          {"d", std::to_string(d_)},
          {"encoding", to_string(encoding_)},
          {"learnable", learnable_ ? "1" : "0"},
          {"sigma", sigma.str()},
          {"side", std::to_string(side_)}};
}

}  // namespace rmis
