#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "rmis/tensor.hpp"

namespace rmis {

class Tape;

// Handle to a value recorded on a Tape. Cheap to copy; valid while the tape lives.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape& tape() const { return *tape_; }
  std::size_t id() const noexcept { return id_; }
  const Tensor& value() const;
  bool valid() const noexcept { return tape_ != nullptr; }

 private:
  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

// Wengert list for reverse-mode differentiation. Nodes are appended in
// evaluation order, so reverse creation order is a valid topological order.
class Tape {
 public:
  // Called with the gradient flowing into the node's output.
  using BackwardFn = std::function<void(Tape&, const Tensor& out_grad)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var leaf(Tensor value, bool requires_grad);
  // Appends an op result. Throws NumericError naming `op` if the value is not finite.
  Var record(const char* op, Tensor value, std::vector<std::size_t> parents,
             BackwardFn backward);

  const Tensor& value(std::size_t id) const { return nodes_[id].value; }
  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }

  // Gradient accumulated for `id` by the last backward(); zeros if nothing flowed.
  Tensor grad(std::size_t id) const;

  // Accumulation buffer for a parent during backward. Zero-initialised on first use.
  Tensor& grad_buffer(std::size_t id);

  // Seeds d(loss)/d(loss) = 1 and propagates. Throws ShapeError if loss is not a
  // single element, NumericError on non-finite gradients.
  void backward(Var loss);

  std::size_t size() const noexcept { return nodes_.size(); }
  // Bytes held by values and gradients; used as the memory figure in benchmarks.
  std::size_t bytes() const noexcept;

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    bool requires_grad = false;
    bool has_grad = false;
    std::vector<std::size_t> parents;
    BackwardFn backward;
  };
  std::vector<Node> nodes_;
};

inline const Tensor& Var::value() const { return tape_->value(id_); }

namespace ad {

// x: n x in, weight: out x in, bias: out  ->  n x out.
Var affine(Var x, Var weight, Var bias);
// a: n x k, b: k x m.
Var matmul(Var a, Var b);
Var swish(Var z);
Var sigmoid(Var z);
Var exp(Var z);
Var square(Var z);
// Subgradient 0 at 0.
Var abs(Var z);
Var neg(Var z);
Var scale(Var z, double c);
Var add_scalar(Var z, double c);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
// Elementwise product with a constant (no gradient to `weights`).
Var mul_const(Var z, Tensor weights);
// Values outside [lo, hi] are clamped and pass no gradient.
Var clamp(Var z, double lo, double hi);
Var sum(Var z);
Var mean(Var z);
// out[k] = z[index[k]] over the flattened tensor.
Var gather(Var z, std::vector<std::size_t> index);
Var reshape(Var z, std::vector<std::size_t> shape);
// a, b: n x m  ->  n with out[r] = <a[r], b[r]>.
Var rowdot(Var a, Var b);
// upper: d(d-1)/2 strict upper triangle, row-major  ->  symmetric d x d, zero diagonal.
Var sym_from_upper(Var upper, std::size_t d);

}  // namespace ad

// Index of (i, j), i < j, in a row-major strict upper triangle of a d x d matrix.
inline std::size_t upper_index(std::size_t i, std::size_t j, std::size_t d) noexcept {
  return i * d - i * (i + 1) / 2 + (j - i - 1);
}

// Central differences (f(x + h e_i) - f(x - h e_i)) / 2h for every coordinate.
Tensor finite_diff_grad(const std::function<double(const Tensor&)>& f, const Tensor& point,
                        double h = 1e-5);

}  // namespace rmis
