#include "rmis/autodiff.hpp"

#include <algorithm>
#include <cmath>

#include "rmis/error.hpp"
#include "kernels.hpp"

namespace rmis {

Var Tape::leaf(Tensor value, bool requires_grad) {
  require_finite(value, "leaf");
  Node n;
  n.value = std::move(value);
  n.requires_grad = requires_grad;
  nodes_.push_back(std::move(n));
  return Var(this, nodes_.size() - 1);
}

Var Tape::record(const char* op, Tensor value, std::vector<std::size_t> parents,
                 BackwardFn backward) {
  require_finite(value, op);
  Node n;
  n.value = std::move(value);
  n.requires_grad = std::any_of(parents.begin(), parents.end(),
                                [this](std::size_t p) { return nodes_[p].requires_grad; });
  if (n.requires_grad) {
    n.parents = std::move(parents);
    n.backward = std::move(backward);
  }
  nodes_.push_back(std::move(n));
  return Var(this, nodes_.size() - 1);
}

Tensor Tape::grad(std::size_t id) const {
  const Node& n = nodes_[id];
  if (n.has_grad) return n.grad;
  return Tensor(n.value.shape());
}

Tensor& Tape::grad_buffer(std::size_t id) {
  Node& n = nodes_[id];
  if (!n.has_grad) {
    n.grad = Tensor(n.value.shape());
    n.has_grad = true;
  }
  return n.grad;
}

void Tape::backward(Var loss) {
  if (loss.value().size() != 1) {
    throw ShapeError("backward needs a scalar loss, got " + shape_string(loss.value().shape()));
  }
  for (Node& n : nodes_) {
    n.has_grad = false;
    n.grad = Tensor();
  }
  grad_buffer(loss.id())[0] = 1.0;
  for (std::size_t id = loss.id() + 1; id-- > 0;) {
    Node& n = nodes_[id];
    if (!n.has_grad || !n.backward) continue;
    require_finite(n.grad, "backward");
    n.backward(*this, n.grad);
  }
  for (const Node& n : nodes_) {
    if (n.has_grad) require_finite(n.grad, "backward");
  }
}

std::size_t Tape::bytes() const noexcept {
  std::size_t total = 0;
  for (const Node& n : nodes_) total += (n.value.size() + n.grad.size()) * sizeof(double);
  return total;
}

namespace ad {

namespace {

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (!a.same_shape(b)) {
    throw ShapeError(std::string(op) + ": shape mismatch " + shape_string(a.shape()) + " vs " +
                     shape_string(b.shape()));
  }
}

// Elementwise unary op with derivative computed from (input, output).
template <typename Fwd, typename Deriv>
Var unary(const char* op, Var z, Fwd fwd, Deriv deriv) {
  const Tensor& in = z.value();
  Tensor out(in.shape());
  for (std::size_t i = 0; i < in.size(); ++i) out[i] = fwd(in[i]);
  const std::size_t zid = z.id();
  return z.tape().record(op, std::move(out), {zid},
                         [zid, deriv, op_id = z.tape().size()](Tape& t, const Tensor& g) {
                           const Tensor& x = t.value(zid);
                           const Tensor& y = t.value(op_id);
                           Tensor& gz = t.grad_buffer(zid);
                           for (std::size_t i = 0; i < x.size(); ++i) gz[i] += g[i] * deriv(x[i], y[i]);
                         });
}

}  // namespace

Var affine(Var x, Var weight, Var bias) {
  const Tensor& X = x.value();
  const Tensor& W = weight.value();
  const Tensor& b = bias.value();
  if (X.rank() != 2 || W.rank() != 2 || X.cols() != W.cols() || b.size() != W.rows()) {
    throw ShapeError("affine: x " + shape_string(X.shape()) + ", weight " +
                     shape_string(W.shape()) + ", bias " + shape_string(b.shape()));
  }
  const std::size_t n = X.rows(), in = X.cols(), out = W.rows();
  Tensor Y({n, out});
  for (std::size_t r = 0; r < n; ++r) std::copy(b.raw(), b.raw() + out, Y.raw() + r * out);
  if (n > 0 && in > 0) {
    detail::gemm(false, true, n, out, in, 1.0, X.raw(),
                in, W.raw(), in, 1.0, Y.raw(), out);
  }
  const std::size_t xid = x.id(), wid = weight.id(), bid = bias.id();
  return x.tape().record(
      "affine", std::move(Y), {xid, wid, bid}, [=](Tape& t, const Tensor& g) {
        const Tensor& Xv = t.value(xid);
        const Tensor& Wv = t.value(wid);
        if (t.requires_grad(xid)) {
          Tensor& gx = t.grad_buffer(xid);
          detail::gemm(false, false, n, in, out, 1.0,
                      g.raw(), out, Wv.raw(), in, 1.0, gx.raw(), in);
        }
        if (t.requires_grad(wid)) {
          Tensor& gw = t.grad_buffer(wid);
          detail::gemm(true, false, out, in, n, 1.0,
                      g.raw(), out, Xv.raw(), in, 1.0, gw.raw(), in);
        }
        if (t.requires_grad(bid)) {
          Tensor& gb = t.grad_buffer(bid);
          for (std::size_t r = 0; r < n; ++r)
            for (std::size_t c = 0; c < out; ++c) gb[c] += g[r * out + c];
        }
      });
}

Var matmul(Var a, Var b) {
  const Tensor& A = a.value();
  const Tensor& B = b.value();
  if (A.rank() != 2 || B.rank() != 2 || A.cols() != B.rows()) {
    throw ShapeError("matmul: " + shape_string(A.shape()) + " x " + shape_string(B.shape()));
  }
  const std::size_t n = A.rows(), k = A.cols(), m = B.cols();
  Tensor C({n, m});
  if (n > 0 && k > 0 && m > 0) {
    detail::gemm(false, false, n, m, k, 1.0, A.raw(),
                k, B.raw(), m, 0.0, C.raw(), m);
  }
  const std::size_t aid = a.id(), bid = b.id();
  return a.tape().record("matmul", std::move(C), {aid, bid}, [=](Tape& t, const Tensor& g) {
    if (t.requires_grad(aid)) {
      Tensor& ga = t.grad_buffer(aid);
      detail::gemm(false, true, n, k, m, 1.0, g.raw(),
                  m, t.value(bid).raw(), m, 1.0, ga.raw(), k);
    }
    if (t.requires_grad(bid)) {
      Tensor& gb = t.grad_buffer(bid);
      detail::gemm(true, false, k, m, n, 1.0,
                  t.value(aid).raw(), k, g.raw(), m, 1.0, gb.raw(), m);
    }
  });
}

Var swish(Var z) {
  const Tensor& in = z.value();
  Tensor out(in.shape());
  detail::swish(in.raw(), out.raw(), in.size());
  const std::size_t zid = z.id();
  return z.tape().record("swish", std::move(out), {zid}, [zid](Tape& t, const Tensor& g) {
    const Tensor& x = t.value(zid);
    detail::swish_backward(x.raw(), g.raw(), t.grad_buffer(zid).raw(), x.size());
  });
}

Var sigmoid(Var z) {
  return unary(
      "sigmoid", z, [](double x) { return rmis::sigmoid(x); },
      [](double, double y) { return y * (1.0 - y); });
}

Var exp(Var z) {
  return unary(
      "exp", z, [](double x) { return std::exp(x); }, [](double, double y) { return y; });
}

Var square(Var z) {
  return unary(
      "square", z, [](double x) { return x * x; }, [](double x, double) { return 2.0 * x; });
}

Var abs(Var z) {
  return unary(
      "abs", z, [](double x) { return std::abs(x); },
      [](double x, double) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); });
}

Var neg(Var z) { return scale(z, -1.0); }

Var scale(Var z, double c) {
  return unary(
      "scale", z, [c](double x) { return c * x; }, [c](double, double) { return c; });
}

Var add_scalar(Var z, double c) {
  return unary(
      "add_scalar", z, [c](double x) { return x + c; }, [](double, double) { return 1.0; });
}

namespace {

template <typename Fwd, typename DA, typename DB>
Var binary(const char* op, Var a, Var b, Fwd fwd, DA da, DB db) {
  require_same_shape(a.value(), b.value(), op);
  const Tensor& A = a.value();
  const Tensor& B = b.value();
  Tensor out(A.shape());
  for (std::size_t i = 0; i < A.size(); ++i) out[i] = fwd(A[i], B[i]);
  const std::size_t aid = a.id(), bid = b.id();
  return a.tape().record(op, std::move(out), {aid, bid}, [=](Tape& t, const Tensor& g) {
    const Tensor& Av = t.value(aid);
    const Tensor& Bv = t.value(bid);
    if (t.requires_grad(aid)) {
      Tensor& ga = t.grad_buffer(aid);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * da(Av[i], Bv[i]);
    }
    if (t.requires_grad(bid)) {
      Tensor& gb = t.grad_buffer(bid);
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * db(Av[i], Bv[i]);
    }
  });
}

}  // namespace

Var add(Var a, Var b) {
  return binary(
      "add", a, b, [](double x, double y) { return x + y; }, [](double, double) { return 1.0; },
      [](double, double) { return 1.0; });
}

Var sub(Var a, Var b) {
  return binary(
      "sub", a, b, [](double x, double y) { return x - y; }, [](double, double) { return 1.0; },
      [](double, double) { return -1.0; });
}

Var mul(Var a, Var b) {
  return binary(
      "mul", a, b, [](double x, double y) { return x * y; }, [](double, double y) { return y; },
      [](double x, double) { return x; });
}

Var mul_const(Var z, Tensor weights) {
  require_same_shape(z.value(), weights, "mul_const");
  const Tensor& Z = z.value();
  Tensor out(Z.shape());
  for (std::size_t i = 0; i < Z.size(); ++i) out[i] = Z[i] * weights[i];
  const std::size_t zid = z.id();
  return z.tape().record("mul_const", std::move(out), {zid},
                         [zid, w = std::move(weights)](Tape& t, const Tensor& g) {
                           Tensor& gz = t.grad_buffer(zid);
                           for (std::size_t i = 0; i < g.size(); ++i) gz[i] += g[i] * w[i];
                         });
}

Var clamp(Var z, double lo, double hi) {
  return unary(
      "clamp", z, [lo, hi](double x) { return std::clamp(x, lo, hi); },
      [lo, hi](double x, double) { return (x < lo || x > hi) ? 0.0 : 1.0; });
}

Var sum(Var z) {
  const Tensor& Z = z.value();
  double s = 0.0;
  for (double v : Z.data()) s += v;
  const std::size_t zid = z.id();
  return z.tape().record("sum", Tensor::scalar(s), {zid}, [zid](Tape& t, const Tensor& g) {
    Tensor& gz = t.grad_buffer(zid);
    for (std::size_t i = 0; i < gz.size(); ++i) gz[i] += g[0];
  });
}

Var mean(Var z) {
  const std::size_t n = z.value().size();
  if (n == 0) throw ShapeError("mean of empty tensor");
  return scale(sum(z), 1.0 / double(n));
}

Var gather(Var z, std::vector<std::size_t> index) {
  const Tensor& Z = z.value();
  Tensor out({index.size()});
  for (std::size_t k = 0; k < index.size(); ++k) {
    if (index[k] >= Z.size()) {
      throw ShapeError("gather: index " + std::to_string(index[k]) + " out of range " +
                       std::to_string(Z.size()));
    }
    out[k] = Z[index[k]];
  }
  const std::size_t zid = z.id();
  return z.tape().record("gather", std::move(out), {zid},
                         [zid, idx = std::move(index)](Tape& t, const Tensor& g) {
                           Tensor& gz = t.grad_buffer(zid);
                           for (std::size_t k = 0; k < idx.size(); ++k) gz[idx[k]] += g[k];
                         });
}

Var reshape(Var z, std::vector<std::size_t> shape) {
  Tensor out = z.value().reshaped(std::move(shape));
  const std::size_t zid = z.id();
  return z.tape().record("reshape", std::move(out), {zid}, [zid](Tape& t, const Tensor& g) {
    Tensor& gz = t.grad_buffer(zid);
    for (std::size_t i = 0; i < g.size(); ++i) gz[i] += g[i];
  });
}

Var rowdot(Var a, Var b) {
  require_same_shape(a.value(), b.value(), "rowdot");
  const Tensor& A = a.value();
  const Tensor& B = b.value();
  const std::size_t n = A.rows(), m = A.cols();
  Tensor out({n});
  for (std::size_t r = 0; r < n; ++r) {
    double s = 0.0;
    for (std::size_t c = 0; c < m; ++c) s += A[r * m + c] * B[r * m + c];
    out[r] = s;
  }
  const std::size_t aid = a.id(), bid = b.id();
  return a.tape().record("rowdot", std::move(out), {aid, bid}, [=](Tape& t, const Tensor& g) {
    const Tensor& Av = t.value(aid);
    const Tensor& Bv = t.value(bid);
    if (t.requires_grad(aid)) {
      Tensor& ga = t.grad_buffer(aid);
      for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < m; ++c) ga[r * m + c] += g[r] * Bv[r * m + c];
    }
    if (t.requires_grad(bid)) {
      Tensor& gb = t.grad_buffer(bid);
      for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < m; ++c) gb[r * m + c] += g[r] * Av[r * m + c];
    }
  });
}

Var sym_from_upper(Var upper, std::size_t d) {
  const Tensor& U = upper.value();
  if (U.size() != d * (d - 1) / 2) {
    throw ShapeError("sym_from_upper: " + std::to_string(U.size()) +
                     " entries do not form the strict upper triangle of a " + std::to_string(d) +
                     "x" + std::to_string(d) + " matrix");
  }
  Tensor J({d, d});
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = i + 1; j < d; ++j) {
      const double v = U[upper_index(i, j, d)];
      J[i * d + j] = v;
      J[j * d + i] = v;
    }
  }
  const std::size_t uid = upper.id();
  return upper.tape().record("sym_from_upper", std::move(J), {uid},
                             [uid, d](Tape& t, const Tensor& g) {
                               Tensor& gu = t.grad_buffer(uid);
                               for (std::size_t i = 0; i < d; ++i)
                                 for (std::size_t j = i + 1; j < d; ++j)
                                   gu[upper_index(i, j, d)] += g[i * d + j] + g[j * d + i];
                             });
}

}  // namespace ad

Tensor finite_diff_grad(const std::function<double(const Tensor&)>& f, const Tensor& point,
                        double h) {
  if (!(h > 0.0)) throw ConfigError("finite_diff_grad: step must be positive");
  Tensor grad(point.shape());
  Tensor probe = point;
  for (std::size_t i = 0; i < point.size(); ++i) {
    const double x0 = point[i];
    probe[i] = x0 + h;
    const double fp = f(probe);
    probe[i] = x0 - h;
    const double fm = f(probe);
    probe[i] = x0;
    require_finite(fp, "finite_diff_grad");
    require_finite(fm, "finite_diff_grad");
    grad[i] = (fp - fm) / (2.0 * h);
  }
  return grad;
}

}  // namespace rmis
