#include "kernels.hpp"

#include <Eigen/Core>

#include "rmis/tensor.hpp"

namespace rmis::detail {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstView = Eigen::Map<const RowMat, 0, Eigen::OuterStride<>>;
using View = Eigen::Map<RowMat, 0, Eigen::OuterStride<>>;

template <typename A, typename B>
void accumulate(View& c, double alpha, double beta, const A& a, const B& b) {
  if (beta == 0.0) {
    c.noalias() = alpha * (a * b);
  } else {
    if (beta != 1.0) c *= beta;
    c.noalias() += alpha * (a * b);
  }
}

}  // namespace

void gemm(bool trans_a, bool trans_b, std::size_t m, std::size_t n, std::size_t k, double alpha,
          const double* a, std::size_t lda, const double* b, std::size_t ldb, double beta,
          double* c, std::size_t ldc) {
  if (m == 0 || n == 0) return;
  using Index = Eigen::Index;
  View C(c, Index(m), Index(n), Eigen::OuterStride<>(Index(ldc)));
  const ConstView A(a, trans_a ? Index(k) : Index(m), trans_a ? Index(m) : Index(k),
                    Eigen::OuterStride<>(Index(lda)));
  const ConstView B(b, trans_b ? Index(n) : Index(k), trans_b ? Index(k) : Index(n),
                    Eigen::OuterStride<>(Index(ldb)));
  if (trans_a && trans_b) {
    accumulate(C, alpha, beta, A.transpose(), B.transpose());
  } else if (trans_a) {
    accumulate(C, alpha, beta, A.transpose(), B);
  } else if (trans_b) {
    accumulate(C, alpha, beta, A, B.transpose());
  } else {
    accumulate(C, alpha, beta, A, B);
  }
}

namespace {

using Vec = Eigen::Map<const Eigen::ArrayXd>;
using MutVec = Eigen::Map<Eigen::ArrayXd>;

}  // namespace

// 1 / (1 + exp(-z)) saturates cleanly to 0 or 1 in IEEE arithmetic, so the
// vectorised form needs no branch on the sign of z.
void swish(const double* z, double* out, std::size_t n) {
  const Vec x(z, Eigen::Index(n));
  MutVec y(out, Eigen::Index(n));
  y = x * ((-x).exp() + 1.0).inverse();
}

void swish_backward(const double* z, const double* g, double* gz, std::size_t n) {
  const Vec x(z, Eigen::Index(n));
  const Vec gv(g, Eigen::Index(n));
  MutVec out(gz, Eigen::Index(n));
  const Eigen::ArrayXd s = ((-x).exp() + 1.0).inverse();
  out += gv * (s * (1.0 + x * (1.0 - s)));
}

}  // namespace rmis::detail
