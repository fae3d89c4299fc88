#pragma once

#include <cstddef>

namespace rmis::detail {

// Row-major C (m x n) = alpha * op(A) * op(B) + beta * C.
void gemm(bool trans_a, bool trans_b, std::size_t m, std::size_t n, std::size_t k, double alpha,
          const double* a, std::size_t lda, const double* b, std::size_t ldb, double beta,
          double* c, std::size_t ldc);

// out[i] = z[i] * sigmoid(z[i]); out may alias z.
void swish(const double* z, double* out, std::size_t n);
// gz[i] += g[i] * swish'(z[i]).
void swish_backward(const double* z, const double* g, double* gz, std::size_t n);

}  // namespace rmis::detail
