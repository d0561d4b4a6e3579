#include <cmath>

#include "sdpg/kernels.hpp"

namespace sdpg::kernels {
namespace {

double dot(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void gemm_abt_bias(const double* a, const double* b, const double* bias, double* c,
                   std::size_t m, std::size_t n, std::size_t k) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* ai = a + i * k;
    for (std::size_t j = 0; j < n; ++j) {
      c[i * n + j] = dot(ai, b + j * k, k) + (bias ? bias[j] : 0.0);
    }
  }
}

void gemm_ab_acc(const double* a, const double* b, double* c, std::size_t m, std::size_t n,
                 std::size_t k) {
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) axpy(a[i * n + j], b + j * k, c + i * k, k);
  }
}

void gemm_atb_acc(const double* a, const double* b, double* c, std::size_t m, std::size_t n,
                  std::size_t k) {
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) axpy(a[i * n + j], b + i * k, c + j * k, k);
  }
}

void lerp(double tau, const double* src, double* dst, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) dst[i] = (1.0 - tau) * dst[i] + tau * src[i];
}

void adam(double* p, const double* g, double* m, double* v, std::size_t n, double lr,
          double beta1, double beta2, double eps, double bc1, double bc2) {
  for (std::size_t i = 0; i < n; ++i) {
    m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
    v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
    const double mhat = m[i] / bc1;
    const double vhat = v[i] / bc2;
    p[i] -= lr * mhat / (std::sqrt(vhat) + eps);
  }
}

}  // namespace

const KernelTable& scalar_table() {
  static const KernelTable table{"scalar", dot,  axpy, gemm_abt_bias, gemm_ab_acc,
                                 gemm_atb_acc, lerp, adam};
  return table;
}

}  // namespace sdpg::kernels
