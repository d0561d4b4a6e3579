// AVX2 + FMA variants. Compiled with -mavx2 -mfma; only reached after the
// dispatcher has confirmed CPU support.
#include <immintrin.h>

#include <cmath>

#include "sdpg/kernels.hpp"

namespace sdpg::kernels {
namespace {

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  __m128d s = _mm_add_pd(lo, hi);
  s = _mm_add_sd(s, _mm_unpackhi_pd(s, s));
  return _mm_cvtsd_f64(s);
}

double dot(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
  }
  for (; i + 4 <= n; i += 4) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
  }
  double s = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

// Four rows of B per pass so each load of A is reused four times.
void gemm_abt_bias(const double* a, const double* b, const double* bias, double* c,
                   std::size_t m, std::size_t n, std::size_t k) {
  if (k < 4) {
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        double s = bias ? bias[j] : 0.0;
        for (std::size_t p = 0; p < k; ++p) s += a[i * k + p] * b[j * k + p];
        c[i * n + j] = s;
      }
    }
    return;
  }
  for (std::size_t i = 0; i < m; ++i) {
    const double* ai = a + i * k;
    double* ci = c + i * n;
    std::size_t j = 0;
    for (; j + 4 <= n; j += 4) {
      const double* b0 = b + j * k;
      const double* b1 = b0 + k;
      const double* b2 = b1 + k;
      const double* b3 = b2 + k;
      __m256d s0 = _mm256_setzero_pd(), s1 = _mm256_setzero_pd();
      __m256d s2 = _mm256_setzero_pd(), s3 = _mm256_setzero_pd();
      std::size_t p = 0;
      for (; p + 4 <= k; p += 4) {
        const __m256d va = _mm256_loadu_pd(ai + p);
        s0 = _mm256_fmadd_pd(va, _mm256_loadu_pd(b0 + p), s0);
        s1 = _mm256_fmadd_pd(va, _mm256_loadu_pd(b1 + p), s1);
        s2 = _mm256_fmadd_pd(va, _mm256_loadu_pd(b2 + p), s2);
        s3 = _mm256_fmadd_pd(va, _mm256_loadu_pd(b3 + p), s3);
      }
      double r0 = hsum(s0), r1 = hsum(s1), r2 = hsum(s2), r3 = hsum(s3);
      for (; p < k; ++p) {
        r0 += ai[p] * b0[p];
        r1 += ai[p] * b1[p];
        r2 += ai[p] * b2[p];
        r3 += ai[p] * b3[p];
      }
      if (bias) {
        r0 += bias[j];
        r1 += bias[j + 1];
        r2 += bias[j + 2];
        r3 += bias[j + 3];
      }
      ci[j] = r0;
      ci[j + 1] = r1;
      ci[j + 2] = r2;
      ci[j + 3] = r3;
    }
    for (; j < n; ++j) ci[j] = dot(ai, b + j * k, k) + (bias ? bias[j] : 0.0);
  }
}

// Accumulates a 16-wide strip of one output row in registers across the
// whole inner dimension.
template <class RowA, class RowB>
inline void strip_accumulate(double* crow, std::size_t k, std::size_t inner, RowA coef,
                             RowB brow) {
  std::size_t p = 0;
  for (; p + 16 <= k; p += 16) {
    __m256d c0 = _mm256_loadu_pd(crow + p);
    __m256d c1 = _mm256_loadu_pd(crow + p + 4);
    __m256d c2 = _mm256_loadu_pd(crow + p + 8);
    __m256d c3 = _mm256_loadu_pd(crow + p + 12);
    for (std::size_t q = 0; q < inner; ++q) {
      const __m256d va = _mm256_set1_pd(coef(q));
      const double* bq = brow(q) + p;
      c0 = _mm256_fmadd_pd(va, _mm256_loadu_pd(bq), c0);
      c1 = _mm256_fmadd_pd(va, _mm256_loadu_pd(bq + 4), c1);
      c2 = _mm256_fmadd_pd(va, _mm256_loadu_pd(bq + 8), c2);
      c3 = _mm256_fmadd_pd(va, _mm256_loadu_pd(bq + 12), c3);
    }
    _mm256_storeu_pd(crow + p, c0);
    _mm256_storeu_pd(crow + p + 4, c1);
    _mm256_storeu_pd(crow + p + 8, c2);
    _mm256_storeu_pd(crow + p + 12, c3);
  }
  for (; p + 4 <= k; p += 4) {
    __m256d c0 = _mm256_loadu_pd(crow + p);
    for (std::size_t q = 0; q < inner; ++q) {
      c0 = _mm256_fmadd_pd(_mm256_set1_pd(coef(q)), _mm256_loadu_pd(brow(q) + p), c0);
    }
    _mm256_storeu_pd(crow + p, c0);
  }
  for (; p < k; ++p) {
    double s = crow[p];
    for (std::size_t q = 0; q < inner; ++q) s += coef(q) * brow(q)[p];
    crow[p] = s;
  }
}

void gemm_ab_acc(const double* a, const double* b, double* c, std::size_t m, std::size_t n,
                 std::size_t k) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* ai = a + i * n;
    strip_accumulate(
        c + i * k, k, n, [ai](std::size_t q) { return ai[q]; },
        [b, k](std::size_t q) { return b + q * k; });
  }
}

void gemm_atb_acc(const double* a, const double* b, double* c, std::size_t m, std::size_t n,
                  std::size_t k) {
  for (std::size_t j = 0; j < n; ++j) {
    strip_accumulate(
        c + j * k, k, m, [a, n, j](std::size_t q) { return a[q * n + j]; },
        [b, k](std::size_t q) { return b + q * k; });
  }
}

void lerp(double tau, const double* src, double* dst, std::size_t n) {
  const __m256d vt = _mm256_set1_pd(tau);
  const __m256d vk = _mm256_set1_pd(1.0 - tau);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d d = _mm256_mul_pd(vk, _mm256_loadu_pd(dst + i));
    _mm256_storeu_pd(dst + i, _mm256_fmadd_pd(vt, _mm256_loadu_pd(src + i), d));
  }
  for (; i < n; ++i) dst[i] = (1.0 - tau) * dst[i] + tau * src[i];
}

void adam(double* p, const double* g, double* m, double* v, std::size_t n, double lr,
          double beta1, double beta2, double eps, double bc1, double bc2) {
  const __m256d b1 = _mm256_set1_pd(beta1), ob1 = _mm256_set1_pd(1.0 - beta1);
  const __m256d b2 = _mm256_set1_pd(beta2), ob2 = _mm256_set1_pd(1.0 - beta2);
  const __m256d vbc1 = _mm256_set1_pd(bc1), vbc2 = _mm256_set1_pd(bc2);
  const __m256d veps = _mm256_set1_pd(eps), vlr = _mm256_set1_pd(lr);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d gi = _mm256_loadu_pd(g + i);
    const __m256d mi = _mm256_add_pd(_mm256_mul_pd(b1, _mm256_loadu_pd(m + i)), _mm256_mul_pd(ob1, gi));
    const __m256d vi = _mm256_add_pd(_mm256_mul_pd(b2, _mm256_loadu_pd(v + i)),
                                     _mm256_mul_pd(_mm256_mul_pd(ob2, gi), gi));
    _mm256_storeu_pd(m + i, mi);
    _mm256_storeu_pd(v + i, vi);
    const __m256d mhat = _mm256_div_pd(mi, vbc1);
    const __m256d denom = _mm256_add_pd(_mm256_sqrt_pd(_mm256_div_pd(vi, vbc2)), veps);
    const __m256d step = _mm256_div_pd(_mm256_mul_pd(vlr, mhat), denom);
    _mm256_storeu_pd(p + i, _mm256_sub_pd(_mm256_loadu_pd(p + i), step));
  }
  for (; i < n; ++i) {
    m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
    v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
    p[i] -= lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + eps);
  }
}

}  // namespace

const KernelTable& avx2_table_impl() {
  static const KernelTable table{"avx2", dot,  axpy, gemm_abt_bias, gemm_ab_acc,
                                 gemm_atb_acc, lerp, adam};
  return table;
}

}  // namespace sdpg::kernels
