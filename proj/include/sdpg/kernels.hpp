#pragma once

// Data-parallel inner loops used by the dense network and the optimizer.
// Every kernel has a scalar reference implementation; SIMD variants are
// chosen once at runtime and must agree with the reference up to
// floating-point reassociation (see tests/test_kernels.cpp).
//
// All matrices are row-major and densely packed.

#include <cstddef>
#include <string_view>
#include <vector>

namespace sdpg::kernels {

struct KernelTable {
  const char* name;

  double (*dot)(const double* a, const double* b, std::size_t n);

  // y += alpha * x
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);

  // C[m x n] = A[m x k] * B[n x k]^T + bias[n]   (bias may be null)
  void (*gemm_abt_bias)(const double* a, const double* b, const double* bias, double* c,
                        std::size_t m, std::size_t n, std::size_t k);

  // C[m x k] += A[m x n] * B[n x k]
  void (*gemm_ab_acc)(const double* a, const double* b, double* c, std::size_t m,
                      std::size_t n, std::size_t k);

  // C[n x k] += A[m x n]^T * B[m x k]
  void (*gemm_atb_acc)(const double* a, const double* b, double* c, std::size_t m,
                       std::size_t n, std::size_t k);

  // dst = (1 - tau) * dst + tau * src
  void (*lerp)(double tau, const double* src, double* dst, std::size_t n);

  // One bias-corrected Adam step. bc1 = 1 - beta1^t, bc2 = 1 - beta2^t.
  void (*adam)(double* p, const double* g, double* m, double* v, std::size_t n, double lr,
               double beta1, double beta2, double eps, double bc1, double bc2);
};

const KernelTable& scalar_table();

/// Null when the build has no AVX2 translation unit or the CPU lacks AVX2+FMA.
const KernelTable* avx2_table();

/// Tables usable on this machine, scalar first.
std::vector<const KernelTable*> available_tables();

/// The table every caller uses. Picked on first call: SDPG_KERNELS=scalar|avx2
/// if set, otherwise the widest supported variant.
const KernelTable& active();

/// Force a variant by name; throws UsageError for unknown/unsupported names.
void select(std::string_view name);

}  // namespace sdpg::kernels
