#pragma once

#include <cstddef>
#include <span>
#include <string_view>

// Batched dot products over a row-major float64 matrix. The scalar kernel is
// the reference; vector kernels must agree with it to rounding.

namespace nutri::simd {

enum class KernelKind { Scalar, Avx2, Neon };

// scores[r] = <rows[r*dim .. r*dim+dim), query> for r < row_count
using BatchDotFn = void (*)(const double* rows, std::size_t row_count, std::size_t dim,
                            const double* query, double* scores);

void batch_dot_scalar(const double* rows, std::size_t row_count, std::size_t dim,
                      const double* query, double* scores);

#if defined(NUTRI_HAVE_AVX2_KERNEL)
void batch_dot_avx2(const double* rows, std::size_t row_count, std::size_t dim,
                    const double* query, double* scores);
#endif

#if defined(NUTRI_HAVE_NEON_KERNEL)
void batch_dot_neon(const double* rows, std::size_t row_count, std::size_t dim,
                    const double* query, double* scores);
#endif

std::string_view kernel_name(KernelKind kind);

// Compiled in and supported by the running CPU.
bool kernel_available(KernelKind kind);

// Widest available kernel, unless NUTRI_KERNEL=scalar|avx2|neon overrides it.
KernelKind best_kernel();

// Throws ParameterError when `kind` is unavailable.
BatchDotFn kernel_for(KernelKind kind);

void batch_dot(KernelKind kind, std::span<const double> rows, std::size_t dim,
               std::span<const double> query, std::span<double> scores);

}  // namespace nutri::simd
