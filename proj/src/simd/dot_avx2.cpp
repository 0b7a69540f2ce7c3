// Built with -mavx2 -mfma; only called after a runtime CPU check.
#include "nutri/simd/dot_kernels.hpp"

#include <immintrin.h>

namespace nutri::simd {

namespace {

inline double hsum(__m256d v) {
    const __m128d lo = _mm256_castpd256_pd128(v);
    const __m128d hi = _mm256_extractf128_pd(v, 1);
    const __m128d pair = _mm_add_pd(lo, hi);
    return _mm_cvtsd_f64(_mm_add_sd(pair, _mm_unpackhi_pd(pair, pair)));
}

}  // namespace

void batch_dot_avx2(const double* rows, std::size_t row_count, std::size_t dim,
                    const double* query, double* scores) {
    const std::size_t dim8 = dim & ~std::size_t{7};
    const std::size_t dim4 = dim & ~std::size_t{3};

    for (std::size_t r = 0; r < row_count; ++r) {
        const double* row = rows + r * dim;
        __m256d acc0 = _mm256_setzero_pd();
        __m256d acc1 = _mm256_setzero_pd();
        std::size_t i = 0;
        // 8 doubles per iteration on two independent chains
        for (; i < dim8; i += 8) {
            acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(row + i), _mm256_loadu_pd(query + i), acc0);
            acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(row + i + 4), _mm256_loadu_pd(query + i + 4),
                                   acc1);
        }
        for (; i < dim4; i += 4) {
            acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(row + i), _mm256_loadu_pd(query + i), acc0);
        }
        double sum = hsum(_mm256_add_pd(acc0, acc1));
        for (; i < dim; ++i) sum += row[i] * query[i];
        scores[r] = sum;
    }
}

}  // namespace nutri::simd
