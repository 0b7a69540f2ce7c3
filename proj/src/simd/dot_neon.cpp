#include "nutri/simd/dot_kernels.hpp"

#include <arm_neon.h>

namespace nutri::simd {

void batch_dot_neon(const double* rows, std::size_t row_count, std::size_t dim,
                    const double* query, double* scores) {
    const std::size_t dim4 = dim & ~std::size_t{3};

    for (std::size_t r = 0; r < row_count; ++r) {
        const double* row = rows + r * dim;
        float64x2_t acc0 = vdupq_n_f64(0.0);
        float64x2_t acc1 = vdupq_n_f64(0.0);
        std::size_t i = 0;
        for (; i < dim4; i += 4) {
            acc0 = vfmaq_f64(acc0, vld1q_f64(row + i), vld1q_f64(query + i));
            acc1 = vfmaq_f64(acc1, vld1q_f64(row + i + 2), vld1q_f64(query + i + 2));
        }
        double sum = vaddvq_f64(vaddq_f64(acc0, acc1));
        for (; i < dim; ++i) sum += row[i] * query[i];
        scores[r] = sum;
    }
}

}  // namespace nutri::simd
