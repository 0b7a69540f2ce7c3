#include "nutri/simd/dot_kernels.hpp"

namespace nutri::simd {

void batch_dot_scalar(const double* rows, std::size_t row_count, std::size_t dim,
                      const double* query, double* scores) {
    for (std::size_t r = 0; r < row_count; ++r) {
        const double* row = rows + r * dim;
        double sum = 0.0;
        for (std::size_t i = 0; i < dim; ++i) sum += row[i] * query[i];
        scores[r] = sum;
    }
}

}  // namespace nutri::simd
