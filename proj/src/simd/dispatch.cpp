#include <cstdlib>
#include <string>

#include "nutri/errors.hpp"
#include "nutri/simd/dot_kernels.hpp"

namespace nutri::simd {

std::string_view kernel_name(KernelKind kind) {
    switch (kind) {
        case KernelKind::Scalar: return "scalar";
        case KernelKind::Avx2: return "avx2";
        case KernelKind::Neon: return "neon";
    }
    return "unknown";
}

bool kernel_available(KernelKind kind) {
    switch (kind) {
        case KernelKind::Scalar: return true;
        case KernelKind::Avx2:
#if defined(NUTRI_HAVE_AVX2_KERNEL)
            return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
            return false;
#endif
        case KernelKind::Neon:
#if defined(NUTRI_HAVE_NEON_KERNEL)
            return true;  // baseline on aarch64
#else
            return false;
#endif
    }
    return false;
}

KernelKind best_kernel() {
    if (const char* forced = std::getenv("NUTRI_KERNEL")) {
        for (KernelKind k : {KernelKind::Scalar, KernelKind::Avx2, KernelKind::Neon}) {
            if (kernel_name(k) == forced && kernel_available(k)) return k;
        }
    }
    if (kernel_available(KernelKind::Avx2)) return KernelKind::Avx2;
    if (kernel_available(KernelKind::Neon)) return KernelKind::Neon;
    return KernelKind::Scalar;
}

BatchDotFn kernel_for(KernelKind kind) {
    if (!kernel_available(kind)) {
        throw ParameterError("dot kernel '" + std::string(kernel_name(kind)) +
                             "' is not available on this machine");
    }
    switch (kind) {
#if defined(NUTRI_HAVE_AVX2_KERNEL)
        case KernelKind::Avx2: return &batch_dot_avx2;
#endif
#if defined(NUTRI_HAVE_NEON_KERNEL)
        case KernelKind::Neon: return &batch_dot_neon;
#endif
        default: return &batch_dot_scalar;
    }
}

void batch_dot(KernelKind kind, std::span<const double> rows, std::size_t dim,
               std::span<const double> query, std::span<double> scores) {
    if (query.size() != dim) throw DimensionError("query dimension does not match kernel dimension");
    if (dim == 0 ? !rows.empty() : rows.size() != scores.size() * dim) {
        throw DimensionError("row matrix size does not match score count");
    }
    kernel_for(kind)(rows.data(), scores.size(), dim, query.data(), scores.data());
}

}  // namespace nutri::simd
