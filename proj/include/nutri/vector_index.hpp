#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "nutri/embedding_store.hpp"
#include "nutri/simd/dot_kernels.hpp"
#include "nutri/usda.hpp"

namespace nutri {

struct NeighborHit {
    std::string food_id;
    double similarity = 0.0;

    bool operator==(const NeighborHit&) const = default;
};

// Ranking order of hits: similarity descending, then food id ascending.
bool hit_before(const NeighborHit& a, const NeighborHit& b);

// Exact flat cosine index. Rows are unit-normalized float64 copies of the
// store vectors, sorted by food id. Immutable once built; queries are safe
// from any number of threads.
class Index {
public:
    // Throws ConsistencyError for store ids missing from `db` and
    // DegenerateVectorError (naming the id) for zero vectors.
    static Index build(const EmbeddingStore& store, const FoodDb& db,
                       simd::KernelKind kernel = simd::best_kernel());

    // Same as build() without the database cross-check.
    static Index from_store(const EmbeddingStore& store,
                            simd::KernelKind kernel = simd::best_kernel());

    std::size_t dimension() const noexcept { return dimension_; }
    std::size_t size() const noexcept { return ids_.size(); }
    const std::vector<std::string>& ids() const noexcept { return ids_; }
    std::span<const double> row(std::size_t i) const;
    simd::KernelKind kernel() const noexcept { return kernel_; }

    // Returns a copy of this index that scans with `kernel`.
    Index with_kernel(simd::KernelKind kernel) const;

    // At most n hits with similarity >= t, in ranking order.
    // Throws ParameterError for n == 0, DimensionError on size mismatch and
    // DegenerateVectorError for a zero query.
    std::vector<NeighborHit> query_top_n(std::span<const double> query, std::size_t n,
                                         double t) const;
    std::vector<NeighborHit> query_top_n(std::span<const float> query, std::size_t n,
                                         double t) const;

    // Cosine similarity against every row, in row order.
    std::vector<double> score_all(std::span<const double> query) const;

    // Runs query_top_n for each query on up to `workers` threads.
    std::vector<std::vector<NeighborHit>> query_batch(
        const std::vector<std::vector<double>>& queries, std::size_t n, double t,
        std::size_t workers = 1) const;

    // Normalized rows as a float32 store (for persisting a built index).
    EmbeddingStore to_store(const std::string& model_tag) const;

private:
    std::size_t dimension_ = 0;
    std::vector<double> rows_;
    std::vector<std::string> ids_;
    simd::KernelKind kernel_ = simd::KernelKind::Scalar;
};

}  // namespace nutri
