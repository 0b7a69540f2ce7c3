#include "nutri/vector_index.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <thread>

#include "nutri/errors.hpp"

namespace nutri {

bool hit_before(const NeighborHit& a, const NeighborHit& b) {
    if (a.similarity != b.similarity) return a.similarity > b.similarity;
    return a.food_id < b.food_id;
}

Index Index::build(const EmbeddingStore& store, const FoodDb& db, simd::KernelKind kernel) {
    for (const auto& rec : store.records()) {
        if (!db.find(rec.id)) {
            throw ConsistencyError("embedding id '" + rec.id + "' not found in food database");
        }
    }
    return from_store(store, kernel);
}

Index Index::from_store(const EmbeddingStore& store, simd::KernelKind kernel) {
    simd::kernel_for(kernel);  // availability check

    std::vector<const EmbeddingRecord*> order;
    order.reserve(store.size());
    for (const auto& rec : store.records()) order.push_back(&rec);
    std::sort(order.begin(), order.end(),
              [](const EmbeddingRecord* a, const EmbeddingRecord* b) { return a->id < b->id; });

    Index index;
    index.dimension_ = store.dimension();
    index.kernel_ = kernel;
    index.rows_.reserve(order.size() * index.dimension_);
    index.ids_.reserve(order.size());
    for (const EmbeddingRecord* rec : order) {
        std::vector<double> unit;
        try {
            unit = unit_normalize(std::span<const float>(rec->vector));
        } catch (const DegenerateVectorError&) {
            throw DegenerateVectorError("embedding for '" + rec->id + "' is a zero vector");
        }
        index.rows_.insert(index.rows_.end(), unit.begin(), unit.end());
        index.ids_.push_back(rec->id);
    }
    return index;
}

std::span<const double> Index::row(std::size_t i) const {
    return std::span<const double>(rows_).subspan(i * dimension_, dimension_);
}

Index Index::with_kernel(simd::KernelKind kernel) const {
    simd::kernel_for(kernel);
    Index copy = *this;
    copy.kernel_ = kernel;
    return copy;
}

std::vector<double> Index::score_all(std::span<const double> query) const {
    if (query.size() != dimension_) {
        throw DimensionError("query has dimension " + std::to_string(query.size()) +
                             ", index dimension is " + std::to_string(dimension_));
    }
    const std::vector<double> unit = unit_normalize(query);
    std::vector<double> scores(ids_.size());
    simd::batch_dot(kernel_, rows_, dimension_, unit, scores);
    for (double& s : scores) s = std::clamp(s, -1.0, 1.0);
    return scores;
}

std::vector<NeighborHit> Index::query_top_n(std::span<const double> query, std::size_t n,
                                            double t) const {
    if (n == 0) throw ParameterError("neighbor count n must be at least 1");
    if (std::isnan(t)) throw ParameterError("similarity threshold is NaN");

    const std::vector<double> scores = score_all(query);

    std::vector<std::size_t> kept;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (scores[i] >= t) kept.push_back(i);
    }
    auto before = [&](std::size_t a, std::size_t b) {
        if (scores[a] != scores[b]) return scores[a] > scores[b];
        return ids_[a] < ids_[b];
    };
    const std::size_t take = std::min(n, kept.size());
    std::partial_sort(kept.begin(), kept.begin() + static_cast<std::ptrdiff_t>(take), kept.end(),
                      before);

    std::vector<NeighborHit> hits;
    hits.reserve(take);
    for (std::size_t k = 0; k < take; ++k) hits.push_back({ids_[kept[k]], scores[kept[k]]});
    return hits;
}

std::vector<NeighborHit> Index::query_top_n(std::span<const float> query, std::size_t n,
                                            double t) const {
    const std::vector<double> widened(query.begin(), query.end());
    return query_top_n(std::span<const double>(widened), n, t);
}

std::vector<std::vector<NeighborHit>> Index::query_batch(
    const std::vector<std::vector<double>>& queries, std::size_t n, double t,
    std::size_t workers) const {
    std::vector<std::vector<NeighborHit>> results(queries.size());
    workers = std::clamp<std::size_t>(workers, 1, std::max<std::size_t>(queries.size(), 1));

    auto run_shard = [&](std::size_t shard) {
        for (std::size_t i = shard; i < queries.size(); i += workers) {
            results[i] = query_top_n(std::span<const double>(queries[i]), n, t);
        }
    };
    if (workers == 1) {
        run_shard(0);
        return results;
    }

    std::vector<std::exception_ptr> errors(workers);
    {
        std::vector<std::jthread> threads;
        for (std::size_t w = 0; w < workers; ++w) {
            threads.emplace_back([&, w] {
                try {
                    run_shard(w);
                } catch (...) {
                    errors[w] = std::current_exception();
                }
            });
        }
    }
    for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
    return results;
}

EmbeddingStore Index::to_store(const std::string& model_tag) const {
    EmbeddingStore store(static_cast<std::uint32_t>(dimension_), model_tag);
    for (std::size_t i = 0; i < ids_.size(); ++i) {
        const auto r = row(i);
        store.add(ids_[i], std::vector<float>(r.begin(), r.end()));
    }
    return store;
}

}  // namespace nutri
