#pragma once

#include <cstddef>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "nutri/nutrients.hpp"
#include "nutri/provider.hpp"
#include "nutri/usda.hpp"
#include "nutri/vector_index.hpp"

namespace nutri {

// Declaration order is also the tie-break order used when ranking configs.
enum class Aggregation { Mean, Median, WeightedMean };

inline constexpr Aggregation kAllAggregations[] = {Aggregation::Mean, Aggregation::Median,
                                                   Aggregation::WeightedMean};

std::string_view aggregation_name(Aggregation m);
std::optional<Aggregation> parse_aggregation(std::string_view s);

struct EstimatorConfig {
    std::size_t n = 50;
    double t = 0.0;
    Aggregation m = Aggregation::WeightedMean;

    // Throws ParameterError unless n >= 1 and t in [-1, 1].
    void validate() const;

    bool operator==(const EstimatorConfig&) const = default;
};

struct NutrientEstimate {
    NutrientVector nutrients;
    std::size_t support = 0;
    double min_similarity = 0.0;
    double max_similarity = 0.0;
    std::vector<std::string> neighbor_ids;  // ranked

    bool operator==(const NutrientEstimate&) const = default;
};

struct NoMatch {
    bool operator==(const NoMatch&) const = default;
};

using EstimateOutcome = std::variant<NutrientEstimate, NoMatch>;

// Per-nutrient aggregation over the hits whose food carries that nutrient.
// WeightedMean weights are similarities clamped at zero; when every weight
// is zero it falls back to Mean. Result is independent of hit order.
// Throws AggregationError on empty hits, ConsistencyError on unknown ids.
NutrientVector aggregate(std::span<const NeighborHit> hits, const FoodDb& db, Aggregation m);

// NoMatch for empty hits, otherwise the aggregated estimate.
EstimateOutcome estimate_from_hits(std::span<const NeighborHit> hits, const FoodDb& db,
                                   Aggregation m);

EstimateOutcome estimate_title(std::string_view title, const Index& index, const FoodDb& db,
                               EmbeddingProvider& provider, const EstimatorConfig& cfg);

struct ItemError {
    std::string message;
    bool operator==(const ItemError&) const = default;
};

struct BatchItem {
    std::string title;
    std::variant<NutrientEstimate, NoMatch, ItemError> outcome;
};

// Never aborts on a bad title; per-title failures become ItemError.
// Throws ProviderError up front when the provider is unavailable.
std::vector<BatchItem> estimate_batch(const std::vector<std::string>& titles, const Index& index,
                                      const FoodDb& db, EmbeddingProvider& provider,
                                      const EstimatorConfig& cfg, std::size_t workers = 1);

// title,calories,protein,fat,carbohydrates,support,max_similarity,status
void write_batch_csv(const std::vector<BatchItem>& items, std::ostream& out);

}  // namespace nutri
