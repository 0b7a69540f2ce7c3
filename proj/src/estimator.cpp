#include "nutri/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include "nutri/csv.hpp"
#include "nutri/errors.hpp"
#include "nutri/stats.hpp"

namespace nutri {

std::string_view aggregation_name(Aggregation m) {
    switch (m) {
        case Aggregation::Mean: return "mean";
        case Aggregation::Median: return "median";
        case Aggregation::WeightedMean: return "weighted_mean";
    }
    return "unknown";
}

std::optional<Aggregation> parse_aggregation(std::string_view s) {
    for (Aggregation m : kAllAggregations) {
        if (aggregation_name(m) == s) return m;
    }
    return std::nullopt;
}

void EstimatorConfig::validate() const {
    if (n < 1) throw ParameterError("neighbor count n must be at least 1");
    if (!(t >= -1.0 && t <= 1.0)) {
        throw ParameterError("similarity threshold t must lie in [-1, 1]");
    }
}

namespace {

struct Sample {
    double value;
    double weight;

    auto operator<=>(const Sample&) const = default;
};

double aggregate_samples(std::vector<Sample> samples, Aggregation m) {
    // canonical order makes floating-point sums independent of hit order
    std::sort(samples.begin(), samples.end());
    const double lo = samples.front().value;
    const double hi = samples.back().value;

    auto plain_mean = [&] {
        double sum = 0.0;
        for (const auto& s : samples) sum += s.value;
        return sum / static_cast<double>(samples.size());
    };

    double result = 0.0;
    switch (m) {
        case Aggregation::Mean:
            result = plain_mean();
            break;
        case Aggregation::Median: {
            std::vector<double> values;
            values.reserve(samples.size());
            for (const auto& s : samples) values.push_back(s.value);
            result = stats::median(std::move(values));
            break;
        }
        case Aggregation::WeightedMean: {
            double weighted = 0.0;
            double total = 0.0;
            for (const auto& s : samples) {
                weighted += s.weight * s.value;
                total += s.weight;
            }
            result = total > 0.0 ? weighted / total : plain_mean();
            break;
        }
    }
    return std::clamp(result, lo, hi);
}

}  // namespace

NutrientVector aggregate(std::span<const NeighborHit> hits, const FoodDb& db, Aggregation m) {
    if (hits.empty()) throw AggregationError("cannot aggregate an empty hit list");

    std::vector<const FoodRecord*> records;
    records.reserve(hits.size());
    for (const auto& hit : hits) {
        const FoodRecord* rec = db.find(hit.food_id);
        if (!rec) throw ConsistencyError("hit '" + hit.food_id + "' not found in food database");
        records.push_back(rec);
    }

    NutrientVector out;
    for (Nutrient n : kAllNutrients) {
        std::vector<Sample> samples;
        for (std::size_t i = 0; i < hits.size(); ++i) {
            if (const auto& v = records[i]->nutrients[n]) {
                samples.push_back({*v, std::max(hits[i].similarity, 0.0)});
            }
        }
        if (!samples.empty()) out[n] = aggregate_samples(std::move(samples), m);
    }
    return out;
}

EstimateOutcome estimate_from_hits(std::span<const NeighborHit> hits, const FoodDb& db,
                                   Aggregation m) {
    if (hits.empty()) return NoMatch{};
    NutrientEstimate est;
    est.nutrients = aggregate(hits, db, m);
    est.support = hits.size();
    est.max_similarity = hits.front().similarity;
    est.min_similarity = hits.front().similarity;
    for (const auto& h : hits) {
        est.max_similarity = std::max(est.max_similarity, h.similarity);
        est.min_similarity = std::min(est.min_similarity, h.similarity);
        est.neighbor_ids.push_back(h.food_id);
    }
    return est;
}

EstimateOutcome estimate_title(std::string_view title, const Index& index, const FoodDb& db,
                               EmbeddingProvider& provider, const EstimatorConfig& cfg) {
    cfg.validate();
    const std::string normalized = normalize_query_title(title);
    const std::vector<double> query = provider.embed(normalized);
    const auto hits = index.query_top_n(std::span<const double>(query), cfg.n, cfg.t);
    return estimate_from_hits(hits, db, cfg.m);
}

std::vector<BatchItem> estimate_batch(const std::vector<std::string>& titles, const Index& index,
                                      const FoodDb& db, EmbeddingProvider& provider,
                                      const EstimatorConfig& cfg, std::size_t workers) {
    cfg.validate();
    provider.check_available();

    std::vector<BatchItem> items(titles.size());
    std::vector<std::string> to_embed;
    std::vector<std::size_t> embed_slot;
    for (std::size_t i = 0; i < titles.size(); ++i) {
        items[i].title = titles[i];
        try {
            to_embed.push_back(normalize_query_title(titles[i]));
            embed_slot.push_back(i);
        } catch (const QueryError& e) {
            items[i].outcome = ItemError{e.what()};
        }
    }

    // single flight: the provider sees one batch call
    const std::vector<EmbedResult> embedded = provider.embed_batch(to_embed);
    if (embedded.size() != to_embed.size()) {
        throw ProviderError("provider returned " + std::to_string(embedded.size()) +
                            " results for " + std::to_string(to_embed.size()) + " titles");
    }

    auto run = [&](std::size_t k) {
        BatchItem& item = items[embed_slot[k]];
        if (!embedded[k].ok()) {
            item.outcome = ItemError{embedded[k].error};
            return;
        }
        try {
            const auto hits =
                index.query_top_n(std::span<const double>(embedded[k].vector), cfg.n, cfg.t);
            std::visit([&](auto&& v) { item.outcome = std::move(v); },
                       estimate_from_hits(hits, db, cfg.m));
        } catch (const Error& e) {
            item.outcome = ItemError{e.what()};
        }
    };

    workers = std::clamp<std::size_t>(workers, 1, std::max<std::size_t>(embed_slot.size(), 1));
    if (workers == 1) {
        for (std::size_t k = 0; k < embed_slot.size(); ++k) run(k);
    } else {
        std::vector<std::jthread> threads;
        for (std::size_t w = 0; w < workers; ++w) {
            threads.emplace_back([&, w] {
                for (std::size_t k = w; k < embed_slot.size(); k += workers) run(k);
            });
        }
    }
    return items;
}

void write_batch_csv(const std::vector<BatchItem>& items, std::ostream& out) {
    out << "title,calories,protein,fat,carbohydrates,support,max_similarity,status\n";
    for (const auto& item : items) {
        std::vector<std::string> row{item.title};
        if (const auto* est = std::get_if<NutrientEstimate>(&item.outcome)) {
            for (Nutrient n : kAllNutrients) row.push_back(csv::format_optional(est->nutrients[n]));
            row.push_back(std::to_string(est->support));
            row.push_back(csv::format_number(est->max_similarity));
            row.push_back("ok");
        } else {
            row.insert(row.end(), 6, std::string{});
            row.push_back(std::holds_alternative<NoMatch>(item.outcome) ? "no_match" : "error");
        }
        out << csv::join_row(row) << '\n';
    }
}

}  // namespace nutri
