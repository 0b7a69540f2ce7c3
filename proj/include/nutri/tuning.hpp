#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <istream>
#include <memory>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "nutri/estimator.hpp"

namespace nutri {

struct LabeledRecipe {
    std::string title;
    double true_calories = 0.0;  // kcal per 100 g

    bool operator==(const LabeledRecipe&) const = default;
};

// CSV with header `title,calories_per_100g`.
std::vector<LabeledRecipe> read_labeled_csv(std::istream& in);

struct DatasetSplit {
    std::vector<LabeledRecipe> train;
    std::vector<LabeledRecipe> test;
};

inline constexpr std::uint64_t kDefaultSplitSeed = 42;

// Seeded Fisher-Yates shuffle, then the first floor(fraction * N) records
// become the training set. Portable: identical on every platform.
DatasetSplit split_dataset(const std::vector<LabeledRecipe>& recipes, double train_fraction,
                           std::uint64_t seed = kDefaultSplitSeed);

double rmse(std::span<const double> predicted, std::span<const double> actual);

struct DatasetStats {
    double mean = 0.0;
    double stddev = 0.0;  // population
};

DatasetStats dataset_stats(const std::vector<LabeledRecipe>& recipes);

struct ConfigGrid {
    std::vector<std::size_t> n;
    std::vector<double> t;
    std::vector<Aggregation> m;

    // n in {1,5,10,20,25,50,75,100}, t in {0,0.5,0.75,0.9}, all three m.
    static ConfigGrid standard();

    std::vector<EstimatorConfig> configs() const;
};

struct TuningResult {
    EstimatorConfig config;
    double train_rmse = 0.0;
    double coverage = 0.0;
};

struct GridReport {
    std::vector<TuningResult> ranked;    // ascending train_rmse, then tie-break
    std::vector<TuningResult> excluded;  // zero coverage
};

// Ranking order: rmse ascending, then smaller n, larger t, Mean < Median < WeightedMean.
bool ranks_before(const TuningResult& a, const TuningResult& b);

struct EvalContext {
    const Index& index;
    const FoodDb& db;
    EmbeddingProvider& provider;
    std::size_t workers = 1;
};

// Query embeddings computed once and reused across every config.
class PreparedQueries {
public:
    // Throws DataError/ProviderError when a title cannot be normalized or embedded.
    PreparedQueries(const std::vector<LabeledRecipe>& recipes, EvalContext ctx);

    // Ranked hits for (max_n, min_t); any (n <= max_n, t >= min_t) is a
    // prefix-and-filter of these.
    void retrieve(std::size_t max_n, double min_t);

    // Calorie predictions under cfg; nullopt where the title has no match.
    std::vector<std::optional<double>> predict(const EstimatorConfig& cfg) const;

    std::span<const double> actual() const noexcept { return actual_; }
    std::size_t size() const noexcept { return actual_.size(); }

private:
    EvalContext ctx_;
    std::vector<std::vector<double>> embeddings_;
    std::vector<double> actual_;
    std::vector<std::vector<NeighborHit>> hits_;
    std::size_t max_n_ = 0;
    double min_t_ = 1.0;
};

GridReport grid_search(const std::vector<LabeledRecipe>& train, const ConfigGrid& grid,
                       EvalContext ctx);

struct EvalResult {
    double rmse = 0.0;
    double coverage = 0.0;
};

// Throws DataError when no test title is covered.
EvalResult evaluate(const EstimatorConfig& config, const std::vector<LabeledRecipe>& test,
                    EvalContext ctx);

// n,t,m,train_rmse,coverage for every config (excluded ones with an empty
// rmse), optionally followed by a `# test ...` summary line.
void write_tuning_report(const GridReport& report, std::ostream& out,
                         const std::optional<std::pair<EstimatorConfig, EvalResult>>& test = {});

// ---------------------------------------------------------------------------
// Baseline estimators
// ---------------------------------------------------------------------------

// External calorie estimator (kcal per 100 g). Throws ProviderError on failure.
class CalorieClient {
public:
    virtual ~CalorieClient() = default;
    virtual double calories_per_100g(const std::string& title) = 0;
};

// Wraps a client with an on-disk cache keyed by SHA-256 of the title.
class CachingCalorieClient final : public CalorieClient {
public:
    CachingCalorieClient(CalorieClient& inner, std::filesystem::path cache_dir);

    double calories_per_100g(const std::string& title) override;

    std::size_t hits() const noexcept { return hits_; }
    std::size_t misses() const noexcept { return misses_; }

private:
    CalorieClient& inner_;
    std::filesystem::path cache_dir_;
    std::size_t hits_ = 0;
    std::size_t misses_ = 0;
};

// HTTPS GET {base_url}/v1/nutrition?query=<title> with an X-Api-Key header.
// Per-100 g calories are derived from the summed item calories and serving sizes.
class CalorieNinjasClient final : public CalorieClient {
public:
    static constexpr const char* kApiKeyEnv = "CALORIENINJAS_API_KEY";
    static constexpr const char* kDefaultBaseUrl = "https://api.calorieninjas.com";

    CalorieNinjasClient(std::string base_url, std::string api_key);

    // Reads the key from kApiKeyEnv; throws ProviderError when unset.
    static CalorieNinjasClient from_environment(std::string base_url = kDefaultBaseUrl);

    double calories_per_100g(const std::string& title) override;

    // Parses a response body; exposed for tests.
    static double parse_response(const std::string& body);

private:
    std::string base_url_;
    std::string api_key_;
};

struct BaselineResult {
    double rmse = 0.0;
    std::size_t successes = 0;
    std::size_t failures = 0;
};

// Throws DataError when every title fails.
BaselineResult baseline_eval(CalorieClient& client, const std::vector<LabeledRecipe>& test);

}  // namespace nutri
