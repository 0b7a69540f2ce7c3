#pragma once

#include <array>
#include <cstddef>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "nutri/nutrients.hpp"

namespace nutri {

// Listed in dedup priority order: Foundation wins over Survey wins over SR Legacy.
enum class Source { Foundation, Survey, SRLegacy };

inline constexpr std::array<Source, 3> kAllSources = {Source::Foundation, Source::Survey,
                                                       Source::SRLegacy};

std::string_view source_name(Source s);
std::optional<Source> parse_source(std::string_view s);

struct RawFoodEntry {
    std::string source_id;
    std::string description;
    Source source = Source::Foundation;
    NutrientVector nutrients;
};

struct FoodRecord {
    std::string id;
    std::string name;
    NutrientVector nutrients;
    Source source = Source::Foundation;

    bool operator==(const FoodRecord&) const = default;
};

// Column names and nutrient identifiers of a FoodData Central CSV export.
// Versioned on disk (config/usda_schema_v<N>.json) so schema drift is a
// config change.
struct UsdaSchema {
    int version = 1;

    std::string food_id_column = "fdc_id";
    std::string description_column = "description";
    std::string data_type_column = "data_type";  // optional in the file

    std::string nutrient_food_id_column = "fdc_id";
    std::string nutrient_id_column = "nutrient_id";
    std::string amount_column = "amount";

    // Per nutrient, identifiers in priority order (first present wins).
    std::map<Nutrient, std::vector<std::string>> nutrient_ids = {
        {Nutrient::Calories, {"1008", "2047", "2048"}},
        {Nutrient::Protein, {"1003"}},
        {Nutrient::Fat, {"1004"}},
        {Nutrient::Carbohydrates, {"1005"}},
    };

    std::map<Source, std::vector<std::string>> data_types = {
        {Source::Foundation, {"foundation_food"}},
        {Source::Survey, {"survey_fndds_food"}},
        {Source::SRLegacy, {"sr_legacy_food"}},
    };

    // Amounts in the export are per this many grams.
    double amount_basis_grams = 100.0;

    static UsdaSchema from_json_text(std::string_view json);
    static UsdaSchema load(const std::string& path);
};

struct ParseResult {
    std::vector<RawFoodEntry> entries;
    std::vector<std::string> warnings;
};

// Reads a food file (id, description[, data_type]) and its food_nutrient file.
// Rows whose data_type does not belong to `source` are skipped.
ParseResult parse_usda_export(std::istream& foods, std::istream& food_nutrients, Source source,
                              const UsdaSchema& schema = {});

std::string normalize_usda_name(std::string_view description);

// Throws QueryError when nothing remains after normalization.
std::string normalize_query_title(std::string_view title);

bool is_raw_or_uncooked(std::string_view normalized_name);

struct BuildStats {
    std::size_t input = 0;
    std::size_t dropped_empty_name = 0;
    std::size_t dropped_raw = 0;
    std::size_t dropped_no_calories = 0;
    std::size_t duplicates_collapsed = 0;
};

class FoodDb {
public:
    FoodDb() = default;

    // Validates uniqueness, ordering and nutrient invariants.
    explicit FoodDb(std::vector<FoodRecord> records);

    const std::vector<FoodRecord>& records() const noexcept { return records_; }
    std::size_t size() const noexcept { return records_.size(); }
    bool empty() const noexcept { return records_.empty(); }

    const FoodRecord* find(std::string_view id) const;
    std::size_t count(Source s) const;

private:
    std::vector<FoodRecord> records_;
    std::unordered_map<std::string, std::size_t> by_id_;
};

FoodDb build_food_db(const std::vector<RawFoodEntry>& entries, BuildStats* stats = nullptr);

// Tab-separated: id, name, source, calories, protein, fat, carbohydrates.
void write_food_db(const FoodDb& db, std::ostream& out);
FoodDb read_food_db(std::istream& in);

}  // namespace nutri
