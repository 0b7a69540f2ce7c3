#include "nutri/usda.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "nutri/csv.hpp"
#include "nutri/errors.hpp"
#include "nutri/text.hpp"

namespace nutri {

std::string_view source_name(Source s) {
    switch (s) {
        case Source::Foundation: return "Foundation";
        case Source::Survey: return "Survey";
        case Source::SRLegacy: return "SRLegacy";
    }
    return "unknown";
}

std::optional<Source> parse_source(std::string_view s) {
    for (Source src : kAllSources) {
        if (source_name(src) == s) return src;
    }
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// Schema
// ---------------------------------------------------------------------------

UsdaSchema UsdaSchema::from_json_text(std::string_view json_text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::exception& e) {
        throw IngestError(std::string("invalid ingest schema: ") + e.what());
    }

    UsdaSchema schema;
    try {
        schema.version = j.at("schema_version").get<int>();
        if (schema.version != 1) {
            throw IngestError("unsupported ingest schema version " + std::to_string(schema.version));
        }
        const auto& food = j.at("food_file");
        schema.food_id_column = food.at("id_column").get<std::string>();
        schema.description_column = food.at("description_column").get<std::string>();
        schema.data_type_column = food.value("data_type_column", std::string{});

        const auto& nut = j.at("nutrient_file");
        schema.nutrient_food_id_column = nut.at("food_id_column").get<std::string>();
        schema.nutrient_id_column = nut.at("nutrient_id_column").get<std::string>();
        schema.amount_column = nut.at("amount_column").get<std::string>();

        schema.nutrient_ids.clear();
        for (Nutrient n : kAllNutrients) {
            schema.nutrient_ids[n] =
                j.at("nutrient_ids").at(std::string(nutrient_name(n))).get<std::vector<std::string>>();
        }
        schema.data_types.clear();
        for (Source s : kAllSources) {
            schema.data_types[s] =
                j.at("data_types").at(std::string(source_name(s))).get<std::vector<std::string>>();
        }
        schema.amount_basis_grams = j.value("amount_basis_grams", 100.0);
    } catch (const nlohmann::json::exception& e) {
        throw IngestError(std::string("invalid ingest schema: ") + e.what());
    }
    if (!(schema.amount_basis_grams > 0.0)) {
        throw IngestError("invalid ingest schema: amount_basis_grams must be positive");
    }
    return schema;
}

UsdaSchema UsdaSchema::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open ingest schema " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return from_json_text(ss.str());
}

// ---------------------------------------------------------------------------
// Parsing
// ---------------------------------------------------------------------------

namespace {

using ColumnMap = std::unordered_map<std::string, std::size_t>;

ColumnMap read_header(csv::Reader& reader, const char* file_label) {
    std::vector<std::string> header;
    if (!reader.next(header)) {
        throw IngestError(std::string("missing header in ") + file_label + " file");
    }
    ColumnMap columns;
    for (std::size_t i = 0; i < header.size(); ++i) {
        columns.emplace(std::string(text::trim(header[i])), i);
    }
    return columns;
}

std::size_t require_column(const ColumnMap& columns, const std::string& name,
                           const char* file_label) {
    const auto it = columns.find(name);
    if (it == columns.end()) {
        throw IngestError(std::string("missing column '") + name + "' in " + file_label + " file");
    }
    return it->second;
}

const std::string& field_at(const std::vector<std::string>& row, std::size_t i) {
    static const std::string empty;
    return i < row.size() ? row[i] : empty;
}

struct PendingNutrient {
    double value = 0.0;
    std::size_t priority = 0;
};

}  // namespace

ParseResult parse_usda_export(std::istream& foods, std::istream& food_nutrients, Source source,
                              const UsdaSchema& schema) {
    ParseResult result;

    csv::Reader food_reader(foods);
    const ColumnMap food_cols = read_header(food_reader, "food");
    const std::size_t id_col = require_column(food_cols, schema.food_id_column, "food");
    const std::size_t desc_col = require_column(food_cols, schema.description_column, "food");
    std::optional<std::size_t> type_col;
    if (!schema.data_type_column.empty()) {
        if (auto it = food_cols.find(schema.data_type_column); it != food_cols.end()) {
            type_col = it->second;
        }
    }
    const auto& accepted_types = schema.data_types.at(source);

    std::unordered_map<std::string, std::size_t> index_of;
    std::vector<std::string> row;
    while (food_reader.next(row)) {
        if (type_col) {
            const std::string type(text::trim(field_at(row, *type_col)));
            if (std::find(accepted_types.begin(), accepted_types.end(), type) ==
                accepted_types.end()) {
                continue;
            }
        }
        RawFoodEntry entry;
        entry.source_id = std::string(text::trim(field_at(row, id_col)));
        entry.description = std::string(text::trim(field_at(row, desc_col)));
        entry.source = source;
        if (entry.source_id.empty() || entry.description.empty()) {
            result.warnings.push_back("food file line " + std::to_string(food_reader.line()) +
                                      ": empty id or description, skipped");
            continue;
        }
        if (index_of.contains(entry.source_id)) {
            result.warnings.push_back("food file line " + std::to_string(food_reader.line()) +
                                      ": duplicate id " + entry.source_id + ", skipped");
            continue;
        }
        index_of.emplace(entry.source_id, result.entries.size());
        result.entries.push_back(std::move(entry));
    }

    // nutrient identifier -> (nutrient, priority rank)
    std::unordered_map<std::string, std::pair<Nutrient, std::size_t>> wanted;
    for (const auto& [nutrient, ids] : schema.nutrient_ids) {
        for (std::size_t rank = 0; rank < ids.size(); ++rank) {
            wanted.emplace(ids[rank], std::make_pair(nutrient, rank));
        }
    }

    csv::Reader nut_reader(food_nutrients);
    const ColumnMap nut_cols = read_header(nut_reader, "food_nutrient");
    const std::size_t fid_col =
        require_column(nut_cols, schema.nutrient_food_id_column, "food_nutrient");
    const std::size_t nid_col = require_column(nut_cols, schema.nutrient_id_column, "food_nutrient");
    const std::size_t amount_col = require_column(nut_cols, schema.amount_column, "food_nutrient");

    std::vector<std::map<Nutrient, PendingNutrient>> pending(result.entries.size());
    const double scale = 100.0 / schema.amount_basis_grams;

    while (nut_reader.next(row)) {
        const auto food_it = index_of.find(std::string(text::trim(field_at(row, fid_col))));
        if (food_it == index_of.end()) continue;
        const auto want_it = wanted.find(std::string(text::trim(field_at(row, nid_col))));
        if (want_it == wanted.end()) continue;

        const auto [nutrient, rank] = want_it->second;
        const std::string& raw_amount = field_at(row, amount_col);
        const auto amount = csv::parse_number(raw_amount);
        if (!amount || *amount < 0.0) {
            result.warnings.push_back("food_nutrient line " + std::to_string(nut_reader.line()) +
                                      ": unusable amount '" + raw_amount + "' for food " +
                                      food_it->first + ", field left absent");
            continue;
        }
        auto& slot = pending[food_it->second];
        auto existing = slot.find(nutrient);
        if (existing == slot.end() || rank < existing->second.priority) {
            slot[nutrient] = PendingNutrient{*amount * scale, rank};
        }
    }

    for (std::size_t i = 0; i < result.entries.size(); ++i) {
        for (const auto& [nutrient, value] : pending[i]) {
            result.entries[i].nutrients[nutrient] = value.value;
        }
    }
    return result;
}

// ---------------------------------------------------------------------------
// Normalization
// ---------------------------------------------------------------------------

std::string normalize_usda_name(std::string_view description) {
    const std::string lowered = text::to_lower(description);
    std::vector<std::string> phrases;
    for (std::string_view phrase : text::split(lowered, ',')) {
        std::string collapsed = text::collapse_whitespace(phrase);
        if (!collapsed.empty()) phrases.push_back(std::move(collapsed));
    }
    std::string out;
    for (auto it = phrases.rbegin(); it != phrases.rend(); ++it) {
        if (!out.empty()) out.push_back(' ');
        out += *it;
    }
    return out;
}

std::string normalize_query_title(std::string_view title) {
    std::string lowered = text::to_lower(title);
    lowered.erase(std::remove(lowered.begin(), lowered.end(), ','), lowered.end());
    std::string out = text::collapse_whitespace(lowered);
    if (out.empty()) {
        throw QueryError("query title is empty after normalization: '" + std::string(title) + "'");
    }
    return out;
}

bool is_raw_or_uncooked(std::string_view normalized_name) {
    return text::contains_word(normalized_name, "raw") ||
           text::contains_word(normalized_name, "uncooked");
}

// ---------------------------------------------------------------------------
// FoodDb
// ---------------------------------------------------------------------------

FoodDb::FoodDb(std::vector<FoodRecord> records) : records_(std::move(records)) {
    by_id_.reserve(records_.size());
    for (std::size_t i = 0; i < records_.size(); ++i) {
        const FoodRecord& r = records_[i];
        if (r.id.empty()) throw BuildError("food record with empty id");
        if (i > 0 && !(records_[i - 1].id < r.id)) {
            throw BuildError("food records not strictly sorted by id at '" + r.id + "'");
        }
        if (!r.nutrients.calories) throw BuildError("food '" + r.id + "' has no calories");
        for (Nutrient n : kAllNutrients) {
            const auto& v = r.nutrients[n];
            if (v && !(*v >= 0.0)) {
                throw BuildError("food '" + r.id + "' has negative " +
                                 std::string(nutrient_name(n)));
            }
        }
        by_id_.emplace(r.id, i);
    }
}

const FoodRecord* FoodDb::find(std::string_view id) const {
    const auto it = by_id_.find(std::string(id));
    return it == by_id_.end() ? nullptr : &records_[it->second];
}

std::size_t FoodDb::count(Source s) const {
    return static_cast<std::size_t>(std::count_if(
        records_.begin(), records_.end(), [s](const FoodRecord& r) { return r.source == s; }));
}

FoodDb build_food_db(const std::vector<RawFoodEntry>& entries, BuildStats* stats) {
    BuildStats local;
    local.input = entries.size();

    struct Candidate {
        const RawFoodEntry* entry;
        std::string name;
    };
    std::map<std::string, Candidate> best;

    auto better = [](const RawFoodEntry& a, const RawFoodEntry& b) {
        if (a.source != b.source) return a.source < b.source;
        return a.source_id < b.source_id;
    };

    for (const RawFoodEntry& e : entries) {
        std::string name = normalize_usda_name(e.description);
        if (name.empty()) {
            ++local.dropped_empty_name;
            continue;
        }
        if (is_raw_or_uncooked(name)) {
            ++local.dropped_raw;
            continue;
        }
        if (!e.nutrients.calories) {
            ++local.dropped_no_calories;
            continue;
        }
        auto it = best.find(name);
        if (it == best.end()) {
            best.emplace(name, Candidate{&e, name});
            continue;
        }
        ++local.duplicates_collapsed;
        if (better(e, *it->second.entry)) it->second.entry = &e;
    }

    if (best.empty()) throw BuildError("food database is empty after filtering");

    std::vector<FoodRecord> records;
    records.reserve(best.size());
    for (auto& [name, cand] : best) {
        records.push_back(FoodRecord{name, name, cand.entry->nutrients, cand.entry->source});
    }
    if (stats) *stats = local;
    return FoodDb(std::move(records));
}

void write_food_db(const FoodDb& db, std::ostream& out) {
    for (const FoodRecord& r : db.records()) {
        out << r.id << '\t' << r.name << '\t' << source_name(r.source);
        for (Nutrient n : kAllNutrients) out << '\t' << csv::format_optional(r.nutrients[n]);
        out << '\n';
    }
    if (!out) throw IoError("failed writing food database");
}

FoodDb read_food_db(std::istream& in) {
    std::vector<FoodRecord> records;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto fields = text::split(line, '\t');
        if (fields.size() != 7) {
            throw FormatError("food database line " + std::to_string(line_no) + ": expected 7 fields, got " +
                              std::to_string(fields.size()));
        }
        FoodRecord r;
        r.id = std::string(fields[0]);
        r.name = std::string(fields[1]);
        const auto src = parse_source(fields[2]);
        if (!src) {
            throw FormatError("food database line " + std::to_string(line_no) + ": unknown source '" +
                              std::string(fields[2]) + "'");
        }
        r.source = *src;
        for (std::size_t k = 0; k < kAllNutrients.size(); ++k) {
            const std::string_view f = fields[3 + k];
            if (f.empty()) continue;
            const auto v = csv::parse_number(f);
            if (!v) {
                throw FormatError("food database line " + std::to_string(line_no) +
                                  ": bad number '" + std::string(f) + "'");
            }
            r.nutrients[kAllNutrients[k]] = *v;
        }
        records.push_back(std::move(r));
    }
    try {
        return FoodDb(std::move(records));
    } catch (const BuildError& e) {
        throw FormatError(std::string("invalid food database: ") + e.what());
    }
}

}  // namespace nutri
