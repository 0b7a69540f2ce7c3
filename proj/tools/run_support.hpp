#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "nutri/corpus.hpp"
#include "nutri/estimator.hpp"
#include "nutri/tuning.hpp"

namespace nutri::cli {

inline constexpr const char* kVersion = "0.1.0";

// Everything that determines a run's primary outputs.
struct RunConfig {
    EstimatorConfig estimator;  // n=50, t=0.0, weighted mean
    std::uint64_t seed = kDefaultSplitSeed;
    double train_fraction = 0.8;
    ConfigGrid grid = ConfigGrid::standard();
    std::string date_begin = "2017-01-01";
    std::string date_end = "2021-12-31";
    std::string usda_schema;  // empty: built-in v1 schema
    std::map<std::string, std::string> paths;

    nlohmann::json to_json() const;

    // Overlays keys present in `j` onto this config.
    void apply_json(const nlohmann::json& j);

    CorpusOptions corpus_options() const;
};

// "YYYY-MM-DD" -> UTC seconds at midnight. Throws ParameterError.
std::int64_t parse_date(const std::string& ymd);

// Writes via a temp file in the same directory, then renames.
void write_atomic(const std::filesystem::path& path,
                  const std::function<void(std::ostream&)>& writer);

// Collects inputs and outputs of one subcommand and writes
// <out>/<subcommand>.manifest.json plus <out>/run_config.json.
class Manifest {
public:
    Manifest(std::string subcommand, const RunConfig& config, std::filesystem::path out_dir);

    void add_input(const std::filesystem::path& path);
    void add_output(const std::filesystem::path& path);
    void set(const std::string& key, nlohmann::json value);

    void write() const;

private:
    std::string subcommand_;
    nlohmann::json config_;
    std::filesystem::path out_dir_;
    nlohmann::json inputs_ = nlohmann::json::object();
    nlohmann::json outputs_ = nlohmann::json::array();
    nlohmann::json extra_ = nlohmann::json::object();
};

// Throws IoError naming the first missing path.
void require_files(const std::vector<std::filesystem::path>& paths);

std::vector<std::string> read_lines(const std::filesystem::path& path);

}  // namespace nutri::cli
