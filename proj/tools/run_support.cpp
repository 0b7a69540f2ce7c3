#include "run_support.hpp"

#include <unistd.h>

#include <chrono>
#include <fstream>
#include <sstream>

#include "nutri/digest.hpp"
#include "nutri/errors.hpp"

namespace nutri::cli {

namespace fs = std::filesystem;
using json = nlohmann::json;

json RunConfig::to_json() const {
    json grid_json;
    grid_json["n"] = grid.n;
    grid_json["t"] = grid.t;
    std::vector<std::string> ms;
    for (Aggregation m : grid.m) ms.emplace_back(aggregation_name(m));
    grid_json["m"] = ms;

    json j;
    j["estimator"] = {{"n", estimator.n},
                      {"t", estimator.t},
                      {"m", std::string(aggregation_name(estimator.m))}};
    j["seed"] = seed;
    j["train_fraction"] = train_fraction;
    j["grid"] = grid_json;
    j["date_range"] = {{"begin", date_begin}, {"end", date_end}};
    j["usda_schema"] = usda_schema;
    j["paths"] = paths;
    return j;
}

namespace {

Aggregation aggregation_from(const json& v) {
    const auto m = parse_aggregation(v.get<std::string>());
    if (!m) throw ParameterError("unknown aggregation '" + v.get<std::string>() + "'");
    return *m;
}

}  // namespace

void RunConfig::apply_json(const json& j) {
    try {
        if (j.contains("estimator")) {
            const auto& e = j["estimator"];
            if (e.contains("n")) estimator.n = e["n"].get<std::size_t>();
            if (e.contains("t")) estimator.t = e["t"].get<double>();
            if (e.contains("m")) estimator.m = aggregation_from(e["m"]);
        }
        if (j.contains("seed")) seed = j["seed"].get<std::uint64_t>();
        if (j.contains("train_fraction")) train_fraction = j["train_fraction"].get<double>();
        if (j.contains("grid")) {
            const auto& g = j["grid"];
            if (g.contains("n")) grid.n = g["n"].get<std::vector<std::size_t>>();
            if (g.contains("t")) grid.t = g["t"].get<std::vector<double>>();
            if (g.contains("m")) {
                grid.m.clear();
                for (const auto& m : g["m"]) grid.m.push_back(aggregation_from(m));
            }
        }
        if (j.contains("date_range")) {
            const auto& d = j["date_range"];
            if (d.contains("begin")) date_begin = d["begin"].get<std::string>();
            if (d.contains("end")) date_end = d["end"].get<std::string>();
        }
        if (j.contains("usda_schema")) usda_schema = j["usda_schema"].get<std::string>();
        if (j.contains("paths")) {
            for (const auto& [k, v] : j["paths"].items()) paths[k] = v.get<std::string>();
        }
    } catch (const json::exception& e) {
        throw ParameterError(std::string("invalid config: ") + e.what());
    }
}

std::int64_t parse_date(const std::string& ymd) {
    using namespace std::chrono;
    int y = 0;
    unsigned m = 0;
    unsigned d = 0;
    char dash1 = 0;
    char dash2 = 0;
    std::istringstream ss(ymd);
    ss >> y >> dash1 >> m >> dash2 >> d;
    const year_month_day date{year{y}, month{m}, day{d}};
    if (!ss || dash1 != '-' || dash2 != '-' || !date.ok() || !ss.eof()) {
        throw ParameterError("invalid date '" + ymd + "', expected YYYY-MM-DD");
    }
    return sys_days{date}.time_since_epoch().count() * std::int64_t{86400};
}

CorpusOptions RunConfig::corpus_options() const {
    CorpusOptions opts;
    opts.begin_utc = parse_date(date_begin);
    opts.end_utc = parse_date(date_end) + 86399;
    if (opts.end_utc < opts.begin_utc) throw ParameterError("date range end precedes begin");
    return opts;
}

void write_atomic(const fs::path& path, const std::function<void(std::ostream&)>& writer) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    fs::path tmp = path;
    tmp += ".tmp-" + std::to_string(::getpid());
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot create " + tmp.string());
        writer(out);
        out.flush();
        if (!out) {
            out.close();
            fs::remove(tmp);
            throw IoError("failed writing " + path.string());
        }
    }
    fs::rename(tmp, path);
}

Manifest::Manifest(std::string subcommand, const RunConfig& config, fs::path out_dir)
    : subcommand_(std::move(subcommand)), config_(config.to_json()), out_dir_(std::move(out_dir)) {}

void Manifest::add_input(const fs::path& path) {
    inputs_[path.string()] = sha256_file_hex(path);
}

void Manifest::add_output(const fs::path& path) {
    outputs_.push_back({{"path", fs::relative(path, out_dir_).string()},
                        {"sha256", sha256_file_hex(path)}});
}

void Manifest::set(const std::string& key, json value) { extra_[key] = std::move(value); }

void Manifest::write() const {
    const std::string config_text = config_.dump(2);
    json m;
    m["subcommand"] = subcommand_;
    m["version"] = kVersion;
    m["config_sha256"] = sha256_hex(config_text);
    m["config"] = config_;
    m["inputs"] = inputs_;
    m["outputs"] = outputs_;
    for (const auto& [k, v] : extra_.items()) m[k] = v;
    m["created_utc"] = std::chrono::duration_cast<std::chrono::seconds>(
                           std::chrono::system_clock::now().time_since_epoch())
                           .count();

    write_atomic(out_dir_ / "run_config.json",
                 [&](std::ostream& out) { out << config_text << '\n'; });
    write_atomic(out_dir_ / (subcommand_ + ".manifest.json"),
                 [&](std::ostream& out) { out << m.dump(2) << '\n'; });
}

void require_files(const std::vector<fs::path>& paths) {
    for (const auto& p : paths) {
        if (!fs::is_regular_file(p)) throw IoError("input file not found: " + p.string());
    }
}

std::vector<std::string> read_lines(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        lines.push_back(std::move(line));
    }
    return lines;
}

}  // namespace nutri::cli
