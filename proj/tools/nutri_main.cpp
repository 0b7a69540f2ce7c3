// nutri: command-line front end for the nutrient estimation pipeline.
//
// Exit codes: 0 success, 1 domain error, 2 usage error.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <memory>
#include <set>
#include <sstream>
#include <thread>

#include "nutri/corpus.hpp"
#include "nutri/csv.hpp"
#include "nutri/embedding_store.hpp"
#include "nutri/errors.hpp"
#include "nutri/estimator.hpp"
#include "nutri/tuning.hpp"
#include "nutri/usda.hpp"
#include "nutri/vector_index.hpp"
#include "run_support.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace nutri::cli {
namespace {

void log(const std::string& msg) { std::cerr << "[nutri] " << msg << '\n'; }

struct Common {
    std::string config_path;
    std::size_t workers = std::max(1u, std::thread::hardware_concurrency());
    std::optional<std::uint64_t> seed;
    std::string out = "out";

    // estimator overrides
    std::optional<std::size_t> n;
    std::optional<double> t;
    std::optional<std::string> m;

    std::map<std::string, std::string> paths;  // flag name -> value (when given)
};

RunConfig make_config(const Common& c) {
    RunConfig cfg;
    if (!c.config_path.empty()) {
        std::ifstream in(c.config_path);
        if (!in) throw IoError("config file not found: " + c.config_path);
        json j;
        try {
            in >> j;
        } catch (const json::exception& e) {
            throw ParameterError("config file is not valid JSON: " + std::string(e.what()));
        }
        cfg.apply_json(j);
    }
    if (c.seed) cfg.seed = *c.seed;
    if (c.n) cfg.estimator.n = *c.n;
    if (c.t) cfg.estimator.t = *c.t;
    if (c.m) {
        const auto m = parse_aggregation(*c.m);
        if (!m) throw ParameterError("unknown aggregation '" + *c.m + "'");
        cfg.estimator.m = *m;
    }
    for (const auto& [k, v] : c.paths) cfg.paths[k] = v;
    if (auto it = cfg.paths.find("usda-schema"); it != cfg.paths.end()) {
        cfg.usda_schema = it->second;
        cfg.paths.erase(it);
    }
    cfg.estimator.validate();
    return cfg;
}

std::optional<fs::path> path_of(const RunConfig& cfg, const std::string& key) {
    const auto it = cfg.paths.find(key);
    if (it == cfg.paths.end() || it->second.empty()) return std::nullopt;
    return fs::path(it->second);
}

fs::path required_path(const RunConfig& cfg, const std::string& key) {
    auto p = path_of(cfg, key);
    if (!p) throw IoError("missing required path --" + key);
    require_files({*p});
    return *p;
}

FoodDb load_db(const fs::path& p) {
    std::ifstream in(p);
    if (!in) throw IoError("cannot open food database " + p.string());
    return read_food_db(in);
}

struct Engine {
    FoodDb db;
    std::optional<Index> index;
    std::unique_ptr<EmbeddingProvider> provider;
};

// Loads db + food embeddings, and the query embedding provider.
Engine load_engine(const RunConfig& cfg, Manifest& manifest) {
    const fs::path db_path = required_path(cfg, "db");
    const fs::path store_path = required_path(cfg, "store");
    std::vector<fs::path> inputs{db_path, store_path};

    const auto provider_cmd = path_of(cfg, "provider-cmd");
    std::optional<fs::path> queries;
    std::optional<fs::path> query_texts;
    if (!provider_cmd) {
        queries = required_path(cfg, "queries");
        inputs.push_back(*queries);
        if ((query_texts = path_of(cfg, "query-texts"))) {
            require_files({*query_texts});
            inputs.push_back(*query_texts);
        }
    }

    Engine e;
    e.db = load_db(db_path);
    e.index = Index::build(read_store_file(store_path.string()), e.db);
    log("index: " + std::to_string(e.index->size()) + " foods, dimension " +
        std::to_string(e.index->dimension()) + ", kernel " +
        std::string(simd::kernel_name(e.index->kernel())));

    if (provider_cmd) {
        std::vector<std::string> argv;
        std::istringstream ss(provider_cmd->string());
        for (std::string tok; ss >> tok;) argv.push_back(tok);
        e.provider = std::make_unique<ProcessProvider>(std::move(argv));
    } else {
        auto store = read_store_file(queries->string());
        if (query_texts) {
            e.provider = std::make_unique<PrecomputedProvider>(
                PrecomputedProvider::from_line_keyed(store, read_lines(*query_texts)));
        } else {
            e.provider = std::make_unique<PrecomputedProvider>(std::move(store));
        }
    }
    for (const auto& p : inputs) manifest.add_input(p);
    return e;
}

std::vector<LabeledRecipe> load_dataset(const fs::path& p) {
    std::ifstream in(p);
    if (!in) throw IoError("cannot open dataset " + p.string());
    return read_labeled_csv(in);
}

json tuning_json(const EstimatorConfig& c) {
    return {{"n", c.n}, {"t", c.t}, {"m", std::string(aggregation_name(c.m))}};
}

// ---------------------------------------------------------------------------

int cmd_ingest_usda(const Common& common) {
    const RunConfig cfg = make_config(common);
    const fs::path out(common.out);
    Manifest manifest("ingest-usda", cfg, out);

    const UsdaSchema schema = cfg.usda_schema.empty() ? UsdaSchema{} : UsdaSchema::load(cfg.usda_schema);
    if (!cfg.usda_schema.empty()) manifest.add_input(cfg.usda_schema);

    struct SourceFiles {
        Source source;
        const char* food_key;
        const char* nutrient_key;
    };
    const SourceFiles sources[] = {
        {Source::Foundation, "foundation-food", "foundation-nutrients"},
        {Source::Survey, "survey-food", "survey-nutrients"},
        {Source::SRLegacy, "srlegacy-food", "srlegacy-nutrients"},
    };

    std::vector<std::pair<Source, std::pair<fs::path, fs::path>>> present;
    for (const auto& s : sources) {
        const auto food = path_of(cfg, s.food_key);
        const auto nut = path_of(cfg, s.nutrient_key);
        if (!food && !nut) continue;
        if (!food || !nut) {
            throw IoError(std::string("source ") + std::string(source_name(s.source)) +
                          " needs both --" + s.food_key + " and --" + s.nutrient_key);
        }
        require_files({*food, *nut});
        present.push_back({s.source, {*food, *nut}});
    }
    if (present.empty()) throw IoError("no USDA export given (e.g. --foundation-food/--foundation-nutrients)");

    std::vector<RawFoodEntry> entries;
    json per_source = json::object();
    std::size_t warnings = 0;
    for (const auto& [source, files] : present) {
        std::ifstream food(files.first);
        std::ifstream nut(files.second);
        auto parsed = parse_usda_export(food, nut, source, schema);
        for (const auto& w : parsed.warnings) log("warning: " + w);
        warnings += parsed.warnings.size();
        per_source[std::string(source_name(source))] = parsed.entries.size();
        entries.insert(entries.end(), std::make_move_iterator(parsed.entries.begin()),
                       std::make_move_iterator(parsed.entries.end()));
        manifest.add_input(files.first);
        manifest.add_input(files.second);
    }

    BuildStats stats;
    const FoodDb db = build_food_db(entries, &stats);
    const fs::path db_path = out / "food_db.tsv";
    const fs::path names_path = out / "food_names.txt";
    write_atomic(db_path, [&](std::ostream& o) { write_food_db(db, o); });
    // exporter input: one normalized name per line, in db order
    write_atomic(names_path, [&](std::ostream& o) {
        for (const auto& r : db.records()) o << r.name << '\n';
    });
    manifest.add_output(db_path);
    manifest.add_output(names_path);

    json counts = json::object();
    for (Source s : kAllSources) counts[std::string(source_name(s))] = db.count(s);
    manifest.set("parsed_entries", per_source);
    manifest.set("records", db.size());
    manifest.set("records_by_source", counts);
    manifest.set("parse_warnings", warnings);
    manifest.set("dropped", {{"empty_name", stats.dropped_empty_name},
                             {"raw_or_uncooked", stats.dropped_raw},
                             {"no_calories", stats.dropped_no_calories},
                             {"duplicates", stats.duplicates_collapsed}});
    manifest.write();
    log("food database: " + std::to_string(db.size()) + " records -> " + db_path.string());
    return 0;
}

int cmd_build_index(const Common& common) {
    const RunConfig cfg = make_config(common);
    const fs::path out(common.out);
    Manifest manifest("build-index", cfg, out);
    const fs::path db_path = required_path(cfg, "db");
    const fs::path store_path = required_path(cfg, "store");

    const FoodDb db = load_db(db_path);
    const EmbeddingStore store = read_store_file(store_path.string());
    const Index index = Index::build(store, db);
    const fs::path index_path = out / "index.nteb";
    write_atomic(index_path, [&](std::ostream& o) { write_store(index.to_store(store.model_tag()), o); });

    manifest.add_input(db_path);
    manifest.add_input(store_path);
    manifest.add_output(index_path);
    manifest.set("rows", index.size());
    manifest.set("dimension", index.dimension());
    manifest.set("foods_without_embedding", db.size() - index.size());
    manifest.write();
    log("index: " + std::to_string(index.size()) + " rows -> " + index_path.string());
    return 0;
}

int cmd_estimate(const Common& common, const std::string& title) {
    const RunConfig cfg = make_config(common);
    Manifest manifest("estimate", cfg, common.out);  // inputs only; not written
    Engine e = load_engine(cfg, manifest);

    BatchItem item{title, NoMatch{}};
    std::visit([&](auto&& v) { item.outcome = std::move(v); },
               estimate_title(title, *e.index, e.db, *e.provider, cfg.estimator));
    write_batch_csv({item}, std::cout);
    return 0;
}

int cmd_estimate_batch(const Common& common) {
    const RunConfig cfg = make_config(common);
    const fs::path out(common.out);
    Manifest manifest("estimate-batch", cfg, out);
    const fs::path titles_path = required_path(cfg, "titles");
    Engine e = load_engine(cfg, manifest);
    manifest.add_input(titles_path);

    std::vector<std::string> titles = read_lines(titles_path);
    if (titles.empty()) throw DataError("titles file is empty");
    const auto items = estimate_batch(titles, *e.index, e.db, *e.provider, cfg.estimator, common.workers);

    const fs::path csv_path = out / "estimates.csv";
    write_atomic(csv_path, [&](std::ostream& o) { write_batch_csv(items, o); });
    manifest.add_output(csv_path);
    std::size_t ok = 0, no_match = 0, errors = 0;
    for (const auto& it : items) {
        if (std::holds_alternative<NutrientEstimate>(it.outcome)) ++ok;
        else if (std::holds_alternative<NoMatch>(it.outcome)) ++no_match;
        else ++errors;
    }
    manifest.set("counts", {{"ok", ok}, {"no_match", no_match}, {"error", errors}});
    manifest.write();
    log(std::to_string(ok) + " estimates, " + std::to_string(no_match) + " no-match, " +
        std::to_string(errors) + " errors -> " + csv_path.string());
    return 0;
}

void write_split(const fs::path& path, const std::vector<LabeledRecipe>& rows) {
    write_atomic(path, [&](std::ostream& o) {
        o << "title,calories_per_100g\n";
        for (const auto& r : rows) {
            o << csv::join_row({r.title, csv::format_number(r.true_calories)}) << '\n';
        }
    });
}

int cmd_tune(const Common& common) {
    const RunConfig cfg = make_config(common);
    const fs::path out(common.out);
    Manifest manifest("tune", cfg, out);
    const fs::path dataset_path = required_path(cfg, "dataset");
    Engine e = load_engine(cfg, manifest);
    manifest.add_input(dataset_path);

    const auto recipes = load_dataset(dataset_path);
    const auto split = split_dataset(recipes, cfg.train_fraction, cfg.seed);
    const auto train_stats = dataset_stats(split.train);
    log("split: " + std::to_string(split.train.size()) + " train / " +
        std::to_string(split.test.size()) + " test; train calories mean " +
        csv::format_number(train_stats.mean) + ", std " + csv::format_number(train_stats.stddev));

    EvalContext ctx{*e.index, e.db, *e.provider, common.workers};
    const GridReport report = grid_search(split.train, cfg.grid, ctx);
    if (report.ranked.empty()) throw DataError("every grid config had zero coverage");
    const EstimatorConfig best = report.ranked.front().config;

    std::optional<std::pair<EstimatorConfig, EvalResult>> test_eval;
    if (!split.test.empty()) test_eval = std::make_pair(best, evaluate(best, split.test, ctx));

    const fs::path report_path = out / "tuning_report.csv";
    write_atomic(report_path, [&](std::ostream& o) { write_tuning_report(report, o, test_eval); });
    write_split(out / "train.csv", split.train);
    write_split(out / "test.csv", split.test);
    manifest.add_output(report_path);
    manifest.add_output(out / "train.csv");
    manifest.add_output(out / "test.csv");

    json summary = {{"train_size", split.train.size()},
                    {"test_size", split.test.size()},
                    {"train_calories_mean", train_stats.mean},
                    {"train_calories_std", train_stats.stddev},
                    {"configs_evaluated", report.ranked.size() + report.excluded.size()},
                    {"configs_excluded", report.excluded.size()},
                    {"best", tuning_json(best)},
                    {"best_train_rmse", report.ranked.front().train_rmse}};
    if (test_eval) {
        summary["test_rmse"] = test_eval->second.rmse;
        summary["test_coverage"] = test_eval->second.coverage;
    }
    manifest.set("summary", summary);
    manifest.write();
    log("best n=" + std::to_string(best.n) + " t=" + csv::format_number(best.t) + " m=" +
        std::string(aggregation_name(best.m)) + " train RMSE " +
        csv::format_number(report.ranked.front().train_rmse));
    return 0;
}

int cmd_evaluate(const Common& common) {
    const RunConfig cfg = make_config(common);
    const fs::path out(common.out);
    Manifest manifest("evaluate", cfg, out);
    const fs::path dataset_path = required_path(cfg, "dataset");
    Engine e = load_engine(cfg, manifest);
    manifest.add_input(dataset_path);

    const auto split = split_dataset(load_dataset(dataset_path), cfg.train_fraction, cfg.seed);
    if (split.test.empty()) throw DataError("test split is empty (train_fraction = 1?)");
    EvalContext ctx{*e.index, e.db, *e.provider, common.workers};
    const EvalResult r = evaluate(cfg.estimator, split.test, ctx);

    const fs::path path = out / "evaluation.csv";
    write_atomic(path, [&](std::ostream& o) {
        o << "n,t,m,test_rmse,coverage,test_size\n"
          << cfg.estimator.n << ',' << csv::format_number(cfg.estimator.t) << ','
          << aggregation_name(cfg.estimator.m) << ',' << csv::format_number(r.rmse) << ','
          << csv::format_number(r.coverage) << ',' << split.test.size() << '\n';
    });
    manifest.add_output(path);
    manifest.write();
    std::cout << "test_rmse=" << csv::format_number(r.rmse)
              << " coverage=" << csv::format_number(r.coverage) << '\n';
    return 0;
}

int cmd_baseline_eval(const Common& common, const std::string& base_url, const std::string& cache) {
    const RunConfig cfg = make_config(common);
    const fs::path out(common.out);
    Manifest manifest("baseline-eval", cfg, out);
    const fs::path dataset_path = required_path(cfg, "dataset");
    manifest.add_input(dataset_path);

    const auto split = split_dataset(load_dataset(dataset_path), cfg.train_fraction, cfg.seed);
    if (split.test.empty()) throw DataError("test split is empty");

    auto client = CalorieNinjasClient::from_environment(base_url);
    CachingCalorieClient cached(client, out / cache);
    const BaselineResult r = baseline_eval(cached, split.test);
    if (r.failures) log(std::to_string(r.failures) + " baseline requests failed and were excluded");

    const fs::path path = out / "baseline.csv";
    write_atomic(path, [&](std::ostream& o) {
        o << "test_rmse,successes,failures\n"
          << csv::format_number(r.rmse) << ',' << r.successes << ',' << r.failures << '\n';
    });
    manifest.add_output(path);
    manifest.set("cache", {{"hits", cached.hits()}, {"misses", cached.misses()}});
    manifest.write();
    std::cout << "baseline_rmse=" << csv::format_number(r.rmse) << '\n';
    return 0;
}

int cmd_corpus_filter(const Common& common, const std::vector<std::string>& dumps) {
    const RunConfig cfg = make_config(common);
    const fs::path out(common.out);
    Manifest manifest("corpus-filter", cfg, out);
    if (dumps.empty()) throw IoError("no dump file given (--dump)");
    std::vector<fs::path> dump_paths(dumps.begin(), dumps.end());
    require_files(dump_paths);

    const CorpusOptions opts = cfg.corpus_options();
    std::vector<RawSubmission> records;
    std::size_t lines = 0, malformed = 0, out_of_range = 0;
    for (const auto& p : dump_paths) {
        auto parsed = parse_submission_file(p, opts);
        lines += parsed.lines;
        malformed += parsed.malformed;
        out_of_range += parsed.out_of_range;
        records.insert(records.end(), std::make_move_iterator(parsed.records.begin()),
                       std::make_move_iterator(parsed.records.end()));
        manifest.add_input(p);
    }

    const FilterReport report = filter_submissions(records, opts.sentinels);
    const fs::path subs_path = out / "submissions.csv";
    write_atomic(subs_path, [&](std::ostream& o) { write_submissions_csv(report.kept, o); });
    manifest.add_output(subs_path);

    std::set<std::string> authors;
    for (const auto& s : report.kept) authors.insert(s.author);
    const fs::path breakdown_path = out / "filter_report.json";
    const json breakdown = {{"lines", lines},
                            {"malformed", malformed},
                            {"out_of_date_range", out_of_range},
                            {"parsed", records.size()},
                            {"dropped_deleted", report.dropped_deleted},
                            {"dropped_untagged", report.dropped_untagged},
                            {"dropped_duplicate", report.dropped_duplicate},
                            {"kept", report.kept.size()},
                            {"unique_authors", authors.size()}};
    write_atomic(breakdown_path, [&](std::ostream& o) { o << breakdown.dump(2) << '\n'; });
    manifest.add_output(breakdown_path);

    if (!report.kept.empty()) {
        const fs::path activity_path = out / "weekly_activity.csv";
        write_atomic(activity_path, [&](std::ostream& o) {
            write_weekly_activity_csv(weekly_activity(report.kept), o);
        });
        manifest.add_output(activity_path);
    }
    manifest.write();
    log(std::to_string(report.kept.size()) + " submissions by " + std::to_string(authors.size()) +
        " authors kept");
    return 0;
}

std::vector<Submission> load_submissions(const fs::path& p) {
    std::ifstream in(p);
    if (!in) throw IoError("cannot open " + p.string());
    return read_submissions_csv(in);
}

int cmd_corpus_analyze(const Common& common) {
    const RunConfig cfg = make_config(common);
    const fs::path out(common.out);
    Manifest manifest("corpus-analyze", cfg, out);
    const fs::path subs_path = required_path(cfg, "submissions");
    Engine e = load_engine(cfg, manifest);
    manifest.add_input(subs_path);

    const auto subs = load_submissions(subs_path);
    if (subs.empty()) throw DataError("submissions file is empty");
    std::vector<std::string> titles;
    titles.reserve(subs.size());
    for (const auto& s : subs) titles.push_back(s.clean_title);
    const auto items = estimate_batch(titles, *e.index, e.db, *e.provider, cfg.estimator, common.workers);

    std::unordered_map<std::string, NutrientEstimate> by_id;
    for (std::size_t i = 0; i < subs.size(); ++i) {
        if (const auto* est = std::get_if<NutrientEstimate>(&items[i].outcome)) {
            by_id.emplace(subs[i].id, *est);
        }
    }

    const fs::path est_path = out / "post_estimates.csv";
    write_atomic(est_path, [&](std::ostream& o) {
        std::ostringstream body;
        write_batch_csv(items, body);
        // prefix each row with the submission id and week
        std::istringstream lines(body.str());
        std::string line;
        std::getline(lines, line);
        o << "id,week," << line << '\n';
        for (std::size_t i = 0; std::getline(lines, line); ++i) {
            o << csv::escape(subs[i].id) << ',' << iso_week(subs[i].created_utc).str() << ','
              << line << '\n';
        }
    });
    const fs::path activity_path = out / "weekly_activity.csv";
    write_atomic(activity_path,
                 [&](std::ostream& o) { write_weekly_activity_csv(weekly_activity(subs), o); });
    const fs::path nutrients_path = out / "weekly_nutrients.csv";
    write_atomic(nutrients_path, [&](std::ostream& o) {
        write_weekly_nutrients_csv(weekly_medians(subs, by_id), o);
    });
    manifest.add_output(est_path);
    manifest.add_output(activity_path);
    manifest.add_output(nutrients_path);
    manifest.set("covered_posts", by_id.size());
    manifest.set("posts", subs.size());
    manifest.write();
    log(std::to_string(by_id.size()) + " of " + std::to_string(subs.size()) + " posts estimated");
    return 0;
}

int cmd_emit_figures(const Common& common) {
    const RunConfig cfg = make_config(common);
    const fs::path out(common.out);
    Manifest manifest("emit-figures", cfg, out);
    const fs::path activity = required_path(cfg, "activity");
    const fs::path nutrients = required_path(cfg, "nutrients");
    manifest.add_input(activity);
    manifest.add_input(nutrients);

    auto read_table = [](const fs::path& p) {
        std::ifstream in(p);
        csv::Reader reader(in);
        std::vector<std::vector<std::string>> rows;
        std::vector<std::string> row;
        while (reader.next(row)) rows.push_back(row);
        if (rows.empty()) throw FormatError(p.string() + " is empty");
        return rows;
    };
    const auto act = read_table(activity);
    const auto nut = read_table(nutrients);
    if (act.front() != std::vector<std::string>{"week", "posts", "unique_authors"}) {
        throw FormatError(activity.string() + " is not a weekly activity table");
    }
    if (nut.front().size() != 6 || nut.front()[0] != "week") {
        throw FormatError(nutrients.string() + " is not a weekly nutrients table");
    }

    auto column = [&](const std::vector<std::vector<std::string>>& table, std::size_t col,
                      const std::string& name, const fs::path& path) {
        write_atomic(path, [&](std::ostream& o) {
            o << "week," << name << '\n';
            for (std::size_t i = 1; i < table.size(); ++i) {
                if (table[i].size() > col && !table[i][col].empty()) {
                    o << table[i][0] << ',' << table[i][col] << '\n';
                }
            }
        });
        manifest.add_output(path);
    };
    column(act, 1, "posts", out / "plot_weekly_posts.csv");
    column(act, 2, "unique_authors", out / "plot_weekly_authors.csv");
    const char* names[] = {"calories", "protein", "fat", "carbohydrates"};
    for (std::size_t k = 0; k < 4; ++k) {
        column(nut, k + 1, std::string(names[k]) + "_median",
               out / ("plot_weekly_" + std::string(names[k]) + ".csv"));
    }

    const fs::path script = out / "figures.gp";
    write_atomic(script, [&](std::ostream& o) {
        o << "# gnuplot -c figures.gp  (run inside this directory)\n"
          << "set datafile separator ','\n"
          << "set terminal pngcairo size 1200,400\n"
          << "set xdata time\nset timefmt '%Y-W%W'\nset format x '%Y'\nset key off\n";
        auto plot = [&](const std::string& file, const std::string& title) {
            o << "set output '" << file.substr(0, file.size() - 4) << ".png'\n"
              << "set title '" << title << "'\n"
              << "plot '" << file << "' using 0:2 every ::1 with lines\n";
        };
        plot("plot_weekly_posts.csv", "Posts per week");
        plot("plot_weekly_authors.csv", "Unique authors per week");
        for (const char* n : names) {
            plot(std::string("plot_weekly_") + n + ".csv",
                 std::string("Weekly median ") + n + " per 100 g");
        }
    });
    manifest.add_output(script);
    manifest.write();
    log("figure data written to " + out.string());
    return 0;
}

}  // namespace
}  // namespace nutri::cli

int main(int argc, char** argv) {
    using namespace nutri::cli;

    CLI::App app{"Macro-nutrient estimation from food titles"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    Common common;
    std::map<std::string, std::string> path_flags;
    std::string title;
    std::string base_url = nutri::CalorieNinjasClient::kDefaultBaseUrl;
    std::string cache_dir = "baseline_cache";
    std::vector<std::string> dumps;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", common.config_path, "JSON run configuration");
        sub->add_option("--workers", common.workers, "Worker threads")->check(CLI::PositiveNumber);
        sub->add_option("--seed", common.seed, "Split seed");
        sub->add_option("--out", common.out, "Output directory");
    };
    auto add_estimator = [&](CLI::App* sub) {
        sub->add_option("-n,--neighbors", common.n, "Neighbor count");
        sub->add_option("-t,--threshold", common.t, "Similarity threshold");
        sub->add_option("-m,--aggregation", common.m, "mean | median | weighted_mean");
    };
    auto add_path = [&](CLI::App* sub, const std::string& name, const std::string& help) {
        sub->add_option_function<std::string>(
            "--" + name, [&, name](const std::string& v) { path_flags[name] = v; }, help);
    };
    auto add_engine = [&](CLI::App* sub) {
        add_path(sub, "db", "Food database (food_db.tsv)");
        add_path(sub, "store", "Food embeddings (NTEB)");
        add_path(sub, "queries", "Precomputed query embeddings (NTEB)");
        add_path(sub, "query-texts", "Texts matching line-numbered query ids");
        add_path(sub, "provider-cmd", "External embedding provider command");
        add_estimator(sub);
    };

    auto* ingest = app.add_subcommand("ingest-usda", "Build the food database from USDA exports");
    add_common(ingest);
    for (const char* s : {"foundation", "survey", "srlegacy"}) {
        add_path(ingest, std::string(s) + "-food", "food.csv for this source");
        add_path(ingest, std::string(s) + "-nutrients", "food_nutrient.csv for this source");
    }
    std::string schema_flag;
    ingest->add_option("--schema", schema_flag, "Versioned ingest schema (JSON)");

    auto* build = app.add_subcommand("build-index", "Validate and normalize food embeddings");
    add_common(build);
    add_path(build, "db", "Food database");
    add_path(build, "store", "Food embeddings (NTEB)");

    auto* estimate = app.add_subcommand("estimate", "Estimate one title (CSV to stdout)");
    add_common(estimate);
    add_engine(estimate);
    estimate->add_option("--title", title, "Food title")->required();

    auto* batch = app.add_subcommand("estimate-batch", "Estimate a file of titles");
    add_common(batch);
    add_engine(batch);
    add_path(batch, "titles", "One title per line");

    auto* tune = app.add_subcommand("tune", "Grid-search (n, t, m) on a labeled dataset");
    add_common(tune);
    add_engine(tune);
    add_path(tune, "dataset", "CSV title,calories_per_100g");

    auto* eval = app.add_subcommand("evaluate", "RMSE of one config on the held-out split");
    add_common(eval);
    add_engine(eval);
    add_path(eval, "dataset", "CSV title,calories_per_100g");

    auto* baseline = app.add_subcommand("baseline-eval", "RMSE of the external calorie API");
    add_common(baseline);
    add_path(baseline, "dataset", "CSV title,calories_per_100g");
    baseline->add_option("--base-url", base_url, "API base URL");
    baseline->add_option("--cache-dir", cache_dir, "Response cache, relative to --out");

    auto* cfilter = app.add_subcommand("corpus-filter", "Filter Reddit submission dumps");
    add_common(cfilter);
    cfilter->add_option("--dump", dumps, "Line-delimited JSON dump (.gz ok); repeatable");

    auto* canalyze = app.add_subcommand("corpus-analyze", "Estimate posts, emit weekly series");
    add_common(canalyze);
    add_engine(canalyze);
    add_path(canalyze, "submissions", "submissions.csv from corpus-filter");

    auto* figures = app.add_subcommand("emit-figures", "Per-figure data files and gnuplot script");
    add_common(figures);
    add_path(figures, "activity", "weekly_activity.csv");
    add_path(figures, "nutrients", "weekly_nutrients.csv");

    if (argc < 2) {
        std::cerr << app.help();
        return 2;
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    common.paths = path_flags;
    if (!schema_flag.empty()) common.paths["usda-schema"] = schema_flag;

    try {
        if (*ingest) return cmd_ingest_usda(common);
        if (*build) return cmd_build_index(common);
        if (*estimate) return cmd_estimate(common, title);
        if (*batch) return cmd_estimate_batch(common);
        if (*tune) return cmd_tune(common);
        if (*eval) return cmd_evaluate(common);
        if (*baseline) return cmd_baseline_eval(common, base_url, cache_dir);
        if (*cfilter) return cmd_corpus_filter(common, dumps);
        if (*canalyze) return cmd_corpus_analyze(common);
        if (*figures) return cmd_emit_figures(common);
    } catch (const nutri::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    std::cerr << app.help();
    return 2;
}
