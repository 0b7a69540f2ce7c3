#include <doctest.h>

#include <json.hpp>

#include "nutri/embedding_store.hpp"
#include "nutri/usda.hpp"
#include "pipeline.hpp"
#include "test_paths.hpp"

using namespace nutri;
using namespace nutri::testing;
namespace fs = std::filesystem;

namespace {

struct Workspace {
    ScratchDir dir;
    fs::path out = dir / "out";
    fs::path log_out = dir / "stdout.txt";
    fs::path log_err = dir / "stderr.txt";

    int run(const std::vector<std::string>& args) { return run_cli(args, log_out, log_err); }
    std::string stdout_text() const { return slurp(log_out); }
    std::string stderr_text() const { return slurp(log_err); }

    // ingest + fake food embeddings + build-index
    void prepare() {
        REQUIRE(run(ingest_args(out)) == 0);
        std::ifstream in(out / "food_db.tsv");
        const FoodDb db = read_food_db(in);
        write_store_file(fake_food_store(db), (dir / "foods.nteb").string());
        spit(dir / "labeled.csv", labeled_fixture_csv());
    }

    std::vector<std::string> engine(std::vector<std::string> args) const {
        for (const std::string& a : {std::string("--db"), (out / "food_db.tsv").string(),
                                     std::string("--store"), (dir / "foods.nteb").string(),
                                     std::string("--provider-cmd"), std::string(NUTRI_FAKE_EMBEDDER)}) {
            args.push_back(a);
        }
        return args;
    }
};

}  // namespace

TEST_CASE("usage errors exit with 2") {
    Workspace w;
    CHECK(w.run({}) == 2);
    CHECK(w.run({"no-such-command"}) == 2);
    CHECK(w.run({"estimate", "--bogus"}) == 2);
    CHECK(w.run({"tune", "--workers", "0"}) == 2);
    CHECK(w.run({"--version"}) == 0);
}

TEST_CASE("domain errors exit with 1 and name the problem") {
    Workspace w;
    CHECK(w.run({"tune", "--dataset", (w.dir / "missing.csv").string(), "--db", "x", "--store", "y",
                 "--queries", "z", "--out", w.out.string()}) == 1);
    CHECK(w.stderr_text().find("error:") != std::string::npos);
    CHECK(w.run({"build-index", "--db", (w.dir / "nope.tsv").string(), "--store", "s",
                 "--out", w.out.string()}) == 1);
    CHECK(w.run({"estimate", "--title", "x", "-t", "2", "--db", "a", "--store", "b",
                 "--queries", "c"}) == 1);
}

TEST_CASE("ingest-usda reproduces the golden database and writes a manifest") {
    Workspace w;
    REQUIRE(w.run(ingest_args(w.out)) == 0);
    CHECK(slurp(w.out / "food_db.tsv") == slurp(data_dir() / "usda" / "expected_food_db.tsv"));
    const auto manifest = nlohmann::json::parse(slurp(w.out / "ingest-usda.manifest.json"));
    CHECK(manifest["records"] == 6);
    CHECK(manifest["outputs"].size() == 2);
    CHECK(fs::exists(w.out / "run_config.json"));
    CHECK(fs::exists(w.out / "food_names.txt"));
}

TEST_CASE("build-index, estimate and estimate-batch") {
    Workspace w;
    w.prepare();
    REQUIRE(w.run({"build-index", "--db", (w.out / "food_db.tsv").string(), "--store",
                   (w.dir / "foods.nteb").string(), "--out", w.out.string()}) == 0);
    const auto index = read_store_file((w.out / "index.nteb").string());
    CHECK(index.size() == 6);

    REQUIRE(w.run(w.engine({"estimate", "--title", "Strawberries", "-n", "1"})) == 0);
    const std::string csv = w.stdout_text();
    CHECK(csv.rfind("title,calories,protein,fat,carbohydrates,support,max_similarity,status\n", 0) == 0);
    CHECK(csv.find("\nStrawberries,32,0.67,0.3,7.68,1,") != std::string::npos);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 2);

    spit(w.dir / "titles.txt", "Cheddar cheese\n,,,\nsalted butter\n");
    REQUIRE(w.run(w.engine({"estimate-batch", "--titles", (w.dir / "titles.txt").string(), "-n", "1",
                            "--out", w.out.string()})) == 0);
    const std::string batch = slurp(w.out / "estimates.csv");
    CHECK(batch.find("Cheddar cheese,404,") != std::string::npos);
    CHECK(batch.find("\",,,\",,,,,,,error") != std::string::npos);
    CHECK(batch.find("salted butter,717,,81.11,,1,") != std::string::npos);
}

TEST_CASE("config file precedence: flags over file over defaults") {
    Workspace w;
    w.prepare();
    spit(w.dir / "cfg.json", R"({"estimator":{"n":3,"t":0.25,"m":"median"},"seed":7})");
    REQUIRE(w.run(w.engine({"estimate", "--title", "pho", "--config", (w.dir / "cfg.json").string(),
                            "-n", "2", "--out", w.out.string()})) == 0);
    REQUIRE(w.run(w.engine({"tune", "--dataset", (w.dir / "labeled.csv").string(), "--config",
                            (w.dir / "cfg.json").string(), "-n", "2", "--out", w.out.string()})) == 0);
    const auto cfg = nlohmann::json::parse(slurp(w.out / "run_config.json"));
    CHECK(cfg["estimator"]["n"] == 2);
    CHECK(cfg["estimator"]["t"] == 0.25);
    CHECK(cfg["estimator"]["m"] == "median");
    CHECK(cfg["seed"] == 7);
    CHECK(cfg["train_fraction"] == 0.8);
}

TEST_CASE("tune and evaluate") {
    Workspace w;
    w.prepare();
    const std::string dataset = (w.dir / "labeled.csv").string();
    REQUIRE(w.run(w.engine({"tune", "--dataset", dataset, "--out", w.out.string()})) == 0);
    const std::string report = slurp(w.out / "tuning_report.csv");
    CHECK(report.rfind("n,t,m,train_rmse,coverage\n", 0) == 0);
    CHECK(std::count(report.begin(), report.end(), '\n') == 98);  // header + 96 + test line
    CHECK(report.find("\n# test n=") != std::string::npos);
    const auto manifest = nlohmann::json::parse(slurp(w.out / "tune.manifest.json"));
    CHECK(manifest["summary"]["train_size"] == 16);
    CHECK(manifest["summary"]["test_size"] == 4);

    REQUIRE(w.run(w.engine({"evaluate", "--dataset", dataset, "-n", "5", "-t", "0", "-m", "mean",
                            "--out", w.out.string()})) == 0);
    CHECK(w.stdout_text().rfind("test_rmse=", 0) == 0);
    CHECK(fs::exists(w.out / "evaluation.csv"));
}

TEST_CASE("baseline-eval without a credential is a domain error") {
    Workspace w;
    spit(w.dir / "labeled.csv", labeled_fixture_csv());
    ::unsetenv("CALORIENINJAS_API_KEY");
    CHECK(w.run({"baseline-eval", "--dataset", (w.dir / "labeled.csv").string(), "--out",
                 w.out.string()}) == 1);
}

TEST_CASE("corpus-filter, corpus-analyze and emit-figures") {
    Workspace w;
    w.prepare();
    REQUIRE(w.run({"corpus-filter", "--dump", (data_dir() / "corpus" / "corpus_50.jsonl").string(),
                   "--out", w.out.string()}) == 0);
    const std::string subs = slurp(w.out / "submissions.csv");
    CHECK(std::count(subs.begin(), subs.end(), '\n') == 38);
    const auto report = nlohmann::json::parse(slurp(w.out / "filter_report.json"));
    CHECK(report["kept"] == 37);

    REQUIRE(w.run(w.engine({"corpus-analyze", "--submissions", (w.out / "submissions.csv").string(),
                            "-n", "3", "--out", w.out.string()})) == 0);
    CHECK(fs::exists(w.out / "post_estimates.csv"));
    const std::string weekly = slurp(w.out / "weekly_nutrients.csv");
    CHECK(weekly.rfind("week,calories_median,protein_median,fat_median,carbs_median,covered_posts\n", 0) == 0);
    CHECK(weekly.find("\n2020-W53,") != std::string::npos);

    REQUIRE(w.run({"emit-figures", "--activity", (w.out / "weekly_activity.csv").string(), "--nutrients",
                   (w.out / "weekly_nutrients.csv").string(), "--out", (w.dir / "figs").string()}) == 0);
    for (const char* f : {"plot_weekly_posts.csv", "plot_weekly_authors.csv", "plot_weekly_calories.csv",
                          "plot_weekly_protein.csv", "plot_weekly_fat.csv", "plot_weekly_carbohydrates.csv",
                          "figures.gp", "emit-figures.manifest.json"}) {
        CHECK_MESSAGE(fs::exists(w.dir / "figs" / f), f);
    }
    CHECK(slurp(w.dir / "figs" / "plot_weekly_posts.csv").find("2020-W53,12\n") != std::string::npos);

    CHECK(w.run({"emit-figures", "--activity", (w.out / "submissions.csv").string(), "--nutrients",
                 (w.out / "weekly_nutrients.csv").string(), "--out", (w.dir / "figs").string()}) == 1);
}
