#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <thread>

#include <httplib.h>

#include "nutri/errors.hpp"
#include "nutri/tuning.hpp"
#include "oracle.hpp"
#include "test_paths.hpp"

using namespace nutri;

namespace {

std::vector<LabeledRecipe> numbered(std::size_t n) {
    std::vector<LabeledRecipe> out;
    for (std::size_t i = 0; i < n; ++i) out.push_back({"recipe " + std::to_string(i), double(i)});
    return out;
}

// Random foods plus random labeled titles with precomputed embeddings.
struct Synthetic {
    FoodDb db;
    EmbeddingStore foods;
    Index index;
    PrecomputedProvider provider;
    std::vector<LabeledRecipe> recipes;

    static Synthetic make(std::uint64_t seed, std::size_t food_count, std::size_t titles, std::uint32_t dim) {
        std::mt19937_64 rng(seed);
        auto store = nutri::testing::random_store(rng, food_count, dim);
        std::uniform_real_distribution<double> cal(20.0, 600.0);
        std::vector<FoodRecord> recs;
        for (const auto& r : store.records()) {
            recs.push_back({r.id, r.id, {cal(rng), cal(rng) / 20, {}, cal(rng) / 10}, Source::Survey});
        }
        std::sort(recs.begin(), recs.end(), [](auto& a, auto& b) { return a.id < b.id; });
        FoodDb db(std::move(recs));
        EmbeddingStore queries(dim, "queries");
        std::vector<LabeledRecipe> labeled;
        for (std::size_t i = 0; i < titles; ++i) {
            const std::string title = "dish " + std::to_string(i);
            const auto v = nutri::testing::random_vector(rng, dim);
            queries.add(title, std::vector<float>(v.begin(), v.end()));
            labeled.push_back({title, cal(rng)});
        }
        Index index = Index::build(store, db);
        return Synthetic{std::move(db), std::move(store), std::move(index),
                         PrecomputedProvider(std::move(queries)), std::move(labeled)};
    }

    EvalContext ctx(std::size_t workers = 1) { return {index, db, provider, workers}; }
};

class EchoClient : public CalorieClient {
public:
    std::map<std::string, double> truth;
    std::size_t calls = 0;
    double calories_per_100g(const std::string& title) override {
        ++calls;
        auto it = truth.find(title);
        if (it == truth.end()) throw ProviderError("unknown " + title);
        return it->second;
    }
};

class ConstantClient : public CalorieClient {
public:
    double value;
    explicit ConstantClient(double v) : value(v) {}
    double calories_per_100g(const std::string&) override { return value; }
};

}  // namespace

TEST_CASE("rmse: hand-computed example and errors") {
    const std::vector<double> p{0.0, 0.0};
    const std::vector<double> a{3.0, 4.0};
    CHECK(rmse(p, a) == doctest::Approx(3.53553).epsilon(1e-5));
    CHECK(rmse(a, a) == 0.0);
    CHECK_THROWS_AS(rmse(std::vector<double>{1.0}, a), DataError);
    CHECK_THROWS_AS(rmse(std::vector<double>{}, std::vector<double>{}), DataError);
}

TEST_CASE("dataset statistics use the population standard deviation") {
    const auto s = dataset_stats({{"a", 0.0}, {"b", 10.0}});
    CHECK(s.mean == 5.0);
    CHECK(s.stddev == 5.0);
    CHECK_THROWS_AS(dataset_stats({}), DataError);
}

TEST_CASE("split: sizes, disjointness and determinism") {
    const auto all = numbered(8865);
    const auto s = split_dataset(all, 0.8, 42);
    CHECK(s.train.size() == 7092);
    CHECK(s.test.size() == 1773);

    std::set<std::string> seen;
    for (const auto& r : s.train) seen.insert(r.title);
    for (const auto& r : s.test) CHECK(seen.insert(r.title).second);
    CHECK(seen.size() == all.size());

    const auto again = split_dataset(all, 0.8, 42);
    CHECK(again.train == s.train);
    CHECK(again.test == s.test);
    CHECK(split_dataset(all, 0.8, 7).train != s.train);

    const auto full = split_dataset(numbered(10), 1.0);
    CHECK(full.train.size() == 10);
    CHECK(full.test.empty());
    CHECK_THROWS_AS(split_dataset(all, 0.0), ParameterError);
    CHECK_THROWS_AS(split_dataset(all, 1.5), ParameterError);
    CHECK_THROWS_AS(split_dataset({}, 0.5), DataError);
}

TEST_CASE("split: pinned permutation for seed 42") {
    // Guards the portable shuffle against silent changes.
    const auto s = split_dataset(numbered(10), 0.5, 42);
    std::vector<double> order;
    for (const auto& r : s.train) order.push_back(r.true_calories);
    for (const auto& r : s.test) order.push_back(r.true_calories);
    std::vector<double> sorted = order;
    std::sort(sorted.begin(), sorted.end());
    CHECK(sorted == std::vector<double>{0, 1, 2, 3, 4, 5, 6, 7, 8, 9});
    CHECK(split_dataset(numbered(10), 0.5, 42).train == s.train);
}

TEST_CASE("labeled CSV reading") {
    std::istringstream ok("title,calories_per_100g\n\"Mac, cheese\",164.5\nSalad,20\n");
    const auto r = read_labeled_csv(ok);
    REQUIRE(r.size() == 2);
    CHECK(r[0] == LabeledRecipe{"Mac, cheese", 164.5});
    std::istringstream missing("title,kcal\na,1\n");
    CHECK_THROWS_AS(read_labeled_csv(missing), DataError);
    std::istringstream bad("title,calories_per_100g\na,lots\n");
    CHECK_THROWS_AS(read_labeled_csv(bad), DataError);
}

TEST_CASE("default grid has 96 configurations") {
    const auto grid = ConfigGrid::standard();
    CHECK(grid.configs().size() == 96);
}

TEST_CASE("grid search agrees with exhaustive per-config evaluation") {
    auto s = Synthetic::make(5, 60, 10, 6);
    const ConfigGrid grid{{1, 5}, {0.0, 0.5}, {Aggregation::Mean, Aggregation::Median, Aggregation::WeightedMean}};
    const auto report = grid_search(s.recipes, grid, s.ctx(2));
    CHECK(report.ranked.size() + report.excluded.size() == 12);

    std::vector<TuningResult> expected;
    for (const auto& cfg : grid.configs()) {
        std::vector<double> p;
        std::vector<double> a;
        for (const auto& r : s.recipes) {
            const auto out = estimate_title(r.title, s.index, s.db, s.provider, cfg);
            if (const auto* e = std::get_if<NutrientEstimate>(&out)) {
                p.push_back(*e->nutrients.calories);
                a.push_back(r.true_calories);
            }
        }
        if (p.empty()) continue;
        double sq = 0.0;
        for (std::size_t i = 0; i < p.size(); ++i) sq += (p[i] - a[i]) * (p[i] - a[i]);
        expected.push_back({cfg, std::sqrt(sq / double(p.size())), double(p.size()) / 10.0});
    }
    REQUIRE(expected.size() == report.ranked.size());
    const auto best = *std::min_element(expected.begin(), expected.end(), ranks_before);
    CHECK(report.ranked.front().config == best.config);
    for (const auto& e : expected) {
        auto it = std::find_if(report.ranked.begin(), report.ranked.end(),
                               [&](const TuningResult& r) { return r.config == e.config; });
        REQUIRE(it != report.ranked.end());
        CHECK(it->train_rmse == doctest::Approx(e.train_rmse).epsilon(1e-12));
        CHECK(it->coverage == e.coverage);
    }
    for (std::size_t i = 1; i < report.ranked.size(); ++i) {
        CHECK_FALSE(ranks_before(report.ranked[i], report.ranked[i - 1]));
    }
}

TEST_CASE("grid search: zero-coverage configs are excluded, not ranked") {
    auto s = Synthetic::make(9, 30, 8, 4);
    const ConfigGrid grid{{3}, {0.0, 1.0}, {Aggregation::Mean}};
    const auto report = grid_search(s.recipes, grid, s.ctx());
    REQUIRE(report.excluded.size() == 1);
    CHECK(report.excluded[0].config.t == 1.0);
    CHECK(report.excluded[0].coverage == 0.0);
    CHECK(report.ranked.size() == 1);
}

TEST_CASE("ranking tie-break") {
    const TuningResult a{{5, 0.5, Aggregation::Median}, 10.0, 1.0};
    CHECK(ranks_before({{5, 0.5, Aggregation::Median}, 9.0, 1.0}, a));
    CHECK(ranks_before({{1, 0.5, Aggregation::Median}, 10.0, 1.0}, a));
    CHECK(ranks_before({{5, 0.75, Aggregation::Median}, 10.0, 1.0}, a));
    CHECK(ranks_before({{5, 0.5, Aggregation::Mean}, 10.0, 1.0}, a));
    CHECK_FALSE(ranks_before({{5, 0.5, Aggregation::WeightedMean}, 10.0, 1.0}, a));
    CHECK_FALSE(ranks_before(a, a));
}

TEST_CASE("evaluate: exact-match fixture has zero error") {
    auto s = Synthetic::make(3, 20, 0, 5);
    EmbeddingStore queries(5, "q");
    std::vector<LabeledRecipe> test;
    // Duplicate rows in the random store would make n=1 ambiguous.
    std::map<std::vector<float>, int> occurrences;
    for (const auto& rec : s.foods.records()) ++occurrences[rec.vector];
    for (const auto& rec : s.foods.records()) {
        if (occurrences[rec.vector] != 1) continue;
        const std::string title = "exact " + std::to_string(test.size());
        queries.add(title, rec.vector);
        test.push_back({title, *s.db.find(rec.id)->nutrients.calories});
        if (test.size() == 8) break;
    }
    REQUIRE(test.size() == 8);

    PrecomputedProvider provider(std::move(queries));
    const auto r = evaluate({1, 0.0, Aggregation::Mean}, test, {s.index, s.db, provider, 1});
    CHECK(r.rmse == doctest::Approx(0.0));
    CHECK(r.coverage == 1.0);
    CHECK_THROWS_AS(evaluate({1, 1.01, Aggregation::Mean}, test, {s.index, s.db, provider, 1}), ParameterError);
    CHECK_THROWS_AS(evaluate({1, 0.0, Aggregation::Mean}, {}, {s.index, s.db, provider, 1}), DataError);
}

TEST_CASE("tuning report format") {
    GridReport report;
    report.ranked.push_back({{5, 0.5, Aggregation::Median}, 12.25, 0.75});
    report.excluded.push_back({{1, 0.9, Aggregation::Mean}, 0.0, 0.0});
    std::ostringstream out;
    write_tuning_report(report, out, std::pair{EstimatorConfig{5, 0.5, Aggregation::Median}, EvalResult{11.5, 1.0}});
    CHECK(out.str() ==
          "n,t,m,train_rmse,coverage\n"
          "5,0.5,median,12.25,0.75\n"
          "1,0.9,mean,,0\n"
          "# test n=5 t=0.5 m=median test_rmse=11.5 coverage=1\n");
}

TEST_CASE("baseline: stub clients and the on-disk cache") {
    const std::vector<LabeledRecipe> test{{"a", 3.0}, {"b", 4.0}};
    EchoClient echo;
    echo.truth = {{"a", 3.0}, {"b", 4.0}};
    CHECK(baseline_eval(echo, test).rmse == 0.0);

    ConstantClient zero(0.0);
    CHECK(baseline_eval(zero, test).rmse == doctest::Approx(3.53553).epsilon(1e-5));

    EchoClient partial;
    partial.truth = {{"a", 5.0}};
    const auto r = baseline_eval(partial, test);
    CHECK(r.successes == 1);
    CHECK(r.failures == 1);
    CHECK(r.rmse == 2.0);

    EchoClient none;
    CHECK_THROWS_AS(baseline_eval(none, test), DataError);

    nutri::testing::ScratchDir dir;
    CachingCalorieClient cached(echo, dir.path() / "cache");
    const auto first = baseline_eval(cached, test);
    const std::size_t calls = echo.calls;
    const auto second = baseline_eval(cached, test);
    CHECK(first.rmse == second.rmse);
    CHECK(echo.calls == calls);
    CHECK(cached.misses() == 2);
    CHECK(cached.hits() == 2);
}

TEST_CASE("calorie API client: response parsing") {
    CHECK(CalorieNinjasClient::parse_response(
              R"({"items":[{"calories":200,"serving_size_g":100},{"calories":50,"serving_size_g":150}]})") ==
          doctest::Approx(100.0));
    CHECK_THROWS_AS(CalorieNinjasClient::parse_response("{\"items\":[]}"), ProviderError);
    CHECK_THROWS_AS(CalorieNinjasClient::parse_response("not json"), ProviderError);
    CHECK_THROWS_AS(CalorieNinjasClient::parse_response(R"({"items":[{"calories":1}]})"), ProviderError);
}

TEST_CASE("calorie API client against a local server") {
    httplib::Server server;
    std::string seen_key;
    std::string seen_query;
    server.Get("/v1/nutrition", [&](const httplib::Request& req, httplib::Response& res) {
        seen_key = req.get_header_value("X-Api-Key");
        seen_query = req.get_param_value("query");
        if (seen_query == "teapot") {
            res.status = 418;
            return;
        }
        res.set_content(R"({"items":[{"name":"x","calories":130.0,"serving_size_g":50.0}]})",
                        "application/json");
    });
    const int port = server.bind_to_any_port("127.0.0.1");
    std::thread th([&] { server.listen_after_bind(); });
    server.wait_until_ready();

    CalorieNinjasClient client("http://127.0.0.1:" + std::to_string(port), "secret");
    CHECK(client.calories_per_100g("mac and cheese") == doctest::Approx(260.0));
    CHECK(seen_key == "secret");
    CHECK(seen_query == "mac and cheese");
    CHECK_THROWS_AS(client.calories_per_100g("teapot"), ProviderError);

    server.stop();
    th.join();

    CalorieNinjasClient closed("http://127.0.0.1:" + std::to_string(port), "secret");
    CHECK_THROWS_AS(closed.calories_per_100g("x"), ProviderError);
}

TEST_CASE("calorie API client requires a credential") {
    ::unsetenv(CalorieNinjasClient::kApiKeyEnv);
    CHECK_THROWS_AS(CalorieNinjasClient::from_environment(), ProviderError);
}
