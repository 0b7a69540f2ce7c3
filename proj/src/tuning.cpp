#include "nutri/tuning.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <thread>

#include "nutri/csv.hpp"
#include "nutri/errors.hpp"
#include "nutri/stats.hpp"
#include "nutri/text.hpp"

namespace nutri {

std::vector<LabeledRecipe> read_labeled_csv(std::istream& in) {
    csv::Reader reader(in);
    std::vector<std::string> row;
    if (!reader.next(row)) throw DataError("labeled dataset: missing header");
    std::size_t title_col = row.size();
    std::size_t cal_col = row.size();
    for (std::size_t i = 0; i < row.size(); ++i) {
        const auto name = text::trim(row[i]);
        if (name == "title") title_col = i;
        if (name == "calories_per_100g") cal_col = i;
    }
    if (title_col == row.size()) throw DataError("labeled dataset: missing column 'title'");
    if (cal_col == row.size()) {
        throw DataError("labeled dataset: missing column 'calories_per_100g'");
    }

    std::vector<LabeledRecipe> out;
    while (reader.next(row)) {
        const std::size_t line = reader.line();
        if (row.size() <= std::max(title_col, cal_col)) {
            throw DataError("labeled dataset line " + std::to_string(line) + ": too few fields");
        }
        const auto cal = csv::parse_number(row[cal_col]);
        if (!cal || *cal < 0.0) {
            throw DataError("labeled dataset line " + std::to_string(line) +
                            ": invalid calories '" + row[cal_col] + "'");
        }
        if (text::trim(row[title_col]).empty()) {
            throw DataError("labeled dataset line " + std::to_string(line) + ": empty title");
        }
        out.push_back({row[title_col], *cal});
    }
    return out;
}

namespace {

// Unbiased draw from [0, bound) by rejection; independent of the standard
// library's distribution implementation.
std::uint64_t bounded_draw(std::mt19937_64& rng, std::uint64_t bound) {
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % bound;
    while (true) {
        const std::uint64_t x = rng();
        if (x < limit) return x % bound;
    }
}

}  // namespace

DatasetSplit split_dataset(const std::vector<LabeledRecipe>& recipes, double train_fraction,
                           std::uint64_t seed) {
    if (recipes.empty()) throw DataError("cannot split an empty dataset");
    if (!(train_fraction > 0.0 && train_fraction <= 1.0)) {
        throw ParameterError("train fraction must lie in (0, 1]");
    }

    std::vector<std::size_t> order(recipes.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::mt19937_64 rng(seed);
    for (std::size_t i = order.size() - 1; i > 0; --i) {
        std::swap(order[i], order[bounded_draw(rng, i + 1)]);
    }

    // guard against 0.8 * 8865 landing a hair under 7092
    const auto train_size = std::min(
        recipes.size(),
        static_cast<std::size_t>(std::floor(train_fraction * static_cast<double>(recipes.size()) + 1e-9)));

    DatasetSplit split;
    split.train.reserve(train_size);
    split.test.reserve(recipes.size() - train_size);
    for (std::size_t k = 0; k < order.size(); ++k) {
        (k < train_size ? split.train : split.test).push_back(recipes[order[k]]);
    }
    return split;
}

double rmse(std::span<const double> predicted, std::span<const double> actual) {
    if (predicted.size() != actual.size()) {
        throw DataError("rmse: " + std::to_string(predicted.size()) + " predictions for " +
                        std::to_string(actual.size()) + " actuals");
    }
    if (predicted.empty()) throw DataError("rmse of an empty set");
    double ss = 0.0;
    for (std::size_t i = 0; i < predicted.size(); ++i) {
        const double d = predicted[i] - actual[i];
        ss += d * d;
    }
    return std::sqrt(ss / static_cast<double>(predicted.size()));
}

DatasetStats dataset_stats(const std::vector<LabeledRecipe>& recipes) {
    if (recipes.empty()) throw DataError("dataset statistics of an empty dataset");
    std::vector<double> cal;
    cal.reserve(recipes.size());
    for (const auto& r : recipes) cal.push_back(r.true_calories);
    return {stats::mean(cal), stats::stddev(cal)};
}

ConfigGrid ConfigGrid::standard() {
    return ConfigGrid{{1, 5, 10, 20, 25, 50, 75, 100},
                      {0.0, 0.5, 0.75, 0.9},
                      {Aggregation::Mean, Aggregation::Median, Aggregation::WeightedMean}};
}

std::vector<EstimatorConfig> ConfigGrid::configs() const {
    std::vector<EstimatorConfig> out;
    for (std::size_t nn : n) {
        for (double tt : t) {
            for (Aggregation mm : m) out.push_back({nn, tt, mm});
        }
    }
    return out;
}

bool ranks_before(const TuningResult& a, const TuningResult& b) {
    if (a.train_rmse != b.train_rmse) return a.train_rmse < b.train_rmse;
    if (a.config.n != b.config.n) return a.config.n < b.config.n;
    if (a.config.t != b.config.t) return a.config.t > b.config.t;
    return a.config.m < b.config.m;
}

// ---------------------------------------------------------------------------

namespace {

template <typename Fn>
void parallel_for(std::size_t count, std::size_t workers, Fn&& fn) {
    workers = std::clamp<std::size_t>(workers, 1, std::max<std::size_t>(count, 1));
    if (workers == 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::vector<std::exception_ptr> errors(workers);
    {
        std::vector<std::jthread> threads;
        for (std::size_t w = 0; w < workers; ++w) {
            threads.emplace_back([&, w] {
                try {
                    for (std::size_t i = w; i < count; i += workers) fn(i);
                } catch (...) {
                    errors[w] = std::current_exception();
                }
            });
        }
    }
    for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

}  // namespace

PreparedQueries::PreparedQueries(const std::vector<LabeledRecipe>& recipes, EvalContext ctx)
    : ctx_(ctx) {
    std::vector<std::string> normalized;
    normalized.reserve(recipes.size());
    for (const auto& r : recipes) {
        try {
            normalized.push_back(normalize_query_title(r.title));
        } catch (const QueryError& e) {
            throw DataError(std::string("labeled title cannot be normalized: ") + e.what());
        }
        actual_.push_back(r.true_calories);
    }
    ctx_.provider.check_available();
    auto results = ctx_.provider.embed_batch(normalized);
    embeddings_.reserve(results.size());
    for (auto& res : results) {
        if (!res.ok()) throw ProviderError(res.error);
        embeddings_.push_back(std::move(res.vector));
    }
}

void PreparedQueries::retrieve(std::size_t max_n, double min_t) {
    if (hits_.size() == embeddings_.size() && max_n <= max_n_ && min_t >= min_t_) return;
    hits_ = ctx_.index.query_batch(embeddings_, max_n, min_t, ctx_.workers);
    max_n_ = max_n;
    min_t_ = min_t;
}

std::vector<std::optional<double>> PreparedQueries::predict(const EstimatorConfig& cfg) const {
    cfg.validate();
    if (hits_.size() != embeddings_.size() || cfg.n > max_n_ || cfg.t < min_t_) {
        throw ParameterError("config outside the retrieved (n, t) envelope");
    }
    std::vector<std::optional<double>> out(hits_.size());
    std::vector<NeighborHit> kept;
    for (std::size_t i = 0; i < hits_.size(); ++i) {
        kept.clear();
        const auto& all = hits_[i];
        for (std::size_t k = 0; k < all.size() && kept.size() < cfg.n; ++k) {
            // ranked descending, so the first miss ends the surviving prefix
            if (all[k].similarity < cfg.t) break;
            kept.push_back(all[k]);
        }
        if (kept.empty()) continue;
        out[i] = aggregate(kept, ctx_.db, cfg.m).calories;
    }
    return out;
}

namespace {

TuningResult score(const EstimatorConfig& cfg, const std::vector<std::optional<double>>& predicted,
                   std::span<const double> actual) {
    std::vector<double> p;
    std::vector<double> a;
    for (std::size_t i = 0; i < predicted.size(); ++i) {
        if (!predicted[i]) continue;
        p.push_back(*predicted[i]);
        a.push_back(actual[i]);
    }
    TuningResult r{cfg, 0.0, 0.0};
    r.coverage = static_cast<double>(p.size()) / static_cast<double>(predicted.size());
    if (!p.empty()) r.train_rmse = rmse(p, a);
    return r;
}

}  // namespace

GridReport grid_search(const std::vector<LabeledRecipe>& train, const ConfigGrid& grid,
                       EvalContext ctx) {
    const auto configs = grid.configs();
    if (configs.empty()) throw ParameterError("hyperparameter grid is empty");
    if (train.empty()) throw DataError("training set is empty");
    for (const auto& c : configs) c.validate();

    std::size_t max_n = 0;
    double min_t = 1.0;
    for (const auto& c : configs) {
        max_n = std::max(max_n, c.n);
        min_t = std::min(min_t, c.t);
    }

    PreparedQueries prepared(train, ctx);
    prepared.retrieve(max_n, min_t);

    std::vector<TuningResult> results(configs.size());
    parallel_for(configs.size(), ctx.workers, [&](std::size_t i) {
        results[i] = score(configs[i], prepared.predict(configs[i]), prepared.actual());
    });

    GridReport report;
    for (auto& r : results) {
        (r.coverage > 0.0 ? report.ranked : report.excluded).push_back(r);
    }
    std::sort(report.ranked.begin(), report.ranked.end(), ranks_before);
    return report;
}

EvalResult evaluate(const EstimatorConfig& config, const std::vector<LabeledRecipe>& test,
                    EvalContext ctx) {
    config.validate();
    if (test.empty()) throw DataError("test set is empty");
    PreparedQueries prepared(test, ctx);
    prepared.retrieve(config.n, config.t);
    const TuningResult r = score(config, prepared.predict(config), prepared.actual());
    if (r.coverage == 0.0) throw DataError("no test title produced an estimate");
    return {r.train_rmse, r.coverage};
}

void write_tuning_report(const GridReport& report, std::ostream& out,
                         const std::optional<std::pair<EstimatorConfig, EvalResult>>& test) {
    out << "n,t,m,train_rmse,coverage\n";
    auto row = [&](const TuningResult& r, bool has_rmse) {
        out << r.config.n << ',' << csv::format_number(r.config.t) << ','
            << aggregation_name(r.config.m) << ','
            << (has_rmse ? csv::format_number(r.train_rmse) : std::string{}) << ','
            << csv::format_number(r.coverage) << '\n';
    };
    for (const auto& r : report.ranked) row(r, true);
    for (const auto& r : report.excluded) row(r, false);
    if (test) {
        const auto& [cfg, res] = *test;
        out << "# test n=" << cfg.n << " t=" << csv::format_number(cfg.t)
            << " m=" << aggregation_name(cfg.m) << " test_rmse=" << csv::format_number(res.rmse)
            << " coverage=" << csv::format_number(res.coverage) << '\n';
    }
}

// ---------------------------------------------------------------------------

BaselineResult baseline_eval(CalorieClient& client, const std::vector<LabeledRecipe>& test) {
    std::vector<double> p;
    std::vector<double> a;
    BaselineResult result;
    for (const auto& r : test) {
        try {
            const double v = client.calories_per_100g(r.title);
            p.push_back(v);
            a.push_back(r.true_calories);
            ++result.successes;
        } catch (const ProviderError&) {
            ++result.failures;
        }
    }
    if (p.empty()) throw DataError("baseline estimator failed for every title");
    result.rmse = rmse(p, a);
    return result;
}

}  // namespace nutri
