#include <httplib.h>

#include <cstdlib>
#include <fstream>
#include <json.hpp>

#include "nutri/csv.hpp"
#include "nutri/digest.hpp"
#include "nutri/errors.hpp"
#include "nutri/tuning.hpp"

namespace nutri {

CachingCalorieClient::CachingCalorieClient(CalorieClient& inner, std::filesystem::path cache_dir)
    : inner_(inner), cache_dir_(std::move(cache_dir)) {
    std::error_code ec;
    std::filesystem::create_directories(cache_dir_, ec);
    if (ec) throw IoError("cannot create baseline cache directory " + cache_dir_.string());
}

double CachingCalorieClient::calories_per_100g(const std::string& title) {
    const auto path = cache_dir_ / (sha256_hex(title) + ".txt");
    if (std::ifstream in(path); in) {
        std::string line;
        std::getline(in, line);
        if (const auto v = csv::parse_number(line)) {
            ++hits_;
            return *v;
        }
    }
    ++misses_;
    const double v = inner_.calories_per_100g(title);
    const auto tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::trunc);
        out << csv::format_number(v) << '\n';
        if (!out) throw IoError("cannot write baseline cache entry " + tmp);
    }
    std::filesystem::rename(tmp, path);
    return v;
}

CalorieNinjasClient::CalorieNinjasClient(std::string base_url, std::string api_key)
    : base_url_(std::move(base_url)), api_key_(std::move(api_key)) {}

CalorieNinjasClient CalorieNinjasClient::from_environment(std::string base_url) {
    const char* key = std::getenv(kApiKeyEnv);
    if (!key || !*key) {
        throw ProviderError(std::string("baseline credential ") + kApiKeyEnv + " is not set");
    }
    return CalorieNinjasClient(std::move(base_url), key);
}

double CalorieNinjasClient::parse_response(const std::string& body) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(body);
    } catch (const nlohmann::json::exception& e) {
        throw ProviderError(std::string("baseline response is not JSON: ") + e.what());
    }
    if (!j.contains("items") || !j["items"].is_array() || j["items"].empty()) {
        throw ProviderError("baseline response has no items");
    }
    double calories = 0.0;
    double grams = 0.0;
    for (const auto& item : j["items"]) {
        if (!item.contains("calories") || !item.contains("serving_size_g") ||
            !item["calories"].is_number() || !item["serving_size_g"].is_number()) {
            throw ProviderError("baseline response item lacks calories or serving_size_g");
        }
        calories += item["calories"].get<double>();
        grams += item["serving_size_g"].get<double>();
    }
    if (!(grams > 0.0)) throw ProviderError("baseline response has zero total serving size");
    return calories / grams * 100.0;
}

double CalorieNinjasClient::calories_per_100g(const std::string& title) {
    httplib::Client client(base_url_);
    client.set_connection_timeout(10);
    client.set_read_timeout(30);
    const httplib::Headers headers{{"X-Api-Key", api_key_}};
    const httplib::Params params{{"query", title}};
    auto res = client.Get("/v1/nutrition", params, headers);
    if (!res) {
        throw ProviderError("baseline request failed: " + httplib::to_string(res.error()));
    }
    if (res->status != 200) {
        throw ProviderError("baseline request returned HTTP " + std::to_string(res->status));
    }
    return parse_response(res->body);
}

}  // namespace nutri
