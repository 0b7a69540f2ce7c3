#pragma once

// Helpers for end-to-end tests that drive the built CLI.

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "nutri/embedding_store.hpp"
#include "nutri/provider.hpp"
#include "nutri/usda.hpp"
#include "test_paths.hpp"

namespace nutri::testing {

inline std::string shell_quote(const std::string& s) {
    std::string out = "'";
    for (char c : s) {
        if (c == '\'') out += "'\\''";
        else out += c;
    }
    return out + "'";
}

// Runs the CLI with stdout and stderr captured to files; returns the exit code.
inline int run_cli(const std::vector<std::string>& args, const std::filesystem::path& stdout_file,
                   const std::filesystem::path& stderr_file) {
    std::string cmd = shell_quote(NUTRI_CLI_PATH);
    for (const auto& a : args) cmd += " " + shell_quote(a);
    cmd += " >" + shell_quote(stdout_file.string()) + " 2>" + shell_quote(stderr_file.string());
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

// Food embeddings keyed by food id, produced by the fake embedder over names.
inline EmbeddingStore fake_food_store(const FoodDb& db) {
    ProcessProvider provider({NUTRI_FAKE_EMBEDDER});
    std::vector<std::string> names;
    for (const auto& r : db.records()) names.push_back(r.name);
    const auto vecs = provider.embed_batch(names);
    EmbeddingStore store(static_cast<std::uint32_t>(vecs.front().vector.size()), provider.model_tag());
    for (std::size_t i = 0; i < names.size(); ++i) {
        store.add(db.records()[i].id,
                  std::vector<float>(vecs[i].vector.begin(), vecs[i].vector.end()));
    }
    return store;
}

inline std::vector<std::string> ingest_args(const std::filesystem::path& out) {
    const auto usda = data_dir() / "usda";
    return {"ingest-usda",
            "--foundation-food", (usda / "foundation_food.csv").string(),
            "--foundation-nutrients", (usda / "foundation_food_nutrient.csv").string(),
            "--survey-food", (usda / "survey_food.csv").string(),
            "--survey-nutrients", (usda / "survey_food_nutrient.csv").string(),
            "--srlegacy-food", (usda / "srlegacy_food.csv").string(),
            "--srlegacy-nutrients", (usda / "srlegacy_food_nutrient.csv").string(),
            "--out", out.string()};
}

// Labeled titles built from the fixture food names with small variations,
// so the fake embedder finds exact or unrelated neighbors.
inline std::string labeled_fixture_csv() {
    return "title,calories_per_100g\n"
           "Cheddar Cheese,404\n"
           "cheddar cheese,400\n"
           "Grilled Beef,291\n"
           "grilled beef,280\n"
           "Strawberries,32\n"
           "strawberries,35\n"
           "Salted Butter,717\n"
           "salted butter,700\n"
           "Grilled Portabella Mushrooms,29\n"
           "From Restaurant Cheese Pizza,266\n"
           "Pancakes,227\n"
           "Banana Bread,326\n"
           "Tomato Soup,30\n"
           "Beef Stew,95\n"
           "Caesar Salad,127\n"
           "Pho,60\n"
           "Lasagna,135\n"
           "Fried Rice,163\n"
           "Apple Pie,237\n"
           "Sushi,150\n";
}

}  // namespace nutri::testing
