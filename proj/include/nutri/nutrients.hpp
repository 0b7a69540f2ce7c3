#pragma once

#include <array>
#include <optional>
#include <string_view>

namespace nutri {

enum class Nutrient { Calories, Protein, Fat, Carbohydrates };

inline constexpr std::array<Nutrient, 4> kAllNutrients = {
    Nutrient::Calories, Nutrient::Protein, Nutrient::Fat, Nutrient::Carbohydrates};

std::string_view nutrient_name(Nutrient n);

// Macro-nutrients per 100 g. Any field may be absent.
struct NutrientVector {
    std::optional<double> calories;
    std::optional<double> protein;
    std::optional<double> fat;
    std::optional<double> carbohydrates;

    std::optional<double>& operator[](Nutrient n);
    const std::optional<double>& operator[](Nutrient n) const;

    bool operator==(const NutrientVector&) const = default;
};

}  // namespace nutri
