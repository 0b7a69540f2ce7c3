#include "nutri/nutrients.hpp"

namespace nutri {

std::string_view nutrient_name(Nutrient n) {
    switch (n) {
        case Nutrient::Calories: return "calories";
        case Nutrient::Protein: return "protein";
        case Nutrient::Fat: return "fat";
        case Nutrient::Carbohydrates: return "carbohydrates";
    }
    return "unknown";
}

std::optional<double>& NutrientVector::operator[](Nutrient n) {
    switch (n) {
        case Nutrient::Calories: return calories;
        case Nutrient::Protein: return protein;
        case Nutrient::Fat: return fat;
        case Nutrient::Carbohydrates: break;
    }
    return carbohydrates;
}

const std::optional<double>& NutrientVector::operator[](Nutrient n) const {
    return const_cast<NutrientVector&>(*this)[n];
}

}  // namespace nutri
