#include "nutri/stats.hpp"

#include <algorithm>
#include <cmath>

#include "nutri/errors.hpp"

namespace nutri::stats {

double median(std::vector<double> values) {
    if (values.empty()) throw DataError("median of an empty set");
    std::sort(values.begin(), values.end());
    const std::size_t mid = values.size() / 2;
    if (values.size() % 2 == 1) return values[mid];
    return values[mid - 1] + (values[mid] - values[mid - 1]) / 2.0;
}

double mean(std::span<const double> values) {
    if (values.empty()) throw DataError("mean of an empty set");
    double sum = 0.0;
    for (double v : values) sum += v;
    return sum / static_cast<double>(values.size());
}

double stddev(std::span<const double> values) {
    const double mu = mean(values);
    double ss = 0.0;
    for (double v : values) ss += (v - mu) * (v - mu);
    return std::sqrt(ss / static_cast<double>(values.size()));
}

}  // namespace nutri::stats
