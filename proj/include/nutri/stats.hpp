#pragma once

#include <span>
#include <vector>

namespace nutri::stats {

// True median; mean of the two middle values for even counts.
// Throws DataError on empty input.
double median(std::vector<double> values);

double mean(std::span<const double> values);

// Population standard deviation.
double stddev(std::span<const double> values);

}  // namespace nutri::stats
