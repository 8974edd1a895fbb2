#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace psfcp {

using ModelVector = std::vector<double>;
using ClientId = std::size_t;  // 0-based everywhere in the library

struct Sample {
    std::vector<double> x;
    double y = 0.0;
};

using SampleList = std::vector<Sample>;

double dot(std::span<const double> a, std::span<const double> b);

/// Squared Euclidean distance.
double squared_distance(std::span<const double> a, std::span<const double> b);

}  // namespace psfcp
