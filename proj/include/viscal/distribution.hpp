#pragma once

#include <array>

#include "viscal/scale.hpp"

namespace viscal {

// Probability mass over the 84 reportable classes, aligned with scale_values().
struct PredictiveDistribution {
  std::array<double, kNumClasses> pmf{};
};

// Throws ValidationError unless every entry is non-negative and the total is
// within 1e-9 of one.
void validate_pmf(const PredictiveDistribution& f);

// Running totals of the PMF; the last entry is the (near-1) total itself.
std::array<double, kNumClasses> cumulative(const PredictiveDistribution& f);

}  // namespace viscal
