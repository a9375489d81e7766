#pragma once

#include <array>

namespace viscal {

// Number of reportable visibility values: 0 to 5000 m in 100 m steps,
// 6000 to 30000 m in 1000 m steps, 35000 to 70000 m in 5000 m steps.
inline constexpr int kNumClasses = 84;

// The ordered reporting scale in meters; classes are indexed 1..84.
const std::array<double, kNumClasses>& scale_values();

// Meters of class k; throws ValidationError outside 1..84.
double value_of(int k);

// Class of an exact scale value; throws ValidationError off the scale.
int class_of(double meters);

// Largest class whose value does not exceed v; values above 70000 m report
// the top class. Negative v throws ValidationError.
int round_down(double meters);

}  // namespace viscal
