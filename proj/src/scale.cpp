#include "viscal/scale.hpp"

#include <algorithm>
#include <string>

#include "viscal/errors.hpp"

namespace viscal {

namespace {

std::array<double, kNumClasses> build_scale() {
  std::array<double, kNumClasses> v{};
  int i = 0;
  for (int m = 0; m <= 5000; m += 100) v[i++] = m;
  for (int m = 6000; m <= 30000; m += 1000) v[i++] = m;
  for (int m = 35000; m <= 70000; m += 5000) v[i++] = m;
  return v;
}

}  // namespace

const std::array<double, kNumClasses>& scale_values() {
  static const std::array<double, kNumClasses> values = build_scale();
  return values;
}

double value_of(int k) {
  if (k < 1 || k > kNumClasses) {
    throw ValidationError("class index out of range: " + std::to_string(k));
  }
  return scale_values()[static_cast<std::size_t>(k - 1)];
}

int class_of(double meters) {
  const auto& v = scale_values();
  const auto it = std::lower_bound(v.begin(), v.end(), meters);
  if (it == v.end() || *it != meters) {
    throw ValidationError("value not on the reporting scale: " +
                          std::to_string(meters));
  }
  return static_cast<int>(it - v.begin()) + 1;
}

int round_down(double meters) {
  if (!(meters >= 0)) {
    throw ValidationError("visibility must be non-negative, got " +
                          std::to_string(meters));
  }
  const auto& v = scale_values();
  // First value strictly greater than meters; the class sits just before it.
  const auto it = std::upper_bound(v.begin(), v.end(), meters);
  if (it == v.begin()) return 1;  // unreachable for meters >= 0, kept for safety
  return static_cast<int>(it - v.begin());
}

}  // namespace viscal
