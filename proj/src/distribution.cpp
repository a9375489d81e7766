#include "viscal/distribution.hpp"

#include <cmath>
#include <string>

#include "viscal/errors.hpp"

namespace viscal {

void validate_pmf(const PredictiveDistribution& f) {
  double sum = 0.0;
  for (int i = 0; i < kNumClasses; ++i) {
    const double p = f.pmf[static_cast<std::size_t>(i)];
    if (!(p >= 0.0)) {
      throw ValidationError("pmf entry " + std::to_string(i + 1) +
                            " is negative or not a number");
    }
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    throw ValidationError("pmf sums to " + std::to_string(sum) +
                          ", expected 1");
  }
}

std::array<double, kNumClasses> cumulative(const PredictiveDistribution& f) {
  std::array<double, kNumClasses> c{};
  double run = 0.0;
  for (int i = 0; i < kNumClasses; ++i) {
    run += f.pmf[static_cast<std::size_t>(i)];
    c[static_cast<std::size_t>(i)] = run;
  }
  return c;
}

}  // namespace viscal
