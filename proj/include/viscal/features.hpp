#pragma once

#include <string>
#include <vector>

#include "viscal/data.hpp"

namespace viscal {

struct FeatureConfig {
  bool use_hres = false;
  // Proportion thresholds in raw meters.
  double t1 = 1000.0;
  double t2 = 2000.0;
  double t3 = 30000.0;
  double normalizer = 70000.0;
};

// Ordered components: optional normalized hres, normalized ctrl, mean of the
// 50 normalized members, variance of the 51 normalized operational values
// (ctrl plus members), member proportions at or below t1, in (t1, t2], and
// above t3, then the annual harmonics sin/cos(2*pi*doy/365).
using FeatureVector = std::vector<double>;

std::vector<std::string> feature_names(const FeatureConfig& cfg);

void validate_feature_config(const FeatureConfig& cfg);

// Throws ValidationError when hres is required but absent, when members are
// missing, or when any forecast value exceeds the normalizer (no clamping is
// performed).
FeatureVector extract_features(const ForecastCase& c, const FeatureConfig& cfg);

// Indices of the covariates that a non-negativity constraint applies to:
// the direct visibility predictors (hres if present, ctrl, ensemble mean).
std::vector<int> nonnegative_feature_indices(const FeatureConfig& cfg);

}  // namespace viscal
