#include "viscal/features.hpp"

#include <algorithm>
#include <cmath>

#include "viscal/errors.hpp"

namespace viscal {

namespace {

constexpr double kTwoPi = 2.0 * 3.14159265358979323846;

double checked_normalize(double meters, double normalizer) {
  const double f = meters / normalizer;
  if (f > 1.0) {
    throw ValidationError("forecast value " + std::to_string(meters) +
                          " exceeds the normalizer " +
                          std::to_string(normalizer));
  }
  return f;
}

}  // namespace

std::vector<std::string> feature_names(const FeatureConfig& cfg) {
  std::vector<std::string> names;
  if (cfg.use_hres) names.push_back("hres");
  names.insert(names.end(), {"ctrl", "ens_mean", "ens_var", "p_low", "p_mid",
                             "p_high", "sin_doy", "cos_doy"});
  return names;
}

void validate_feature_config(const FeatureConfig& cfg) {
  if (!(0 < cfg.t1 && cfg.t1 < cfg.t2 && cfg.t2 < cfg.t3 &&
        cfg.t3 < cfg.normalizer)) {
    throw ValidationError(
        "feature thresholds must satisfy 0 < t1 < t2 < t3 < normalizer");
  }
}

FeatureVector extract_features(const ForecastCase& c,
                               const FeatureConfig& cfg) {
  validate_feature_config(cfg);
  const ForecastRecord& f = c.forecast;
  if (cfg.use_hres && !f.hres) {
    throw ValidationError("hres missing for station " + f.station_id +
                          " but the feature set requires it");
  }
  if (f.members.size() != kEnsembleMembers) {
    throw ValidationError("forecast for station " + f.station_id +
                          " has no complete member set");
  }

  // Sorted copies make every downstream sum independent of member order, so
  // exchangeable permutations reproduce the exact same doubles.
  std::vector<double> members = f.members;
  std::sort(members.begin(), members.end());
  std::vector<double> operational = f.members;
  operational.push_back(f.ctrl);
  std::sort(operational.begin(), operational.end());

  double member_sum = 0.0;
  for (const double m : members) {
    member_sum += checked_normalize(m, cfg.normalizer);
  }
  const double ens_mean = member_sum / static_cast<double>(members.size());

  double op_sum = 0.0;
  for (const double m : operational) op_sum += m / cfg.normalizer;
  const double op_mean = op_sum / static_cast<double>(operational.size());
  double ss = 0.0;
  for (const double m : operational) {
    const double d = m / cfg.normalizer - op_mean;
    ss += d * d;
  }
  const double ens_var = ss / static_cast<double>(operational.size() - 1);

  double n_low = 0, n_mid = 0, n_high = 0;
  for (const double m : operational) {
    if (m <= cfg.t1) ++n_low;
    else if (m <= cfg.t2) ++n_mid;
    if (m > cfg.t3) ++n_high;
  }
  const double n_op = static_cast<double>(operational.size());

  FeatureVector x;
  x.reserve(cfg.use_hres ? 9 : 8);
  if (cfg.use_hres) x.push_back(checked_normalize(*f.hres, cfg.normalizer));
  x.push_back(checked_normalize(f.ctrl, cfg.normalizer));
  x.push_back(ens_mean);
  x.push_back(ens_var);
  x.push_back(n_low / n_op);
  x.push_back(n_mid / n_op);
  x.push_back(n_high / n_op);
  x.push_back(std::sin(kTwoPi * c.day_of_year / 365.0));
  x.push_back(std::cos(kTwoPi * c.day_of_year / 365.0));
  return x;
}

std::vector<int> nonnegative_feature_indices(const FeatureConfig& cfg) {
  // hres, ctrl and the ensemble mean occupy the leading positions.
  return cfg.use_hres ? std::vector<int>{0, 1, 2} : std::vector<int>{0, 1};
}

}  // namespace viscal
