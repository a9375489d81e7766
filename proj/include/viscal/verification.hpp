#pragma once

#include <cstdint>
#include <json.hpp>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "viscal/distribution.hpp"
#include "viscal/rng.hpp"
#include "viscal/time.hpp"

namespace viscal {

// Continuous ranked probability score in meters, from the pairwise identity
// sum_k p_k|y_k - x| - sum_{k>l} p_k p_l (y_k - y_l) with x the observed
// scale value.
double crps(const PredictiveDistribution& f, int obs_class);

// Smallest admissible class probability: the chance of a once-a-year event
// under a yearly exceedance probability pi.
double logs_floor_min(double pi = 0.01);

// Logarithmic score in nats after flooring every PMF entry at the minimum
// and renormalizing, so no class scores infinitely badly.
double logs(const PredictiveDistribution& f, int obs_class, double pi = 0.01);

// Randomized probability integral transform: CDF just below the observed
// class plus u times its probability.
double pit_value(const PredictiveDistribution& f, int obs_class, double u);

std::vector<std::size_t> pit_histogram(const std::vector<double>& values,
                                       int n_bins);

struct KsResult {
  double statistic;
  double p_value;
};

// Two-sided Kolmogorov-Smirnov distance against the standard uniform with
// the asymptotic p-value (Stephens' small-sample adjustment).
KsResult ks_uniformity(std::vector<double> values);

struct Interval {
  double lo;  // meters
  double hi;  // meters
};

// Central interval from the left-continuous inverse CDF: the smallest scale
// values whose cumulative probability reaches each tail level.
Interval central_interval(const PredictiveDistribution& f, double level = 0.9);

double mean_of(const PredictiveDistribution& f);

double rmse_of_mean(
    const std::vector<std::pair<PredictiveDistribution, int>>& cases);

// 1 - score/reference_score; positive when the forecast beats the reference.
double skill_score(double mean_score, double mean_score_ref);

// Inverse standard normal CDF (Acklam's rational approximation).
double normal_quantile(double p);

// One resampled index path of the stationary scheme: blocks restart with
// probability 1/mean_block_len and wrap around the series circularly. When
// n_blocks is given it receives the number of blocks started.
std::vector<int> stationary_bootstrap_indices(int n, double mean_block_len,
                                              Rng& rng,
                                              std::size_t* n_blocks = nullptr);

struct BootstrapCi {
  double point;
  double lo;
  double hi;
};

// Confidence interval for the mean of a time-ordered score series: normal
// approximation around the point estimate with the bootstrap standard
// deviation. mean_block_len <= 0 selects ceil(n^(1/3)).
BootstrapCi stationary_bootstrap_ci(const std::vector<double>& series,
                                    int n_boot, double mean_block_len,
                                    double level, std::uint64_t seed);

// One scored case as the report sees it: the observation plus the PMFs of
// the model and both references, ordered by valid time within a lead time.
struct ScoredCase {
  std::string station_id;
  TimePoint init_time = 0;
  int lead_h = 0;
  TimePoint valid_time = 0;
  int obs_class = 1;
  PredictiveDistribution model;
  PredictiveDistribution climatology;
  PredictiveDistribution raw;
};

struct ScoreRow {
  int lead_h = 0;
  std::string source;  // model name, "climatology", or "raw"
  double mean_crps = 0.0;
  double mean_logs = 0.0;
  double coverage90 = 0.0;
  double mean_width = 0.0;
  double rmse_mean = 0.0;
  double crpss = 0.0;
  double crpss_lo = 0.0;
  double crpss_hi = 0.0;
  double logss = 0.0;
  double logss_lo = 0.0;
  double logss_hi = 0.0;
  std::size_t n_cases = 0;
};

struct ReportConfig {
  std::string model_name = "polr";
  std::string reference = "raw";  // "raw" or "climatology"
  int n_boot = 2000;
  double mean_block_len = 0.0;  // <= 0 selects ceil(n^(1/3))
  double interval_level = 0.9;
  double ci_level = 0.95;
  double logs_pi = 0.01;
  std::uint64_t seed = 0;
};

struct ScoreReport {
  std::string reference;
  std::vector<ScoreRow> rows;  // one per (lead time, source)
};

// Skill-score confidence bounds come from resampling the per-case (score,
// reference score) pairs jointly with the stationary scheme and taking the
// spread of the skill over the replicates.
ScoreReport aggregate_report(const std::vector<ScoredCase>& cases,
                             const ReportConfig& cfg);

// PIT values per (lead time, source); the uniform draws derive from the seed
// and the case identity, so results do not depend on evaluation order.
std::map<std::pair<int, std::string>, std::vector<double>> collect_pit(
    const std::vector<ScoredCase>& cases, const std::string& model_name,
    std::uint64_t seed);

std::string score_report_csv(const ScoreReport& report);
nlohmann::json score_report_json(const ScoreReport& report);
std::string pit_bins_csv(
    const std::map<std::pair<int, std::string>, std::vector<double>>& pit,
    int n_bins);

}  // namespace viscal
