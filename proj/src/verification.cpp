#include "viscal/verification.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <tuple>

#include "viscal/csv.hpp"
#include "viscal/errors.hpp"

namespace viscal {

namespace {

constexpr double kPi = 3.14159265358979323846;

// Compensated accumulator; the CRPS identity mixes terms of very different
// magnitude and plain summation would lose digits.
class KahanSum {
public:
  void add(double v) {
    const double y = v - c_;
    const double t = sum_ + y;
    c_ = (t - sum_) - y;
    sum_ = t;
  }
  double value() const { return sum_; }

private:
  double sum_ = 0.0;
  double c_ = 0.0;
};

}  // namespace

double crps(const PredictiveDistribution& f, int obs_class) {
  validate_pmf(f);
  const auto& y = scale_values();
  const double x = value_of(obs_class);
  KahanSum first;
  for (int k = 0; k < kNumClasses; ++k) {
    first.add(f.pmf[static_cast<std::size_t>(k)] *
              std::abs(y[static_cast<std::size_t>(k)] - x));
  }
  KahanSum second;
  for (int k = 1; k < kNumClasses; ++k) {
    const double pk = f.pmf[static_cast<std::size_t>(k)];
    if (pk == 0.0) continue;
    for (int l = 0; l < k; ++l) {
      second.add(pk * f.pmf[static_cast<std::size_t>(l)] *
                 (y[static_cast<std::size_t>(k)] -
                  y[static_cast<std::size_t>(l)]));
    }
  }
  return first.value() - second.value();
}

double logs_floor_min(double pi) {
  if (!(pi > 0 && pi < 1)) {
    throw ValidationError("yearly exceedance probability must be in (0, 1)");
  }
  return 1.0 - std::pow(1.0 - pi, 1.0 / 365.0);
}

double logs(const PredictiveDistribution& f, int obs_class, double pi) {
  validate_pmf(f);
  const double p_min = logs_floor_min(pi);
  double total = 0.0;
  for (int k = 0; k < kNumClasses; ++k) {
    total += std::max(f.pmf[static_cast<std::size_t>(k)], p_min);
  }
  const double floored =
      std::max(f.pmf[static_cast<std::size_t>(obs_class - 1)], p_min);
  return -std::log(floored / total);
}

double pit_value(const PredictiveDistribution& f, int obs_class, double u) {
  validate_pmf(f);
  if (!(u >= 0.0 && u <= 1.0)) {
    throw ValidationError("randomization draw must lie in [0, 1]");
  }
  double below = 0.0;
  for (int k = 0; k + 1 < obs_class; ++k) {
    below += f.pmf[static_cast<std::size_t>(k)];
  }
  // The exact value lies in [0, 1]; summation error can spill a few ulp past
  // the ends, so clamp rather than hand invalid values to the consumers.
  return std::clamp(
      below + u * f.pmf[static_cast<std::size_t>(obs_class - 1)], 0.0, 1.0);
}

std::vector<std::size_t> pit_histogram(const std::vector<double>& values,
                                       int n_bins) {
  if (values.empty()) throw ValidationError("no PIT values to bin");
  if (n_bins < 1) throw ValidationError("need at least one bin");
  std::vector<std::size_t> bins(static_cast<std::size_t>(n_bins), 0);
  for (const double v : values) {
    if (!(v >= 0.0 && v <= 1.0)) {
      throw ValidationError("PIT value outside [0, 1]");
    }
    const int b = std::min(static_cast<int>(v * n_bins), n_bins - 1);
    ++bins[static_cast<std::size_t>(b)];
  }
  return bins;
}

KsResult ks_uniformity(std::vector<double> values) {
  if (values.empty()) throw ValidationError("no values for the test");
  std::sort(values.begin(), values.end());
  const double n = static_cast<double>(values.size());
  double d = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double v = values[i];
    if (!(v >= 0.0 && v <= 1.0)) {
      throw ValidationError("value outside [0, 1]");
    }
    d = std::max(d, (static_cast<double>(i) + 1.0) / n - v);
    d = std::max(d, v - static_cast<double>(i) / n);
  }
  // Stephens' finite-sample scaling of the asymptotic Kolmogorov law. The
  // alternating tail series only converges quickly for large arguments, so
  // small ones use the theta-function form of the CDF instead.
  const double lambda = d * (std::sqrt(n) + 0.12 + 0.11 / std::sqrt(n));
  double p;
  if (lambda < 1.18) {
    const double t = std::exp(-kPi * kPi / (8.0 * lambda * lambda));
    const double cdf = std::sqrt(2.0 * kPi) / lambda *
                       (t + std::pow(t, 9.0) + std::pow(t, 25.0));
    p = 1.0 - cdf;
  } else {
    p = 0.0;
    double sign = 1.0;
    for (int j = 1; j <= 100; ++j) {
      const double term = std::exp(-2.0 * j * j * lambda * lambda);
      p += 2.0 * sign * term;
      sign = -sign;
      if (term < 1e-12) break;
    }
  }
  return {d, std::clamp(p, 0.0, 1.0)};
}

Interval central_interval(const PredictiveDistribution& f, double level) {
  validate_pmf(f);
  if (!(level > 0.0 && level < 1.0)) {
    throw ValidationError("interval level must lie strictly in (0, 1)");
  }
  const double tail = (1.0 - level) / 2.0;
  const auto cdf = cumulative(f);
  const auto& y = scale_values();
  Interval out{y.back(), y.back()};
  for (int k = 0; k < kNumClasses; ++k) {
    if (cdf[static_cast<std::size_t>(k)] >= tail) {
      out.lo = y[static_cast<std::size_t>(k)];
      break;
    }
  }
  for (int k = 0; k < kNumClasses; ++k) {
    if (cdf[static_cast<std::size_t>(k)] >= 1.0 - tail) {
      out.hi = y[static_cast<std::size_t>(k)];
      break;
    }
  }
  return out;
}

double mean_of(const PredictiveDistribution& f) {
  validate_pmf(f);
  const auto& y = scale_values();
  double m = 0.0;
  for (int k = 0; k < kNumClasses; ++k) {
    m += f.pmf[static_cast<std::size_t>(k)] * y[static_cast<std::size_t>(k)];
  }
  return m;
}

double rmse_of_mean(
    const std::vector<std::pair<PredictiveDistribution, int>>& cases) {
  if (cases.empty()) throw ValidationError("no cases for the RMSE");
  double ss = 0.0;
  for (const auto& [f, obs] : cases) {
    const double e = mean_of(f) - value_of(obs);
    ss += e * e;
  }
  return std::sqrt(ss / static_cast<double>(cases.size()));
}

double skill_score(double mean_score, double mean_score_ref) {
  if (!(mean_score_ref > 0.0)) {
    throw ValidationError("reference score must be positive");
  }
  return 1.0 - mean_score / mean_score_ref;
}

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    throw ValidationError("quantile level must lie strictly in (0, 1)");
  }
  // Acklam's rational approximation, relative error below 1.2e-9.
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                             2.445134137142996e+00, 3.754408661907416e+00};
  const double p_low = 0.02425;
  double q, r;
  if (p < p_low) {
    q = std::sqrt(-2.0 * std::log(p));
    return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q +
            c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  if (p <= 1.0 - p_low) {
    q = p - 0.5;
    r = q * q;
    return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r +
            a[5]) *
           q /
           (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  }
  q = std::sqrt(-2.0 * std::log(1.0 - p));
  return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q +
           c[5]) /
         ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
}

std::vector<int> stationary_bootstrap_indices(int n, double mean_block_len,
                                              Rng& rng,
                                              std::size_t* n_blocks) {
  if (n < 1) throw ValidationError("series must not be empty");
  if (!(mean_block_len >= 1.0)) {
    throw ValidationError("mean block length must be at least 1");
  }
  const double restart_prob = 1.0 / mean_block_len;
  std::vector<int> idx(static_cast<std::size_t>(n));
  std::size_t blocks = 0;
  int cur = 0;
  for (int t = 0; t < n; ++t) {
    if (t == 0 || rng.uniform() < restart_prob) {
      cur = static_cast<int>(rng.below(static_cast<std::uint64_t>(n)));
      ++blocks;
    } else {
      cur = (cur + 1) % n;
    }
    idx[static_cast<std::size_t>(t)] = cur;
  }
  if (n_blocks != nullptr) *n_blocks = blocks;
  return idx;
}

BootstrapCi stationary_bootstrap_ci(const std::vector<double>& series,
                                    int n_boot, double mean_block_len,
                                    double level, std::uint64_t seed) {
  const int n = static_cast<int>(series.size());
  if (n < 2) throw ValidationError("series needs at least 2 entries");
  if (n_boot < 2) throw ValidationError("need at least 2 resamples");
  if (mean_block_len <= 0.0) {
    mean_block_len = std::ceil(std::cbrt(static_cast<double>(n)));
  }
  double point = 0.0;
  for (const double v : series) point += v;
  point /= static_cast<double>(n);

  double sum = 0.0, sum_sq = 0.0;
  for (int b = 0; b < n_boot; ++b) {
    // One generator per replicate index, so results do not depend on the
    // order replicates are drawn in.
    Rng rng(combine_seed(combine_seed(seed, "bootstrap"),
                         static_cast<std::uint64_t>(b)));
    const std::vector<int> idx =
        stationary_bootstrap_indices(n, mean_block_len, rng);
    double m = 0.0;
    for (const int i : idx) m += series[static_cast<std::size_t>(i)];
    m /= static_cast<double>(n);
    sum += m;
    sum_sq += m * m;
  }
  const double nb = static_cast<double>(n_boot);
  const double var = std::max(0.0, (sum_sq - sum * sum / nb) / (nb - 1.0));
  const double sd = std::sqrt(var);
  const double z = normal_quantile(0.5 + level / 2.0);
  return {point, point - z * sd, point + z * sd};
}

namespace {

struct SkillCi {
  double point;
  double lo;
  double hi;
};

// Joint resampling of the paired per-case scores: each replicate recomputes
// the skill from the same index path applied to both series, preserving
// their dependence.
SkillCi paired_skill_ci(const std::vector<double>& score,
                        const std::vector<double>& ref_score, int n_boot,
                        double mean_block_len, double ci_level,
                        std::uint64_t seed) {
  const int n = static_cast<int>(score.size());
  double s_sum = 0.0, r_sum = 0.0;
  for (int i = 0; i < n; ++i) {
    s_sum += score[static_cast<std::size_t>(i)];
    r_sum += ref_score[static_cast<std::size_t>(i)];
  }
  const double point = skill_score(s_sum / n, r_sum / n);
  if (mean_block_len <= 0.0) {
    mean_block_len = std::ceil(std::cbrt(static_cast<double>(n)));
  }
  double sum = 0.0, sum_sq = 0.0;
  for (int b = 0; b < n_boot; ++b) {
    Rng rng(combine_seed(combine_seed(seed, "bootstrap"),
                         static_cast<std::uint64_t>(b)));
    const std::vector<int> idx =
        stationary_bootstrap_indices(n, mean_block_len, rng);
    double s = 0.0, r = 0.0;
    for (const int i : idx) {
      s += score[static_cast<std::size_t>(i)];
      r += ref_score[static_cast<std::size_t>(i)];
    }
    const double sk = 1.0 - s / r;
    sum += sk;
    sum_sq += sk * sk;
  }
  const double nb = static_cast<double>(n_boot);
  const double var = std::max(0.0, (sum_sq - sum * sum / nb) / (nb - 1.0));
  const double sd = std::sqrt(var);
  const double z = normal_quantile(0.5 + ci_level / 2.0);
  return {point, point - z * sd, point + z * sd};
}

const PredictiveDistribution& source_pmf(const ScoredCase& c,
                                         const std::string& source,
                                         const std::string& model_name) {
  if (source == model_name) return c.model;
  if (source == "climatology") return c.climatology;
  if (source == "raw") return c.raw;
  throw ValidationError("unknown forecast source '" + source + "'");
}

}  // namespace

ScoreReport aggregate_report(const std::vector<ScoredCase>& cases,
                             const ReportConfig& cfg) {
  if (cases.empty()) throw ValidationError("no cases to aggregate");
  if (cfg.model_name == "climatology" || cfg.model_name == "raw") {
    throw ValidationError(
        "model name collides with a reference forecast source");
  }
  if (cfg.reference != "raw" && cfg.reference != "climatology") {
    throw ValidationError("reference must be 'raw' or 'climatology'");
  }

  std::vector<int> leads;
  for (const auto& c : cases) {
    if (std::find(leads.begin(), leads.end(), c.lead_h) == leads.end()) {
      leads.push_back(c.lead_h);
    }
  }
  std::sort(leads.begin(), leads.end());

  ScoreReport report;
  report.reference = cfg.reference;
  const std::vector<std::string> sources = {cfg.model_name, "climatology",
                                            "raw"};

  for (const int lead : leads) {
    // Scores form a time series per lead: ordered by valid time, then
    // station, matching the block-resampling assumption.
    std::vector<const ScoredCase*> lead_cases;
    for (const auto& c : cases) {
      if (c.lead_h == lead) lead_cases.push_back(&c);
    }
    std::sort(lead_cases.begin(), lead_cases.end(),
              [](const ScoredCase* a, const ScoredCase* b) {
                return std::tie(a->valid_time, a->station_id) <
                       std::tie(b->valid_time, b->station_id);
              });
    const std::size_t n = lead_cases.size();

    std::map<std::string, std::vector<double>> crps_series, logs_series;
    for (const auto& source : sources) {
      auto& cs = crps_series[source];
      auto& ls = logs_series[source];
      cs.reserve(n);
      ls.reserve(n);
      for (const ScoredCase* c : lead_cases) {
        const auto& pmf = source_pmf(*c, source, cfg.model_name);
        cs.push_back(crps(pmf, c->obs_class));
        ls.push_back(logs(pmf, c->obs_class, cfg.logs_pi));
      }
    }

    for (const auto& source : sources) {
      ScoreRow row;
      row.lead_h = lead;
      row.source = source;
      row.n_cases = n;

      double crps_sum = 0.0, logs_sum = 0.0, covered = 0.0, width_sum = 0.0,
             err_ss = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        crps_sum += crps_series[source][i];
        logs_sum += logs_series[source][i];
        const ScoredCase* c = lead_cases[i];
        const auto& pmf = source_pmf(*c, source, cfg.model_name);
        const Interval iv = central_interval(pmf, cfg.interval_level);
        const double obs = value_of(c->obs_class);
        if (iv.lo <= obs && obs <= iv.hi) covered += 1.0;
        width_sum += iv.hi - iv.lo;
        const double e = mean_of(pmf) - obs;
        err_ss += e * e;
      }
      row.mean_crps = crps_sum / static_cast<double>(n);
      row.mean_logs = logs_sum / static_cast<double>(n);
      row.coverage90 = covered / static_cast<double>(n);
      row.mean_width = width_sum / static_cast<double>(n);
      row.rmse_mean = std::sqrt(err_ss / static_cast<double>(n));

      const std::uint64_t lead_seed = combine_seed(
          combine_seed(combine_seed(cfg.seed, "skill"), source),
          static_cast<std::uint64_t>(lead));
      const SkillCi cs = paired_skill_ci(
          crps_series[source], crps_series[cfg.reference], cfg.n_boot,
          cfg.mean_block_len, cfg.ci_level, combine_seed(lead_seed, "crps"));
      row.crpss = cs.point;
      row.crpss_lo = cs.lo;
      row.crpss_hi = cs.hi;
      const SkillCi lsk = paired_skill_ci(
          logs_series[source], logs_series[cfg.reference], cfg.n_boot,
          cfg.mean_block_len, cfg.ci_level, combine_seed(lead_seed, "logs"));
      row.logss = lsk.point;
      row.logss_lo = lsk.lo;
      row.logss_hi = lsk.hi;
      report.rows.push_back(std::move(row));
    }
  }
  return report;
}

std::map<std::pair<int, std::string>, std::vector<double>> collect_pit(
    const std::vector<ScoredCase>& cases, const std::string& model_name,
    std::uint64_t seed) {
  if (model_name == "climatology" || model_name == "raw") {
    throw ValidationError(
        "model name collides with a reference forecast source");
  }
  std::map<std::pair<int, std::string>, std::vector<double>> out;
  const std::vector<std::string> sources = {model_name, "climatology", "raw"};
  for (const auto& c : cases) {
    // The draw is a pure function of the case identity, not of iteration
    // order, so parallel scoring cannot change it.
    const std::uint64_t case_seed = combine_seed(
        combine_seed(combine_seed(combine_seed(seed, "pit"), c.station_id),
                     static_cast<std::uint64_t>(c.init_time)),
        static_cast<std::uint64_t>(c.lead_h));
    for (const auto& source : sources) {
      Rng rng(combine_seed(case_seed, source));
      const double u = rng.uniform();
      out[{c.lead_h, source}].push_back(
          pit_value(source_pmf(c, source, model_name), c.obs_class, u));
    }
  }
  return out;
}

std::string score_report_csv(const ScoreReport& report) {
  std::string out =
      "lead_h,model,mean_crps,mean_logs,coverage90,mean_width,rmse_mean,"
      "crpss_vs_" +
      report.reference + ",crpss_lo,crpss_hi,logss_vs_" + report.reference +
      ",logss_lo,logss_hi,n_cases\n";
  for (const auto& r : report.rows) {
    out += std::to_string(r.lead_h);
    out += ',';
    out += r.source;
    for (const double v :
         {r.mean_crps, r.mean_logs, r.coverage90, r.mean_width, r.rmse_mean,
          r.crpss, r.crpss_lo, r.crpss_hi, r.logss, r.logss_lo, r.logss_hi}) {
      out += ',';
      out += format_double(v);
    }
    out += ',';
    out += std::to_string(r.n_cases);
    out += '\n';
  }
  return out;
}

nlohmann::json score_report_json(const ScoreReport& report) {
  nlohmann::json j;
  j["reference"] = report.reference;
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : report.rows) {
    rows.push_back({{"lead_h", r.lead_h},
                    {"source", r.source},
                    {"mean_crps", r.mean_crps},
                    {"mean_logs", r.mean_logs},
                    {"coverage90", r.coverage90},
                    {"mean_width", r.mean_width},
                    {"rmse_mean", r.rmse_mean},
                    {"crpss", r.crpss},
                    {"crpss_lo", r.crpss_lo},
                    {"crpss_hi", r.crpss_hi},
                    {"logss", r.logss},
                    {"logss_lo", r.logss_lo},
                    {"logss_hi", r.logss_hi},
                    {"n_cases", r.n_cases}});
  }
  j["rows"] = std::move(rows);
  return j;
}

std::string pit_bins_csv(
    const std::map<std::pair<int, std::string>, std::vector<double>>& pit,
    int n_bins) {
  std::string out = "lead_h,source,bin_lo,bin_hi,count\n";
  for (const auto& [key, values] : pit) {
    const auto bins = pit_histogram(values, n_bins);
    for (int b = 0; b < n_bins; ++b) {
      out += std::to_string(key.first);
      out += ',';
      out += key.second;
      out += ',';
      out += format_double(static_cast<double>(b) / n_bins);
      out += ',';
      out += format_double(static_cast<double>(b + 1) / n_bins);
      out += ',';
      out += std::to_string(bins[static_cast<std::size_t>(b)]);
      out += '\n';
    }
  }
  return out;
}

}  // namespace viscal
