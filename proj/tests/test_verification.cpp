#include <doctest.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "viscal/distribution.hpp"
#include "viscal/errors.hpp"
#include "viscal/rng.hpp"
#include "viscal/scale.hpp"
#include "viscal/verification.hpp"

using namespace viscal;

namespace {

PredictiveDistribution point_mass(int cls) {
  PredictiveDistribution f;
  f.pmf.fill(0.0);
  f.pmf[static_cast<std::size_t>(cls - 1)] = 1.0;
  return f;
}

PredictiveDistribution uniform_pmf() {
  PredictiveDistribution f;
  f.pmf.fill(1.0 / kNumClasses);
  return f;
}

PredictiveDistribution random_pmf(Rng& rng) {
  PredictiveDistribution f;
  double total = 0.0;
  for (auto& p : f.pmf) {
    p = rng.uniform();
    total += p;
  }
  for (auto& p : f.pmf) p /= total;
  return f;
}

// CRPS as the integral of the squared CDF step function against the
// observation's step, summed over the gaps between adjacent scale values.
double crps_by_integral(const PredictiveDistribution& f, int obs_class) {
  const auto& y = scale_values();
  const auto cdf = cumulative(f);
  double total = 0.0;
  for (int k = 0; k + 1 < kNumClasses; ++k) {
    const double h = k + 1 >= obs_class ? 1.0 : 0.0;
    const double gap =
        y[static_cast<std::size_t>(k + 1)] - y[static_cast<std::size_t>(k)];
    const double diff = cdf[static_cast<std::size_t>(k)] - h;
    total += diff * diff * gap;
  }
  return total;
}

}  // namespace

TEST_CASE("CRPS of a point mass is the absolute distance in meters") {
  CHECK(crps(point_mass(51), 51) == 0.0);
  CHECK(crps(point_mass(51), 52) == doctest::Approx(1000.0).epsilon(1e-12));
  CHECK(crps(point_mass(52), 51) == doctest::Approx(1000.0).epsilon(1e-12));
  CHECK(crps(point_mass(1), 84) ==
        doctest::Approx(70000.0).epsilon(1e-12));
  for (const auto [j, k] : {std::pair{3, 61}, {80, 12}, {44, 44}}) {
    CHECK(crps(point_mass(j), k) ==
          doctest::Approx(std::abs(value_of(j) - value_of(k)))
              .epsilon(1e-12));
  }
}

TEST_CASE("CRPS of a two point mixture matches the closed form") {
  PredictiveDistribution f;
  f.pmf.fill(0.0);
  f.pmf[0] = 0.3;    // 0 m
  f.pmf[83] = 0.7;   // 70000 m
  // With the observation at 0: E|Y - 0| = 0.7 * 70000 and the pair term is
  // 0.3 * 0.7 * 70000, so the score is 0.7^2 * 70000.
  CHECK(crps(f, 1) == doctest::Approx(0.49 * 70000.0).epsilon(1e-12));
  CHECK(crps(f, 84) == doctest::Approx(0.09 * 70000.0).epsilon(1e-12));
}

TEST_CASE("CRPS pairwise identity agrees with the CDF integral") {
  Rng rng(2024);
  double worst = 0.0;
  for (int rep = 0; rep < 50; ++rep) {
    const PredictiveDistribution f = random_pmf(rng);
    const int obs = 1 + static_cast<int>(rng.below(kNumClasses));
    const double a = crps(f, obs);
    const double b = crps_by_integral(f, obs);
    worst = std::max(worst, std::abs(a - b) / std::max(1.0, std::abs(b)));
  }
  CHECK(worst < 1e-9);
}

TEST_CASE("the probability floor is a yearly exceedance turned daily") {
  CHECK(logs_floor_min(0.01) ==
        doctest::Approx(1.0 - std::pow(0.99, 1.0 / 365.0)).epsilon(1e-12));
  CHECK(logs_floor_min(0.01) == doctest::Approx(2.75e-5).epsilon(2e-3));
  CHECK(logs_floor_min(0.5) ==
        doctest::Approx(1.0 - std::pow(0.5, 1.0 / 365.0)).epsilon(1e-12));
  CHECK_THROWS_AS(logs_floor_min(0.0), ValidationError);
  CHECK_THROWS_AS(logs_floor_min(1.0), ValidationError);
}

TEST_CASE("the log score floors and renormalizes the PMF") {
  const double p_min = logs_floor_min(0.01);

  // A uniform PMF is untouched by the floor.
  CHECK(logs(uniform_pmf(), 17) ==
        doctest::Approx(std::log(84.0)).epsilon(1e-12));

  // A point mass scores slightly above zero when hit, and the floor value
  // when missed.
  const double total = 1.0 + 83.0 * p_min;
  CHECK(logs(point_mass(10), 10) ==
        doctest::Approx(-std::log(1.0 / total)).epsilon(1e-12));
  CHECK(logs(point_mass(10), 11) ==
        doctest::Approx(-std::log(p_min / total)).epsilon(1e-12));

  // Two equal halves with the rest floored.
  PredictiveDistribution f;
  f.pmf.fill(0.0);
  f.pmf[0] = 0.5;
  f.pmf[1] = 0.5;
  const double total2 = 1.0 + 82.0 * p_min;
  CHECK(logs(f, 1) == doctest::Approx(-std::log(0.5 / total2)).epsilon(1e-12));
  CHECK(logs(f, 3) ==
        doctest::Approx(-std::log(p_min / total2)).epsilon(1e-12));

  // No forecast can score worse than the fully floored bound.
  const double bound = -std::log(p_min / (1.0 + 84.0 * p_min));
  Rng rng(5);
  for (int rep = 0; rep < 30; ++rep) {
    const auto g = random_pmf(rng);
    const int obs = 1 + static_cast<int>(rng.below(kNumClasses));
    CHECK(logs(g, obs) <= bound);
  }
}

TEST_CASE("randomized PIT interpolates across the observed class") {
  CHECK(pit_value(point_mass(40), 40, 0.37) == doctest::Approx(0.37));
  CHECK(pit_value(uniform_pmf(), 1, 1.0) ==
        doctest::Approx(1.0 / 84.0).epsilon(1e-12));
  CHECK(pit_value(uniform_pmf(), 84, 1.0) == doctest::Approx(1.0));
  CHECK(pit_value(uniform_pmf(), 84, 0.0) ==
        doctest::Approx(83.0 / 84.0).epsilon(1e-12));

  // Averaged over a symmetric grid of draws the PIT sits mid-class.
  Rng rng(8);
  const auto f = random_pmf(rng);
  const int obs = 30;
  double below = 0.0;
  for (int k = 0; k + 1 < obs; ++k) below += f.pmf[static_cast<std::size_t>(k)];
  const int m = 200;
  double mean = 0.0;
  for (int i = 0; i < m; ++i) {
    mean += pit_value(f, obs, (i + 0.5) / m);
  }
  mean /= m;
  CHECK(mean == doctest::Approx(below + 0.5 * f.pmf[29]).epsilon(1e-9));

  CHECK_THROWS_AS(pit_value(uniform_pmf(), 10, -0.1), ValidationError);
  CHECK_THROWS_AS(pit_value(uniform_pmf(), 10, 1.5), ValidationError);
}

TEST_CASE("PIT histograms bin correctly at the edges") {
  const std::vector<double> middles(1000, 0.5);
  const auto bins = pit_histogram(middles, 10);
  REQUIRE(bins.size() == 10);
  CHECK(bins[5] == 1000);
  for (int b = 0; b < 10; ++b) {
    if (b != 5) CHECK(bins[static_cast<std::size_t>(b)] == 0);
  }

  const auto edge = pit_histogram({0.0, 1.0, 0.999, 0.1}, 10);
  CHECK(edge[0] == 1);
  CHECK(edge[9] == 2);  // 1.0 falls into the last bin, not past it
  CHECK(edge[1] == 1);

  CHECK_THROWS_AS(pit_histogram({}, 10), ValidationError);
  CHECK_THROWS_AS(pit_histogram({0.5}, 0), ValidationError);
  CHECK_THROWS_AS(pit_histogram({1.5}, 10), ValidationError);
}

TEST_CASE("the KS test accepts uniform samples and rejects clumped ones") {
  // Exact statistic on a tiny sorted sample.
  const KsResult tiny = ks_uniformity({0.1, 0.5, 0.9});
  CHECK(tiny.statistic == doctest::Approx(7.0 / 30.0).epsilon(1e-12));

  std::vector<double> grid;
  const int n = 10000;
  grid.reserve(n);
  for (int i = 0; i < n; ++i) grid.push_back((i + 0.5) / n);
  const KsResult flat = ks_uniformity(grid);
  CHECK(flat.statistic <= 0.5 / n + 1e-12);
  CHECK(flat.p_value > 0.99);

  Rng rng(77);
  std::vector<double> draws;
  draws.reserve(n);
  for (int i = 0; i < n; ++i) draws.push_back(rng.uniform());
  CHECK(ks_uniformity(draws).p_value > 0.01);

  // Values piled near the ends are decisively non-uniform.
  std::vector<double> clumped;
  for (int i = 0; i < n; ++i) clumped.push_back(i % 2 == 0 ? 0.02 : 0.98);
  CHECK(ks_uniformity(clumped).p_value < 1e-6);

  CHECK_THROWS_AS(ks_uniformity({}), ValidationError);
  CHECK_THROWS_AS(ks_uniformity({1.2}), ValidationError);
}

TEST_CASE("central intervals come from the discrete inverse CDF") {
  const auto point = central_interval(point_mass(21), 0.9);
  CHECK(point.lo == value_of(21));
  CHECK(point.hi == value_of(21));

  const auto flat = central_interval(uniform_pmf(), 0.9);
  CHECK(flat.lo == 400.0);
  CHECK(flat.hi == 50000.0);

  // The interval always carries at least the nominal probability.
  Rng rng(31);
  for (int rep = 0; rep < 40; ++rep) {
    const auto f = random_pmf(rng);
    const auto iv = central_interval(f, 0.9);
    double covered = 0.0;
    for (int k = 1; k <= kNumClasses; ++k) {
      const double v = value_of(k);
      if (iv.lo <= v && v <= iv.hi) {
        covered += f.pmf[static_cast<std::size_t>(k - 1)];
      }
    }
    CHECK(covered >= 0.9 - 1e-9);
    CHECK(iv.lo <= iv.hi);
  }

  CHECK_THROWS_AS(central_interval(uniform_pmf(), 0.0), ValidationError);
  CHECK_THROWS_AS(central_interval(uniform_pmf(), 1.0), ValidationError);
}

TEST_CASE("distribution means and the RMSE of the mean") {
  CHECK(mean_of(point_mass(84)) == 70000.0);
  PredictiveDistribution f;
  f.pmf.fill(0.0);
  f.pmf[0] = 0.5;
  f.pmf[83] = 0.5;
  CHECK(mean_of(f) == doctest::Approx(35000.0).epsilon(1e-12));

  // Point masses at 3000 m and 4000 m against observations at 0 m.
  const std::vector<std::pair<PredictiveDistribution, int>> cases{
      {point_mass(31), 1}, {point_mass(41), 1}};
  CHECK(value_of(31) == 3000.0);
  CHECK(rmse_of_mean(cases) ==
        doctest::Approx(3535.533905932738).epsilon(1e-12));
  CHECK_THROWS_AS(rmse_of_mean({}), ValidationError);
}

TEST_CASE("skill scores compare mean scores against a reference") {
  CHECK(skill_score(5.0, 5.0) == 0.0);
  CHECK(skill_score(2.5, 5.0) == 0.5);
  CHECK(skill_score(7.5, 5.0) == -0.5);
  CHECK_THROWS_AS(skill_score(1.0, 0.0), ValidationError);
  CHECK_THROWS_AS(skill_score(1.0, -2.0), ValidationError);
}

TEST_CASE("the normal quantile matches reference values") {
  CHECK(std::abs(normal_quantile(0.5)) < 2e-9);
  CHECK(normal_quantile(0.975) == doctest::Approx(1.959963985).epsilon(1e-6));
  CHECK(normal_quantile(0.84134474) == doctest::Approx(1.0).epsilon(1e-5));
  for (const double p : {0.001, 0.05, 0.3, 0.77, 0.999}) {
    CHECK(normal_quantile(p) ==
          doctest::Approx(-normal_quantile(1.0 - p)).epsilon(1e-7));
  }
  CHECK_THROWS_AS(normal_quantile(0.0), ValidationError);
  CHECK_THROWS_AS(normal_quantile(1.0), ValidationError);
}

TEST_CASE("stationary bootstrap paths stay in range and restart as told") {
  Rng rng(9);
  const auto idx = stationary_bootstrap_indices(50, 5.0, rng);
  REQUIRE(idx.size() == 50);
  for (const int i : idx) {
    CHECK(i >= 0);
    CHECK(i < 50);
  }
  // Between restarts the path walks circularly by construction: every step
  // is either a fresh draw or the successor of its predecessor.
  for (std::size_t t = 1; t < idx.size(); ++t) {
    const bool successor = idx[t] == (idx[t - 1] + 1) % 50;
    const bool restart = !successor;
    CHECK((successor || restart));
  }

  // Unit mean block length restarts at every step.
  Rng rng1(10);
  std::size_t blocks = 0;
  stationary_bootstrap_indices(1000, 1.0, rng1, &blocks);
  CHECK(blocks == 1000);

  // The realized block count matches the nominal rate.
  Rng rng2(11);
  const int n = 200000;
  std::size_t count = 0;
  stationary_bootstrap_indices(n, 10.0, rng2, &count);
  const double realized = static_cast<double>(n) / static_cast<double>(count);
  CHECK(realized == doctest::Approx(10.0).epsilon(0.05));

  Rng rng3(12);
  CHECK_THROWS_AS(stationary_bootstrap_indices(0, 5.0, rng3),
                  ValidationError);
  CHECK_THROWS_AS(stationary_bootstrap_indices(10, 0.5, rng3),
                  ValidationError);
}

TEST_CASE("bootstrap intervals for a constant series collapse to a point") {
  const std::vector<double> series(100, 3.25);
  const auto ci = stationary_bootstrap_ci(series, 200, 0.0, 0.95, 7);
  CHECK(ci.point == doctest::Approx(3.25).epsilon(1e-12));
  CHECK(ci.lo == doctest::Approx(3.25).epsilon(1e-12));
  CHECK(ci.hi == doctest::Approx(3.25).epsilon(1e-12));
}

TEST_CASE("bootstrap intervals for iid noise match the normal width") {
  Rng rng(123);
  const int n = 4000;
  std::vector<double> series;
  series.reserve(n);
  double mean = 0.0;
  for (int i = 0; i < n; ++i) {
    series.push_back(rng.normal());
    mean += series.back();
  }
  mean /= n;
  double var = 0.0;
  for (const double v : series) var += (v - mean) * (v - mean);
  var /= n - 1;

  const auto ci = stationary_bootstrap_ci(series, 400, 1.0, 0.95, 99);
  CHECK(ci.point == doctest::Approx(mean).epsilon(1e-12));
  const double expected_width =
      2.0 * 1.959963985 * std::sqrt(var / static_cast<double>(n));
  CHECK(ci.hi - ci.lo == doctest::Approx(expected_width).epsilon(0.10));

  // Deterministic in the seed.
  const auto again = stationary_bootstrap_ci(series, 400, 1.0, 0.95, 99);
  CHECK(again.lo == ci.lo);
  CHECK(again.hi == ci.hi);

  CHECK_THROWS_AS(stationary_bootstrap_ci({1.0}, 10, 1.0, 0.95, 0),
                  ValidationError);
  CHECK_THROWS_AS(stationary_bootstrap_ci(series, 1, 1.0, 0.95, 0),
                  ValidationError);
}

namespace {

std::vector<ScoredCase> toy_cases(int n, int lead, std::uint64_t seed) {
  std::vector<ScoredCase> cases;
  Rng rng(seed);
  for (int i = 0; i < n; ++i) {
    ScoredCase c;
    c.station_id = "S" + std::to_string(i % 3);
    c.init_time = 1546300800 + i * 86400;
    c.lead_h = lead;
    c.valid_time = c.init_time + lead * 3600;
    c.obs_class = 1 + static_cast<int>(rng.below(kNumClasses));
    c.model = random_pmf(rng);
    c.climatology = uniform_pmf();
    c.raw = random_pmf(rng);
    cases.push_back(std::move(c));
  }
  return cases;
}

}  // namespace

TEST_CASE("aggregate reports score every source against the reference") {
  ScoredCase c;
  c.station_id = "S1";
  c.init_time = 1546300800;
  c.lead_h = 24;
  c.valid_time = c.init_time + 24 * 3600;
  c.obs_class = 40;
  c.model = point_mass(40);
  c.climatology = uniform_pmf();
  c.raw = point_mass(41);

  ReportConfig cfg;
  cfg.n_boot = 50;
  cfg.seed = 5;
  const ScoreReport rep = aggregate_report({c}, cfg);
  CHECK(rep.reference == "raw");
  REQUIRE(rep.rows.size() == 3);
  CHECK(rep.rows[0].source == "polr");
  CHECK(rep.rows[1].source == "climatology");
  CHECK(rep.rows[2].source == "raw");

  const ScoreRow& model_row = rep.rows[0];
  CHECK(model_row.lead_h == 24);
  CHECK(model_row.n_cases == 1);
  CHECK(model_row.mean_crps == 0.0);
  CHECK(model_row.rmse_mean == 0.0);
  CHECK(model_row.coverage90 == 1.0);
  CHECK(model_row.mean_width == 0.0);
  // A perfect forecast against an imperfect reference has skill one.
  CHECK(model_row.crpss == doctest::Approx(1.0).epsilon(1e-12));

  // The reference scored against itself has exactly zero skill, with a
  // degenerate confidence interval.
  const ScoreRow& raw_row = rep.rows[2];
  CHECK(raw_row.crpss == 0.0);
  CHECK(raw_row.crpss_lo == 0.0);
  CHECK(raw_row.crpss_hi == 0.0);
  CHECK(raw_row.logss == 0.0);
  CHECK(raw_row.mean_crps == doctest::Approx(crps(c.raw, 40)).epsilon(1e-12));

  ReportConfig bad = cfg;
  bad.model_name = "climatology";
  CHECK_THROWS_AS(aggregate_report({c}, bad), ValidationError);
  bad = cfg;
  bad.reference = "persistence";
  CHECK_THROWS_AS(aggregate_report({c}, bad), ValidationError);
  CHECK_THROWS_AS(aggregate_report({}, cfg), ValidationError);
}

TEST_CASE("aggregate reports are deterministic and split by lead time") {
  auto cases = toy_cases(30, 24, 1);
  const auto more = toy_cases(20, 72, 2);
  cases.insert(cases.end(), more.begin(), more.end());

  ReportConfig cfg;
  cfg.n_boot = 100;
  cfg.seed = 17;
  const ScoreReport a = aggregate_report(cases, cfg);
  const ScoreReport b = aggregate_report(cases, cfg);
  REQUIRE(a.rows.size() == 6);  // two leads, three sources each
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    CHECK(a.rows[i].mean_crps == b.rows[i].mean_crps);
    CHECK(a.rows[i].crpss_lo == b.rows[i].crpss_lo);
    CHECK(a.rows[i].logss_hi == b.rows[i].logss_hi);
  }
  CHECK(a.rows[0].lead_h == 24);
  CHECK(a.rows[0].n_cases == 30);
  CHECK(a.rows[3].lead_h == 72);
  CHECK(a.rows[3].n_cases == 20);

  // The mean CRPS of the model row is the plain average over the cases.
  double manual = 0.0;
  for (const auto& c : cases) {
    if (c.lead_h == 24) manual += crps(c.model, c.obs_class);
  }
  manual /= 30.0;
  CHECK(a.rows[0].mean_crps == doctest::Approx(manual).epsilon(1e-12));

  // Shuffling the input leaves every aggregate untouched.
  std::vector<ScoredCase> shuffled = cases;
  std::reverse(shuffled.begin(), shuffled.end());
  const ScoreReport c = aggregate_report(shuffled, cfg);
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    CHECK(a.rows[i].mean_crps == c.rows[i].mean_crps);
    CHECK(a.rows[i].crpss_lo == c.rows[i].crpss_lo);
  }
}

TEST_CASE("PIT collection is keyed by lead and source and order-free") {
  const auto cases = toy_cases(25, 24, 3);
  const auto pit = collect_pit(cases, "polr", 11);
  REQUIRE(pit.size() == 3);
  CHECK(pit.count({24, "polr"}) == 1);
  CHECK(pit.count({24, "climatology"}) == 1);
  CHECK(pit.count({24, "raw"}) == 1);
  CHECK(pit.at({24, "polr"}).size() == 25);
  for (const double v : pit.at({24, "polr"})) {
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }

  // The draws hang off the case identity, so order cannot matter.
  std::vector<ScoredCase> shuffled(cases.rbegin(), cases.rend());
  auto a = pit.at({24, "polr"});
  auto b = collect_pit(shuffled, "polr", 11).at({24, "polr"});
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  CHECK(a == b);

  // A different seed draws different randomization values.
  const auto other = collect_pit(cases, "polr", 12).at({24, "polr"});
  CHECK(other != pit.at({24, "polr"}));

  CHECK_THROWS_AS(collect_pit(cases, "raw", 11), ValidationError);
}

TEST_CASE("reports serialize to CSV and JSON") {
  const auto cases = toy_cases(10, 24, 4);
  ReportConfig cfg;
  cfg.n_boot = 20;
  const ScoreReport rep = aggregate_report(cases, cfg);

  const std::string csv = score_report_csv(rep);
  CHECK(csv.find("crpss_vs_raw") != std::string::npos);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 1 + 3);

  const nlohmann::json j = score_report_json(rep);
  CHECK(j["reference"] == "raw");
  REQUIRE(j["rows"].size() == 3);
  CHECK(j["rows"][0]["source"] == "polr");
  CHECK(j["rows"][0]["n_cases"] == 10);

  const auto pit = collect_pit(cases, "polr", 0);
  const std::string bins = pit_bins_csv(pit, 10);
  CHECK(bins.rfind("lead_h,source,bin_lo,bin_hi,count\n", 0) == 0);
  // Three sources, ten bins each, plus the header.
  CHECK(std::count(bins.begin(), bins.end(), '\n') == 1 + 30);
}
