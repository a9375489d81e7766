#include <doctest.h>

#include <algorithm>
#include <array>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "viscal/data.hpp"
#include "viscal/errors.hpp"
#include "viscal/rng.hpp"
#include "viscal/scale.hpp"
#include "viscal/simulate.hpp"
#include "viscal/time.hpp"
#include "viscal/training.hpp"

using namespace viscal;

namespace {

ObservationRecord obs_at(const std::string& station, Date d, int hour,
                         int cls) {
  ObservationRecord o;
  o.station_id = station;
  o.valid_time = time_at(d, hour);
  o.visibility_class = cls;
  return o;
}

bool same_pmf(const PredictiveDistribution& a,
              const PredictiveDistribution& b) {
  return a.pmf == b.pmf;
}

bool same_rows(const std::vector<ResultRow>& a,
               const std::vector<ResultRow>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].station_id != b[i].station_id) return false;
    if (a[i].init_time != b[i].init_time) return false;
    if (a[i].lead_h != b[i].lead_h) return false;
    if (a[i].valid_time != b[i].valid_time) return false;
    if (a[i].obs_class != b[i].obs_class) return false;
    if (!same_pmf(a[i].model, b[i].model)) return false;
    if (!same_pmf(a[i].climatology, b[i].climatology)) return false;
    if (!same_pmf(a[i].raw, b[i].raw)) return false;
  }
  return true;
}

SimConfig small_sim() {
  SimConfig cfg;
  cfg.n_stations = 4;
  cfg.start_date = to_date(CivilDate{2019, 1, 1});
  cfg.n_days = 100;
  cfg.lead_times_h = {24};
  return cfg;
}

ExperimentConfig small_experiment() {
  ExperimentConfig cfg;
  cfg.model = ModelKind::polr;
  cfg.scheme.kind = SchemeKind::regional;
  cfg.training_length = 60;
  cfg.climatology_length = 20;
  cfg.lead_times_h = {24};
  cfg.verif_start = to_date(CivilDate{2019, 3, 20});
  cfg.verif_end = to_date(CivilDate{2019, 3, 21});
  cfg.master_seed = 4242;
  return cfg;
}

}  // namespace

TEST_CASE("scheme and model names round-trip") {
  CHECK(scheme_name(SchemeKind::local) == "local");
  CHECK(scheme_name(SchemeKind::semi_local) == "semi_local");
  CHECK(scheme_name(SchemeKind::regional) == "regional");
  for (const auto k :
       {SchemeKind::local, SchemeKind::semi_local, SchemeKind::regional}) {
    CHECK(scheme_of_name(scheme_name(k)) == k);
  }
  CHECK_THROWS_AS(scheme_of_name("global"), ValidationError);

  CHECK(model_name(ModelKind::polr) == "polr");
  CHECK(model_name(ModelKind::mlp) == "mlp");
  CHECK(model_of_name("polr") == ModelKind::polr);
  CHECK(model_of_name("mlp") == ModelKind::mlp);
  CHECK_THROWS_AS(model_of_name("forest"), ValidationError);
}

TEST_CASE("rolling windows end the day before their target") {
  const Date target = to_date(CivilDate{2021, 1, 1});
  const Date data_start = to_date(CivilDate{2020, 1, 1});

  const auto plans = rolling_windows({target}, 350, data_start);
  REQUIRE(plans.size() == 1);
  CHECK(plans[0].target == target);
  CHECK(plans[0].feasible);
  CHECK(plans[0].window.end == to_date(CivilDate{2020, 12, 31}));
  CHECK(plans[0].window.start == to_date(CivilDate{2020, 1, 17}));

  const auto one_day = rolling_windows({target}, 1, data_start);
  CHECK(one_day[0].window.start == target - 1);
  CHECK(one_day[0].window.end == target - 1);

  const auto late_start =
      rolling_windows({target}, 350, to_date(CivilDate{2020, 2, 1}));
  CHECK_FALSE(late_start[0].feasible);

  const auto exact_start =
      rolling_windows({target}, 350, to_date(CivilDate{2020, 1, 17}));
  CHECK(exact_start[0].feasible);

  const auto multi =
      rolling_windows({target, target + 5}, 30, data_start);
  REQUIRE(multi.size() == 2);
  CHECK(multi[1].window.end == target + 4);
  CHECK(multi[1].window.start == target + 4 - 29);

  CHECK_THROWS_AS(rolling_windows({target}, 0, data_start), ValidationError);
}

TEST_CASE("earliest observation date scans every record") {
  std::vector<ObservationRecord> obs;
  obs.push_back(obs_at("B", to_date(CivilDate{2020, 5, 3}), 12, 10));
  obs.push_back(obs_at("A", to_date(CivilDate{2020, 4, 30}), 18, 3));
  obs.push_back(obs_at("C", to_date(CivilDate{2020, 6, 1}), 0, 84));
  CHECK(earliest_observation_date(obs) == to_date(CivilDate{2020, 4, 30}));
  CHECK_THROWS_AS(earliest_observation_date({}), ValidationError);
}

TEST_CASE("climatology features are band frequencies over the window") {
  const Date d0 = to_date(CivilDate{2019, 6, 1});
  const TrainingWindow w{d0, d0 + 29};

  std::vector<ObservationRecord> obs;
  // A: both observations at or below 5000 meters.
  obs.push_back(obs_at("A", d0, 0, 1));        // 0 m
  obs.push_back(obs_at("A", d0 + 29, 6, 51));  // 5000 m, upper edge of band
  // B: one per band boundary around 5000/6000.
  obs.push_back(obs_at("B", d0 + 1, 0, 51));  // 5000 m
  obs.push_back(obs_at("B", d0 + 2, 0, 52));  // 6000 m, middle band
  // C: 30000 m stays in the middle band, 35000 m crosses into the top one.
  obs.push_back(obs_at("C", d0 + 3, 0, 76));
  obs.push_back(obs_at("C", d0 + 4, 0, 77));
  obs.push_back(obs_at("C", d0 + 5, 0, 84));  // 70000 m
  // D: only observation sits one day past the window and must not count.
  obs.push_back(obs_at("D", d0 + 30, 0, 10));

  const auto f = climatology_features(obs, w);
  REQUIRE(f.size() == 3);
  CHECK(f.count("D") == 0);

  CHECK(f.at("A").n_obs == 2);
  CHECK(f.at("A").freq == std::array<double, 3>{1.0, 0.0, 0.0});
  CHECK(f.at("B").freq == std::array<double, 3>{0.5, 0.5, 0.0});
  CHECK(f.at("C").n_obs == 3);
  CHECK(f.at("C").freq[0] == 0.0);
  CHECK(f.at("C").freq[1] == doctest::Approx(1.0 / 3.0));
  CHECK(f.at("C").freq[2] == doctest::Approx(2.0 / 3.0));
  for (const auto& [st, feat] : f) {
    CHECK(feat.freq[0] + feat.freq[1] + feat.freq[2] ==
          doctest::Approx(1.0));
  }
}

TEST_CASE("k-means separates distant clusters and orders the labels") {
  std::map<std::string, std::array<double, 3>> pts;
  pts["A1"] = {0.98, 0.02, 0.00};
  pts["A2"] = {0.96, 0.03, 0.01};
  pts["A3"] = {0.97, 0.02, 0.01};
  pts["B1"] = {0.01, 0.04, 0.95};
  pts["B2"] = {0.02, 0.02, 0.96};
  pts["B3"] = {0.00, 0.03, 0.97};

  const auto labels = kmeans_clusters(pts, 2, 1, 7);
  REQUIRE(labels.size() == 6);
  // Labels are renumbered by each cluster's lexicographically first member.
  CHECK(labels.at("A1") == 0);
  CHECK(labels.at("A2") == 0);
  CHECK(labels.at("A3") == 0);
  CHECK(labels.at("B1") == 1);
  CHECK(labels.at("B2") == 1);
  CHECK(labels.at("B3") == 1);

  const auto single = kmeans_clusters(pts, 1, 1, 7);
  for (const auto& [st, c] : single) CHECK(c == 0);

  // Same seed, same assignment.
  const auto again = kmeans_clusters(pts, 2, 1, 7);
  CHECK(again == labels);
}

TEST_CASE("k-means shrinks the cluster count to honor the minimum size") {
  std::map<std::string, std::array<double, 3>> pts;
  Rng rng(5);
  for (int i = 0; i < 12; ++i) {
    const std::string name = "S" + std::to_string(10 + i);
    pts[name] = {rng.uniform(), rng.uniform(), rng.uniform()};
  }
  const auto labels = kmeans_clusters(pts, 5, 4, 99);
  std::map<int, int> counts;
  for (const auto& [st, c] : labels) ++counts[c];
  for (const auto& [c, n] : counts) CHECK(n >= 4);
  CHECK(counts.size() <= 3);  // 12 stations cannot fill more at minimum 4
  // Labels are contiguous from zero.
  for (int c = 0; c < static_cast<int>(counts.size()); ++c) {
    CHECK(counts.count(c) == 1);
  }

  CHECK_THROWS_AS(kmeans_clusters({}, 2, 1, 0), ValidationError);
  CHECK_THROWS_AS(kmeans_clusters(pts, 0, 1, 0), ValidationError);
  CHECK_THROWS_AS(kmeans_clusters(pts, 2, 0, 0), ValidationError);
}

TEST_CASE("station climatology is the empirical class distribution") {
  const Date d0 = to_date(CivilDate{2019, 2, 1});
  const TrainingWindow w{d0, d0 + 9};
  std::vector<ObservationRecord> obs;
  obs.push_back(obs_at("S1", d0 + 0, 6, 10));
  obs.push_back(obs_at("S1", d0 + 1, 6, 10));
  obs.push_back(obs_at("S1", d0 + 2, 6, 20));
  obs.push_back(obs_at("S1", d0 + 3, 6, 84));
  obs.push_back(obs_at("S1", d0 + 4, 18, 1));    // other hour of day
  obs.push_back(obs_at("S1", d0 + 20, 6, 2));    // outside the window
  obs.push_back(obs_at("S2", d0 + 1, 6, 30));    // other station

  const auto any_hour = climatology_forecast(obs, "S1", w);
  CHECK(any_hour.pmf[9] == 0.4);   // two of five observations
  CHECK(any_hour.pmf[19] == 0.2);
  CHECK(any_hour.pmf[83] == 0.2);
  CHECK(any_hour.pmf[0] == 0.2);
  double total = 0.0;
  for (const double p : any_hour.pmf) total += p;
  CHECK(total == doctest::Approx(1.0));

  const auto at_six = climatology_forecast(obs, "S1", w, 6);
  CHECK(at_six.pmf[9] == 0.5);
  CHECK(at_six.pmf[19] == 0.25);
  CHECK(at_six.pmf[83] == 0.25);
  CHECK(at_six.pmf[0] == 0.0);

  // A single observation gives a point mass.
  const auto point = climatology_forecast(obs, "S2", w);
  CHECK(point.pmf[29] == 1.0);

  CHECK_THROWS_AS(climatology_forecast(obs, "S9", w), ValidationError);
  CHECK_THROWS_AS(climatology_forecast(obs, "S1", w, 12), ValidationError);
}

TEST_CASE("raw ensemble distribution pools hres, control, and members") {
  ForecastRecord fc;
  fc.station_id = "S1";
  fc.init_time = time_at(to_date(CivilDate{2019, 1, 1}), 0);
  fc.lead_time_h = 24;
  fc.ctrl = 5500.0;
  fc.members.assign(kEnsembleMembers, 5500.0);

  const auto point = raw_ensemble_distribution(fc);
  CHECK(point.pmf[50] == 1.0);  // 5500 m rounds down to the 5000 m class

  // 51 distinct classes, equal weight each.
  fc.ctrl = value_of(2);
  for (int i = 0; i < kEnsembleMembers; ++i) {
    fc.members[static_cast<std::size_t>(i)] = value_of(3 + i);
  }
  const auto spread = raw_ensemble_distribution(fc);
  CHECK(spread.pmf[0] == 0.0);
  for (int k = 2; k <= 52; ++k) {
    CHECK(spread.pmf[static_cast<std::size_t>(k - 1)] ==
          doctest::Approx(1.0 / 51.0));
  }

  // hres joins the pool as a 52nd value.
  fc.hres = 0.0;
  const auto with_hres = raw_ensemble_distribution(fc);
  CHECK(with_hres.pmf[0] == doctest::Approx(1.0 / 52.0));
  CHECK(with_hres.pmf[1] == doctest::Approx(1.0 / 52.0));

  fc.members.clear();
  CHECK_THROWS_AS(raw_ensemble_distribution(fc), ValidationError);
}

TEST_CASE("predictions follow the stored parameter set kind") {
  FeatureVector x{0.5, 1.0};

  FittedModel pm;
  pm.kind = ModelKind::polr;
  pm.polr.n_classes = kNumClasses;
  pm.polr.thresholds.resize(kNumClasses - 1);
  for (int k = 0; k < kNumClasses - 1; ++k) {
    pm.polr.thresholds[static_cast<std::size_t>(k)] = -6.0 + 0.1 * k;
  }
  pm.polr.coefficients = {0.3, -0.2};
  pm.polr.active_mask = {true, true};
  const auto via_model = predict_with(pm, x);
  const auto direct = polr_pmf(pm.polr, x);
  for (int k = 0; k < kNumClasses; ++k) {
    CHECK(via_model.pmf[static_cast<std::size_t>(k)] ==
          direct[static_cast<std::size_t>(k)]);
  }

  FittedModel nm;
  nm.kind = ModelKind::mlp;
  MlpArchitecture arch;
  arch.input_dim = 2;
  arch.hidden = {5};
  arch.output_dim = kNumClasses;
  nm.mlp = mlp_init(arch, 3, 0.5);
  const auto net_model = predict_with(nm, x);
  const auto net_direct = mlp_predict(nm.mlp, x);
  CHECK(net_model.pmf == net_direct.pmf);
}

TEST_CASE("fitted models survive a JSON round trip") {
  FittedModel pm;
  pm.kind = ModelKind::polr;
  pm.polr.n_classes = 6;
  pm.polr.thresholds = {-2.0, -0.5, 0.25, 1.0, 3.5};
  pm.polr.coefficients = {1.25, 0.0, -0.75};
  pm.polr.active_mask = {true, false, true};
  const FittedModel pm2 = fitted_model_from_json(fitted_model_to_json(pm));
  CHECK(pm2.kind == ModelKind::polr);
  CHECK(pm2.polr.n_classes == 6);
  CHECK(pm2.polr.thresholds == pm.polr.thresholds);
  CHECK(pm2.polr.coefficients == pm.polr.coefficients);
  CHECK(pm2.polr.active_mask == pm.polr.active_mask);

  FittedModel nm;
  nm.kind = ModelKind::mlp;
  MlpArchitecture arch;
  arch.input_dim = 3;
  arch.hidden = {4};
  arch.output_dim = 5;
  nm.mlp = mlp_init(arch, 17, 0.5);
  const FittedModel nm2 = fitted_model_from_json(fitted_model_to_json(nm));
  CHECK(nm2.kind == ModelKind::mlp);
  REQUIRE(nm2.mlp.weights.size() == nm.mlp.weights.size());
  for (std::size_t l = 0; l < nm.mlp.weights.size(); ++l) {
    CHECK((nm2.mlp.weights[l] - nm.mlp.weights[l])
              .lpNorm<Eigen::Infinity>() == 0.0);
    CHECK((nm2.mlp.biases[l] - nm.mlp.biases[l])
              .lpNorm<Eigen::Infinity>() == 0.0);
  }

  nlohmann::json j = fitted_model_to_json(pm);
  j.erase("format");
  CHECK_THROWS_AS(fitted_model_from_json(j), ValidationError);
}

TEST_CASE("station set fingerprints separate sets and members") {
  const std::uint64_t h1 = station_set_hash({"S1", "S2"});
  CHECK(station_set_hash({"S1", "S2"}) == h1);
  CHECK(station_set_hash({"S1"}) != h1);
  CHECK(station_set_hash({"S1", "S2", "S3"}) != h1);
  // The separator keeps concatenations of different splits apart.
  CHECK(station_set_hash({"AB", "C"}) != station_set_hash({"A", "BC"}));

  CHECK(kmeans_seed(1, 100) == kmeans_seed(1, 100));
  CHECK(kmeans_seed(1, 100) != kmeans_seed(1, 101));
  CHECK(kmeans_seed(2, 100) != kmeans_seed(1, 100));
  CHECK(mlp_task_seed(1, 100, 24, h1) == mlp_task_seed(1, 100, 24, h1));
  CHECK(mlp_task_seed(1, 100, 24, h1) != mlp_task_seed(1, 100, 6, h1));
  CHECK(mlp_task_seed(1, 100, 24, h1) !=
        mlp_task_seed(1, 100, 24, station_set_hash({"S1"})));
}

TEST_CASE("experiment configs are validated") {
  ExperimentConfig good = small_experiment();
  CHECK_NOTHROW(validate_experiment_config(good));

  ExperimentConfig bad = good;
  bad.training_length = 0;
  CHECK_THROWS_AS(validate_experiment_config(bad), ValidationError);

  bad = good;
  bad.lead_times_h = {};
  CHECK_THROWS_AS(validate_experiment_config(bad), ValidationError);

  bad = good;
  bad.lead_times_h = {7};
  CHECK_THROWS_AS(validate_experiment_config(bad), ValidationError);

  bad = good;
  bad.verif_end = bad.verif_start - 1;
  CHECK_THROWS_AS(validate_experiment_config(bad), ValidationError);

  bad = good;
  bad.scheme.n_clusters = 0;
  CHECK_THROWS_AS(validate_experiment_config(bad), ValidationError);

  bad = good;
  bad.refit_every_days = 0;
  CHECK_THROWS_AS(validate_experiment_config(bad), ValidationError);

  bad = good;
  bad.model = ModelKind::mlp;
  bad.mlp_arch.input_dim = 4;  // does not match the produced feature count
  CHECK_THROWS_AS(validate_experiment_config(bad), ValidationError);

  bad.mlp_arch.input_dim =
      static_cast<int>(feature_names(bad.features).size());
  bad.mlp_arch.output_dim = 50;
  CHECK_THROWS_AS(validate_experiment_config(bad), ValidationError);
}

TEST_CASE("cases for a lead are filtered and canonically ordered") {
  const SimulatedData sim = simulate_dataset(
      []() {
        SimConfig c = small_sim();
        c.lead_times_h = {6, 24};
        c.n_days = 10;
        return c;
      }(),
      31);
  const JoinResult joined = join_cases(sim.forecasts, sim.observations);
  const auto lead24 = cases_for_lead(joined.cases, 24);
  CHECK_FALSE(lead24.empty());
  for (const ForecastCase* c : lead24) CHECK(c->forecast.lead_time_h == 24);
  for (std::size_t i = 1; i < lead24.size(); ++i) {
    const auto& a = *lead24[i - 1];
    const auto& b = *lead24[i];
    const bool ordered =
        a.forecast.init_time < b.forecast.init_time ||
        (a.forecast.init_time == b.forecast.init_time &&
         a.forecast.station_id < b.forecast.station_id);
    CHECK(ordered);
  }
  CHECK(cases_for_lead(joined.cases, 48).empty());
}

TEST_CASE("refit plans never train on data at or past the refit date") {
  const SimulatedData sim = simulate_dataset(small_sim(), 11);
  const JoinResult joined = join_cases(sim.forecasts, sim.observations);
  const auto lead_cases = cases_for_lead(joined.cases, 24);
  const Date data_start = earliest_observation_date(sim.observations);

  ExperimentConfig cfg = small_experiment();
  cfg.scheme.kind = SchemeKind::local;
  const auto plans = plan_lead(cfg, lead_cases, sim.observations, data_start);
  REQUIRE(plans.size() == 2);  // one block per verification day
  for (const auto& plan : plans) {
    CHECK(plan.feasible);
    CHECK(plan.window.end == plan.refit_date - 1);
    CHECK(plan.window.start == plan.refit_date - cfg.training_length);
    CHECK(plan.n_targets == 4);  // one case per station
    CHECK(plan.scopes.size() == 4);
    for (const auto& scope : plan.scopes) {
      CHECK_FALSE(scope.train.empty());
      for (const ForecastCase* c : scope.train) {
        CHECK(date_of(c->observation.valid_time) < plan.refit_date);
        CHECK(c->forecast.station_id == scope.token);
      }
      for (const ForecastCase* c : scope.targets) {
        CHECK(date_of(c->forecast.init_time) >= cfg.verif_start);
        CHECK(date_of(c->forecast.init_time) <= cfg.verif_end);
      }
    }
  }

  // A two-day cadence folds both verification days into a single block.
  cfg.refit_every_days = 2;
  const auto coarse = plan_lead(cfg, lead_cases, sim.observations, data_start);
  REQUIRE(coarse.size() == 1);
  CHECK(coarse[0].n_targets == 8);

  // Regional pools everything into one scope per block.
  cfg.refit_every_days = 1;
  cfg.scheme.kind = SchemeKind::regional;
  const auto pooled = plan_lead(cfg, lead_cases, sim.observations, data_start);
  for (const auto& plan : pooled) {
    REQUIRE(plan.scopes.size() == 1);
    CHECK(plan.scopes[0].token == "all");
    CHECK(plan.scopes[0].train.size() == 4 * 60);
  }

  // A window reaching before the data makes the block infeasible.
  cfg.training_length = 120;
  const auto infeasible =
      plan_lead(cfg, lead_cases, sim.observations, data_start);
  for (const auto& plan : infeasible) {
    CHECK_FALSE(plan.feasible);
    CHECK_FALSE(plan.note.empty());
  }
}

TEST_CASE("local training runs deterministically and without leakage") {
  const SimulatedData sim = simulate_dataset(small_sim(), 11);
  const JoinResult joined = join_cases(sim.forecasts, sim.observations);

  ExperimentConfig cfg = small_experiment();
  cfg.scheme.kind = SchemeKind::local;

  const ExperimentResult r1 =
      run_experiment(cfg, joined.cases, sim.observations);
  const ExperimentResult r2 =
      run_experiment(cfg, joined.cases, sim.observations);
  CHECK(same_rows(r1.rows, r2.rows));
  CHECK(r1.tasks.size() == r2.tasks.size());

  // Two verification days and four stations: every target is accounted for.
  CHECK(r1.rows.size() + r1.n_dropped_cases == 8);
  CHECK(r1.tasks.size() == 8);

  std::size_t n_ok = 0;
  for (const auto& tl : r1.tasks) {
    CHECK(tl.lead_h == 24);
    CHECK(std::is_sorted(tl.stations.begin(), tl.stations.end()));
    if (!tl.ok) continue;
    ++n_ok;
    CHECK(tl.stations == std::vector<std::string>{tl.scope});
    CHECK(tl.n_train > 0);
    CHECK(date_of(tl.max_train_valid) < tl.target);
  }
  CHECK(n_ok >= 4);

  for (const auto& row : r1.rows) {
    CHECK_NOTHROW(validate_pmf(row.model));
    CHECK_NOTHROW(validate_pmf(row.climatology));
    CHECK_NOTHROW(validate_pmf(row.raw));
  }
  for (std::size_t i = 1; i < r1.rows.size(); ++i) {
    const auto& a = r1.rows[i - 1];
    const auto& b = r1.rows[i];
    const bool ordered =
        a.init_time < b.init_time ||
        (a.init_time == b.init_time &&
         (a.lead_h < b.lead_h ||
          (a.lead_h == b.lead_h && a.station_id < b.station_id)));
    CHECK(ordered);
  }
}

TEST_CASE("one semi-local cluster reproduces regional training exactly") {
  const SimulatedData sim = simulate_dataset(small_sim(), 11);
  const JoinResult joined = join_cases(sim.forecasts, sim.observations);

  ExperimentConfig regional = small_experiment();
  regional.scheme.kind = SchemeKind::regional;

  ExperimentConfig clustered = regional;
  clustered.scheme.kind = SchemeKind::semi_local;
  clustered.scheme.n_clusters = 1;
  clustered.scheme.min_cluster_size = 1;

  SUBCASE("proportional odds") {
    const auto a = run_experiment(regional, joined.cases, sim.observations);
    const auto b = run_experiment(clustered, joined.cases, sim.observations);
    REQUIRE_FALSE(a.rows.empty());
    CHECK(same_rows(a.rows, b.rows));
  }

  SUBCASE("network") {
    regional.model = ModelKind::mlp;
    regional.mlp_arch.input_dim =
        static_cast<int>(feature_names(regional.features).size());
    regional.mlp_arch.hidden = {6};
    regional.mlp_arch.output_dim = kNumClasses;
    regional.mlp_train.max_epochs = 40;
    clustered.model = regional.model;
    clustered.mlp_arch = regional.mlp_arch;
    clustered.mlp_train = regional.mlp_train;
    const auto a = run_experiment(regional, joined.cases, sim.observations);
    const auto b = run_experiment(clustered, joined.cases, sim.observations);
    REQUIRE_FALSE(a.rows.empty());
    CHECK(same_rows(a.rows, b.rows));
  }
}

TEST_CASE("regional training does not depend on input order") {
  const SimulatedData sim = simulate_dataset(small_sim(), 11);
  const JoinResult joined = join_cases(sim.forecasts, sim.observations);

  ExperimentConfig cfg = small_experiment();
  const auto base = run_experiment(cfg, joined.cases, sim.observations);

  std::vector<ForecastCase> shuffled = joined.cases;
  std::mt19937 urbg(321);
  std::shuffle(shuffled.begin(), shuffled.end(), urbg);
  std::vector<ObservationRecord> reversed(sim.observations.rbegin(),
                                          sim.observations.rend());
  const auto permuted = run_experiment(cfg, shuffled, reversed);

  REQUIRE_FALSE(base.rows.empty());
  CHECK(same_rows(base.rows, permuted.rows));
}
