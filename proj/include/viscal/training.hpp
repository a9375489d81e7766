#pragma once

#include <array>
#include <cstdint>
#include <json.hpp>
#include <map>
#include <string>
#include <vector>

#include "viscal/data.hpp"
#include "viscal/distribution.hpp"
#include "viscal/features.hpp"
#include "viscal/mlp.hpp"
#include "viscal/polr.hpp"
#include "viscal/time.hpp"

namespace viscal {

enum class SchemeKind { local, semi_local, regional };

std::string scheme_name(SchemeKind k);
SchemeKind scheme_of_name(const std::string& name);

struct SpatialScheme {
  SchemeKind kind = SchemeKind::local;
  int n_clusters = 4;        // semi-local only
  int min_cluster_size = 4;  // semi-local only
};

// Inclusive calendar-day range; always ends the day before its target date.
struct TrainingWindow {
  Date start = 0;
  Date end = 0;
};

struct WindowPlan {
  Date target = 0;
  TrainingWindow window;
  bool feasible = true;
};

// The window of length_days calendar days preceding each target; infeasible
// when it would begin before the first day with data.
std::vector<WindowPlan> rolling_windows(const std::vector<Date>& targets,
                                        int length_days, Date data_start);

// Station coordinates for clustering: frequencies of observed visibility in
// [0, 5000], (5000, 30000], and (30000, 70000] meters over a window.
struct ClimatologyFeature {
  std::array<double, 3> freq{0.0, 0.0, 0.0};
  std::size_t n_obs = 0;
};

// Stations without any observation in the window are left out of the map.
std::map<std::string, ClimatologyFeature> climatology_features(
    const std::vector<ObservationRecord>& observations,
    const TrainingWindow& window);

// Seeded multi-start k-means (10 restarts, squared Euclidean, 100 iteration
// cap). k is decremented until every cluster holds at least min_size
// stations; fewer than min_size stations in total yields a single cluster.
// Labels are renumbered so cluster indices appear in order of each cluster's
// lexicographically first station.
std::map<std::string, int> kmeans_clusters(
    const std::map<std::string, std::array<double, 3>>& features, int k,
    int min_size, std::uint64_t seed);

// Empirical PMF of the station's observed classes over the window; hour >= 0
// restricts to observations at that UTC hour.
PredictiveDistribution climatology_forecast(
    const std::vector<ObservationRecord>& observations,
    const std::string& station, const TrainingWindow& window, int hour = -1);

// Equal-weight PMF of the rounded-down ensemble values: hres when present,
// the control, and all perturbed members.
PredictiveDistribution raw_ensemble_distribution(const ForecastRecord& fc);

enum class ModelKind { polr, mlp };

std::string model_name(ModelKind k);
ModelKind model_of_name(const std::string& name);

struct ExperimentConfig {
  ModelKind model = ModelKind::polr;
  SpatialScheme scheme;
  int training_length = 350;
  int climatology_length = 30;
  std::vector<int> lead_times_h = {6, 24, 72, 120};
  Date verif_start = 0;
  Date verif_end = 0;  // inclusive
  FeatureConfig features;
  PolrFitConfig polr;  // the constraint list is derived from features at run
  MlpArchitecture mlp_arch;
  MlpTrainConfig mlp_train;  // the per-task seed is derived at run
  std::uint64_t master_seed = 0;
  // Models and clusters are refit every this many days; 1 moves the window
  // day by day.
  int refit_every_days = 1;
  bool polr_warm_start = true;
};

void validate_experiment_config(const ExperimentConfig& cfg);

struct FittedModel {
  ModelKind kind = ModelKind::polr;
  PolrParams polr;
  MlpParams mlp;
};

PredictiveDistribution predict_with(const FittedModel& m,
                                    const FeatureVector& x);

nlohmann::json fitted_model_to_json(const FittedModel& m);
FittedModel fitted_model_from_json(const nlohmann::json& j);

// Order-insensitive fingerprint of a station set; part of the seed of every
// stochastic fit task so scheduling cannot change any result.
std::uint64_t station_set_hash(const std::vector<std::string>& sorted_ids);

std::uint64_t kmeans_seed(std::uint64_t master_seed, Date refit_date);
std::uint64_t mlp_task_seed(std::uint64_t master_seed, Date refit_date,
                            int lead_h, std::uint64_t station_set_sig);

// One training scope of a refit block: the token names the parameter set
// (a station id, c<cluster index>, or "all").
struct ScopePlan {
  std::string token;
  std::vector<const ForecastCase*> train;
  std::vector<const ForecastCase*> targets;
};

struct RefitPlan {
  Date refit_date = 0;
  TrainingWindow window;
  bool feasible = false;
  std::string note;  // set when the block cannot be trained at all
  std::vector<ScopePlan> scopes;
  std::size_t n_targets = 0;
};

// Lead-filtered cases in canonical (init time, station) order.
std::vector<const ForecastCase*> cases_for_lead(
    const std::vector<ForecastCase>& cases, int lead);

Date earliest_observation_date(
    const std::vector<ObservationRecord>& observations);

// Refit blocks for one lead time over the verification period: the covered
// target cases, the training window, and per-scope training/prediction case
// sets. Blocks without any target case are omitted; scopes without targets
// are omitted. Training cases are selected by valid date inside the window,
// so nothing observed at or after the refit date can be trained on.
std::vector<RefitPlan> plan_lead(
    const ExperimentConfig& cfg,
    const std::vector<const ForecastCase*>& lead_cases,
    const std::vector<ObservationRecord>& observations, Date data_start);

struct TaskLog {
  Date target = 0;  // refit date whose window the fit used
  int lead_h = 0;
  std::string scope;  // station id, c<index>, "all", or "window"
  // Stations contributing training cases, sorted.
  std::vector<std::string> stations;
  std::size_t n_train = 0;
  TimePoint max_train_valid = 0;  // latest valid time seen in training
  bool ok = false;
  std::string message;
};

struct FitOutcome {
  TaskLog log;
  FittedModel model;  // meaningful only when log.ok
};

// Fits one scope of one refit block. warm_chain, when given, carries
// full-model optima across refit dates keyed by the station-set fingerprint
// and is updated on success (used by the proportional-odds model only).
FitOutcome fit_scope_task(
    const ExperimentConfig& cfg, int lead, const RefitPlan& block,
    const ScopePlan& scope,
    std::map<std::uint64_t, std::vector<double>>* warm_chain);

struct ResultRow {
  std::string station_id;
  TimePoint init_time = 0;
  int lead_h = 0;
  TimePoint valid_time = 0;
  int obs_class = 1;
  PredictiveDistribution model;
  PredictiveDistribution climatology;
  PredictiveDistribution raw;
};

struct ExperimentResult {
  std::vector<ResultRow> rows;  // sorted by (init_time, lead_h, station_id)
  std::vector<TaskLog> tasks;
  // Verification cases skipped because their window was infeasible, their
  // fit failed, their station fell outside every cluster, or a reference
  // forecast could not be built.
  std::size_t n_dropped_cases = 0;
};

// Rolling-window training and prediction over the verification period. jobs
// bounds how many lead times run concurrently; the output is independent of
// it.
ExperimentResult run_experiment(
    const ExperimentConfig& cfg, const std::vector<ForecastCase>& cases,
    const std::vector<ObservationRecord>& observations, int jobs = 1);

}  // namespace viscal
