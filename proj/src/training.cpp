#include "viscal/training.hpp"

#include <algorithm>
#include <exception>
#include <limits>
#include <numeric>
#include <optional>
#include <set>
#include <thread>
#include <tuple>

#include "viscal/errors.hpp"
#include "viscal/rng.hpp"
#include "viscal/scale.hpp"

namespace viscal {

std::string scheme_name(SchemeKind k) {
  switch (k) {
    case SchemeKind::local:
      return "local";
    case SchemeKind::semi_local:
      return "semi_local";
    case SchemeKind::regional:
      return "regional";
  }
  throw ValidationError("unknown scheme kind");
}

SchemeKind scheme_of_name(const std::string& name) {
  if (name == "local") return SchemeKind::local;
  if (name == "semi_local") return SchemeKind::semi_local;
  if (name == "regional") return SchemeKind::regional;
  throw ValidationError("unknown training scheme '" + name + "'");
}

std::string model_name(ModelKind k) {
  switch (k) {
    case ModelKind::polr:
      return "polr";
    case ModelKind::mlp:
      return "mlp";
  }
  throw ValidationError("unknown model kind");
}

ModelKind model_of_name(const std::string& name) {
  if (name == "polr") return ModelKind::polr;
  if (name == "mlp") return ModelKind::mlp;
  throw ValidationError("unknown model '" + name + "'");
}

std::vector<WindowPlan> rolling_windows(const std::vector<Date>& targets,
                                        int length_days, Date data_start) {
  if (length_days < 1) {
    throw ValidationError("window length must be at least one day");
  }
  std::vector<WindowPlan> out;
  out.reserve(targets.size());
  for (const Date t : targets) {
    WindowPlan p;
    p.target = t;
    p.window.start = t - length_days;
    p.window.end = t - 1;
    p.feasible = p.window.start >= data_start;
    out.push_back(p);
  }
  return out;
}

namespace {

int interval_bin(double meters) {
  if (meters <= 5000.0) return 0;
  if (meters <= 30000.0) return 1;
  return 2;
}

}  // namespace

std::map<std::string, ClimatologyFeature> climatology_features(
    const std::vector<ObservationRecord>& observations,
    const TrainingWindow& window) {
  std::map<std::string, std::array<std::size_t, 3>> counts;
  for (const auto& o : observations) {
    const Date d = date_of(o.valid_time);
    if (d < window.start || d > window.end) continue;
    auto& c = counts[o.station_id];
    ++c[static_cast<std::size_t>(interval_bin(value_of(o.visibility_class)))];
  }
  std::map<std::string, ClimatologyFeature> out;
  for (const auto& [station, c] : counts) {
    ClimatologyFeature f;
    f.n_obs = c[0] + c[1] + c[2];
    for (std::size_t b = 0; b < 3; ++b) {
      f.freq[b] = static_cast<double>(c[b]) / static_cast<double>(f.n_obs);
    }
    out[station] = f;
  }
  return out;
}

namespace {

double sq_dist(const std::array<double, 3>& a, const std::array<double, 3>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < 3; ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

struct KmeansRun {
  std::vector<int> assignment;
  double wcss = std::numeric_limits<double>::infinity();
};

KmeansRun lloyd_once(const std::vector<std::array<double, 3>>& pts, int k,
                     Rng& rng) {
  const int n = static_cast<int>(pts.size());
  // Draw k distinct starting points with a partial shuffle.
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  for (int i = 0; i < k; ++i) {
    const int j =
        i + static_cast<int>(rng.below(static_cast<std::uint64_t>(n - i)));
    std::swap(order[static_cast<std::size_t>(i)],
              order[static_cast<std::size_t>(j)]);
  }
  std::vector<std::array<double, 3>> centroids(static_cast<std::size_t>(k));
  for (int c = 0; c < k; ++c) {
    centroids[static_cast<std::size_t>(c)] =
        pts[static_cast<std::size_t>(order[static_cast<std::size_t>(c)])];
  }

  std::vector<int> assign(static_cast<std::size_t>(n), -1);
  for (int iter = 0; iter < 100; ++iter) {
    bool changed = false;
    for (int i = 0; i < n; ++i) {
      int best = 0;
      double best_d = sq_dist(pts[static_cast<std::size_t>(i)], centroids[0]);
      for (int c = 1; c < k; ++c) {
        const double d = sq_dist(pts[static_cast<std::size_t>(i)],
                                 centroids[static_cast<std::size_t>(c)]);
        if (d < best_d) {
          best_d = d;
          best = c;
        }
      }
      if (assign[static_cast<std::size_t>(i)] != best) {
        assign[static_cast<std::size_t>(i)] = best;
        changed = true;
      }
    }
    if (!changed) break;
    // Means of the new assignment; empty clusters keep their centroid.
    std::vector<std::array<double, 3>> sums(static_cast<std::size_t>(k),
                                            {0.0, 0.0, 0.0});
    std::vector<int> sizes(static_cast<std::size_t>(k), 0);
    for (int i = 0; i < n; ++i) {
      const auto c =
          static_cast<std::size_t>(assign[static_cast<std::size_t>(i)]);
      for (std::size_t d = 0; d < 3; ++d) {
        sums[c][d] += pts[static_cast<std::size_t>(i)][d];
      }
      ++sizes[c];
    }
    for (int c = 0; c < k; ++c) {
      const auto cc = static_cast<std::size_t>(c);
      if (sizes[cc] == 0) continue;
      for (std::size_t d = 0; d < 3; ++d) {
        centroids[cc][d] = sums[cc][d] / sizes[cc];
      }
    }
  }

  // Score against the means of the final assignment.
  std::vector<std::array<double, 3>> means(static_cast<std::size_t>(k),
                                           {0.0, 0.0, 0.0});
  std::vector<int> sizes(static_cast<std::size_t>(k), 0);
  for (int i = 0; i < n; ++i) {
    const auto c =
        static_cast<std::size_t>(assign[static_cast<std::size_t>(i)]);
    for (std::size_t d = 0; d < 3; ++d) {
      means[c][d] += pts[static_cast<std::size_t>(i)][d];
    }
    ++sizes[c];
  }
  for (int c = 0; c < k; ++c) {
    const auto cc = static_cast<std::size_t>(c);
    if (sizes[cc] == 0) continue;
    for (std::size_t d = 0; d < 3; ++d) means[cc][d] /= sizes[cc];
  }
  KmeansRun run;
  run.assignment = assign;
  run.wcss = 0.0;
  for (int i = 0; i < n; ++i) {
    run.wcss += sq_dist(
        pts[static_cast<std::size_t>(i)],
        means[static_cast<std::size_t>(assign[static_cast<std::size_t>(i)])]);
  }
  return run;
}

}  // namespace

std::map<std::string, int> kmeans_clusters(
    const std::map<std::string, std::array<double, 3>>& features, int k,
    int min_size, std::uint64_t seed) {
  if (features.empty()) throw ValidationError("no stations to cluster");
  if (k < 1) throw ValidationError("cluster count must be at least 1");
  if (min_size < 1) {
    throw ValidationError("minimum cluster size must be at least 1");
  }
  std::vector<std::string> stations;
  std::vector<std::array<double, 3>> pts;
  stations.reserve(features.size());
  for (const auto& [id, f] : features) {
    stations.push_back(id);
    pts.push_back(f);
  }
  const int n = static_cast<int>(stations.size());

  std::map<std::string, int> out;
  if (n < min_size || k == 1) {
    for (const auto& id : stations) out[id] = 0;
    return out;
  }

  std::vector<int> assignment;
  for (int kk = std::min(k, n); kk >= 1; --kk) {
    KmeansRun best;
    for (int restart = 0; restart < 10; ++restart) {
      Rng rng(combine_seed(combine_seed(seed, static_cast<std::uint64_t>(kk)),
                           static_cast<std::uint64_t>(restart)));
      KmeansRun run = lloyd_once(pts, kk, rng);
      if (run.wcss < best.wcss) best = std::move(run);
    }
    std::vector<int> sizes(static_cast<std::size_t>(kk), 0);
    for (const int a : best.assignment) ++sizes[static_cast<std::size_t>(a)];
    const bool all_big = std::all_of(sizes.begin(), sizes.end(),
                                     [&](int s) { return s >= min_size; });
    if (all_big || kk == 1) {
      assignment = std::move(best.assignment);
      break;
    }
  }

  // Relabel clusters in order of first appearance over the sorted stations.
  std::map<int, int> relabel;
  for (const int a : assignment) {
    if (relabel.find(a) == relabel.end()) {
      const int next = static_cast<int>(relabel.size());
      relabel[a] = next;
    }
  }
  for (int i = 0; i < n; ++i) {
    out[stations[static_cast<std::size_t>(i)]] =
        relabel.at(assignment[static_cast<std::size_t>(i)]);
  }
  return out;
}

PredictiveDistribution climatology_forecast(
    const std::vector<ObservationRecord>& observations,
    const std::string& station, const TrainingWindow& window, int hour) {
  std::array<std::size_t, kNumClasses> counts{};
  std::size_t total = 0;
  for (const auto& o : observations) {
    if (o.station_id != station) continue;
    const Date d = date_of(o.valid_time);
    if (d < window.start || d > window.end) continue;
    if (hour >= 0 && hour_of(o.valid_time) != hour) continue;
    ++counts[static_cast<std::size_t>(o.visibility_class - 1)];
    ++total;
  }
  if (total == 0) {
    throw ValidationError("station " + station +
                          " has no observations in the climatology window");
  }
  PredictiveDistribution f;
  for (int kls = 0; kls < kNumClasses; ++kls) {
    f.pmf[static_cast<std::size_t>(kls)] =
        static_cast<double>(counts[static_cast<std::size_t>(kls)]) /
        static_cast<double>(total);
  }
  return f;
}

PredictiveDistribution raw_ensemble_distribution(const ForecastRecord& fc) {
  if (fc.members.empty()) {
    throw ValidationError("forecast has no ensemble members");
  }
  std::array<std::size_t, kNumClasses> counts{};
  std::size_t total = 0;
  const auto add = [&](double meters) {
    ++counts[static_cast<std::size_t>(round_down(meters) - 1)];
    ++total;
  };
  if (fc.hres.has_value()) add(*fc.hres);
  add(fc.ctrl);
  for (const double m : fc.members) add(m);
  PredictiveDistribution f;
  for (int kls = 0; kls < kNumClasses; ++kls) {
    f.pmf[static_cast<std::size_t>(kls)] =
        static_cast<double>(counts[static_cast<std::size_t>(kls)]) /
        static_cast<double>(total);
  }
  return f;
}

void validate_experiment_config(const ExperimentConfig& cfg) {
  if (cfg.training_length < 1) {
    throw ValidationError("training length must be at least one day");
  }
  if (cfg.climatology_length < 1) {
    throw ValidationError("climatology length must be at least one day");
  }
  if (cfg.lead_times_h.empty()) {
    throw ValidationError("at least one lead time is required");
  }
  for (const int lead : cfg.lead_times_h) {
    if (lead <= 0 || lead % 6 != 0) {
      throw ValidationError(
          "lead times must be positive multiples of 6 hours");
    }
  }
  if (cfg.verif_start > cfg.verif_end) {
    throw ValidationError("verification period is empty");
  }
  if (cfg.scheme.n_clusters < 1) {
    throw ValidationError("cluster count must be at least 1");
  }
  if (cfg.scheme.min_cluster_size < 1) {
    throw ValidationError("minimum cluster size must be at least 1");
  }
  if (cfg.refit_every_days < 1) {
    throw ValidationError("refit cadence must be at least one day");
  }
  validate_feature_config(cfg.features);
  if (cfg.model == ModelKind::mlp) {
    validate_architecture(cfg.mlp_arch);
    const int n_features = static_cast<int>(feature_names(cfg.features).size());
    if (cfg.mlp_arch.input_dim != n_features) {
      throw ValidationError(
          "network input width " + std::to_string(cfg.mlp_arch.input_dim) +
          " does not match the feature count " + std::to_string(n_features));
    }
    if (cfg.mlp_arch.output_dim != kNumClasses) {
      throw ValidationError("network output width must cover all classes");
    }
  }
}

PredictiveDistribution predict_with(const FittedModel& m,
                                    const FeatureVector& x) {
  if (m.kind == ModelKind::polr) return polr_predict(m.polr, x);
  return mlp_predict(m.mlp, x);
}

nlohmann::json fitted_model_to_json(const FittedModel& m) {
  if (m.kind == ModelKind::polr) return polr_params_to_json(m.polr);
  return mlp_params_to_json(m.mlp);
}

FittedModel fitted_model_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("format") || !j["format"].is_string()) {
    throw ValidationError("parameter document lacks a format tag");
  }
  const std::string format = j["format"].get<std::string>();
  FittedModel m;
  if (format == "polr-params/1") {
    m.kind = ModelKind::polr;
    m.polr = polr_params_from_json(j);
  } else if (format == "mlp-params/1") {
    m.kind = ModelKind::mlp;
    m.mlp = mlp_params_from_json(j);
  } else {
    throw ValidationError("unknown parameter format '" + format + "'");
  }
  return m;
}

std::uint64_t station_set_hash(const std::vector<std::string>& sorted_ids) {
  std::uint64_t h = hash_bytes("stations");
  for (const auto& id : sorted_ids) {
    h = hash_bytes(id, h);
    h = hash_bytes("\n", h);
  }
  return h;
}

std::uint64_t kmeans_seed(std::uint64_t master_seed, Date refit_date) {
  return combine_seed(combine_seed(master_seed, "kmeans"),
                      static_cast<std::uint64_t>(refit_date));
}

std::uint64_t mlp_task_seed(std::uint64_t master_seed, Date refit_date,
                            int lead_h, std::uint64_t station_set_sig) {
  return combine_seed(
      combine_seed(combine_seed(combine_seed(master_seed, "mlp"),
                                static_cast<std::uint64_t>(refit_date)),
                   static_cast<std::uint64_t>(lead_h)),
      station_set_sig);
}

std::vector<const ForecastCase*> cases_for_lead(
    const std::vector<ForecastCase>& cases, int lead) {
  std::vector<const ForecastCase*> out;
  for (const auto& c : cases) {
    if (c.forecast.lead_time_h == lead) out.push_back(&c);
  }
  std::sort(out.begin(), out.end(),
            [](const ForecastCase* a, const ForecastCase* b) {
              return std::tie(a->forecast.init_time, a->forecast.station_id) <
                     std::tie(b->forecast.init_time, b->forecast.station_id);
            });
  return out;
}

Date earliest_observation_date(
    const std::vector<ObservationRecord>& observations) {
  if (observations.empty()) throw ValidationError("no observations provided");
  Date d = std::numeric_limits<Date>::max();
  for (const auto& o : observations) d = std::min(d, date_of(o.valid_time));
  return d;
}

std::vector<RefitPlan> plan_lead(
    const ExperimentConfig& cfg,
    const std::vector<const ForecastCase*>& lead_cases,
    const std::vector<ObservationRecord>& observations, Date data_start) {
  std::map<Date, std::vector<const ForecastCase*>> by_init_date;
  for (const ForecastCase* c : lead_cases) {
    const Date d = date_of(c->forecast.init_time);
    if (d < cfg.verif_start || d > cfg.verif_end) continue;
    by_init_date[d].push_back(c);
  }

  std::vector<RefitPlan> plans;
  for (Date t0 = cfg.verif_start; t0 <= cfg.verif_end;
       t0 += cfg.refit_every_days) {
    const Date t_last =
        std::min<Date>(t0 + cfg.refit_every_days - 1, cfg.verif_end);
    std::vector<const ForecastCase*> targets;
    for (Date t = t0; t <= t_last; ++t) {
      const auto it = by_init_date.find(t);
      if (it == by_init_date.end()) continue;
      targets.insert(targets.end(), it->second.begin(), it->second.end());
    }
    if (targets.empty()) continue;

    RefitPlan plan;
    plan.refit_date = t0;
    plan.window = {t0 - cfg.training_length, t0 - 1};
    plan.n_targets = targets.size();
    if (plan.window.start < data_start) {
      plan.feasible = false;
      plan.note = "training window starts before available data";
      plans.push_back(std::move(plan));
      continue;
    }
    plan.feasible = true;

    std::vector<const ForecastCase*> train_pool;
    for (const ForecastCase* c : lead_cases) {
      const Date d = date_of(c->observation.valid_time);
      if (d >= plan.window.start && d <= plan.window.end) {
        train_pool.push_back(c);
      }
    }

    switch (cfg.scheme.kind) {
      case SchemeKind::regional: {
        ScopePlan s;
        s.token = "all";
        s.train = std::move(train_pool);
        s.targets = std::move(targets);
        plan.scopes.push_back(std::move(s));
        break;
      }
      case SchemeKind::local: {
        std::set<std::string> target_stations;
        for (const ForecastCase* c : targets) {
          target_stations.insert(c->forecast.station_id);
        }
        for (const auto& st : target_stations) {
          ScopePlan s;
          s.token = st;
          for (const ForecastCase* c : train_pool) {
            if (c->forecast.station_id == st) s.train.push_back(c);
          }
          for (const ForecastCase* c : targets) {
            if (c->forecast.station_id == st) s.targets.push_back(c);
          }
          plan.scopes.push_back(std::move(s));
        }
        break;
      }
      case SchemeKind::semi_local: {
        const auto features = climatology_features(observations, plan.window);
        if (features.empty()) {
          plan.feasible = false;
          plan.note = "no observations in the window to cluster on";
          break;
        }
        std::map<std::string, std::array<double, 3>> coords;
        for (const auto& [st, f] : features) coords[st] = f.freq;
        const auto clusters = kmeans_clusters(
            coords, cfg.scheme.n_clusters, cfg.scheme.min_cluster_size,
            kmeans_seed(cfg.master_seed, t0));
        int n_clusters = 0;
        for (const auto& [st, c] : clusters) {
          n_clusters = std::max(n_clusters, c + 1);
        }
        for (int c = 0; c < n_clusters; ++c) {
          ScopePlan s;
          s.token = "c" + std::to_string(c);
          for (const ForecastCase* fc : train_pool) {
            const auto it = clusters.find(fc->forecast.station_id);
            if (it != clusters.end() && it->second == c) s.train.push_back(fc);
          }
          for (const ForecastCase* fc : targets) {
            const auto it = clusters.find(fc->forecast.station_id);
            if (it != clusters.end() && it->second == c) {
              s.targets.push_back(fc);
            }
          }
          if (!s.targets.empty()) plan.scopes.push_back(std::move(s));
        }
        break;
      }
    }
    plans.push_back(std::move(plan));
  }
  return plans;
}

namespace {

OrdinalData build_dataset(const std::vector<const ForecastCase*>& train,
                          const FeatureConfig& fc) {
  OrdinalData d;
  d.n_classes = kNumClasses;
  const auto n = static_cast<Eigen::Index>(train.size());
  const auto m = static_cast<Eigen::Index>(feature_names(fc).size());
  d.x.resize(n, m);
  d.y.resize(train.size());
  for (Eigen::Index i = 0; i < n; ++i) {
    const FeatureVector f =
        extract_features(*train[static_cast<std::size_t>(i)], fc);
    for (Eigen::Index j = 0; j < m; ++j) {
      d.x(i, j) = f[static_cast<std::size_t>(j)];
    }
    d.y[static_cast<std::size_t>(i)] =
        train[static_cast<std::size_t>(i)]->observation.visibility_class;
  }
  return d;
}

}  // namespace

FitOutcome fit_scope_task(
    const ExperimentConfig& cfg, int lead, const RefitPlan& block,
    const ScopePlan& scope,
    std::map<std::uint64_t, std::vector<double>>* warm_chain) {
  FitOutcome out;
  out.model.kind = cfg.model;
  TaskLog& tl = out.log;
  tl.target = block.refit_date;
  tl.lead_h = lead;
  tl.scope = scope.token;
  tl.n_train = scope.train.size();
  {
    std::set<std::string> st;
    for (const ForecastCase* c : scope.train) {
      st.insert(c->forecast.station_id);
      tl.max_train_valid =
          std::max(tl.max_train_valid, c->observation.valid_time);
    }
    tl.stations.assign(st.begin(), st.end());
  }
  if (scope.train.empty()) {
    tl.message = "no training cases in the window";
    return out;
  }
  const std::uint64_t sig = station_set_hash(tl.stations);
  try {
    const OrdinalData data = build_dataset(scope.train, cfg.features);
    if (cfg.model == ModelKind::polr) {
      PolrFitConfig pcfg = cfg.polr;
      pcfg.constrained_nonnegative = nonnegative_feature_indices(cfg.features);
      const std::vector<double>* warm = nullptr;
      if (cfg.polr_warm_start && warm_chain != nullptr) {
        const auto it = warm_chain->find(sig);
        if (it != warm_chain->end()) warm = &it->second;
      }
      PolrFitResult r = fit_polr(data, pcfg, warm);
      if (warm_chain != nullptr) (*warm_chain)[sig] = r.theta_full;
      out.model.polr = std::move(r.params);
    } else {
      MlpTrainConfig mcfg = cfg.mlp_train;
      mcfg.seed = mlp_task_seed(cfg.master_seed, block.refit_date, lead, sig);
      MlpTrainResult r = train_mlp(data, cfg.mlp_arch, mcfg);
      out.model.mlp = std::move(r.params);
    }
    tl.ok = true;
  } catch (const FitError& e) {
    tl.message = e.what();
  } catch (const ValidationError& e) {
    tl.message = e.what();
  }
  return out;
}

namespace {

// Observations of one station at one UTC hour, ordered by date, for fast
// windowed climatology lookups.
using ObsIndex =
    std::map<std::pair<std::string, int>, std::vector<std::pair<Date, int>>>;

ObsIndex build_obs_index(const std::vector<ObservationRecord>& observations) {
  ObsIndex idx;
  for (const auto& o : observations) {
    idx[{o.station_id, hour_of(o.valid_time)}].emplace_back(
        date_of(o.valid_time), o.visibility_class);
  }
  for (auto& [key, vec] : idx) std::sort(vec.begin(), vec.end());
  return idx;
}

std::optional<PredictiveDistribution> indexed_climatology(
    const ObsIndex& idx, const std::string& station, int hour,
    const TrainingWindow& w) {
  const auto it = idx.find({station, hour});
  if (it == idx.end()) return std::nullopt;
  const auto& vec = it->second;
  const auto lo =
      std::lower_bound(vec.begin(), vec.end(), std::make_pair(w.start, 0));
  const auto hi = std::upper_bound(vec.begin(), vec.end(),
                                   std::make_pair(w.end, kNumClasses + 1));
  if (lo == hi) return std::nullopt;
  std::array<std::size_t, kNumClasses> counts{};
  std::size_t total = 0;
  for (auto p = lo; p != hi; ++p) {
    ++counts[static_cast<std::size_t>(p->second - 1)];
    ++total;
  }
  PredictiveDistribution f;
  for (int kls = 0; kls < kNumClasses; ++kls) {
    f.pmf[static_cast<std::size_t>(kls)] =
        static_cast<double>(counts[static_cast<std::size_t>(kls)]) /
        static_cast<double>(total);
  }
  return f;
}

struct LeadOutcome {
  std::vector<ResultRow> rows;
  std::vector<TaskLog> tasks;
  std::size_t dropped = 0;
};

LeadOutcome run_lead(const ExperimentConfig& cfg, int lead,
                     const std::vector<const ForecastCase*>& lead_cases,
                     const std::vector<ObservationRecord>& observations,
                     const ObsIndex& obs_index, Date data_start) {
  LeadOutcome out;
  std::map<std::uint64_t, std::vector<double>> warm_chain;

  for (const RefitPlan& block :
       plan_lead(cfg, lead_cases, observations, data_start)) {
    if (!block.feasible) {
      TaskLog tl;
      tl.target = block.refit_date;
      tl.lead_h = lead;
      tl.scope = "window";
      tl.message = block.note;
      out.tasks.push_back(std::move(tl));
      out.dropped += block.n_targets;
      continue;
    }
    const std::size_t rows_before = out.rows.size();
    for (const ScopePlan& scope : block.scopes) {
      FitOutcome fo = fit_scope_task(cfg, lead, block, scope, &warm_chain);
      const bool usable = fo.log.ok;
      out.tasks.push_back(std::move(fo.log));
      if (!usable) continue;

      for (const ForecastCase* c : scope.targets) {
        try {
          const FeatureVector x = extract_features(*c, cfg.features);
          ResultRow row;
          row.station_id = c->forecast.station_id;
          row.init_time = c->forecast.init_time;
          row.lead_h = lead;
          row.valid_time = c->observation.valid_time;
          row.obs_class = c->observation.visibility_class;
          row.model = predict_with(fo.model, x);
          const Date vd = date_of(row.valid_time);
          const TrainingWindow cw{vd - cfg.climatology_length, vd - 1};
          const auto climo = indexed_climatology(
              obs_index, row.station_id, hour_of(row.valid_time), cw);
          if (!climo.has_value()) continue;
          row.climatology = *climo;
          row.raw = raw_ensemble_distribution(c->forecast);
          out.rows.push_back(std::move(row));
        } catch (const ValidationError&) {
          // The case stays out of the result; the drop count records it.
        }
      }
    }
    out.dropped += block.n_targets - (out.rows.size() - rows_before);
  }
  return out;
}

}  // namespace

ExperimentResult run_experiment(
    const ExperimentConfig& cfg, const std::vector<ForecastCase>& cases,
    const std::vector<ObservationRecord>& observations, int jobs) {
  validate_experiment_config(cfg);
  if (cases.empty()) throw ValidationError("no forecast cases provided");
  const Date data_start = earliest_observation_date(observations);
  const ObsIndex obs_index = build_obs_index(observations);

  std::vector<int> leads = cfg.lead_times_h;
  std::sort(leads.begin(), leads.end());
  leads.erase(std::unique(leads.begin(), leads.end()), leads.end());

  std::vector<std::vector<const ForecastCase*>> per_lead;
  per_lead.reserve(leads.size());
  for (const int lead : leads) per_lead.push_back(cases_for_lead(cases, lead));

  std::vector<LeadOutcome> outcomes(leads.size());
  const int n_threads = std::clamp(jobs, 1, static_cast<int>(leads.size()));
  if (n_threads <= 1) {
    for (std::size_t li = 0; li < leads.size(); ++li) {
      outcomes[li] = run_lead(cfg, leads[li], per_lead[li], observations,
                              obs_index, data_start);
    }
  } else {
    std::vector<std::exception_ptr> errors(
        static_cast<std::size_t>(n_threads));
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(n_threads));
    for (int t = 0; t < n_threads; ++t) {
      pool.emplace_back([&, t]() {
        try {
          for (std::size_t li = static_cast<std::size_t>(t); li < leads.size();
               li += static_cast<std::size_t>(n_threads)) {
            outcomes[li] = run_lead(cfg, leads[li], per_lead[li], observations,
                                    obs_index, data_start);
          }
        } catch (...) {
          errors[static_cast<std::size_t>(t)] = std::current_exception();
        }
      });
    }
    for (auto& th : pool) th.join();
    for (const auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }

  ExperimentResult result;
  for (auto& oc : outcomes) {
    result.rows.insert(result.rows.end(),
                       std::make_move_iterator(oc.rows.begin()),
                       std::make_move_iterator(oc.rows.end()));
    result.tasks.insert(result.tasks.end(),
                        std::make_move_iterator(oc.tasks.begin()),
                        std::make_move_iterator(oc.tasks.end()));
    result.n_dropped_cases += oc.dropped;
  }
  std::sort(result.rows.begin(), result.rows.end(),
            [](const ResultRow& a, const ResultRow& b) {
              return std::tie(a.init_time, a.lead_h, a.station_id) <
                     std::tie(b.init_time, b.lead_h, b.station_id);
            });
  std::stable_sort(result.tasks.begin(), result.tasks.end(),
                   [](const TaskLog& a, const TaskLog& b) {
                     return std::tie(a.target, a.lead_h) <
                            std::tie(b.target, b.lead_h);
                   });
  return result;
}

}  // namespace viscal
