#include "viscal/pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <exception>
#include <map>
#include <set>
#include <thread>
#include <tuple>

#include "viscal/csv.hpp"
#include "viscal/errors.hpp"
#include "viscal/rng.hpp"
#include "viscal/scale.hpp"

namespace viscal {

namespace {

void check_keys(const nlohmann::json& j, const std::string& where,
                std::initializer_list<const char*> allowed) {
  for (const auto& [key, value] : j.items()) {
    bool known = false;
    for (const char* a : allowed) {
      if (key == a) {
        known = true;
        break;
      }
    }
    if (!known) {
      throw ValidationError("unknown key '" + key + "' in " + where);
    }
  }
}

const nlohmann::json& require_block(const nlohmann::json& j,
                                    const std::string& key,
                                    const std::string& where) {
  if (!j.contains(key)) {
    throw ValidationError(where + " lacks the '" + key + "' block");
  }
  const auto& block = j.at(key);
  if (!block.is_object()) {
    throw ValidationError("'" + key + "' in " + where + " must be an object");
  }
  return block;
}

std::string require_string(const nlohmann::json& j, const std::string& key,
                           const std::string& where) {
  if (!j.contains(key) || !j.at(key).is_string()) {
    throw ValidationError(where + " needs a string '" + key + "'");
  }
  return j.at(key).get<std::string>();
}

void ensure_dir(const std::filesystem::path& p) {
  std::error_code ec;
  std::filesystem::create_directories(p, ec);
  if (ec) {
    throw IoError("cannot create directory " + p.string() + ": " +
                  ec.message());
  }
}

std::string to_hex(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(v));
  return std::string(buf);
}

int effective_jobs(const RunConfig& cfg) {
  if (cfg.jobs > 0) return cfg.jobs;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

// Runs fn(i) for i in [0, n), spreading indices over up to `jobs` threads.
// Outputs must be written to per-index slots; the first pending exception is
// rethrown after all threads join.
template <typename Fn>
void for_each_index(std::size_t n, int jobs, Fn&& fn) {
  const int n_threads =
      std::clamp(jobs, 1, static_cast<int>(n == 0 ? 1 : n));
  if (n_threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(n_threads));
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(n_threads));
  for (int t = 0; t < n_threads; ++t) {
    pool.emplace_back([&, t]() {
      try {
        for (std::size_t i = static_cast<std::size_t>(t); i < n;
             i += static_cast<std::size_t>(n_threads)) {
          fn(i);
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

}  // namespace

Overrides overrides_from_json(const nlohmann::json& j) {
  if (!j.is_object()) {
    throw ValidationError("overrides must be a JSON object");
  }
  check_keys(j, "overrides", {"out", "seed", "jobs", "model", "scheme"});
  Overrides ov;
  if (j.contains("out")) ov.out = j.at("out").get<std::string>();
  if (j.contains("seed")) ov.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("jobs")) ov.jobs = j.at("jobs").get<int>();
  if (j.contains("model")) ov.model = j.at("model").get<std::string>();
  if (j.contains("scheme")) ov.scheme = j.at("scheme").get<std::string>();
  return ov;
}

RunConfig load_run_config(const std::filesystem::path& config_path,
                          const Overrides& overrides) {
  const std::string text = read_file(config_path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError("config " + config_path.string() +
                          " is not valid JSON: " + e.what());
  }
  if (!j.is_object()) throw ValidationError("config root must be an object");
  check_keys(j, "config",
             {"paths", "seed", "jobs", "sim", "experiment", "verify"});

  RunConfig cfg;
  const auto& paths = require_block(j, "paths", "config");
  check_keys(paths, "paths", {"data_dir", "out_dir"});
  cfg.data_dir = require_string(paths, "data_dir", "paths");
  cfg.out_dir = require_string(paths, "out_dir", "paths");
  if (!j.contains("seed") || !j.at("seed").is_number()) {
    throw ValidationError("config needs a numeric 'seed'");
  }
  cfg.seed = j.at("seed").get<std::uint64_t>();
  cfg.jobs = j.value("jobs", 0);
  if (cfg.jobs < 0) throw ValidationError("'jobs' must not be negative");
  cfg.raw = std::move(j);
  cfg.overrides = overrides;

  if (overrides.out.has_value()) cfg.out_dir = *overrides.out;
  if (overrides.seed.has_value()) cfg.seed = *overrides.seed;
  if (overrides.jobs.has_value()) {
    if (*overrides.jobs < 0) {
      throw ValidationError("'jobs' must not be negative");
    }
    cfg.jobs = *overrides.jobs;
  }
  return cfg;
}

SimConfig sim_config_of(const RunConfig& cfg) {
  SimConfig s;
  if (!cfg.raw.contains("sim")) return s;
  const auto& j = cfg.raw.at("sim");
  if (!j.is_object()) throw ValidationError("'sim' must be an object");
  check_keys(j, "sim",
             {"n_stations", "start_date", "n_days", "lead_times_h",
              "init_hour", "include_hres", "base_log_vis",
              "seasonal_amplitude", "diurnal_amplitude", "ar_coeff",
              "ar_sigma", "station_sd", "bias", "error_scale", "dispersion"});
  s.n_stations = j.value("n_stations", s.n_stations);
  if (j.contains("start_date")) {
    s.start_date = parse_date(j.at("start_date").get<std::string>());
  }
  s.n_days = j.value("n_days", s.n_days);
  if (j.contains("lead_times_h")) {
    s.lead_times_h = j.at("lead_times_h").get<std::vector<int>>();
  }
  s.init_hour = j.value("init_hour", s.init_hour);
  s.include_hres = j.value("include_hres", s.include_hres);
  s.base_log_vis = j.value("base_log_vis", s.base_log_vis);
  s.seasonal_amplitude = j.value("seasonal_amplitude", s.seasonal_amplitude);
  s.diurnal_amplitude = j.value("diurnal_amplitude", s.diurnal_amplitude);
  s.ar_coeff = j.value("ar_coeff", s.ar_coeff);
  s.ar_sigma = j.value("ar_sigma", s.ar_sigma);
  s.station_sd = j.value("station_sd", s.station_sd);
  s.bias = j.value("bias", s.bias);
  s.error_scale = j.value("error_scale", s.error_scale);
  s.dispersion = j.value("dispersion", s.dispersion);
  return s;
}

ExperimentConfig experiment_config_of(const RunConfig& cfg) {
  const auto& j = require_block(cfg.raw, "experiment", "config");
  check_keys(j, "experiment",
             {"model", "scheme", "training_length", "climatology_length",
              "lead_times_h", "verification", "features", "polr", "mlp",
              "refit_every_days"});
  ExperimentConfig e;
  e.master_seed = cfg.seed;

  std::string model = j.value("model", "polr");
  if (cfg.overrides.model.has_value()) model = *cfg.overrides.model;
  e.model = model_of_name(model);

  std::string scheme = "local";
  if (j.contains("scheme")) {
    const auto& js = j.at("scheme");
    if (js.is_string()) {
      scheme = js.get<std::string>();
    } else if (js.is_object()) {
      check_keys(js, "scheme", {"kind", "n_clusters", "min_cluster_size"});
      scheme = js.value("kind", scheme);
      e.scheme.n_clusters = js.value("n_clusters", e.scheme.n_clusters);
      e.scheme.min_cluster_size =
          js.value("min_cluster_size", e.scheme.min_cluster_size);
    } else {
      throw ValidationError("'scheme' must be a name or an object");
    }
  }
  if (cfg.overrides.scheme.has_value()) scheme = *cfg.overrides.scheme;
  e.scheme.kind = scheme_of_name(scheme);

  e.training_length = j.value("training_length", e.training_length);
  e.climatology_length = j.value("climatology_length", e.climatology_length);
  if (j.contains("lead_times_h")) {
    e.lead_times_h = j.at("lead_times_h").get<std::vector<int>>();
  }

  const auto& jv = require_block(j, "verification", "experiment");
  check_keys(jv, "verification", {"start", "end"});
  e.verif_start = parse_date(require_string(jv, "start", "verification"));
  e.verif_end = parse_date(require_string(jv, "end", "verification"));

  if (j.contains("features")) {
    const auto& jf = j.at("features");
    if (!jf.is_object()) throw ValidationError("'features' must be an object");
    check_keys(jf, "features", {"use_hres", "t1", "t2", "t3", "normalizer"});
    e.features.use_hres = jf.value("use_hres", e.features.use_hres);
    e.features.t1 = jf.value("t1", e.features.t1);
    e.features.t2 = jf.value("t2", e.features.t2);
    e.features.t3 = jf.value("t3", e.features.t3);
    e.features.normalizer = jf.value("normalizer", e.features.normalizer);
  }

  if (j.contains("polr")) {
    const auto& jp = j.at("polr");
    if (!jp.is_object()) throw ValidationError("'polr' must be an object");
    check_keys(jp, "polr",
               {"max_iter", "grad_tol", "armijo_c", "init_threshold_gap",
                "warm_start"});
    e.polr.max_iter = jp.value("max_iter", e.polr.max_iter);
    e.polr.grad_tol = jp.value("grad_tol", e.polr.grad_tol);
    e.polr.armijo_c = jp.value("armijo_c", e.polr.armijo_c);
    e.polr.init_threshold_gap =
        jp.value("init_threshold_gap", e.polr.init_threshold_gap);
    e.polr_warm_start = jp.value("warm_start", e.polr_warm_start);
  }

  if (j.contains("mlp")) {
    const auto& jm = j.at("mlp");
    if (!jm.is_object()) throw ValidationError("'mlp' must be an object");
    check_keys(jm, "mlp",
               {"hidden", "max_epochs", "learning_rate", "init_scale"});
    if (jm.contains("hidden")) {
      e.mlp_arch.hidden = jm.at("hidden").get<std::vector<int>>();
    }
    e.mlp_train.max_epochs = jm.value("max_epochs", e.mlp_train.max_epochs);
    e.mlp_train.learning_rate =
        jm.value("learning_rate", e.mlp_train.learning_rate);
    e.mlp_train.init_scale = jm.value("init_scale", e.mlp_train.init_scale);
  }
  e.mlp_arch.input_dim = static_cast<int>(feature_names(e.features).size());
  e.mlp_arch.output_dim = kNumClasses;

  e.refit_every_days = j.value("refit_every_days", e.refit_every_days);

  validate_experiment_config(e);
  return e;
}

VerifyConfig verify_config_of(const RunConfig& cfg) {
  VerifyConfig v;
  if (!cfg.raw.contains("verify")) return v;
  const auto& j = cfg.raw.at("verify");
  if (!j.is_object()) throw ValidationError("'verify' must be an object");
  check_keys(j, "verify",
             {"reference", "n_boot", "mean_block_len", "pit_bins",
              "interval_level", "ci_level", "logs_pi"});
  v.reference = j.value("reference", v.reference);
  v.n_boot = j.value("n_boot", v.n_boot);
  v.mean_block_len = j.value("mean_block_len", v.mean_block_len);
  v.pit_bins = j.value("pit_bins", v.pit_bins);
  v.interval_level = j.value("interval_level", v.interval_level);
  v.ci_level = j.value("ci_level", v.ci_level);
  v.logs_pi = j.value("logs_pi", v.logs_pi);
  return v;
}

namespace {

nlohmann::json sim_config_json(const SimConfig& s) {
  nlohmann::json j;
  j["n_stations"] = s.n_stations;
  j["start_date"] = format_date(s.start_date);
  j["n_days"] = s.n_days;
  j["lead_times_h"] = s.lead_times_h;
  j["init_hour"] = s.init_hour;
  j["include_hres"] = s.include_hres;
  j["base_log_vis"] = s.base_log_vis;
  j["seasonal_amplitude"] = s.seasonal_amplitude;
  j["diurnal_amplitude"] = s.diurnal_amplitude;
  j["ar_coeff"] = s.ar_coeff;
  j["ar_sigma"] = s.ar_sigma;
  j["station_sd"] = s.station_sd;
  j["bias"] = s.bias;
  j["error_scale"] = s.error_scale;
  j["dispersion"] = s.dispersion;
  return j;
}

}  // namespace

int cmd_simulate(const RunConfig& cfg, std::string* message) {
  (void)message;
  const SimConfig sim = sim_config_of(cfg);
  validate_sim_config(sim);
  const SimulatedData data = simulate_dataset(sim, cfg.seed);
  ensure_dir(cfg.data_dir);
  write_file(cfg.data_dir / "forecasts.csv", forecasts_csv(data.forecasts));
  write_file(cfg.data_dir / "observations.csv",
             observations_csv(data.observations));
  write_file(cfg.data_dir / "stations.csv", stations_csv(data.stations));
  nlohmann::json manifest;
  manifest["seed"] = cfg.seed;
  manifest["config_hash"] = to_hex(hash_bytes(sim_config_json(sim).dump()));
  write_file(cfg.data_dir / "manifest.json", manifest.dump(2) + "\n");
  return 0;
}

namespace {

struct LoadedCases {
  std::vector<ForecastRecord> forecasts;
  std::vector<ObservationRecord> observations;
  JoinResult joined;
  Date data_start = 0;
};

LoadedCases load_cases(const RunConfig& cfg) {
  LoadedCases d;
  d.forecasts = load_forecasts(cfg.data_dir / "forecasts.csv");
  d.observations = load_observations(cfg.data_dir / "observations.csv");
  d.joined = join_cases(d.forecasts, d.observations);
  if (d.joined.cases.empty()) {
    throw ValidationError(
        "no usable cases after joining forecasts and observations");
  }
  d.data_start = earliest_observation_date(d.observations);
  return d;
}

std::vector<int> sorted_leads(const ExperimentConfig& e) {
  std::vector<int> leads = e.lead_times_h;
  std::sort(leads.begin(), leads.end());
  leads.erase(std::unique(leads.begin(), leads.end()), leads.end());
  return leads;
}

std::string param_file_name(const ExperimentConfig& e, int lead,
                            const std::string& scope, Date refit_date) {
  return model_name(e.model) + "_" + scheme_name(e.scheme.kind) + "_" +
         std::to_string(lead) + "_" + scope + "_" + format_date(refit_date) +
         ".json";
}

std::string sanitize_csv_field(std::string s) {
  for (char& c : s) {
    if (c == ',' || c == '\n' || c == '\r') c = ';';
  }
  return s;
}

}  // namespace

int cmd_train(const RunConfig& cfg, std::string* message) {
  const ExperimentConfig ecfg = experiment_config_of(cfg);
  const LoadedCases data = load_cases(cfg);
  const auto params_dir = cfg.out_dir / "params";
  ensure_dir(params_dir);

  // Cluster assignments are shared across lead times, so they are written
  // once up front.
  if (ecfg.scheme.kind == SchemeKind::semi_local) {
    for (Date t0 = ecfg.verif_start; t0 <= ecfg.verif_end;
         t0 += ecfg.refit_every_days) {
      const TrainingWindow window{t0 - ecfg.training_length, t0 - 1};
      if (window.start < data.data_start) continue;
      const auto features = climatology_features(data.observations, window);
      if (features.empty()) continue;
      std::map<std::string, std::array<double, 3>> coords;
      for (const auto& [st, f] : features) coords[st] = f.freq;
      const auto clusters = kmeans_clusters(
          coords, ecfg.scheme.n_clusters, ecfg.scheme.min_cluster_size,
          kmeans_seed(ecfg.master_seed, t0));
      nlohmann::json j;
      j["date"] = format_date(t0);
      j["assignments"] = clusters;
      write_file(params_dir / ("clusters_" + format_date(t0) + ".json"),
                 j.dump(2) + "\n");
    }
  }

  const std::vector<int> leads = sorted_leads(ecfg);
  struct LeadResult {
    std::vector<TaskLog> logs;
    std::vector<std::string> files;
  };
  std::vector<LeadResult> results(leads.size());
  for_each_index(leads.size(), effective_jobs(cfg), [&](std::size_t li) {
    const int lead = leads[li];
    const auto lead_cases = cases_for_lead(data.joined.cases, lead);
    std::map<std::uint64_t, std::vector<double>> warm_chain;
    LeadResult& r = results[li];
    for (const RefitPlan& block : plan_lead(ecfg, lead_cases,
                                            data.observations,
                                            data.data_start)) {
      if (!block.feasible) {
        TaskLog tl;
        tl.target = block.refit_date;
        tl.lead_h = lead;
        tl.scope = "window";
        tl.message = block.note;
        r.logs.push_back(std::move(tl));
        continue;
      }
      for (const ScopePlan& scope : block.scopes) {
        FitOutcome fo = fit_scope_task(ecfg, lead, block, scope, &warm_chain);
        if (fo.log.ok) {
          const std::string name =
              param_file_name(ecfg, lead, scope.token, block.refit_date);
          write_file(params_dir / name,
                     fitted_model_to_json(fo.model).dump(2) + "\n");
          r.files.push_back(name);
        }
        r.logs.push_back(std::move(fo.log));
      }
    }
  });

  std::vector<TaskLog> failures;
  std::size_t n_tasks = 0;
  std::vector<std::string> files;
  for (const auto& r : results) {
    n_tasks += r.logs.size();
    for (const auto& tl : r.logs) {
      if (!tl.ok) failures.push_back(tl);
    }
    files.insert(files.end(), r.files.begin(), r.files.end());
  }
  std::sort(files.begin(), files.end());
  std::sort(failures.begin(), failures.end(),
            [](const TaskLog& a, const TaskLog& b) {
              return std::tie(a.target, a.lead_h, a.scope) <
                     std::tie(b.target, b.lead_h, b.scope);
            });

  std::string fcsv = "target_date,lead_h,scope,n_train,message\n";
  for (const auto& tl : failures) {
    fcsv += format_date(tl.target);
    fcsv += ',';
    fcsv += std::to_string(tl.lead_h);
    fcsv += ',';
    fcsv += sanitize_csv_field(tl.scope);
    fcsv += ',';
    fcsv += std::to_string(tl.n_train);
    fcsv += ',';
    fcsv += sanitize_csv_field(tl.message);
    fcsv += '\n';
  }
  write_file(params_dir / "failures.csv", fcsv);

  nlohmann::json index;
  index["model"] = model_name(ecfg.model);
  index["scheme"] = scheme_name(ecfg.scheme.kind);
  index["lead_times_h"] = leads;
  index["n_tasks"] = n_tasks;
  index["n_failed"] = failures.size();
  index["files"] = files;
  write_file(params_dir / "index.json", index.dump(2) + "\n");

  if (!failures.empty()) {
    if (message != nullptr) {
      *message = std::to_string(failures.size()) + " of " +
                 std::to_string(n_tasks) +
                 " fit tasks failed; see params/failures.csv";
    }
    return 2;
  }
  return 0;
}

namespace {

struct PmfRowRec {
  std::string station_id;
  TimePoint init_time = 0;
  int lead_h = 0;
  int obs_class = 1;
  PredictiveDistribution pmf;
};

std::vector<std::string> pmf_table_header() {
  std::vector<std::string> h = {"station_id", "init_time", "lead_h",
                                "obs_class"};
  for (int k = 1; k <= kNumClasses; ++k) h.push_back("p" + std::to_string(k));
  return h;
}

std::string pmf_table_csv(std::vector<PmfRowRec> rows) {
  std::sort(rows.begin(), rows.end(),
            [](const PmfRowRec& a, const PmfRowRec& b) {
              return std::tie(a.init_time, a.lead_h, a.station_id) <
                     std::tie(b.init_time, b.lead_h, b.station_id);
            });
  std::string out;
  const auto header = pmf_table_header();
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (i > 0) out += ',';
    out += header[i];
  }
  out += '\n';
  for (const auto& r : rows) {
    out += r.station_id;
    out += ',';
    out += format_time(r.init_time);
    out += ',';
    out += std::to_string(r.lead_h);
    out += ',';
    out += std::to_string(r.obs_class);
    for (const double p : r.pmf.pmf) {
      out += ',';
      out += format_double(p);
    }
    out += '\n';
  }
  return out;
}

std::vector<PmfRowRec> read_pmf_table(const std::filesystem::path& path) {
  const CsvFile csv = read_csv(path, pmf_table_header());
  std::vector<PmfRowRec> rows;
  rows.reserve(csv.rows.size());
  for (const auto& fields : csv.rows) {
    PmfRowRec r;
    r.station_id = fields[0];
    r.init_time = parse_time(fields[1]);
    r.lead_h = static_cast<int>(parse_int(fields[2], "lead_h"));
    r.obs_class = static_cast<int>(parse_int(fields[3], "obs_class"));
    if (r.obs_class < 1 || r.obs_class > kNumClasses) {
      throw ValidationError("observed class out of range in " + path.string());
    }
    for (int k = 0; k < kNumClasses; ++k) {
      r.pmf.pmf[static_cast<std::size_t>(k)] =
          parse_double(fields[static_cast<std::size_t>(4 + k)], "probability");
    }
    rows.push_back(std::move(r));
  }
  return rows;
}

}  // namespace

int cmd_predict(const RunConfig& cfg, std::string* message) {
  const ExperimentConfig ecfg = experiment_config_of(cfg);
  const LoadedCases data = load_cases(cfg);
  const auto params_dir = cfg.out_dir / "params";
  const auto pred_dir = cfg.out_dir / "predictions";
  ensure_dir(pred_dir);

  const std::vector<int> leads = sorted_leads(ecfg);
  struct LeadRows {
    std::vector<PmfRowRec> model;
    std::vector<PmfRowRec> climatology;
    std::vector<PmfRowRec> raw;
    std::size_t skipped = 0;
  };
  std::vector<LeadRows> results(leads.size());
  for_each_index(leads.size(), effective_jobs(cfg), [&](std::size_t li) {
    const int lead = leads[li];
    const auto lead_cases = cases_for_lead(data.joined.cases, lead);
    LeadRows& r = results[li];

    // Reference forecasts exist for every verification case, fits or not.
    for (const ForecastCase* c : lead_cases) {
      const Date d = date_of(c->forecast.init_time);
      if (d < ecfg.verif_start || d > ecfg.verif_end) continue;
      PmfRowRec base;
      base.station_id = c->forecast.station_id;
      base.init_time = c->forecast.init_time;
      base.lead_h = lead;
      base.obs_class = c->observation.visibility_class;
      {
        PmfRowRec raw_row = base;
        raw_row.pmf = raw_ensemble_distribution(c->forecast);
        r.raw.push_back(std::move(raw_row));
      }
      const Date vd = date_of(c->observation.valid_time);
      const TrainingWindow cw{vd - ecfg.climatology_length, vd - 1};
      try {
        PmfRowRec climo_row = base;
        climo_row.pmf = climatology_forecast(data.observations,
                                             c->forecast.station_id, cw,
                                             hour_of(c->observation.valid_time));
        r.climatology.push_back(std::move(climo_row));
      } catch (const ValidationError&) {
        // No observations in the window; the case drops out of the join.
      }
    }

    for (const RefitPlan& block : plan_lead(ecfg, lead_cases,
                                            data.observations,
                                            data.data_start)) {
      if (!block.feasible) {
        r.skipped += block.n_targets;
        continue;
      }
      for (const ScopePlan& scope : block.scopes) {
        const auto path = params_dir / param_file_name(ecfg, lead, scope.token,
                                                       block.refit_date);
        if (!std::filesystem::exists(path)) {
          r.skipped += scope.targets.size();
          continue;
        }
        nlohmann::json pj;
        try {
          pj = nlohmann::json::parse(read_file(path));
        } catch (const nlohmann::json::parse_error& e) {
          throw ValidationError("parameter file " + path.string() +
                                " is not valid JSON: " + e.what());
        }
        const FittedModel fm = fitted_model_from_json(pj);
        for (const ForecastCase* c : scope.targets) {
          try {
            const FeatureVector x = extract_features(*c, ecfg.features);
            PmfRowRec row;
            row.station_id = c->forecast.station_id;
            row.init_time = c->forecast.init_time;
            row.lead_h = lead;
            row.obs_class = c->observation.visibility_class;
            row.pmf = predict_with(fm, x);
            r.model.push_back(std::move(row));
          } catch (const ValidationError&) {
            ++r.skipped;
          }
        }
      }
    }
  });

  std::vector<PmfRowRec> model_rows, climo_rows, raw_rows;
  std::size_t skipped = 0;
  for (auto& r : results) {
    model_rows.insert(model_rows.end(),
                      std::make_move_iterator(r.model.begin()),
                      std::make_move_iterator(r.model.end()));
    climo_rows.insert(climo_rows.end(),
                      std::make_move_iterator(r.climatology.begin()),
                      std::make_move_iterator(r.climatology.end()));
    raw_rows.insert(raw_rows.end(), std::make_move_iterator(r.raw.begin()),
                    std::make_move_iterator(r.raw.end()));
    skipped += r.skipped;
  }
  write_file(pred_dir / (model_name(ecfg.model) + ".csv"),
             pmf_table_csv(std::move(model_rows)));
  write_file(pred_dir / "climatology.csv", pmf_table_csv(std::move(climo_rows)));
  write_file(pred_dir / "raw.csv", pmf_table_csv(std::move(raw_rows)));

  if (skipped > 0) {
    if (message != nullptr) {
      *message = std::to_string(skipped) +
                 " cases had no usable model parameters";
    }
    return 2;
  }
  return 0;
}

int cmd_verify(const RunConfig& cfg, std::string* message) {
  (void)message;
  const ExperimentConfig ecfg = experiment_config_of(cfg);
  const VerifyConfig vcfg = verify_config_of(cfg);
  const std::string mname = model_name(ecfg.model);
  const auto pred_dir = cfg.out_dir / "predictions";

  const auto model_rows = read_pmf_table(pred_dir / (mname + ".csv"));
  const auto climo_rows = read_pmf_table(pred_dir / "climatology.csv");
  const auto raw_rows = read_pmf_table(pred_dir / "raw.csv");

  using Key = std::tuple<std::string, TimePoint, int>;
  const auto index_of = [](const std::vector<PmfRowRec>& rows) {
    std::map<Key, std::size_t> idx;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      idx[{rows[i].station_id, rows[i].init_time, rows[i].lead_h}] = i;
    }
    return idx;
  };
  const auto climo_idx = index_of(climo_rows);
  const auto raw_idx = index_of(raw_rows);

  std::vector<ScoredCase> cases;
  cases.reserve(model_rows.size());
  for (const auto& mr : model_rows) {
    const Key key{mr.station_id, mr.init_time, mr.lead_h};
    const auto ci = climo_idx.find(key);
    const auto ri = raw_idx.find(key);
    if (ci == climo_idx.end() || ri == raw_idx.end()) continue;
    const auto& cr = climo_rows[ci->second];
    const auto& rr = raw_rows[ri->second];
    if (cr.obs_class != mr.obs_class || rr.obs_class != mr.obs_class) {
      throw ValidationError(
          "observed class disagrees between prediction tables for station " +
          mr.station_id);
    }
    ScoredCase sc;
    sc.station_id = mr.station_id;
    sc.init_time = mr.init_time;
    sc.lead_h = mr.lead_h;
    sc.valid_time = add_hours(mr.init_time, mr.lead_h);
    sc.obs_class = mr.obs_class;
    sc.model = mr.pmf;
    sc.climatology = cr.pmf;
    sc.raw = rr.pmf;
    cases.push_back(std::move(sc));
  }
  if (cases.empty()) {
    throw ValidationError("no joint cases across the prediction tables");
  }

  ReportConfig rc;
  rc.model_name = mname;
  rc.reference = vcfg.reference;
  rc.n_boot = vcfg.n_boot;
  rc.mean_block_len = vcfg.mean_block_len;
  rc.interval_level = vcfg.interval_level;
  rc.ci_level = vcfg.ci_level;
  rc.logs_pi = vcfg.logs_pi;
  rc.seed = combine_seed(cfg.seed, "verify");

  const ScoreReport report = aggregate_report(cases, rc);
  const auto report_dir = cfg.out_dir / "report";
  ensure_dir(report_dir);
  write_file(report_dir / "report.csv", score_report_csv(report));
  write_file(report_dir / "report.json",
             score_report_json(report).dump(2) + "\n");
  const auto pit = collect_pit(cases, mname, rc.seed);
  write_file(report_dir / "pit_bins.csv", pit_bins_csv(pit, vcfg.pit_bins));
  return 0;
}

int cmd_report(const RunConfig& cfg, std::string* message) {
  (void)message;
  const auto report_path = cfg.out_dir / "report" / "report.json";
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(report_path));
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError("report " + report_path.string() +
                          " is not valid JSON: " + e.what());
  }
  if (!j.contains("rows") || !j.at("rows").is_array()) {
    throw ValidationError("report document lacks its rows");
  }

  // Reference means per lead time, for the ratio columns.
  std::map<std::pair<int, std::string>, std::pair<double, double>> means;
  for (const auto& row : j.at("rows")) {
    means[{row.at("lead_h").get<int>(), row.at("source").get<std::string>()}] =
        {row.at("mean_crps").get<double>(), row.at("mean_logs").get<double>()};
  }
  const auto mean_for = [&](int lead, const std::string& source) {
    const auto it = means.find({lead, source});
    if (it == means.end()) {
      throw ValidationError("report lacks the " + source +
                            " reference at lead " + std::to_string(lead));
    }
    return it->second;
  };

  std::string out =
      "lead_h,model,mean_crps,crps_pct_of_raw,crps_pct_of_climatology,"
      "mean_logs,logs_pct_of_raw,logs_pct_of_climatology\n";
  for (const auto& row : j.at("rows")) {
    const int lead = row.at("lead_h").get<int>();
    const std::string source = row.at("source").get<std::string>();
    const double crps_mean = row.at("mean_crps").get<double>();
    const double logs_mean = row.at("mean_logs").get<double>();
    const auto [raw_crps, raw_logs] = mean_for(lead, "raw");
    const auto [cl_crps, cl_logs] = mean_for(lead, "climatology");
    out += std::to_string(lead);
    out += ',';
    out += source;
    for (const double v :
         {crps_mean, 100.0 * crps_mean / raw_crps, 100.0 * crps_mean / cl_crps,
          logs_mean, 100.0 * logs_mean / raw_logs,
          100.0 * logs_mean / cl_logs}) {
      out += ',';
      out += format_double(v);
    }
    out += '\n';
  }
  const auto report_dir = cfg.out_dir / "report";
  ensure_dir(report_dir);
  write_file(report_dir / "curves.csv", out);
  return 0;
}

int dispatch_command(const std::string& name,
                     const std::filesystem::path& config_path,
                     const Overrides& overrides, std::string* message) {
  const auto set = [&](const std::string& m) {
    if (message != nullptr) *message = m;
  };
  try {
    const RunConfig cfg = load_run_config(config_path, overrides);
    if (name == "simulate") return cmd_simulate(cfg, message);
    if (name == "train") return cmd_train(cfg, message);
    if (name == "predict") return cmd_predict(cfg, message);
    if (name == "verify") return cmd_verify(cfg, message);
    if (name == "report") return cmd_report(cfg, message);
    throw ValidationError("unknown command '" + name + "'");
  } catch (const ValidationError& e) {
    set(e.what());
    return 1;
  } catch (const FitError& e) {
    set(e.what());
    return 2;
  } catch (const IoError& e) {
    set(e.what());
    return 3;
  } catch (const std::filesystem::filesystem_error& e) {
    set(e.what());
    return 3;
  } catch (const nlohmann::json::exception& e) {
    set(std::string("malformed JSON input: ") + e.what());
    return 1;
  } catch (const std::exception& e) {
    set(e.what());
    return 1;
  }
}

std::vector<ScoredCase> to_scored_cases(const std::vector<ResultRow>& rows) {
  std::vector<ScoredCase> out;
  out.reserve(rows.size());
  for (const auto& r : rows) {
    ScoredCase sc;
    sc.station_id = r.station_id;
    sc.init_time = r.init_time;
    sc.lead_h = r.lead_h;
    sc.valid_time = r.valid_time;
    sc.obs_class = r.obs_class;
    sc.model = r.model;
    sc.climatology = r.climatology;
    sc.raw = r.raw;
    out.push_back(std::move(sc));
  }
  return out;
}

}  // namespace viscal
