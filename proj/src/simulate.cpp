#include "viscal/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>

#include "viscal/errors.hpp"
#include "viscal/rng.hpp"
#include "viscal/scale.hpp"

namespace viscal {

namespace {

constexpr double kTwoPi = 2.0 * 3.14159265358979323846;
constexpr int kStepHours = 6;

double capped_exp(double log_vis) {
  return std::min(std::exp(log_vis), 70000.0);
}

std::string station_name(int index) {
  char buf[8];
  std::snprintf(buf, sizeof buf, "S%03d", index + 1);
  return buf;
}

// Seasonal low in mid-January (day 15), diurnal low at 06 UTC.
double mean_log_vis(const SimConfig& cfg, Date d, int hour) {
  const int doy = day_of_year_365(d);
  return cfg.base_log_vis -
         cfg.seasonal_amplitude * std::cos(kTwoPi * (doy - 15) / 365.0) -
         cfg.diurnal_amplitude * std::cos(kTwoPi * (hour - 6) / 24.0);
}

double error_sd(const SimConfig& cfg, int lead_h) {
  return cfg.error_scale * std::pow(lead_h / 24.0, 0.4);
}

}  // namespace

void validate_sim_config(const SimConfig& cfg) {
  if (cfg.n_stations < 1 || cfg.n_stations > 999) {
    throw ValidationError("n_stations must be in 1..999");
  }
  if (cfg.n_days < 1) throw ValidationError("n_days must be positive");
  if (cfg.lead_times_h.empty()) {
    throw ValidationError("lead_times_h must not be empty");
  }
  for (const int lead : cfg.lead_times_h) {
    if (lead <= 0 || lead % kStepHours != 0) {
      throw ValidationError("lead times must be positive multiples of 6, got " +
                            std::to_string(lead));
    }
  }
  if (cfg.init_hour < 0 || cfg.init_hour > 23 ||
      cfg.init_hour % kStepHours != 0) {
    throw ValidationError("init_hour must be one of 0, 6, 12, 18");
  }
  if (cfg.ar_coeff <= -1 || cfg.ar_coeff >= 1) {
    throw ValidationError("ar_coeff must lie in (-1, 1)");
  }
  if (cfg.ar_sigma < 0 || cfg.station_sd < 0 || cfg.error_scale < 0 ||
      cfg.dispersion < 0) {
    throw ValidationError("noise scales must be non-negative");
  }
}

SimulatedData simulate_dataset(const SimConfig& cfg, std::uint64_t seed) {
  validate_sim_config(cfg);

  const int max_lead =
      *std::max_element(cfg.lead_times_h.begin(), cfg.lead_times_h.end());
  // The truth grid must reach the last valid time: last init is on day
  // n_days-1 at init_hour, plus the longest lead.
  const TimePoint grid_start = time_at(cfg.start_date, 0);
  const TimePoint grid_end =
      add_hours(time_at(cfg.start_date + cfg.n_days - 1, cfg.init_hour),
                max_lead);
  const int n_steps =
      static_cast<int>((grid_end - grid_start) / (3600 * kStepHours)) + 1;

  SimulatedData out;
  out.stations.reserve(static_cast<std::size_t>(cfg.n_stations));
  out.observations.reserve(
      static_cast<std::size_t>(cfg.n_stations) * n_steps);

  for (int s = 0; s < cfg.n_stations; ++s) {
    Rng station_rng(combine_seed(combine_seed(seed, "station"),
                                 static_cast<std::uint64_t>(s)));
    StationMeta meta;
    meta.station_id = station_name(s);
    meta.latitude = station_rng.uniform(35.0, 60.0);
    meta.longitude = station_rng.uniform(-10.0, 30.0);
    const double offset = station_rng.normal(0.0, cfg.station_sd);
    out.stations.push_back(meta);

    // Latent anomaly path, started from its stationary distribution.
    Rng truth_rng(combine_seed(combine_seed(seed, "truth"),
                               static_cast<std::uint64_t>(s)));
    std::vector<double> log_vis(static_cast<std::size_t>(n_steps));
    const double stationary_sd =
        cfg.ar_sigma / std::sqrt(1.0 - cfg.ar_coeff * cfg.ar_coeff);
    double anomaly = truth_rng.normal(0.0, stationary_sd);
    for (int t = 0; t < n_steps; ++t) {
      if (t > 0) {
        anomaly = cfg.ar_coeff * anomaly +
                  truth_rng.normal(0.0, cfg.ar_sigma);
      }
      const TimePoint when = add_hours(grid_start, t * kStepHours);
      log_vis[static_cast<std::size_t>(t)] =
          mean_log_vis(cfg, date_of(when), hour_of(when)) + offset + anomaly;
    }

    for (int t = 0; t < n_steps; ++t) {
      ObservationRecord obs;
      obs.station_id = meta.station_id;
      obs.valid_time = add_hours(grid_start, t * kStepHours);
      obs.visibility_class =
          round_down(capped_exp(log_vis[static_cast<std::size_t>(t)]));
      out.observations.push_back(std::move(obs));
    }

    for (int day = 0; day < cfg.n_days; ++day) {
      const TimePoint init =
          time_at(cfg.start_date + day, cfg.init_hour);
      for (const int lead : cfg.lead_times_h) {
        const TimePoint valid = add_hours(init, lead);
        const int step = static_cast<int>((valid - grid_start) /
                                          (3600 * kStepHours));
        const double truth_log = log_vis[static_cast<std::size_t>(step)];
        const double sd = error_sd(cfg, lead);

        Rng fc_rng(combine_seed(
            combine_seed(combine_seed(combine_seed(seed, "forecast"),
                                      static_cast<std::uint64_t>(s)),
                         static_cast<std::uint64_t>(day)),
            static_cast<std::uint64_t>(lead)));
        // One error shared by the whole run plus small member-specific
        // scatter: the ensemble is underdispersed by construction.
        const double shared = fc_rng.normal(0.0, sd);
        const double hres_err = fc_rng.normal(0.0, 0.85 * sd);

        ForecastRecord fc;
        fc.station_id = meta.station_id;
        fc.init_time = init;
        fc.lead_time_h = lead;
        if (cfg.include_hres) {
          fc.hres = capped_exp(truth_log + cfg.bias + hres_err);
        }
        fc.ctrl = capped_exp(truth_log + cfg.bias + shared);
        fc.members.reserve(kEnsembleMembers);
        for (int m = 0; m < kEnsembleMembers; ++m) {
          const double scatter =
              fc_rng.normal(0.0, cfg.dispersion * sd);
          fc.members.push_back(
              capped_exp(truth_log + cfg.bias + shared + scatter));
        }
        out.forecasts.push_back(std::move(fc));
      }
    }
  }
  return out;
}

}  // namespace viscal
