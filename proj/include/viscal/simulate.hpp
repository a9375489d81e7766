#pragma once

#include <cstdint>
#include <vector>

#include "viscal/data.hpp"
#include "viscal/time.hpp"

namespace viscal {

// Synthetic world: a lognormal latent visibility process per station with
// seasonal and diurnal structure, observed on a 6-hourly grid, plus a
// deliberately biased and underdispersed forecast ensemble around it.
struct SimConfig {
  int n_stations = 10;
  Date start_date = to_date(CivilDate{2019, 1, 1});
  int n_days = 730;
  std::vector<int> lead_times_h = {6, 24, 72, 120};
  int init_hour = 0;       // one forecast run per day at this UTC hour
  bool include_hres = true;

  // Latent log-visibility: base level plus annual and daily harmonics plus a
  // stationary AR(1) anomaly stepped every 6 hours.
  double base_log_vis = 9.1;        // log meters
  double seasonal_amplitude = 0.7;  // minimum visibility in mid-January
  double diurnal_amplitude = 0.35;  // minimum visibility at 06 UTC
  double ar_coeff = 0.87;
  double ar_sigma = 0.45;
  double station_sd = 0.25;  // per-station level offsets

  // Forecast errors in log space. The shared error grows with lead time as
  // error*(lead/24h)^0.4; members scatter around it by only a dispersion
  // fraction of that, which underdisperses the ensemble.
  double bias = 0.6;
  double error_scale = 0.3;
  double dispersion = 0.3;
};

struct SimulatedData {
  std::vector<ForecastRecord> forecasts;
  std::vector<ObservationRecord> observations;
  std::vector<StationMeta> stations;
};

// Deterministic for a fixed (config, seed) pair. All generated meter values
// are capped at 70000, the top of the reporting scale.
SimulatedData simulate_dataset(const SimConfig& cfg, std::uint64_t seed);

void validate_sim_config(const SimConfig& cfg);

}  // namespace viscal
