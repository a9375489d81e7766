#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "viscal/time.hpp"

namespace viscal {

inline constexpr int kEnsembleMembers = 50;

struct ForecastRecord {
  std::string station_id;
  TimePoint init_time = 0;
  int lead_time_h = 0;            // positive multiple of 6
  std::optional<double> hres;     // high-resolution run, meters
  double ctrl = 0.0;              // control run, meters
  std::vector<double> members;    // 50 exchangeable members, or empty if missing
};

struct ObservationRecord {
  std::string station_id;
  TimePoint valid_time = 0;
  int visibility_class = 1;  // 1..84 on the reporting scale
};

struct StationMeta {
  std::string station_id;
  double latitude = 0.0;
  double longitude = 0.0;
};

// A forecast joined with its validating observation.
struct ForecastCase {
  ForecastRecord forecast;
  ObservationRecord observation;
  int day_of_year = 1;  // 1..365, from the valid time
};

std::vector<ForecastRecord> load_forecasts(const std::filesystem::path& path);
std::vector<ObservationRecord> load_observations(
    const std::filesystem::path& path);
std::vector<StationMeta> load_stations(const std::filesystem::path& path);

std::string forecasts_csv(const std::vector<ForecastRecord>& records);
std::string observations_csv(const std::vector<ObservationRecord>& records);
std::string stations_csv(const std::vector<StationMeta>& records);

struct JoinResult {
  // Sorted by (init_time, lead_time_h, station_id) so downstream fits see a
  // canonical case order regardless of input file order.
  std::vector<ForecastCase> cases;
  std::size_t dropped_no_observation = 0;
  std::size_t dropped_no_members = 0;
  std::map<std::string, std::size_t> dropped_by_station;
};

// Inner join on (station, valid time); forecasts without members or without a
// matching observation are dropped and counted.
JoinResult join_cases(const std::vector<ForecastRecord>& forecasts,
                      const std::vector<ObservationRecord>& observations);

}  // namespace viscal
