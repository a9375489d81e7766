#include "viscal/data.hpp"

#include <algorithm>
#include <cstdio>
#include <set>
#include <tuple>
#include <unordered_map>

#include "viscal/csv.hpp"
#include "viscal/errors.hpp"
#include "viscal/scale.hpp"

namespace viscal {

namespace {

std::vector<std::string> forecast_header() {
  std::vector<std::string> h = {"station_id", "init_time", "lead_h", "hres",
                                "ctrl"};
  for (int i = 1; i <= kEnsembleMembers; ++i) {
    char buf[8];
    std::snprintf(buf, sizeof buf, "m%02d", i);
    h.emplace_back(buf);
  }
  return h;
}

double parse_meters(const std::string& field, const std::string& where) {
  const double v = parse_double(field, where.c_str());
  if (v < 0) throw ValidationError(where + ": negative visibility " + field);
  return v;
}

[[noreturn]] void duplicate_key(const std::filesystem::path& path,
                                std::size_t row, const char* what) {
  throw ValidationError(path.string() + " line " + std::to_string(row + 2) +
                        ": duplicate " + what);
}

}  // namespace

std::vector<ForecastRecord> load_forecasts(const std::filesystem::path& path) {
  const CsvFile file = read_csv(path, forecast_header());
  std::vector<ForecastRecord> out;
  out.reserve(file.rows.size());
  std::set<std::tuple<std::string, TimePoint, int>> seen;
  for (std::size_t r = 0; r < file.rows.size(); ++r) {
    const auto& f = file.rows[r];
    const std::string where =
        path.string() + " line " + std::to_string(r + 2);
    ForecastRecord rec;
    rec.station_id = f[0];
    rec.init_time = parse_time(f[1]);
    rec.lead_time_h = static_cast<int>(parse_int(f[2], where.c_str()));
    if (rec.lead_time_h <= 0 || rec.lead_time_h % 6 != 0) {
      throw ValidationError(where + ": lead time must be a positive multiple "
                            "of 6, got " + f[2]);
    }
    if (!f[3].empty()) rec.hres = parse_meters(f[3], where);
    rec.ctrl = parse_meters(f[4], where);
    std::size_t empty_members = 0;
    for (int i = 0; i < kEnsembleMembers; ++i) {
      const auto& cell = f[static_cast<std::size_t>(5 + i)];
      if (cell.empty()) {
        ++empty_members;
      } else {
        rec.members.push_back(parse_meters(cell, where));
      }
    }
    // Either a full member set or none at all; a partial set would silently
    // change ensemble statistics.
    if (empty_members != 0 && empty_members != kEnsembleMembers) {
      throw ValidationError(where + ": " + std::to_string(empty_members) +
                            " of 50 member cells are empty");
    }
    if (!seen.emplace(rec.station_id, rec.init_time, rec.lead_time_h).second) {
      duplicate_key(path, r, "forecast key (station, init time, lead)");
    }
    out.push_back(std::move(rec));
  }
  return out;
}

std::vector<ObservationRecord> load_observations(
    const std::filesystem::path& path) {
  const CsvFile file = read_csv(path, {"station_id", "valid_time",
                                       "visibility_m"});
  std::vector<ObservationRecord> out;
  out.reserve(file.rows.size());
  std::set<std::pair<std::string, TimePoint>> seen;
  for (std::size_t r = 0; r < file.rows.size(); ++r) {
    const auto& f = file.rows[r];
    const std::string where =
        path.string() + " line " + std::to_string(r + 2);
    ObservationRecord rec;
    rec.station_id = f[0];
    rec.valid_time = parse_time(f[1]);
    rec.visibility_class = round_down(parse_meters(f[2], where));
    if (!seen.emplace(rec.station_id, rec.valid_time).second) {
      duplicate_key(path, r, "observation key (station, valid time)");
    }
    out.push_back(std::move(rec));
  }
  return out;
}

std::vector<StationMeta> load_stations(const std::filesystem::path& path) {
  const CsvFile file = read_csv(path, {"station_id", "lat", "lon"});
  std::vector<StationMeta> out;
  out.reserve(file.rows.size());
  std::set<std::string> seen;
  for (std::size_t r = 0; r < file.rows.size(); ++r) {
    const auto& f = file.rows[r];
    const std::string where =
        path.string() + " line " + std::to_string(r + 2);
    StationMeta rec;
    rec.station_id = f[0];
    rec.latitude = parse_double(f[1], where.c_str());
    rec.longitude = parse_double(f[2], where.c_str());
    if (std::abs(rec.latitude) > 90 || std::abs(rec.longitude) > 180) {
      throw ValidationError(where + ": coordinates out of range");
    }
    if (!seen.insert(rec.station_id).second) {
      duplicate_key(path, r, "station id");
    }
    out.push_back(std::move(rec));
  }
  return out;
}

std::string forecasts_csv(const std::vector<ForecastRecord>& records) {
  std::string out = "station_id,init_time,lead_h,hres,ctrl";
  for (int i = 1; i <= kEnsembleMembers; ++i) {
    char buf[8];
    std::snprintf(buf, sizeof buf, ",m%02d", i);
    out += buf;
  }
  out += '\n';
  for (const auto& r : records) {
    out += r.station_id;
    out += ',';
    out += format_time(r.init_time);
    out += ',';
    out += std::to_string(r.lead_time_h);
    out += ',';
    if (r.hres) out += format_double(*r.hres);
    out += ',';
    out += format_double(r.ctrl);
    for (int i = 0; i < kEnsembleMembers; ++i) {
      out += ',';
      if (!r.members.empty()) {
        out += format_double(r.members[static_cast<std::size_t>(i)]);
      }
    }
    out += '\n';
  }
  return out;
}

std::string observations_csv(const std::vector<ObservationRecord>& records) {
  std::string out = "station_id,valid_time,visibility_m\n";
  for (const auto& r : records) {
    out += r.station_id;
    out += ',';
    out += format_time(r.valid_time);
    out += ',';
    out += format_double(value_of(r.visibility_class));
    out += '\n';
  }
  return out;
}

std::string stations_csv(const std::vector<StationMeta>& records) {
  std::string out = "station_id,lat,lon\n";
  for (const auto& r : records) {
    out += r.station_id;
    out += ',';
    out += format_double(r.latitude);
    out += ',';
    out += format_double(r.longitude);
    out += '\n';
  }
  return out;
}

JoinResult join_cases(const std::vector<ForecastRecord>& forecasts,
                      const std::vector<ObservationRecord>& observations) {
  std::map<std::pair<std::string, TimePoint>, const ObservationRecord*> by_key;
  for (const auto& o : observations) {
    by_key.emplace(std::make_pair(o.station_id, o.valid_time), &o);
  }
  JoinResult result;
  for (const auto& f : forecasts) {
    if (f.members.empty()) {
      ++result.dropped_no_members;
      ++result.dropped_by_station[f.station_id];
      continue;
    }
    const TimePoint valid = add_hours(f.init_time, f.lead_time_h);
    const auto it = by_key.find(std::make_pair(f.station_id, valid));
    if (it == by_key.end()) {
      ++result.dropped_no_observation;
      ++result.dropped_by_station[f.station_id];
      continue;
    }
    ForecastCase c;
    c.forecast = f;
    c.observation = *it->second;
    c.day_of_year = day_of_year_365(date_of(valid));
    result.cases.push_back(std::move(c));
  }
  std::sort(result.cases.begin(), result.cases.end(),
            [](const ForecastCase& a, const ForecastCase& b) {
              return std::tie(a.forecast.init_time, a.forecast.lead_time_h,
                              a.forecast.station_id) <
                     std::tie(b.forecast.init_time, b.forecast.lead_time_h,
                              b.forecast.station_id);
            });
  return result;
}

}  // namespace viscal
