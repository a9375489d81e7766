#pragma once

#include <cstdint>
#include <string>

namespace viscal {

// Calendar date, counted in days since 1970-01-01 (proleptic Gregorian, UTC).
using Date = std::int32_t;

// Instant, counted in seconds since 1970-01-01T00:00:00Z.
using TimePoint = std::int64_t;

struct CivilDate {
  int year;
  int month;  // 1..12
  int day;    // 1..31
};

constexpr bool is_leap_year(int y) {
  return y % 4 == 0 && (y % 100 != 0 || y % 400 == 0);
}

// Civil-to-count conversion after Howard Hinnant's public-domain algorithm.
constexpr Date to_date(const CivilDate& c) {
  const int y = c.year - (c.month <= 2);
  const int era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy =
      (153u * static_cast<unsigned>(c.month + (c.month > 2 ? -3 : 9)) + 2) / 5 +
      static_cast<unsigned>(c.day) - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return static_cast<Date>(era * 146097 + static_cast<int>(doe) - 719468);
}

CivilDate civil_of(Date d);

Date date_of(TimePoint t);
int hour_of(TimePoint t);
TimePoint time_at(Date d, int hour);
inline TimePoint add_hours(TimePoint t, int h) { return t + 3600LL * h; }

// Day of the year in 1..365. February 29 shares day 59 with February 28 so
// that annual harmonics always run on a 365-day phase.
int day_of_year_365(Date d);

Date parse_date(const std::string& s);       // YYYY-MM-DD
std::string format_date(Date d);
TimePoint parse_time(const std::string& s);  // YYYY-MM-DDTHH:MM:SS with optional Z
std::string format_time(TimePoint t);        // always with trailing Z

}  // namespace viscal
