#include "viscal/time.hpp"

#include <array>
#include <charconv>
#include <cstdio>

#include "viscal/errors.hpp"

namespace viscal {

CivilDate civil_of(Date d) {
  const int z = d + 719468;
  const int era = (z >= 0 ? z : z - 146096) / 146097;
  const unsigned doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const int y = static_cast<int>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  const unsigned day = doy - (153 * mp + 2) / 5 + 1;
  const unsigned month = mp + (mp < 10 ? 3 : -9);
  return CivilDate{y + (month <= 2), static_cast<int>(month),
                   static_cast<int>(day)};
}

Date date_of(TimePoint t) {
  // Floor division so instants before the epoch land on the right day.
  const TimePoint d = t >= 0 ? t / 86400 : (t - 86399) / 86400;
  return static_cast<Date>(d);
}

int hour_of(TimePoint t) {
  const TimePoint sod = t - 86400LL * date_of(t);
  return static_cast<int>(sod / 3600);
}

TimePoint time_at(Date d, int hour) { return 86400LL * d + 3600LL * hour; }

int day_of_year_365(Date d) {
  const CivilDate c = civil_of(d);
  int ordinal = d - to_date(CivilDate{c.year, 1, 1}) + 1;
  // In leap years February 29 is ordinal 60; it and every later day shift
  // down by one so December 31 is always 365.
  if (is_leap_year(c.year) && ordinal >= 60) --ordinal;
  return ordinal;
}

namespace {

int parse_fixed_int(const std::string& s, std::size_t pos, std::size_t len,
                    const char* what) {
  if (pos + len > s.size()) {
    throw ValidationError("truncated " + std::string(what) + ": '" + s + "'");
  }
  int value = 0;
  const char* first = s.data() + pos;
  const auto res = std::from_chars(first, first + len, value);
  if (res.ec != std::errc{} || res.ptr != first + len) {
    throw ValidationError("bad " + std::string(what) + ": '" + s + "'");
  }
  return value;
}

int days_in_month(int year, int month) {
  static constexpr std::array<int, 12> lengths = {31, 28, 31, 30, 31, 30,
                                                  31, 31, 30, 31, 30, 31};
  if (month == 2 && is_leap_year(year)) return 29;
  return lengths[static_cast<std::size_t>(month - 1)];
}

CivilDate parse_civil(const std::string& s, std::size_t pos) {
  if (pos + 10 > s.size() || s[pos + 4] != '-' || s[pos + 7] != '-') {
    throw ValidationError("bad date: '" + s + "'");
  }
  const int year = parse_fixed_int(s, pos, 4, "year");
  const int month = parse_fixed_int(s, pos + 5, 2, "month");
  const int day = parse_fixed_int(s, pos + 8, 2, "day");
  if (month < 1 || month > 12 || day < 1 || day > days_in_month(year, month)) {
    throw ValidationError("bad date: '" + s + "'");
  }
  return CivilDate{year, month, day};
}

}  // namespace

Date parse_date(const std::string& s) {
  if (s.size() != 10) throw ValidationError("bad date: '" + s + "'");
  return to_date(parse_civil(s, 0));
}

std::string format_date(Date d) {
  const CivilDate c = civil_of(d);
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02d-%02d", c.year, c.month, c.day);
  return buf;
}

TimePoint parse_time(const std::string& s) {
  if (s.size() != 19 && !(s.size() == 20 && s.back() == 'Z')) {
    throw ValidationError("bad time: '" + s + "'");
  }
  const CivilDate c = parse_civil(s, 0);
  if (s[10] != 'T' || s[13] != ':' || s[16] != ':') {
    throw ValidationError("bad time: '" + s + "'");
  }
  const int hh = parse_fixed_int(s, 11, 2, "hour");
  const int mm = parse_fixed_int(s, 14, 2, "minute");
  const int ss = parse_fixed_int(s, 17, 2, "second");
  if (hh > 23 || mm > 59 || ss > 59) {
    throw ValidationError("bad time: '" + s + "'");
  }
  return 86400LL * to_date(c) + 3600LL * hh + 60LL * mm + ss;
}

std::string format_time(TimePoint t) {
  const Date d = date_of(t);
  const TimePoint sod = t - 86400LL * d;
  const CivilDate c = civil_of(d);
  char buf[24];
  std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02dZ", c.year,
                c.month, c.day, static_cast<int>(sod / 3600),
                static_cast<int>(sod / 60 % 60), static_cast<int>(sod % 60));
  return buf;
}

}  // namespace viscal
