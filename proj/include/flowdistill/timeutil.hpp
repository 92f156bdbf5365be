#pragma once

#include <cstdint>
#include <cstdio>
#include <string>

#include "flowdistill/errors.hpp"

namespace fd::timeutil {

// Days since 1970-01-01 for a proleptic Gregorian civil date.
inline int64_t days_from_civil(int y, int m, int d) {
  y -= m <= 2;
  const int era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153u * static_cast<unsigned>(m + (m > 2 ? -3 : 9)) + 2) / 5 + static_cast<unsigned>(d) - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return static_cast<int64_t>(era) * 146097 + static_cast<int64_t>(doe) - 719468;
}

inline void civil_from_days(int64_t z, int& y, int& m, int& d) {
  z += 719468;
  const int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  const unsigned doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  y = static_cast<int>(yoe) + static_cast<int>(era) * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  d = static_cast<int>(doy - (153 * mp + 2) / 5 + 1);
  m = static_cast<int>(mp + (mp < 10 ? 3 : -9));
  y += (m <= 2);
}

// Minutes since the Unix epoch, UTC.
using EpochMinutes = int64_t;

// Weekday with Monday = 0 ... Sunday = 6. 1970-01-01 was a Thursday.
inline int weekday(EpochMinutes t) {
  int64_t days = t / 1440;
  if (t < 0 && t % 1440 != 0) --days;
  return static_cast<int>(((days + 3) % 7 + 7) % 7);
}

inline int minute_of_day(EpochMinutes t) { return static_cast<int>(((t % 1440) + 1440) % 1440); }

// Accepts RFC 3339 timestamps: YYYY-MM-DDTHH:MM[:SS](Z|+hh:mm|-hh:mm).
// Seconds are truncated to whole minutes.
inline EpochMinutes parse_rfc3339(const std::string& s) {
  int y = 0, mo = 0, d = 0, h = 0, mi = 0, sec = 0;
  int consumed = 0;
  int n = std::sscanf(s.c_str(), "%d-%d-%d%*[T ]%d:%d%n", &y, &mo, &d, &h, &mi, &consumed);
  if (n != 5) throw IoError("bad RFC 3339 timestamp: '" + s + "'");
  size_t pos = static_cast<size_t>(consumed);
  if (pos < s.size() && s[pos] == ':') {
    int c2 = 0;
    if (std::sscanf(s.c_str() + pos, ":%d%n", &sec, &c2) != 1) {
      throw IoError("bad RFC 3339 timestamp: '" + s + "'");
    }
    pos += static_cast<size_t>(c2);
  }
  int64_t offset_min = 0;
  if (pos < s.size()) {
    if (s[pos] == 'Z' || s[pos] == 'z') {
      ++pos;
    } else if (s[pos] == '+' || s[pos] == '-') {
      int oh = 0, om = 0;
      if (std::sscanf(s.c_str() + pos + 1, "%d:%d", &oh, &om) != 2) {
        throw IoError("bad RFC 3339 offset in timestamp: '" + s + "'");
      }
      offset_min = (s[pos] == '+' ? -1 : 1) * (oh * 60 + om);
      pos = s.size();
    }
  }
  if (mo < 1 || mo > 12 || d < 1 || d > 31 || h < 0 || h > 23 || mi < 0 || mi > 59) {
    throw IoError("out-of-range field in timestamp: '" + s + "'");
  }
  (void)sec;
  return days_from_civil(y, mo, d) * 1440 + h * 60 + mi + offset_min;
}

inline std::string format_rfc3339(EpochMinutes t) {
  int y, mo, d;
  int64_t days = t / 1440;
  if (t < 0 && t % 1440 != 0) --days;
  civil_from_days(days, y, mo, d);
  const int md = minute_of_day(t);
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%04d-%02d-%02dT%02d:%02d:00Z", y, mo, d, md / 60, md % 60);
  return buf;
}

inline const char* weekday_name(int dow) {
  static const char* names[7] = {"Monday", "Tuesday", "Wednesday", "Thursday",
                                 "Friday", "Saturday", "Sunday"};
  return names[((dow % 7) + 7) % 7];
}

inline const char* month_name(int m) {
  static const char* names[12] = {"January", "February", "March",     "April",   "May",      "June",
                                  "July",    "August",   "September", "October", "November", "December"};
  return names[(m - 1 + 12) % 12];
}

// "January 1, 2021, 00:00, Friday" -- the style used in instruction prompts.
inline std::string format_prompt_time(EpochMinutes t) {
  int y, mo, d;
  int64_t days = t / 1440;
  if (t < 0 && t % 1440 != 0) --days;
  civil_from_days(days, y, mo, d);
  const int md = minute_of_day(t);
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%s %d, %d, %02d:%02d, %s", month_name(mo), d, y, md / 60, md % 60,
                weekday_name(weekday(t)));
  return buf;
}

}  // namespace fd::timeutil
