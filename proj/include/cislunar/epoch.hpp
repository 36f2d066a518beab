#pragma once

#include <string>
#include <string_view>

namespace cislunar {

// Epochs are seconds past J2000 (2000-01-01 12:00:00) in the TDB scale.
// Calendar strings are UTC and converted with a fixed leap-second table.

struct CalendarTime {
  int year = 2000;
  int month = 1;
  int day = 1;
  int hour = 0;
  int minute = 0;
  double second = 0.0;
};

// Accepts "YYYY-MM-DDTHH:MM:SS[.fff]" or "YYYY-MM-DD HH:MM:SS[.fff]",
// optionally suffixed with "Z" or " UTC".
CalendarTime parse_calendar(std::string_view text);

// TAI - UTC in seconds at a UTC calendar instant (1972 onward).
double leap_seconds_at(const CalendarTime& utc);

double utc_to_tdb(const CalendarTime& utc);
double utc_to_tdb(std::string_view text);

CalendarTime tdb_to_utc_calendar(double tdb_seconds);
// Rounded to whole seconds: "YYYY-MM-DDTHH:MM:SSZ".
std::string tdb_to_utc_string(double tdb_seconds);

// Julian centuries TDB since J2000.
inline double julian_centuries(double tdb_seconds) {
  return tdb_seconds / (36525.0 * 86400.0);
}

}  // namespace cislunar
