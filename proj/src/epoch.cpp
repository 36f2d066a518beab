#include "cislunar/epoch.hpp"

#include "cislunar/error.hpp"

#include <array>
#include <cmath>
#include <cstdio>
#include <string>

namespace cislunar {
namespace {

struct LeapEntry {
  int year, month;
  double tai_minus_utc;
};

// Published IERS table; valid until the next announced leap second.
constexpr std::array<LeapEntry, 28> kLeapTable{{
    {1972, 1, 10}, {1972, 7, 11}, {1973, 1, 12}, {1974, 1, 13}, {1975, 1, 14},
    {1976, 1, 15}, {1977, 1, 16}, {1978, 1, 17}, {1979, 1, 18}, {1980, 1, 19},
    {1981, 7, 20}, {1982, 7, 21}, {1983, 7, 22}, {1985, 7, 23}, {1988, 1, 24},
    {1990, 1, 25}, {1991, 1, 26}, {1992, 7, 27}, {1993, 7, 28}, {1994, 7, 29},
    {1996, 1, 30}, {1997, 7, 31}, {1999, 1, 32}, {2006, 1, 33}, {2009, 1, 34},
    {2012, 7, 35}, {2015, 7, 36}, {2017, 1, 37},
}};

constexpr double kTtMinusTai = 32.184;

// Days since 1970-01-01 of a proleptic Gregorian date.
long days_from_civil(int y, unsigned m, unsigned d) {
  y -= m <= 2;
  const long era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<long>(doe) - 719468;
}

void civil_from_days(long z, int& y, int& m, int& d) {
  z += 719468;
  const long era = (z >= 0 ? z : z - 146096) / 146097;
  const unsigned doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const long yy = static_cast<long>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  d = static_cast<int>(doy - (153 * mp + 2) / 5 + 1);
  m = static_cast<int>(mp < 10 ? mp + 3 : mp - 9);
  y = static_cast<int>(yy + (m <= 2));
}

const long kJ2000Day = days_from_civil(2000, 1, 1);

double tdb_minus_tt(double tt_seconds) {
  const double d = tt_seconds / 86400.0;
  const double g = (357.53 + 0.98560028 * d) * 3.14159265358979323846 / 180.0;
  return 0.001657 * std::sin(g) + 0.000014 * std::sin(2.0 * g);
}

// UTC seconds past 2000-01-01T12:00:00 UTC (no leap seconds counted).
double utc_naive_seconds(const CalendarTime& c) {
  const long days = days_from_civil(c.year, static_cast<unsigned>(c.month),
                                    static_cast<unsigned>(c.day)) - kJ2000Day;
  return static_cast<double>(days) * 86400.0 + c.hour * 3600.0 + c.minute * 60.0 + c.second -
         43200.0;
}

}  // namespace

CalendarTime parse_calendar(std::string_view text) {
  std::string s(text);
  for (const char* suffix : {" UTC", "Z"}) {
    const std::string suf(suffix);
    if (s.size() > suf.size() && s.compare(s.size() - suf.size(), suf.size(), suf) == 0)
      s.erase(s.size() - suf.size());
  }
  CalendarTime c;
  char sep = 0;
  int consumed = 0;
  const int n = std::sscanf(s.c_str(), "%d-%d-%d%c%d:%d:%lf%n", &c.year, &c.month, &c.day, &sep,
                            &c.hour, &c.minute, &c.second, &consumed);
  if (n != 7 || (sep != 'T' && sep != ' ') || static_cast<std::size_t>(consumed) != s.size())
    throw InvalidInput("unparseable calendar time '" + std::string(text) + "'");
  if (c.month < 1 || c.month > 12 || c.day < 1 || c.day > 31 || c.hour < 0 || c.hour > 23 ||
      c.minute < 0 || c.minute > 59 || c.second < 0.0 || c.second >= 61.0)
    throw InvalidInput("calendar field out of range in '" + std::string(text) + "'");
  return c;
}

double leap_seconds_at(const CalendarTime& utc) {
  if (utc.year < 1972) throw InvalidInput("leap-second table starts in 1972");
  double value = kLeapTable.front().tai_minus_utc;
  for (const auto& e : kLeapTable) {
    if (utc.year > e.year || (utc.year == e.year && utc.month >= e.month)) value = e.tai_minus_utc;
  }
  return value;
}

double utc_to_tdb(const CalendarTime& utc) {
  const double tt = utc_naive_seconds(utc) + leap_seconds_at(utc) + kTtMinusTai;
  return tt + tdb_minus_tt(tt);
}

double utc_to_tdb(std::string_view text) { return utc_to_tdb(parse_calendar(text)); }

CalendarTime tdb_to_utc_calendar(double tdb_seconds) {
  // TDB -> TT by fixed-point iteration on the small periodic term.
  double tt = tdb_seconds;
  for (int k = 0; k < 3; ++k) tt = tdb_seconds - tdb_minus_tt(tt);
  // Guess the leap offset with the latest entry, then correct once.
  double utc = tt - kTtMinusTai - kLeapTable.back().tai_minus_utc;
  CalendarTime c;
  for (int pass = 0; pass < 2; ++pass) {
    const double shifted = utc + 43200.0;
    const long day = static_cast<long>(std::floor(shifted / 86400.0));
    double sod = shifted - static_cast<double>(day) * 86400.0;
    civil_from_days(day + kJ2000Day, c.year, c.month, c.day);
    c.hour = static_cast<int>(sod / 3600.0);
    sod -= c.hour * 3600.0;
    c.minute = static_cast<int>(sod / 60.0);
    c.second = sod - c.minute * 60.0;
    utc = tt - kTtMinusTai - leap_seconds_at(c);
  }
  return c;
}

std::string tdb_to_utc_string(double tdb_seconds) {
  const CalendarTime c0 = tdb_to_utc_calendar(tdb_seconds);
  // Round to the nearest second through the naive-second representation.
  const double naive = std::round(utc_naive_seconds(c0));
  const double shifted = naive + 43200.0;
  const long day = static_cast<long>(std::floor(shifted / 86400.0));
  long sod = static_cast<long>(shifted - static_cast<double>(day) * 86400.0);
  int y, m, d;
  civil_from_days(day + kJ2000Day, y, m, d);
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%04d-%02d-%02dT%02ld:%02ld:%02ldZ", y, m, d, sod / 3600,
                (sod / 60) % 60, sod % 60);
  return buf;
}

}  // namespace cislunar
