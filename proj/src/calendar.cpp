#include "stormgen/calendar.hpp"

#include <charconv>
#include <cstdio>
#include <stdexcept>

namespace stormgen {

namespace chr = std::chrono;

namespace {

int parse_int(std::string_view text, std::string_view whole) {
  int value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw std::invalid_argument("malformed date '" + std::string(whole) + "'");
  }
  return value;
}

}  // namespace

Date parse_date(std::string_view iso) {
  if (iso.size() != 10 || iso[4] != '-' || iso[7] != '-') {
    throw std::invalid_argument("malformed date '" + std::string(iso) + "'");
  }
  const chr::year_month_day ymd{chr::year{parse_int(iso.substr(0, 4), iso)},
                                chr::month{static_cast<unsigned>(parse_int(iso.substr(5, 2), iso))},
                                chr::day{static_cast<unsigned>(parse_int(iso.substr(8, 2), iso))}};
  if (!ymd.ok()) {
    throw std::invalid_argument("invalid calendar date '" + std::string(iso) + "'");
  }
  return Date{ymd};
}

std::string format_date(Date date) {
  const chr::year_month_day ymd{date};
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
  return buf;
}

int year_of(Date date) { return static_cast<int>(chr::year_month_day{date}.year()); }

int month_of(Date date) {
  return static_cast<int>(static_cast<unsigned>(chr::year_month_day{date}.month()));
}

int calendar_day(Date date) {
  const chr::year_month_day ymd{date};
  const Date jan1{ymd.year() / chr::January / 1};
  int doy = static_cast<int>((date - jan1).count()) + 1;
  if (ymd.year().is_leap() && doy >= 60) --doy;
  return doy;
}

std::vector<Date> daily_range(Date first, Date last) {
  std::vector<Date> out;
  if (last < first) return out;
  out.reserve(static_cast<std::size_t>((last - first).count()) + 1);
  for (Date d = first; d <= last; d += chr::days{1}) out.push_back(d);
  return out;
}

CalendarIndex::CalendarIndex(std::span<const Date> dates, int reference_year)
    : reference_year_(reference_year) {
  day_of_year_.reserve(dates.size());
  month_.reserve(dates.size());
  decade_.reserve(dates.size());
  for (Date d : dates) {
    day_of_year_.push_back(calendar_day(d));
    month_.push_back(month_of(d));
    decade_.push_back((year_of(d) - reference_year) / 10.0);
  }
}

}  // namespace stormgen
