#pragma once

#include <chrono>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace stormgen {

using Date = std::chrono::sys_days;

/// Parses an ISO `YYYY-MM-DD` date. Throws std::invalid_argument on malformed input.
Date parse_date(std::string_view iso);
std::string format_date(Date date);

int year_of(Date date);
int month_of(Date date);

/// Day of year in 1..365. Feb 29 shares the value of Feb 28 and later days of a
/// leap year are shifted back by one, so Dec 31 is always 365.
int calendar_day(Date date);

/// Inclusive daily sequence.
std::vector<Date> daily_range(Date first, Date last);

/// Per-date calendar day d(t), month, and decade-normalized year
/// y(t) = (year - reference_year) / 10.
class CalendarIndex {
 public:
  CalendarIndex() = default;
  CalendarIndex(std::span<const Date> dates, int reference_year);

  std::size_t size() const { return day_of_year_.size(); }
  int reference_year() const { return reference_year_; }
  int day_of_year(std::size_t t) const { return day_of_year_[t]; }
  int month(std::size_t t) const { return month_[t]; }
  double decade(std::size_t t) const { return decade_[t]; }
  std::span<const int> days_of_year() const { return day_of_year_; }
  std::span<const double> decades() const { return decade_; }

 private:
  int reference_year_ = 0;
  std::vector<int> day_of_year_;
  std::vector<int> month_;
  std::vector<double> decade_;
};

}  // namespace stormgen
