#pragma once

#include <chrono>
#include <string>
#include <string_view>

namespace netfolio {

using Date = std::chrono::year_month_day;

/// Parses a strict ISO-8601 calendar date (YYYY-MM-DD). Throws InputError.
Date parse_date(std::string_view text);

std::string format_date(const Date& date);

inline Date add_days(const Date& date, int days) {
  return Date{std::chrono::sys_days{date} + std::chrono::days{days}};
}

}  // namespace netfolio
