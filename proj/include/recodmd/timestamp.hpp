#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace recodmd {

/// Site-local wall-clock time, stored as minutes since 1970-01-01 00:00.
/// Flux files carry no zone information, so no conversion is ever applied.
struct Timestamp {
    std::int64_t minutes = 0;

    auto operator<=>(const Timestamp&) const = default;
};

using Date = std::chrono::year_month_day;

inline constexpr std::int64_t kHalfHour = 30;

/// Parses YYYYMMDDHHMM; nullopt on any malformed field.
std::optional<Timestamp> parse_timestamp(std::string_view text);
std::string format_timestamp(Timestamp t);

Timestamp make_timestamp(Date date, int hour, int minute);
Date date_of(Timestamp t);
/// Fractional hour of day in [0, 24).
double hour_of_day(Timestamp t);
/// 1-based day of year.
int day_of_year(Date d);

/// YYYY-MM-DD.
std::string format_date(Date d);
std::optional<Date> parse_date(std::string_view text);

/// Signed difference b - a in days.
long days_between(Date a, Date b);
Date add_days(Date d, long days);

}  // namespace recodmd
