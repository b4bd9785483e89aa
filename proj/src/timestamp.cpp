#include "recodmd/timestamp.hpp"

#include <charconv>
#include <cstdio>

namespace recodmd {

namespace {

using std::chrono::days;
using std::chrono::sys_days;

std::optional<int> parse_field(std::string_view text) {
    int value = 0;
    const auto* end = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(text.data(), end, value);
    if (ec != std::errc{} || ptr != end) return std::nullopt;
    return value;
}

}  // namespace

std::optional<Timestamp> parse_timestamp(std::string_view text) {
    while (!text.empty() && (text.back() == ' ' || text.back() == '\r')) text.remove_suffix(1);
    while (!text.empty() && text.front() == ' ') text.remove_prefix(1);
    if (text.size() != 12) return std::nullopt;
    for (char c : text) {
        if (c < '0' || c > '9') return std::nullopt;
    }
    const auto y = parse_field(text.substr(0, 4));
    const auto mo = parse_field(text.substr(4, 2));
    const auto d = parse_field(text.substr(6, 2));
    const auto h = parse_field(text.substr(8, 2));
    const auto mi = parse_field(text.substr(10, 2));
    if (!y || !mo || !d || !h || !mi) return std::nullopt;
    const Date date{std::chrono::year{*y}, std::chrono::month{static_cast<unsigned>(*mo)},
                    std::chrono::day{static_cast<unsigned>(*d)}};
    if (!date.ok() || *h > 23 || *mi > 59) return std::nullopt;
    return make_timestamp(date, *h, *mi);
}

std::string format_timestamp(Timestamp t) {
    const Date d = date_of(t);
    const auto minute_of_day = static_cast<int>(t.minutes - sys_days{d}.time_since_epoch().count() * 1440);
    char buf[32];
    std::snprintf(buf, sizeof buf, "%04d%02u%02u%02d%02d", static_cast<int>(d.year()),
                  static_cast<unsigned>(d.month()), static_cast<unsigned>(d.day()),
                  minute_of_day / 60, minute_of_day % 60);
    return buf;
}

Timestamp make_timestamp(Date date, int hour, int minute) {
    const std::int64_t day_index = sys_days{date}.time_since_epoch().count();
    return Timestamp{day_index * 1440 + hour * 60 + minute};
}

Date date_of(Timestamp t) {
    std::int64_t day_index = t.minutes / 1440;
    if (t.minutes % 1440 < 0) --day_index;
    return Date{sys_days{days{day_index}}};
}

double hour_of_day(Timestamp t) {
    std::int64_t m = t.minutes % 1440;
    if (m < 0) m += 1440;
    return static_cast<double>(m) / 60.0;
}

int day_of_year(Date d) {
    const Date jan1{d.year(), std::chrono::January, std::chrono::day{1}};
    return static_cast<int>(days_between(jan1, d)) + 1;
}

std::string format_date(Date d) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(d.year()),
                  static_cast<unsigned>(d.month()), static_cast<unsigned>(d.day()));
    return buf;
}

std::optional<Date> parse_date(std::string_view text) {
    if (text.size() != 10 || text[4] != '-' || text[7] != '-') return std::nullopt;
    const auto y = parse_field(text.substr(0, 4));
    const auto m = parse_field(text.substr(5, 2));
    const auto d = parse_field(text.substr(8, 2));
    if (!y || !m || !d) return std::nullopt;
    const Date date{std::chrono::year{*y}, std::chrono::month{static_cast<unsigned>(*m)},
                    std::chrono::day{static_cast<unsigned>(*d)}};
    if (!date.ok()) return std::nullopt;
    return date;
}

long days_between(Date a, Date b) {
    return static_cast<long>((sys_days{b} - sys_days{a}).count());
}

Date add_days(Date d, long n) {
    return Date{sys_days{d} + days{n}};
}

}  // namespace recodmd
