#pragma once

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <string>

#include "ssv/errors.hpp"

namespace ssv {

/// Wall-clock timestamps are handled as minutes since the civil epoch
/// 1970-01-01 00:00 in the exchange's local clock. No timezone conversion is
/// ever applied; whatever clock the input files use is the clock of record.
using MinuteStamp = std::int64_t;

inline constexpr std::int64_t kMinutesPerDay = 1440;

namespace detail {

inline std::int64_t days_from_civil(int y, unsigned m, unsigned d) {
    using namespace std::chrono;
    const year_month_day ymd{year{y}, month{m}, day{d}};
    if (!ymd.ok()) throw data_error("invalid calendar date in timestamp");
    return sys_days{ymd}.time_since_epoch().count();
}

inline void civil_from_days(std::int64_t z, int& y, unsigned& m, unsigned& d) {
    using namespace std::chrono;
    const year_month_day ymd{sys_days{days{z}}};
    y = static_cast<int>(ymd.year());
    m = static_cast<unsigned>(ymd.month());
    d = static_cast<unsigned>(ymd.day());
}

}  // namespace detail

/// Parses "YYYY-MM-DD HH:MM" or "YYYY-MM-DD HH:MM:SS" (a 'T' separator is
/// also accepted; seconds are truncated toward the containing minute).
inline MinuteStamp parse_timestamp(const std::string& text) {
    int y = 0, mo = 0, d = 0, h = 0, mi = 0, sec = 0;
    char sep = 0;
    const int n = std::sscanf(text.c_str(), "%d-%d-%d%c%d:%d:%d", &y, &mo, &d, &sep, &h, &mi, &sec);
    if (n < 6 || (sep != ' ' && sep != 'T'))
        throw data_error("unparseable timestamp '" + text + "' (expected YYYY-MM-DD HH:MM[:SS])");
    if (h < 0 || h > 23 || mi < 0 || mi > 59 || sec < 0 || sec > 60)
        throw data_error("timestamp out of range: '" + text + "'");
    return detail::days_from_civil(y, static_cast<unsigned>(mo), static_cast<unsigned>(d)) * 1440 +
           h * 60 + mi;
}

inline bool try_parse_timestamp(const std::string& text, MinuteStamp& out) {
    try {
        out = parse_timestamp(text);
        return true;
    } catch (const data_error&) {
        return false;
    }
}

inline std::string format_timestamp(MinuteStamp t) {
    std::int64_t day = t / 1440;
    int minute = static_cast<int>(t % 1440);
    if (minute < 0) {
        minute += 1440;
        --day;
    }
    int y = 0;
    unsigned mo = 0, d = 0;
    detail::civil_from_days(day, y, mo, d);
    char buf[32];
    std::snprintf(buf, sizeof buf, "%04d-%02d-%02d %02d:%02d:00", y, mo, d, minute / 60,
                  minute % 60);
    return buf;
}

/// Trading session on the exchange clock; the defaults give the 09:30-16:00
/// session cut into 26 fifteen-minute bars.
struct SessionSpec {
    int start_minute = 9 * 60 + 30;
    int end_minute = 16 * 60;
    int bar_minutes = 15;

    void validate() const {
        if (bar_minutes < 1) throw config_error("SessionSpec: bar_minutes must be >= 1");
        if (start_minute < 0 || end_minute > 1440 || start_minute >= end_minute)
            throw config_error("SessionSpec: need 0 <= start < end <= 24h");
        if ((end_minute - start_minute) % bar_minutes != 0)
            throw config_error("SessionSpec: session length must be a whole number of bars");
    }

    int bars_per_day() const noexcept { return (end_minute - start_minute) / bar_minutes; }

    bool in_session(MinuteStamp t) const noexcept {
        const int minute = static_cast<int>(((t % 1440) + 1440) % 1440);
        return minute >= start_minute && minute < end_minute;
    }

    /// Bar ordinal within the session day; pre: in_session(t).
    int bar_of_day(MinuteStamp t) const noexcept {
        const int minute = static_cast<int>(((t % 1440) + 1440) % 1440);
        return (minute - start_minute) / bar_minutes;
    }

    MinuteStamp day_of(MinuteStamp t) const noexcept {
        return t >= 0 ? t / 1440 : (t - 1439) / 1440;
    }

    MinuteStamp bar_start(MinuteStamp day, int bar) const noexcept {
        return day * 1440 + start_minute + static_cast<std::int64_t>(bar) * bar_minutes;
    }
};

}  // namespace ssv
