#include "pvcast/time.hpp"

#include <charconv>
#include <cstdio>

#include "pvcast/errors.hpp"

namespace pvcast {

// Howard Hinnant's branch-free civil date algorithms.
std::int64_t days_from_civil(int y, int m, int d) {
    y -= m <= 2;
    const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153u * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

void civil_from_days(std::int64_t z, int& y, int& m, int& d) {
    z += 719468;
    const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const std::int64_t yy = static_cast<std::int64_t>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    d = static_cast<int>(doy - (153 * mp + 2) / 5 + 1);
    m = static_cast<int>(mp + (mp < 10 ? 3 : -9));
    y = static_cast<int>(yy + (m <= 2));
}

Minutes to_minutes(const CivilTime& ct) {
    return days_from_civil(ct.year, ct.month, ct.day) * 1440 + ct.hour * 60 + ct.minute;
}

CivilTime from_minutes(Minutes t) {
    std::int64_t days = t / 1440;
    std::int64_t rem = t % 1440;
    if (rem < 0) {
        rem += 1440;
        days -= 1;
    }
    CivilTime ct;
    civil_from_days(days, ct.year, ct.month, ct.day);
    ct.hour = static_cast<int>(rem / 60);
    ct.minute = static_cast<int>(rem % 60);
    return ct;
}

namespace {

int parse_int_field(const std::string& s, std::size_t pos, std::size_t len, const char* what) {
    int value = 0;
    for (std::size_t i = pos; i < pos + len; ++i) {
        const char c = s[i];
        if (c < '0' || c > '9')
            throw DataError("bad timestamp '" + s + "': non-digit in " + what);
        value = value * 10 + (c - '0');
    }
    return value;
}

constexpr int days_in_month_for(int y, int m) {
    constexpr int lengths[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    if (m == 2) {
        const bool leap = (y % 4 == 0 && y % 100 != 0) || y % 400 == 0;
        return leap ? 29 : 28;
    }
    return lengths[m - 1];
}

}  // namespace

Minutes parse_timestamp(const std::string& s) {
    // Fixed layout: YYYY-MM-DDTHH:MM, 16 characters.
    if (s.size() != 16 || s[4] != '-' || s[7] != '-' || s[10] != 'T' || s[13] != ':')
        throw DataError("bad timestamp '" + s + "': expected YYYY-MM-DDTHH:MM");
    CivilTime ct;
    ct.year = parse_int_field(s, 0, 4, "year");
    ct.month = parse_int_field(s, 5, 2, "month");
    ct.day = parse_int_field(s, 8, 2, "day");
    ct.hour = parse_int_field(s, 11, 2, "hour");
    ct.minute = parse_int_field(s, 14, 2, "minute");
    if (ct.month < 1 || ct.month > 12)
        throw DataError("bad timestamp '" + s + "': month out of range");
    if (ct.day < 1 || ct.day > days_in_month_for(ct.year, ct.month))
        throw DataError("bad timestamp '" + s + "': day out of range");
    if (ct.hour > 23)
        throw DataError("bad timestamp '" + s + "': hour out of range");
    if (ct.minute > 59)
        throw DataError("bad timestamp '" + s + "': minute out of range");
    return to_minutes(ct);
}

std::string format_timestamp(Minutes t) {
    const CivilTime ct = from_minutes(t);
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02dT%02d:%02d", ct.year, ct.month, ct.day,
                  ct.hour, ct.minute);
    return std::string(buf);
}

int minute_of_day(Minutes t) {
    std::int64_t rem = t % 1440;
    if (rem < 0) rem += 1440;
    return static_cast<int>(rem);
}

int day_of_year(Minutes t) {
    const CivilTime ct = from_minutes(t);
    return static_cast<int>(days_from_civil(ct.year, ct.month, ct.day) -
                            days_from_civil(ct.year, 1, 1)) + 1;
}

}  // namespace pvcast
