#include "dpi/timeparse.hpp"

#include <charconv>
#include <cstdio>
#include <stdexcept>

namespace dpi {

namespace {

// Howard Hinnant's civil date algorithms.
int64_t days_from_civil(int64_t y, unsigned m, unsigned d) {
    y -= m <= 2;
    const int64_t era = (y >= 0 ? y : y - 399) / 400;
    const auto yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<int64_t>(doe) - 719468;
}

void civil_from_days(int64_t z, int64_t& y, unsigned& m, unsigned& d) {
    z += 719468;
    const int64_t era = (z >= 0 ? z : z - 146096) / 146097;
    const auto doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    y = static_cast<int64_t>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    d = doy - (153 * mp + 2) / 5 + 1;
    m = mp < 10 ? mp + 3 : mp - 9;
    y += m <= 2;
}

int parse_fixed_uint(std::string_view s, size_t pos, size_t len) {
    if (pos + len > s.size()) throw std::invalid_argument("timestamp too short");
    int value = 0;
    for (size_t i = pos; i < pos + len; ++i) {
        char c = s[i];
        if (c < '0' || c > '9') throw std::invalid_argument("expected digit in timestamp");
        value = value * 10 + (c - '0');
    }
    return value;
}

void expect(std::string_view s, size_t pos, char c) {
    if (pos >= s.size() || s[pos] != c)
        throw std::invalid_argument(std::string("expected '") + c + "' in timestamp");
}

}  // namespace

int64_t parse_iso8601_ms(std::string_view s) {
    // YYYY-MM-DDTHH:MM:SS[.f...]Z
    int year = parse_fixed_uint(s, 0, 4);
    expect(s, 4, '-');
    int month = parse_fixed_uint(s, 5, 2);
    expect(s, 7, '-');
    int day = parse_fixed_uint(s, 8, 2);
    expect(s, 10, 'T');
    int hour = parse_fixed_uint(s, 11, 2);
    expect(s, 13, ':');
    int minute = parse_fixed_uint(s, 14, 2);
    expect(s, 16, ':');
    int second = parse_fixed_uint(s, 17, 2);

    size_t pos = 19;
    int millis = 0;
    if (pos < s.size() && s[pos] == '.') {
        ++pos;
        size_t digits = 0;
        int frac = 0;
        while (pos < s.size() && s[pos] >= '0' && s[pos] <= '9') {
            if (digits < 3) {
                frac = frac * 10 + (s[pos] - '0');
            } else if (s[pos] != '0') {
                throw std::invalid_argument("sub-millisecond precision not representable");
            }
            ++digits;
            ++pos;
        }
        if (digits == 0 || digits > 9) throw std::invalid_argument("bad fractional seconds");
        while (digits < 3) {
            frac *= 10;
            ++digits;
        }
        millis = frac;
    }
    expect(s, pos, 'Z');
    if (pos + 1 != s.size()) throw std::invalid_argument("trailing characters in timestamp");

    if (month < 1 || month > 12 || day < 1 || day > 31 || hour > 23 || minute > 59 || second > 60)
        throw std::invalid_argument("timestamp field out of range");

    int64_t days = days_from_civil(year, static_cast<unsigned>(month), static_cast<unsigned>(day));
    return ((days * 24 + hour) * 60 + minute) * 60000 + second * 1000 + millis;
}

std::string format_iso8601_ms(int64_t ms) {
    int64_t days = ms / 86400000;
    int64_t rem = ms % 86400000;
    if (rem < 0) {
        rem += 86400000;
        --days;
    }
    int64_t year;
    unsigned month, day;
    civil_from_days(days, year, month, day);
    int hour = static_cast<int>(rem / 3600000);
    rem %= 3600000;
    int minute = static_cast<int>(rem / 60000);
    rem %= 60000;
    int second = static_cast<int>(rem / 1000);
    int millis = static_cast<int>(rem % 1000);

    char buf[32];
    std::snprintf(buf, sizeof(buf), "%04lld-%02u-%02uT%02d:%02d:%02d.%03dZ",
                  static_cast<long long>(year), month, day, hour, minute, second, millis);
    return buf;
}

}
