#include "tsad/time.hpp"

#include <charconv>
#include <cstdio>

namespace tsad {

namespace {

using namespace std::chrono;

bool read_int(std::string_view text, std::size_t pos, std::size_t len, int& out) {
    if (pos + len > text.size()) {
        return false;
    }
    for (std::size_t i = pos; i < pos + len; ++i) {
        if (text[i] < '0' || text[i] > '9') {
            return false;
        }
    }
    auto [ptr, ec] = std::from_chars(text.data() + pos, text.data() + pos + len, out);
    return ec == std::errc{} && ptr == text.data() + pos + len;
}

// Shared by both layouts: "yyyy-mm-dd?HH:MM:SS" with a caller-chosen separator.
std::optional<Timestamp> parse_date_time(std::string_view text, char separator) {
    if (text.size() < 19 || text[4] != '-' || text[7] != '-' || text[10] != separator ||
        text[13] != ':' || text[16] != ':') {
        return std::nullopt;
    }
    int y = 0, mo = 0, d = 0, h = 0, mi = 0, s = 0;
    if (!read_int(text, 0, 4, y) || !read_int(text, 5, 2, mo) || !read_int(text, 8, 2, d) ||
        !read_int(text, 11, 2, h) || !read_int(text, 14, 2, mi) || !read_int(text, 17, 2, s)) {
        return std::nullopt;
    }
    const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
    if (!ymd.ok() || h > 23 || mi > 59 || s > 59) {
        return std::nullopt;
    }
    return Timestamp{sys_days{ymd}} + hours{h} + minutes{mi} + seconds{s};
}

std::string format_date_time(Timestamp t, char separator) {
    const auto day_point = floor<days>(t);
    const year_month_day ymd{day_point};
    const hh_mm_ss<nanoseconds> tod{t - day_point};
    char buf[32];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u%c%02d:%02d:%02d", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()), separator,
                  static_cast<int>(tod.hours().count()), static_cast<int>(tod.minutes().count()),
                  static_cast<int>(tod.seconds().count()));
    return buf;
}

}  // namespace

std::optional<Timestamp> parse_civil_time(std::string_view text) {
    if (text.size() != 19) {
        return std::nullopt;
    }
    return parse_date_time(text, ' ');
}

std::string format_civil_time(Timestamp t) { return format_date_time(t, ' '); }

std::string format_rfc3339(Timestamp t) {
    std::string out = format_date_time(t, 'T');
    const auto frac = (t - floor<seconds>(t)).count();
    if (frac != 0) {
        char buf[16];
        std::snprintf(buf, sizeof buf, ".%09lld", static_cast<long long>(frac));
        std::string digits = buf;
        while (digits.back() == '0') {
            digits.pop_back();
        }
        out += digits;
    }
    out += 'Z';
    return out;
}

std::optional<Timestamp> parse_rfc3339(std::string_view text) {
    if (text.size() < 20 || text.back() != 'Z') {
        return std::nullopt;
    }
    auto base = parse_date_time(text.substr(0, 19), 'T');
    if (!base) {
        return std::nullopt;
    }
    std::string_view rest = text.substr(19, text.size() - 20);
    if (rest.empty()) {
        return base;
    }
    if (rest.front() != '.' || rest.size() < 2 || rest.size() > 10) {
        return std::nullopt;
    }
    long long frac = 0;
    for (std::size_t i = 1; i < rest.size(); ++i) {
        if (rest[i] < '0' || rest[i] > '9') {
            return std::nullopt;
        }
        frac = frac * 10 + (rest[i] - '0');
    }
    for (std::size_t i = rest.size(); i < 10; ++i) {
        frac *= 10;
    }
    return *base + nanoseconds{frac};
}

}  // namespace tsad
