#include "flowkit/time_util.hpp"

#include <cctype>
#include <chrono>
#include <cstdio>

namespace flowkit {

std::int64_t system_now_ms() {
  using namespace std::chrono;
  return duration_cast<milliseconds>(system_clock::now().time_since_epoch()).count();
}

Clock system_clock() { return &system_now_ms; }

// Howard Hinnant's days_from_civil / civil_from_days.
std::int64_t days_from_civil(const CivilDate& d) {
  const std::int64_t y = static_cast<std::int64_t>(d.year) - (d.month <= 2 ? 1 : 0);
  const std::int64_t era = floor_div(y, 400);
  const std::int64_t yoe = y - era * 400;
  const std::int64_t mp = (d.month + 9) % 12;
  const std::int64_t doy = (153 * mp + 2) / 5 + d.day - 1;
  const std::int64_t doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + doe - 719468;
}

CivilDate civil_from_days(std::int64_t z) {
  z += 719468;
  const std::int64_t era = floor_div(z, 146097);
  const std::int64_t doe = z - era * 146097;
  const std::int64_t yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const std::int64_t doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const std::int64_t mp = (5 * doy + 2) / 153;
  const auto d = static_cast<unsigned>(doy - (153 * mp + 2) / 5 + 1);
  const auto m = static_cast<unsigned>(mp < 10 ? mp + 3 : mp - 9);
  return {static_cast<int>(yoe + era * 400 + (m <= 2 ? 1 : 0)), m, d};
}

std::string format_iso8601(std::int64_t ms) {
  const std::int64_t days = floor_div(ms, kMsPerDay);
  const std::int64_t rem = ms - days * kMsPerDay;
  const CivilDate d = civil_from_days(days);
  char buf[40];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02d.%03dZ", d.year, d.month, d.day,
                static_cast<int>(rem / kMsPerHour), static_cast<int>(rem / 60000 % 60), static_cast<int>(rem / 1000 % 60),
                static_cast<int>(rem % 1000));
  return buf;
}

std::string format_date(std::int64_t ms) { return format_iso8601(ms).substr(0, 10); }

namespace {

bool take_digits(std::string_view s, std::size_t& pos, std::size_t n, int& out) {
  if (pos + n > s.size()) return false;
  out = 0;
  for (std::size_t i = 0; i < n; ++i) {
    char c = s[pos + i];
    if (!std::isdigit(static_cast<unsigned char>(c))) return false;
    out = out * 10 + (c - '0');
  }
  pos += n;
  return true;
}

bool take(std::string_view s, std::size_t& pos, char c) {
  if (pos < s.size() && s[pos] == c) {
    ++pos;
    return true;
  }
  return false;
}

unsigned days_in_month(int y, unsigned m) {
  static const unsigned kDays[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  const bool leap = (y % 4 == 0 && y % 100 != 0) || y % 400 == 0;
  return m == 2 && leap ? 29 : kDays[m - 1];
}

}  // namespace

std::optional<std::int64_t> parse_time(std::string_view s) {
  if (s.empty()) return std::nullopt;
  bool all_digits = true;
  for (std::size_t i = s[0] == '-' ? 1 : 0; i < s.size(); ++i)
    if (!std::isdigit(static_cast<unsigned char>(s[i]))) all_digits = false;
  if (all_digits && s != "-") {
    try {
      return std::stoll(std::string(s));
    } catch (const std::exception&) {
      return std::nullopt;
    }
  }

  std::size_t pos = 0;
  int y, mo, d;
  if (!take_digits(s, pos, 4, y) || !take(s, pos, '-') || !take_digits(s, pos, 2, mo) || !take(s, pos, '-') ||
      !take_digits(s, pos, 2, d))
    return std::nullopt;
  if (mo < 1 || mo > 12 || d < 1 || static_cast<unsigned>(d) > days_in_month(y, static_cast<unsigned>(mo)))
    return std::nullopt;
  std::int64_t ms = days_from_civil({y, static_cast<unsigned>(mo), static_cast<unsigned>(d)}) * kMsPerDay;
  if (pos == s.size()) return ms;

  if (!take(s, pos, 'T') && !take(s, pos, 't') && !take(s, pos, ' ')) return std::nullopt;
  int h, mi, sec = 0;
  if (!take_digits(s, pos, 2, h) || !take(s, pos, ':') || !take_digits(s, pos, 2, mi)) return std::nullopt;
  if (take(s, pos, ':') && !take_digits(s, pos, 2, sec)) return std::nullopt;
  if (h > 23 || mi > 59 || sec > 60) return std::nullopt;
  ms += h * kMsPerHour + mi * 60000LL + sec * 1000LL;
  if (take(s, pos, '.')) {
    std::int64_t frac = 0, scale = 100;
    std::size_t start = pos;
    while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]))) {
      frac += (s[pos] - '0') * scale;
      scale /= 10;
      ++pos;
    }
    if (pos == start) return std::nullopt;
    ms += frac;
  }
  if (pos == s.size() || take(s, pos, 'Z') || take(s, pos, 'z')) return pos == s.size() ? std::optional(ms) : std::nullopt;
  const char sign = s[pos];
  if (sign != '+' && sign != '-') return std::nullopt;
  ++pos;
  int oh, om = 0;
  if (!take_digits(s, pos, 2, oh)) return std::nullopt;
  take(s, pos, ':');
  if (pos < s.size() && !take_digits(s, pos, 2, om)) return std::nullopt;
  if (pos != s.size() || oh > 23 || om > 59) return std::nullopt;
  const std::int64_t offset = oh * kMsPerHour + om * 60000LL;
  return sign == '+' ? ms - offset : ms + offset;
}

}  // namespace flowkit
