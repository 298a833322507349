#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>

namespace flowkit {

/// Milliseconds since the Unix epoch. Injectable so tests control timestamps.
using Clock = std::function<std::int64_t()>;

std::int64_t system_now_ms();
Clock system_clock();

struct CivilDate {
  int year = 1970;
  unsigned month = 1;
  unsigned day = 1;
};

std::int64_t days_from_civil(const CivilDate& d);
CivilDate civil_from_days(std::int64_t days);

constexpr std::int64_t kMsPerHour = 3'600'000;
constexpr std::int64_t kMsPerDay = 24 * kMsPerHour;

/// Floor division that rounds toward negative infinity.
constexpr std::int64_t floor_div(std::int64_t a, std::int64_t b) { return a / b - ((a % b != 0) && ((a < 0) != (b < 0))); }

/// "2024-05-01T12:30:00.000Z"
std::string format_iso8601(std::int64_t epoch_ms);
/// "2024-05-01"
std::string format_date(std::int64_t epoch_ms);

/// Epoch milliseconds (all digits) or ISO-8601: a date, or a date-time with
/// optional seconds, fraction and `Z`/`+hh:mm` offset. No offset means UTC.
std::optional<std::int64_t> parse_time(std::string_view text);

}  // namespace flowkit
