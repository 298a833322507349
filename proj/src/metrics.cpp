#include "flowkit/metrics.hpp"

#include <map>

#include "flowkit/time_util.hpp"

namespace flowkit {

std::optional<Metric> parse_metric(std::string_view s) {
  if (s == "sessions") return Metric::Sessions;
  if (s == "turns") return Metric::Turns;
  if (s == "ood_rate") return Metric::OodRate;
  return std::nullopt;
}

std::optional<GroupBy> parse_group_by(std::string_view s) {
  if (s == "client") return GroupBy::Client;
  if (s == "application") return GroupBy::Application;
  if (s == "none" || s.empty()) return GroupBy::None;
  return std::nullopt;
}

std::optional<Granularity> parse_granularity(std::string_view s) {
  if (s == "hour") return Granularity::Hour;
  if (s == "day") return Granularity::Day;
  if (s == "week") return Granularity::Week;
  return std::nullopt;
}

std::string_view to_string(Metric m) {
  switch (m) {
    case Metric::Sessions: return "sessions";
    case Metric::Turns: return "turns";
    case Metric::OodRate: return "ood_rate";
  }
  return "sessions";
}

std::int64_t bucket_start(std::int64_t ms, Granularity g) {
  switch (g) {
    case Granularity::Hour: return floor_div(ms, kMsPerHour) * kMsPerHour;
    case Granularity::Day: return floor_div(ms, kMsPerDay) * kMsPerDay;
    case Granularity::Week: {
      // Day 0 (1970-01-01) was a Thursday, so Monday-based weeks start 3 days earlier.
      const std::int64_t days = floor_div(ms, kMsPerDay);
      const std::int64_t monday = days - (((days + 3) % 7) + 7) % 7;
      return monday * kMsPerDay;
    }
  }
  return ms;
}

namespace {

std::string group_of(const SessionMeta& m, GroupBy g) {
  switch (g) {
    case GroupBy::Client: return m.client_tag;
    case GroupBy::Application: return m.app_id;
    case GroupBy::None: return "all";
  }
  return "all";
}

bool in_range(std::int64_t t, const MetricsQuery& q) {
  return (!q.from_ms || t >= *q.from_ms) && (!q.to_ms || t < *q.to_ms);
}

}  // namespace

std::vector<MetricBucket> compute_metrics(const std::vector<SessionData>& data, const MetricsQuery& q) {
  struct Acc {
    std::int64_t count = 0;
    std::int64_t ood = 0;
  };
  std::map<std::pair<std::int64_t, std::string>, Acc> acc;
  for (const auto& s : data) {
    if (q.user && s.meta.user_id != *q.user) continue;
    if (q.application && s.meta.app_id != *q.application) continue;
    const std::string group = group_of(s.meta, q.group_by);
    if (q.metric == Metric::Sessions) {
      if (in_range(s.meta.started_at_ms, q)) ++acc[{bucket_start(s.meta.started_at_ms, q.granularity), group}].count;
      continue;
    }
    for (const auto& t : s.turns) {
      if (t.turn_index < 1 || !in_range(t.timestamp_ms, q)) continue;
      auto& a = acc[{bucket_start(t.timestamp_ms, q.granularity), group}];
      ++a.count;
      if (t.routing && t.routing->scope == RoutingScope::OutOfDomain) ++a.ood;
    }
  }
  std::vector<MetricBucket> out;
  for (const auto& [key, a] : acc) {
    const double value = q.metric == Metric::OodRate ? static_cast<double>(a.ood) / static_cast<double>(a.count)
                                                     : static_cast<double>(a.count);
    out.push_back({key.first, key.second, value});
  }
  return out;
}

std::vector<MetricBucket> compute_metrics(const Store& store, const MetricsQuery& q) {
  std::vector<SessionData> data;
  for (const auto& meta : store.sessions()) data.push_back({meta, store.transcript(meta.session_id)});
  return compute_metrics(data, q);
}

nlohmann::json to_json(const MetricBucket& b) {
  return {{"bucketStart", format_iso8601(b.bucket_start_ms)}, {"group", b.group}, {"value", b.value}};
}

}  // namespace flowkit
