#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "flowkit/store.hpp"

namespace flowkit {

enum class Metric { Sessions, Turns, OodRate };
enum class GroupBy { Client, Application, None };
enum class Granularity { Hour, Day, Week };

std::optional<Metric> parse_metric(std::string_view s);
std::optional<GroupBy> parse_group_by(std::string_view s);
std::optional<Granularity> parse_granularity(std::string_view s);
std::string_view to_string(Metric m);

struct MetricsQuery {
  Metric metric = Metric::Sessions;
  GroupBy group_by = GroupBy::None;
  Granularity granularity = Granularity::Day;
  /// Half-open [from, to) in epoch milliseconds.
  std::optional<std::int64_t> from_ms;
  std::optional<std::int64_t> to_ms;
  std::optional<std::string> user;
  std::optional<std::string> application;
};

struct MetricBucket {
  std::int64_t bucket_start_ms = 0;
  std::string group;  // "all" when ungrouped
  double value = 0.0;

  friend bool operator==(const MetricBucket&, const MetricBucket&) = default;
};

/// Start of the UTC hour, day or ISO week (Monday) containing `ms`.
std::int64_t bucket_start(std::int64_t ms, Granularity g);

struct SessionData {
  SessionMeta meta;
  std::vector<TurnRecord> turns;
};

/// Sessions are counted at their start time. Turns exclude the launch record
/// (index 0) and are counted at their own timestamps; ood_rate is the share of
/// those routed out of domain. Buckets are sorted by start, then group.
std::vector<MetricBucket> compute_metrics(const std::vector<SessionData>& data, const MetricsQuery& q);
std::vector<MetricBucket> compute_metrics(const Store& store, const MetricsQuery& q);

nlohmann::json to_json(const MetricBucket& b);

}  // namespace flowkit
