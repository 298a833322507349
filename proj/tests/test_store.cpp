#include <doctest.h>

#include <random>

#include "flowkit/metrics.hpp"
#include "flowkit/store.hpp"
#include "support.hpp"

using namespace flowkit;
using nlohmann::json;
using testing::fixtures::metrics_sessions;

namespace {

std::int64_t at(const char* iso) { return *parse_time(iso); }

SessionMeta meta(const std::string& id, std::int64_t start = 1'715'000'000'000) {
  SessionMeta m;
  m.session_id = id;
  m.app_id = "app";
  m.user_id = "u";
  m.community = "c";
  m.client_tag = "web";
  m.started_at_ms = start;
  return m;
}

TurnRecord record(const std::string& sid, int index, std::int64_t ts = 1'715'000'000'000) {
  return testing::fixtures::turn(sid, index, ts, testing::fixtures::T::In);
}

std::vector<MetricBucket> query(Metric m, GroupBy g, Granularity gr = Granularity::Day) {
  MetricsQuery q;
  q.metric = m;
  q.group_by = g;
  q.granularity = gr;
  return compute_metrics(metrics_sessions(), q);
}

std::map<std::pair<std::string, std::string>, double> by_day(const std::vector<MetricBucket>& buckets) {
  std::map<std::pair<std::string, std::string>, double> out;
  for (const auto& b : buckets) out[{format_date(b.bucket_start_ms), b.group}] = b.value;
  return out;
}

}  // namespace

TEST_CASE("iso formatting and parsing") {
  CHECK(format_iso8601(0) == "1970-01-01T00:00:00.000Z");
  CHECK(format_iso8601(-1) == "1969-12-31T23:59:59.999Z");
  CHECK(format_iso8601(1'714'566'600'123) == "2024-05-01T12:30:00.123Z");
  CHECK(format_date(1'714'566'600'123) == "2024-05-01");
  CHECK(parse_time("2024-05-01") == 1'714'521'600'000);
  CHECK(parse_time("2024-05-01T12:30:00.123Z") == 1'714'566'600'123);
  CHECK(parse_time("2024-05-01T12:30Z") == 1'714'566'600'000);
  CHECK(parse_time("2024-05-01T14:30:00+02:00") == 1'714'566'600'000);
  CHECK(parse_time("2024-05-01T12:30:00.5") == 1'714'566'600'500);
  CHECK(parse_time("1714566600123") == 1'714'566'600'123);
  CHECK(parse_time("-5") == -5);
  CHECK_FALSE(parse_time("yesterday").has_value());
  CHECK_FALSE(parse_time("2024-13-01").has_value());
  CHECK_FALSE(parse_time("2024-02-30").has_value());
  CHECK_FALSE(parse_time("").has_value());
}

TEST_CASE("civil date conversion agrees with day-by-day counting") {
  auto leap = [](int y) { return (y % 4 == 0 && y % 100 != 0) || y % 400 == 0; };
  const unsigned kLen[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  std::int64_t days = days_from_civil({1900, 1, 1});
  CHECK(days == -25567);
  for (int y = 1900; y <= 2100; ++y)
    for (unsigned m = 1; m <= 12; ++m) {
      unsigned len = kLen[m - 1] + (m == 2 && leap(y) ? 1 : 0);
      for (unsigned d = 1; d <= len; ++d, ++days) {
        CivilDate c = civil_from_days(days);
        REQUIRE((c.year == y && c.month == m && c.day == d));
        REQUIRE(days_from_civil(c) == days);
      }
    }
}

TEST_CASE("bucket starts") {
  const auto t = at("2024-05-12T17:45:12.345Z");  // a Sunday
  CHECK(format_iso8601(bucket_start(t, Granularity::Hour)) == "2024-05-12T17:00:00.000Z");
  CHECK(format_iso8601(bucket_start(t, Granularity::Day)) == "2024-05-12T00:00:00.000Z");
  CHECK(format_iso8601(bucket_start(t, Granularity::Week)) == "2024-05-06T00:00:00.000Z");
  CHECK(format_iso8601(bucket_start(at("2024-05-13T00:00:00Z"), Granularity::Week)) == "2024-05-13T00:00:00.000Z");
  CHECK(format_iso8601(bucket_start(0, Granularity::Week)) == "1969-12-29T00:00:00.000Z");
  CHECK(format_iso8601(bucket_start(-1, Granularity::Day)) == "1969-12-31T00:00:00.000Z");
}

TEST_CASE("turn records round-trip through json") {
  auto b = testing::load("companion.json");
  TurnRecord r = record("s", 3, 1234);
  r.raw_utterance = "My favorite movie is Matrix";
  r.masked_utterance = "My favorite movie is {movie}";
  r.entities = {{21, 27, "Matrix", "movie", "Matrix"}};
  r.skimmer_writes = {{*parse_attribute_ref("session.favMovie"), Value("Matrix")}};
  r.attribute_diff = {{Scope::User, "visits", Value(1), Value(2)}};
  r.nrg_used = NrgUsage{{DialogueAct::Question}, true};
  r.error = "boom";
  r.duration_ms = 7;
  auto j = to_json(r);
  CHECK(j["timestamp"] == 1234);
  CHECK(to_json(turn_record_from_json(j)) == j);
  auto stable = stable_json(r);
  CHECK_FALSE(stable.contains("session_id"));
  CHECK_FALSE(stable.contains("timestamp"));
  CHECK_FALSE(stable.contains("duration_ms"));
  CHECK(stable["asr_hypotheses"] == json::array());
}

TEST_CASE("store keeps turns in order and rejects duplicates and gaps") {
  Store store;
  CHECK_THROWS_AS(store.append_turn(record("ghost", 0)), NotFoundError);
  store.begin_session(meta("a"));
  store.begin_session(meta("b"));
  CHECK_THROWS_AS(store.begin_session(meta("a")), StoreError);
  store.append_turn(record("a", 0));
  store.append_turn(record("b", 0));
  store.append_turn(record("a", 1));
  CHECK_THROWS_AS(store.append_turn(record("a", 1)), StoreError);
  CHECK_THROWS_AS(store.append_turn(record("a", 3)), StoreError);
  CHECK_THROWS_AS(store.append_turn(record("b", 2)), StoreError);
  store.append_turn(record("a", 2));
  auto t = store.transcript("a");
  REQUIRE(t.size() == 3);
  for (int i = 0; i < 3; ++i) CHECK(t[static_cast<std::size_t>(i)].turn_index == i);
  CHECK_THROWS_AS(store.transcript("ghost"), NotFoundError);
  store.end_session("a", 1'715'000'100'000, false);
  CHECK(store.session("a")->ended_at_ms == 1'715'000'100'000);
  CHECK_FALSE(store.session("b")->ended_at_ms.has_value());
  CHECK_FALSE(store.session("ghost").has_value());
  auto all = store.sessions();
  REQUIRE(all.size() == 2);
  CHECK(all[0].session_id == "a");
  CHECK(all[1].session_id == "b");
  CHECK(!store.directory().has_value());
}

TEST_CASE("attribute tables") {
  Store store;
  store.record_attribute(Scope::User, "alice", "name", Value("Alice"), 1);
  store.record_attribute(Scope::User, "alice", "visits", Value(2), 2);
  store.record_attribute(Scope::User, "alice", "visits", Value(3), 3);
  store.record_attribute(Scope::Community, "club", "members", Value(10), 4);
  CHECK_THROWS_AS(store.record_attribute(Scope::Session, "s", "x", Value(1), 5), std::invalid_argument);
  auto table = store.list_attributes(Scope::User, "alice");
  CHECK(table == std::map<std::string, Value>{{"name", Value("Alice")}, {"visits", Value(3)}});
  CHECK(store.list_attributes(Scope::User, "nobody").empty());
  SharedAttributes shared;
  store.load_into(shared);
  CHECK(shared.get(Scope::User, "alice", "visits") == std::optional<Value>(Value(3)));
  CHECK(shared.get(Scope::Community, "club", "members") == std::optional<Value>(Value(10)));
}

TEST_CASE("a store directory is replayed on open") {
  testing::TempDir dir;
  const auto day1 = at("2024-05-06T23:59:00Z");
  const auto day2 = at("2024-05-07T00:01:00Z");
  {
    Store store(dir.path);
    store.begin_session(meta("a", day1));
    store.append_turn(record("a", 0, day1));
    store.append_turn(record("a", 1, day2));
    store.end_session("a", day2, true);
    store.begin_session(meta("b", day2));
    store.record_attribute(Scope::User, "u", "k", Value("x y"), day2);
  }
  CHECK(std::filesystem::exists(dir.path / "sessions-2024-05-06.ndjson"));
  CHECK(std::filesystem::exists(dir.path / "turns-2024-05-06.ndjson"));
  CHECK(std::filesystem::exists(dir.path / "turns-2024-05-07.ndjson"));
  CHECK(std::filesystem::exists(dir.path / "attributes.ndjson"));

  Store reopened(dir.path);
  auto sessions = reopened.sessions();
  REQUIRE(sessions.size() == 2);
  CHECK(sessions[0].session_id == "a");
  CHECK(sessions[0].ended_with_error);
  CHECK(sessions[0].ended_at_ms == day2);
  auto t = reopened.transcript("a");
  REQUIRE(t.size() == 2);
  CHECK(to_json(t[1]) == to_json(record("a", 1, day2)));
  CHECK(reopened.list_attributes(Scope::User, "u").at("k") == Value("x y"));
  reopened.append_turn(record("b", 0, day2));
  CHECK_THROWS_AS(reopened.append_turn(record("a", 1, day2)), StoreError);
}

TEST_CASE("metrics: sessions per day grouped by client match hand counts") {
  auto all = by_day(query(Metric::Sessions, GroupBy::None));
  CHECK(all == std::map<std::pair<std::string, std::string>, double>{{{"2024-05-06", "all"}, 3},
                                                                     {{"2024-05-07", "all"}, 2},
                                                                     {{"2024-05-12", "all"}, 1},
                                                                     {{"2024-05-13", "all"}, 1}});
  auto grouped = by_day(query(Metric::Sessions, GroupBy::Client));
  CHECK(grouped == std::map<std::pair<std::string, std::string>, double>{{{"2024-05-06", "android"}, 1},
                                                                         {{"2024-05-06", "web"}, 2},
                                                                         {{"2024-05-07", "alexa"}, 1},
                                                                         {{"2024-05-07", "web"}, 1},
                                                                         {{"2024-05-12", "android"}, 1},
                                                                         {{"2024-05-13", "alexa"}, 1}});
  auto weekly = query(Metric::Sessions, GroupBy::Client, Granularity::Week);
  std::map<std::string, double> week1;
  for (const auto& b : weekly)
    if (format_date(b.bucket_start_ms) == "2024-05-06") week1[b.group] = b.value;
  CHECK(week1 == std::map<std::string, double>{{"android", 2}, {"alexa", 1}, {"web", 3}});
  auto hourly = query(Metric::Sessions, GroupBy::None, Granularity::Hour);
  CHECK(hourly.front().value == 2);  // 09:10 and 09:40
  CHECK(hourly.size() == 6);
}

TEST_CASE("metrics: turns exclude the launch record and follow their own timestamps") {
  auto turns = by_day(query(Metric::Turns, GroupBy::None));
  CHECK(turns == std::map<std::pair<std::string, std::string>, double>{{{"2024-05-06", "all"}, 7},
                                                                       {{"2024-05-07", "all"}, 4},
                                                                       {{"2024-05-08", "all"}, 1},
                                                                       {{"2024-05-12", "all"}, 1},
                                                                       {{"2024-05-13", "all"}, 2}});
  auto apps = query(Metric::Turns, GroupBy::Application, Granularity::Week);
  std::map<std::pair<std::string, std::string>, double> weekly;
  for (const auto& b : apps) weekly[{format_date(b.bucket_start_ms), b.group}] = b.value;
  CHECK(weekly == std::map<std::pair<std::string, std::string>, double>{
                      {{"2024-05-06", "a"}, 7}, {{"2024-05-06", "b"}, 6}, {{"2024-05-13", "b"}, 2}});
}

TEST_CASE("metrics: ood rate matches hand counts") {
  auto rate = by_day(query(Metric::OodRate, GroupBy::None));
  CHECK(rate.at({"2024-05-06", "all"}) == doctest::Approx(3.0 / 7.0).epsilon(1e-12));
  CHECK(rate.at({"2024-05-07", "all"}) == doctest::Approx(1.0 / 4.0).epsilon(1e-12));
  CHECK(rate.at({"2024-05-08", "all"}) == 0.0);
  CHECK(rate.at({"2024-05-13", "all"}) == doctest::Approx(0.5).epsilon(1e-12));
  auto by_client = by_day(query(Metric::OodRate, GroupBy::Client));
  CHECK(by_client.at({"2024-05-06", "web"}) == doctest::Approx(1.0 / 5.0).epsilon(1e-12));
  CHECK(by_client.at({"2024-05-06", "android"}) == 1.0);
  CHECK(by_client.at({"2024-05-07", "web"}) == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("metrics: grouped counts sum to the ungrouped totals") {
  for (auto metric : {Metric::Sessions, Metric::Turns})
    for (auto group : {GroupBy::Client, GroupBy::Application})
      for (auto gran : {Granularity::Hour, Granularity::Day, Granularity::Week}) {
        std::map<std::int64_t, double> sums, totals;
        for (const auto& b : query(metric, group, gran)) sums[b.bucket_start_ms] += b.value;
        for (const auto& b : query(metric, GroupBy::None, gran)) totals[b.bucket_start_ms] = b.value;
        CHECK(sums == totals);
      }
}

TEST_CASE("metrics: filters and ordering") {
  MetricsQuery q;
  q.metric = Metric::Sessions;
  q.from_ms = at("2024-05-07T00:00:00Z");
  q.to_ms = at("2024-05-13T00:30:00Z");  // exclusive
  auto r = compute_metrics(metrics_sessions(), q);
  double total = 0;
  for (const auto& b : r) total += b.value;
  CHECK(total == 3);
  q = {};
  q.user = "alice";
  total = 0;
  for (const auto& b : compute_metrics(metrics_sessions(), q)) total += b.value;
  CHECK(total == 3);
  q = {};
  q.application = "b";
  q.metric = Metric::Turns;
  total = 0;
  for (const auto& b : compute_metrics(metrics_sessions(), q)) total += b.value;
  CHECK(total == 8);

  auto buckets = query(Metric::Turns, GroupBy::Client);
  CHECK(std::is_sorted(buckets.begin(), buckets.end(), [](const MetricBucket& a, const MetricBucket& b) {
    return std::tie(a.bucket_start_ms, a.group) < std::tie(b.bucket_start_ms, b.group);
  }));
  CHECK(to_json(buckets.front()) == json{{"bucketStart", "2024-05-06T00:00:00.000Z"}, {"group", "android"}, {"value", 2.0}});
}

TEST_CASE("metrics from a store equal metrics from the same data") {
  Store store;
  for (const auto& d : metrics_sessions()) {
    store.begin_session(d.meta);
    for (const auto& t : d.turns) store.append_turn(t);
    store.end_session(d.meta.session_id, *d.meta.ended_at_ms, false);
  }
  for (auto metric : {Metric::Sessions, Metric::Turns, Metric::OodRate}) {
    MetricsQuery q;
    q.metric = metric;
    q.group_by = GroupBy::Client;
    CHECK(compute_metrics(store, q) == compute_metrics(metrics_sessions(), q));
  }
}

TEST_CASE("query parameter parsing") {
  CHECK(parse_metric("ood_rate") == Metric::OodRate);
  CHECK(parse_metric("sessions") == Metric::Sessions);
  CHECK_FALSE(parse_metric("bogus").has_value());
  CHECK(parse_group_by("") == GroupBy::None);
  CHECK(parse_group_by("client") == GroupBy::Client);
  CHECK(parse_group_by("application") == GroupBy::Application);
  CHECK(parse_granularity("week") == Granularity::Week);
  CHECK_FALSE(parse_granularity("month").has_value());
}
