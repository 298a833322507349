#include "flowkit/http_api.hpp"

#include "flowkit/bundle_io.hpp"
#include "flowkit/metrics.hpp"

namespace flowkit {

using nlohmann::json;

namespace {

void reply(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json; charset=utf-8");
}

void error(httplib::Response& res, int status, const std::string& message, json extra = json::object()) {
  extra["error"] = message;
  reply(res, status, extra);
}

json responses_json(const TurnResult& r) { return {{"responses", r.responses}, {"ended", r.ended}}; }

std::optional<json> parse_body(const httplib::Request& req, httplib::Response& res) {
  try {
    return req.body.empty() ? json::object() : json::parse(req.body);
  } catch (const json::parse_error& e) {
    error(res, 400, std::string("malformed JSON body: ") + e.what());
    return std::nullopt;
  }
}

void post_application(Runtime& rt, const httplib::Request& req, httplib::Response& res) {
  std::string text = req.has_file("bundle") ? req.get_file_value("bundle").content : req.body;
  try {
    DialogueBundle bundle = parse_bundle(text);
    std::string id = rt.register_application(std::move(bundle), std::nullopt, req.get_param_value("appId"));
    reply(res, 201, {{"appId", id}});
  } catch (const BundleParseError& e) {
    error(res, 400, e.what(), {{"line", e.line()}, {"column", e.column()}, {"path", e.path()}});
  } catch (const InvalidBundleError& e) {
    json ds = json::array();
    for (const auto& d : e.diagnostics()) ds.push_back(to_json(d));
    error(res, 422, e.what(), {{"diagnostics", ds}});
  } catch (const TrainingError& e) {
    error(res, 422, e.what());
  }
}

void post_session(Runtime& rt, const httplib::Request& req, httplib::Response& res) {
  auto body = parse_body(req, res);
  if (!body) return;
  StartRequest sr;
  try {
    sr.app_id = body->at("appId").get<std::string>();
    sr.client_tag = body->value("client", sr.client_tag);
    sr.user_id = body->value("userId", sr.user_id);
    sr.community = body->value("community", sr.community);
    if (body->contains("seed") && !(*body)["seed"].is_null()) sr.seed = (*body)["seed"].get<std::uint64_t>();
  } catch (const json::exception& e) {
    return error(res, 400, std::string("bad session request: ") + e.what());
  }
  try {
    StartResult r = rt.start_session(sr);
    json out = responses_json(r.launch);
    out["sessionId"] = r.session_id;
    reply(res, 201, out);
  } catch (const NotFoundError& e) {
    error(res, 404, e.what());
  }
}

void post_turn(Runtime& rt, const httplib::Request& req, httplib::Response& res) {
  auto body = parse_body(req, res);
  if (!body) return;
  std::string utterance;
  try {
    utterance = body->at("utterance").get<std::string>();
  } catch (const json::exception& e) {
    return error(res, 400, std::string("bad turn request: ") + e.what());
  }
  try {
    reply(res, 200, responses_json(rt.post_turn(req.path_params.at("id"), utterance)));
  } catch (const NotFoundError& e) {
    error(res, 404, e.what());
  } catch (const BusyError& e) {
    error(res, 409, e.what());
  } catch (const SessionEndedError& e) {
    error(res, 409, e.what());
  }
}

void get_transcript(Runtime& rt, const httplib::Request& req, httplib::Response& res) {
  const std::string& id = req.path_params.at("id");
  try {
    json turns = json::array();
    for (const auto& t : rt.store().transcript(id)) turns.push_back(to_json(t));
    reply(res, 200, {{"sessionId", id}, {"turns", turns}});
  } catch (const NotFoundError& e) {
    error(res, 404, e.what());
  }
}

void get_metrics(Runtime& rt, const httplib::Request& req, httplib::Response& res) {
  MetricsQuery q;
  auto param = [&](const char* name) { return req.get_param_value(name); };
  auto metric = parse_metric(param("metric").empty() ? "sessions" : param("metric"));
  auto group = parse_group_by(param("groupBy"));
  auto gran = parse_granularity(param("granularity").empty() ? "day" : param("granularity"));
  if (!metric) return error(res, 400, "metric must be sessions, turns or ood_rate");
  if (!group) return error(res, 400, "groupBy must be client, application or none");
  if (!gran) return error(res, 400, "granularity must be hour, day or week");
  q.metric = *metric;
  q.group_by = *group;
  q.granularity = *gran;
  for (auto [name, slot] : {std::pair{"from", &q.from_ms}, std::pair{"to", &q.to_ms}}) {
    if (!req.has_param(name)) continue;
    auto t = parse_time(param(name));
    if (!t) return error(res, 400, std::string("cannot parse '") + name + "' as a timestamp");
    *slot = *t;
  }
  if (q.from_ms && q.to_ms && *q.from_ms > *q.to_ms) return error(res, 400, "'from' is after 'to'");
  if (req.has_param("user")) q.user = param("user");
  if (req.has_param("application")) q.application = param("application");
  json buckets = json::array();
  for (const auto& b : compute_metrics(rt.store(), q)) buckets.push_back(to_json(b));
  reply(res, 200, {{"metric", std::string(to_string(q.metric))}, {"buckets", buckets}});
}

void get_attributes(Runtime& rt, const httplib::Request& req, httplib::Response& res) {
  auto scope = parse_scope(req.get_param_value("scope"));
  if (!scope || (*scope != Scope::User && *scope != Scope::Community))
    return error(res, 400, "scope must be user or community");
  if (!req.has_param("key")) return error(res, 400, "key is required");
  const std::string key = req.get_param_value("key");
  json rows = json::array();
  for (const auto& [name, value] : rt.store().list_attributes(*scope, key))
    rows.push_back({{"name", name}, {"value", to_json(value)}});
  reply(res, 200, {{"scope", std::string(to_string(*scope))}, {"key", key}, {"attributes", rows}});
}

}  // namespace

void install_routes(httplib::Server& server, Runtime& runtime) {
  Runtime* rt = &runtime;
  server.Post("/applications", [rt](const auto& req, auto& res) { post_application(*rt, req, res); });
  server.Get("/applications", [rt](const httplib::Request&, httplib::Response& res) {
    reply(res, 200, {{"applications", rt->application_ids()}});
  });
  server.Post("/sessions", [rt](const auto& req, auto& res) { post_session(*rt, req, res); });
  server.Post("/sessions/:id/turns", [rt](const auto& req, auto& res) { post_turn(*rt, req, res); });
  server.Get("/sessions/:id/transcript", [rt](const auto& req, auto& res) { get_transcript(*rt, req, res); });
  server.Get("/metrics", [rt](const auto& req, auto& res) { get_metrics(*rt, req, res); });
  server.Get("/attributes", [rt](const auto& req, auto& res) { get_attributes(*rt, req, res); });
  server.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
    try {
      std::rethrow_exception(ep);
    } catch (const std::exception& e) {
      error(res, 500, e.what());
    } catch (...) {
      error(res, 500, "internal error");
    }
  });
}

}  // namespace flowkit
