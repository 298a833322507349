#include "flowkit/runtime.hpp"

#include <cstdio>
#include <random>

#include "flowkit/bundle_io.hpp"

namespace flowkit {

namespace {

std::string summarize(const std::vector<Diagnostic>& ds) {
  std::string msg = "bundle failed validation";
  if (!ds.empty()) msg += ": " + ds.front().str();
  if (ds.size() > 1) msg += " (and " + std::to_string(ds.size() - 1) + " more)";
  return msg;
}

}  // namespace

InvalidBundleError::InvalidBundleError(std::vector<Diagnostic> diagnostics)
    : std::runtime_error(summarize(diagnostics)), diagnostics_(std::move(diagnostics)) {}

std::string random_session_id() {
  static thread_local std::mt19937_64 gen{std::random_device{}()};
  char buf[33];
  std::snprintf(buf, sizeof buf, "%016llx%016llx", static_cast<unsigned long long>(gen()),
                static_cast<unsigned long long>(gen()));
  return buf;
}

Runtime::Runtime(Store& store, Clock clock, IdGenerator ids)
    : store_(store), clock_(std::move(clock)), ids_(ids ? std::move(ids) : IdGenerator(&random_session_id)) {
  store_.load_into(shared_);
}

Runtime::~Runtime() = default;

std::string Runtime::register_application(DialogueBundle bundle, std::optional<TrainedNluPack> pack,
                                          std::string app_id) {
  auto diagnostics = validate_bundle(bundle);
  if (!diagnostics.empty()) throw InvalidBundleError(std::move(diagnostics));
  if (!pack || pack->bundle_fingerprint != bundle_fingerprint(bundle)) pack = train_pack(bundle);

  auto app = std::make_shared<Application>();
  app->app_id = !app_id.empty() ? app_id : (!bundle.config.app_id.empty() ? bundle.config.app_id : bundle.main_dialogue_id);
  app->bundle = std::move(bundle);
  app->pack = std::move(*pack);
  app->generator = make_generator(app->bundle.config.nrg_url, app->bundle.config.nrg_timeout_ms);
  app->engine = std::make_unique<Engine>(app->bundle, app->pack, shared_, *app->generator, default_embedder(), clock_);
  app->loaded_at_ms = clock_();

  std::lock_guard lock(mu_);
  apps_[app->app_id] = app;
  return app->app_id;
}

std::shared_ptr<const Application> Runtime::application(const std::string& app_id) const {
  std::lock_guard lock(mu_);
  auto it = apps_.find(app_id);
  return it == apps_.end() ? nullptr : it->second;
}

std::vector<std::string> Runtime::application_ids() const {
  std::lock_guard lock(mu_);
  std::vector<std::string> out;
  for (const auto& [id, _] : apps_) out.push_back(id);
  return out;
}

void Runtime::persist(const Session& s, const TurnResult& result) {
  store_.append_turn(result.record);
  for (const auto& c : result.record.attribute_diff) {
    if (c.scope == Scope::User) store_.record_attribute(Scope::User, s.user_id, c.name, c.new_value, result.record.timestamp_ms);
    if (c.scope == Scope::Community)
      store_.record_attribute(Scope::Community, s.community, c.name, c.new_value, result.record.timestamp_ms);
  }
  if (s.ended()) store_.end_session(s.session_id, s.ended_at_ms.value_or(clock_()), s.ended_with_error);
}

StartResult Runtime::start_session(const StartRequest& request) {
  auto app = application(request.app_id);
  if (!app) throw NotFoundError("unknown application " + request.app_id);

  auto live = std::make_shared<Live>();
  live->app = app;
  SessionOptions options;
  options.session_id = ids_();
  options.app_id = app->app_id;
  options.user_id = request.user_id;
  options.community = request.community;
  options.client_tag = request.client_tag;
  options.seed = request.seed;

  std::lock_guard session_lock(live->mu);
  // Register before running so the launch record lands after the start event.
  store_.begin_session({options.session_id, app->app_id, options.user_id, options.community, options.client_tag,
                        clock_(), std::nullopt, false});
  {
    std::lock_guard lock(mu_);
    live_[options.session_id] = live;
  }
  TurnResult launch = app->engine->start_session(live->session, options);
  persist(live->session, launch);
  return {options.session_id, std::move(launch)};
}

TurnResult Runtime::post_turn(const std::string& session_id, const std::string& utterance) {
  std::shared_ptr<Live> live;
  {
    std::lock_guard lock(mu_);
    auto it = live_.find(session_id);
    if (it != live_.end()) live = it->second;
  }
  if (!live) {
    if (store_.session(session_id)) throw SessionEndedError("session " + session_id + " is no longer active");
    throw NotFoundError("unknown session " + session_id);
  }
  std::unique_lock session_lock(live->mu, std::try_to_lock);
  if (!session_lock.owns_lock()) throw BusyError("a turn is already in progress for session " + session_id);
  if (live->session.ended()) throw SessionEndedError("session " + session_id + " has ended");
  TurnResult result = live->app->engine->process_turn(live->session, utterance);
  persist(live->session, result);
  return result;
}

}  // namespace flowkit
