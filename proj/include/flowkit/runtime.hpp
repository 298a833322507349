#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "flowkit/engine.hpp"
#include "flowkit/store.hpp"
#include "flowkit/validate.hpp"

namespace flowkit {

/// A validated bundle with its trained pack, ready to serve.
struct Application {
  std::string app_id;
  DialogueBundle bundle;
  TrainedNluPack pack;
  std::unique_ptr<NrgGenerator> generator;
  std::unique_ptr<Engine> engine;
  std::int64_t loaded_at_ms = 0;
};

class InvalidBundleError : public std::runtime_error {
 public:
  explicit InvalidBundleError(std::vector<Diagnostic> diagnostics);
  const std::vector<Diagnostic>& diagnostics() const { return diagnostics_; }

 private:
  std::vector<Diagnostic> diagnostics_;
};

class BusyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct StartRequest {
  std::string app_id;
  std::string user_id = "anonymous";
  std::string community = "default";
  std::string client_tag = "text";
  std::optional<std::uint64_t> seed;
};

struct StartResult {
  std::string session_id;
  TurnResult launch;
};

/// Application registry plus live sessions. Every conversation, whether from
/// the terminal or HTTP, goes through start_session/post_turn.
class Runtime {
 public:
  using IdGenerator = std::function<std::string()>;

  explicit Runtime(Store& store, Clock clock = system_clock(), IdGenerator ids = {});
  ~Runtime();

  /// Validates, trains (unless a pack whose fingerprint matches is supplied)
  /// and registers, atomically replacing an application with the same id.
  /// Throws InvalidBundleError or TrainingError.
  std::string register_application(DialogueBundle bundle, std::optional<TrainedNluPack> pack = std::nullopt,
                                   std::string app_id = {});
  std::shared_ptr<const Application> application(const std::string& app_id) const;
  std::vector<std::string> application_ids() const;

  /// Throws NotFoundError for an unknown application.
  StartResult start_session(const StartRequest& request);
  /// Throws NotFoundError, BusyError when another turn for the session is in
  /// flight, or SessionEndedError.
  TurnResult post_turn(const std::string& session_id, const std::string& utterance);

  Store& store() { return store_; }
  SharedAttributes& shared_attributes() { return shared_; }

 private:
  struct Live {
    std::shared_ptr<const Application> app;
    Session session;
    std::mutex mu;
  };

  void persist(const Session& s, const TurnResult& result);

  Store& store_;
  Clock clock_;
  IdGenerator ids_;
  SharedAttributes shared_;
  mutable std::mutex mu_;
  std::map<std::string, std::shared_ptr<const Application>> apps_;
  std::map<std::string, std::shared_ptr<Live>> live_;
};

/// Random 128-bit hex string.
std::string random_session_id();

}  // namespace flowkit
