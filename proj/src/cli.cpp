#include "flowkit/cli.hpp"

#include <csignal>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "flowkit/bundle_io.hpp"
#include "flowkit/http_api.hpp"
#include "flowkit/runtime.hpp"

namespace flowkit {

namespace fs = std::filesystem;
using nlohmann::json;

std::filesystem::path resolve_data_dir(const std::optional<std::string>& flag) {
  if (flag && !flag->empty()) return *flag;
  if (const char* env = std::getenv("FLOWKIT_DATA"); env && *env) return env;
  return "flowkit-data";
}

namespace {

constexpr int kOk = 0;
constexpr int kFailed = 1;
constexpr int kError = 2;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::ios_base::failure("cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::ios_base::failure("cannot write '" + path + "'");
  out << content;
  if (!out) throw std::ios_base::failure("write failed for '" + path + "'");
}

/// Loads and parses a bundle, reporting problems on `err`; nullopt means exit 2.
std::optional<DialogueBundle> load_bundle(const std::string& path, std::ostream& err) {
  try {
    return parse_bundle(read_file(path));
  } catch (const BundleParseError& e) {
    err << path << ": " << e.what() << "\n";
  } catch (const std::exception& e) {
    err << e.what() << "\n";
  }
  return std::nullopt;
}

std::optional<TrainedNluPack> load_pack(const std::string& path, std::ostream& err) {
  try {
    return pack_from_json(json::parse(read_file(path)));
  } catch (const std::exception& e) {
    err << "cannot load pack '" << path << "': " << e.what() << "\n";
    return std::nullopt;
  }
}

int cmd_validate(const std::string& path, std::ostream& out, std::ostream& err) {
  auto bundle = load_bundle(path, err);
  if (!bundle) return kError;
  auto diagnostics = validate_bundle(*bundle);
  for (const auto& d : diagnostics) out << d.str() << "\n";
  if (!diagnostics.empty()) return kFailed;
  out << path << ": ok\n";
  return kOk;
}

int cmd_train(const std::string& path, const std::string& out_path, std::ostream& out, std::ostream& err) {
  auto bundle = load_bundle(path, err);
  if (!bundle) return kError;
  auto diagnostics = validate_bundle(*bundle);
  if (!diagnostics.empty()) {
    for (const auto& d : diagnostics) err << d.str() << "\n";
    return kFailed;
  }
  try {
    TrainedNluPack pack = train_pack(*bundle);
    write_file(out_path, serialize_pack(pack));
    out << "wrote " << out_path << " (" << pack.local_classifiers.size() << " local, " << pack.global_classifiers.size()
        << " global classifiers)\n";
    return kOk;
  } catch (const TrainingError& e) {
    err << "training failed: " << e.what() << "\n";
    return kFailed;
  } catch (const std::exception& e) {
    err << e.what() << "\n";
    return kError;
  }
}

/// Registers a bundle file (and optional pack) with a runtime; returns the app id or nullopt after reporting.
std::optional<std::string> register_file(Runtime& rt, const std::string& path, const std::optional<std::string>& pack_path,
                                         std::ostream& err, std::string app_id = {}) {
  auto bundle = load_bundle(path, err);
  if (!bundle) return std::nullopt;
  std::optional<TrainedNluPack> pack;
  if (pack_path) {
    pack = load_pack(*pack_path, err);
    if (!pack) return std::nullopt;
  }
  try {
    return rt.register_application(std::move(*bundle), std::move(pack), std::move(app_id));
  } catch (const InvalidBundleError& e) {
    for (const auto& d : e.diagnostics()) err << d.str() << "\n";
  } catch (const std::exception& e) {
    err << e.what() << "\n";
  }
  return std::nullopt;
}

struct ChatOptions {
  std::string bundle;
  std::optional<std::uint64_t> seed;
  std::string user = "anonymous";
  std::string community = "default";
  std::string client = "cli";
  std::optional<std::string> data;
  std::optional<std::string> pack;
  std::optional<std::string> transcript;
  bool memory = false;
};

int cmd_chat(const ChatOptions& o, std::istream& in, std::ostream& out, std::ostream& err) {
  std::unique_ptr<Store> store;
  try {
    store = o.memory ? std::make_unique<Store>() : std::make_unique<Store>(resolve_data_dir(o.data));
  } catch (const std::exception& e) {
    err << "cannot open data directory: " << e.what() << "\n";
    return kError;
  }
  Runtime rt(*store);
  auto app_id = register_file(rt, o.bundle, o.pack, err);
  if (!app_id) return kError;

  StartResult started = rt.start_session({*app_id, o.user, o.community, o.client, o.seed});
  auto print = [&](const TurnResult& r) {
    for (const auto& line : r.responses) out << "bot> " << line << "\n";
    if (r.ended) out << "[session ended]\n";
    out.flush();
  };
  print(started.launch);
  bool ended = started.launch.ended;
  std::string line;
  while (!ended && std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    out << "you> " << line << "\n";
    TurnResult r = rt.post_turn(started.session_id, line);
    print(r);
    ended = r.ended;
  }
  if (o.transcript) {
    json turns = json::array();
    for (const auto& t : rt.store().transcript(started.session_id)) turns.push_back(stable_json(t));
    try {
      write_file(*o.transcript, turns.dump(2) + "\n");
    } catch (const std::exception& e) {
      err << e.what() << "\n";
      return kError;
    }
  }
  return kOk;
}

int cmd_simulate(const std::string& bundle_path, const std::string& script_path, std::ostream& out,
                 std::ostream& err) {
  json script;
  try {
    script = json::parse(read_file(script_path));
  } catch (const std::exception& e) {
    err << "cannot load script: " << e.what() << "\n";
    return kError;
  }
  Store store;
  Runtime rt(store);
  auto app_id = register_file(rt, bundle_path, std::nullopt, err);
  if (!app_id) return kError;

  StartRequest sr;
  sr.app_id = *app_id;
  std::vector<std::pair<std::string, std::optional<std::vector<std::string>>>> turns;
  std::optional<std::vector<std::string>> launch_expect;
  try {
    sr.user_id = script.value("user", sr.user_id);
    sr.community = script.value("community", sr.community);
    sr.client_tag = script.value("client", std::string("simulate"));
    if (script.contains("seed")) sr.seed = script.at("seed").get<std::uint64_t>();
    if (script.contains("launch") && script["launch"].contains("expect"))
      launch_expect = script["launch"]["expect"].get<std::vector<std::string>>();
    for (const auto& t : script.at("turns")) {
      std::optional<std::vector<std::string>> expect;
      if (t.contains("expect")) expect = t.at("expect").get<std::vector<std::string>>();
      turns.emplace_back(t.at("user").get<std::string>(), std::move(expect));
    }
  } catch (const json::exception& e) {
    err << "malformed script: " << e.what() << "\n";
    return kError;
  }

  int mismatches = 0;
  auto check = [&](const std::string& label, const TurnResult& r, const std::optional<std::vector<std::string>>& expect) {
    for (const auto& line : r.responses) out << "bot> " << line << "\n";
    if (!expect || *expect == r.responses) return;
    ++mismatches;
    err << "mismatch at " << label << ":\n";
    for (const auto& e : *expect) err << "  - " << e << "\n";
    for (const auto& g : r.responses) err << "  + " << g << "\n";
  };

  StartResult started = rt.start_session(sr);
  check("launch", started.launch, launch_expect);
  bool ended = started.launch.ended;
  for (std::size_t i = 0; i < turns.size(); ++i) {
    if (ended) {
      err << "script turn " << i + 1 << " targets a session that has already ended\n";
      return kError;
    }
    out << "you> " << turns[i].first << "\n";
    TurnResult r = rt.post_turn(started.session_id, turns[i].first);
    check("turn " + std::to_string(i + 1), r, turns[i].second);
    ended = r.ended;
  }
  out << (mismatches == 0 ? "PASS" : "FAIL") << " (" << turns.size() << " turns, " << mismatches << " mismatches)\n";
  return mismatches == 0 ? kOk : kFailed;
}

httplib::Server* g_server = nullptr;

void on_signal(int) {
  if (g_server) g_server->stop();
}

int cmd_serve(const std::string& host, int port, const std::optional<std::string>& data,
              const std::optional<std::string>& apps, std::ostream& out, std::ostream& err) {
  std::unique_ptr<Store> store;
  try {
    store = std::make_unique<Store>(resolve_data_dir(data));
  } catch (const std::exception& e) {
    err << "cannot open data directory: " << e.what() << "\n";
    return kError;
  }
  Runtime rt(*store);
  if (apps) {
    std::error_code ec;
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(*apps, ec)) {
      const auto& p = entry.path();
      const std::string name = p.filename().string();
      const bool is_pack = name.size() > 10 && name.compare(name.size() - 10, 10, ".pack.json") == 0;
      if (p.extension() == ".json" && !is_pack) files.push_back(p);
    }
    if (ec) {
      err << "cannot read apps directory: " << ec.message() << "\n";
      return kError;
    }
    std::sort(files.begin(), files.end());
    for (const auto& p : files) {
      std::optional<std::string> pack;
      fs::path pack_path = p.parent_path() / (p.stem().string() + ".pack.json");
      if (fs::exists(pack_path)) pack = pack_path.string();
      auto bundle = load_bundle(p.string(), err);
      std::string id = bundle && !bundle->config.app_id.empty() ? bundle->config.app_id : p.stem().string();
      if (auto registered = register_file(rt, p.string(), pack, err, id))
        out << "loaded application " << *registered << " from " << p.string() << "\n";
    }
  }
  httplib::Server server;
  install_routes(server, rt);
  g_server = &server;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  int bound = port;
  if (port == 0) {
    bound = server.bind_to_any_port(host);
  } else if (!server.bind_to_port(host, port)) {
    err << "cannot listen on " << host << ":" << port << "\n";
    return kError;
  }
  out << "listening on http://" << host << ":" << bound << "\n";
  out.flush();
  server.listen_after_bind();
  g_server = nullptr;
  return kOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::istream& in, std::ostream& out, std::ostream& err) {
  CLI::App app{"flowkit: build, train and run conversational applications"};
  app.require_subcommand(1);

  std::string bundle, script, pack_out = "pack.json";
  auto* validate = app.add_subcommand("validate", "check a bundle for structural problems");
  validate->add_option("bundle", bundle, "bundle JSON file")->required();

  auto* train = app.add_subcommand("train", "train the NLU pack for a bundle");
  train->add_option("bundle", bundle, "bundle JSON file")->required();
  train->add_option("-o,--output", pack_out, "pack output path")->required();

  ChatOptions chat_opts;
  auto* chat = app.add_subcommand("chat", "talk to a bundle in the terminal");
  chat->add_option("bundle", chat_opts.bundle, "bundle JSON file")->required();
  chat->add_option("--seed", chat_opts.seed, "random seed for response variants");
  chat->add_option("--user", chat_opts.user, "user id");
  chat->add_option("--community", chat_opts.community, "community namespace");
  chat->add_option("--client", chat_opts.client, "client tag recorded with the session");
  chat->add_option("--data", chat_opts.data, "data directory");
  chat->add_option("--pack", chat_opts.pack, "pretrained pack (retrained if stale)");
  chat->add_option("--transcript", chat_opts.transcript, "write the session transcript as JSON");
  chat->add_flag("--memory", chat_opts.memory, "keep the session in memory only");

  auto* simulate = app.add_subcommand("simulate", "run a scripted conversation and compare responses");
  simulate->add_option("bundle", bundle, "bundle JSON file")->required();
  simulate->add_option("script", script, "script JSON file")->required();

  std::string host = "127.0.0.1";
  int port = 8080;
  std::optional<std::string> data, apps;
  auto* serve = app.add_subcommand("serve", "run the HTTP API");
  serve->add_option("--host", host, "listen address");
  serve->add_option("--port", port, "listen port (0 picks a free one)");
  serve->add_option("--data", data, "data directory");
  serve->add_option("--apps", apps, "directory of bundles to load at startup");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kOk : kError;
  }

  try {
    if (*validate) return cmd_validate(bundle, out, err);
    if (*train) return cmd_train(bundle, pack_out, out, err);
    if (*chat) return cmd_chat(chat_opts, in, out, err);
    if (*simulate) return cmd_simulate(bundle, script, out, err);
    if (*serve) return cmd_serve(host, port, data, apps, out, err);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kError;
  }
  return kError;
}

}  // namespace flowkit
