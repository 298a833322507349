#include "flowkit/bundle_io.hpp"

#include <cctype>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "flowkit/hash.hpp"

namespace flowkit {

using nlohmann::json;

BundleParseError::BundleParseError(std::size_t line, std::size_t column, std::string path, const std::string& message)
    : std::runtime_error("line " + std::to_string(line) + ", column " + std::to_string(column) +
                         (path.empty() ? "" : " (" + path + ")") + ": " + message),
      line_(line),
      column_(column),
      path_(std::move(path)),
      detail_(message) {}

namespace {

// Maps JSON pointers to byte offsets of their values in an already valid document.
class JsonLocator {
 public:
  explicit JsonLocator(std::string_view text) : text_(text) {
    std::string root;
    scan_value(root);
  }

  std::size_t offset_of(std::string pointer) const {
    for (;;) {
      auto it = offsets_.find(pointer);
      if (it != offsets_.end()) return it->second;
      if (pointer.empty()) return 0;
      pointer.erase(pointer.rfind('/'));
    }
  }

  std::pair<std::size_t, std::size_t> line_column(std::size_t offset) const {
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i < offset && i < text_.size(); ++i) {
      if (text_[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    return {line, col};
  }

 private:
  void ws() {
    while (i_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[i_]))) ++i_;
  }

  std::string scan_string() {
    std::string raw;
    ++i_;  // opening quote
    while (i_ < text_.size() && text_[i_] != '"') {
      if (text_[i_] == '\\') raw += text_[i_++];
      if (i_ < text_.size()) raw += text_[i_++];
    }
    ++i_;
    // Keys used for lookup only need to match nlohmann's unescaped form for plain ASCII names.
    return json::parse("\"" + raw + "\"").get<std::string>();
  }

  static std::string escape_token(const std::string& key) {
    std::string out;
    for (char c : key) {
      if (c == '~') out += "~0";
      else if (c == '/') out += "~1";
      else out += c;
    }
    return out;
  }

  void scan_value(const std::string& path) {
    ws();
    offsets_[path] = i_;
    if (i_ >= text_.size()) return;
    char c = text_[i_];
    if (c == '{') {
      ++i_;
      ws();
      if (text_[i_] == '}') {
        ++i_;
        return;
      }
      for (;;) {
        ws();
        std::string key = scan_string();
        ws();
        ++i_;  // colon
        scan_value(path + "/" + escape_token(key));
        ws();
        if (text_[i_++] == '}') return;
      }
    }
    if (c == '[') {
      ++i_;
      ws();
      if (text_[i_] == ']') {
        ++i_;
        return;
      }
      for (std::size_t index = 0;; ++index) {
        scan_value(path + "/" + std::to_string(index));
        ws();
        if (text_[i_++] == ']') return;
      }
    }
    if (c == '"') {
      scan_string();
      return;
    }
    while (i_ < text_.size() && text_[i_] != ',' && text_[i_] != '}' && text_[i_] != ']' &&
           !std::isspace(static_cast<unsigned char>(text_[i_])))
      ++i_;
  }

  std::string_view text_;
  std::size_t i_ = 0;
  std::map<std::string, std::size_t> offsets_;
};

class Reader {
 public:
  Reader(std::string_view text, const JsonLocator& loc) : text_(text), loc_(loc) {}

  [[noreturn]] void fail(const std::string& path, const std::string& msg) const {
    auto [line, col] = loc_.line_column(loc_.offset_of(path));
    throw BundleParseError(line, col, path, msg);
  }

  const json& require(const json& obj, const std::string& path, const char* key) const {
    if (!obj.is_object()) fail(path, "expected an object");
    auto it = obj.find(key);
    if (it == obj.end()) fail(path, std::string("missing field '") + key + "'");
    return *it;
  }

  std::string string_at(const json& v, const std::string& path) const {
    if (!v.is_string()) fail(path, "expected a string");
    return v.get<std::string>();
  }

  std::vector<std::string> strings_at(const json& v, const std::string& path) const {
    if (!v.is_array()) fail(path, "expected an array of strings");
    std::vector<std::string> out;
    for (std::size_t i = 0; i < v.size(); ++i) out.push_back(string_at(v[i], path + "/" + std::to_string(i)));
    return out;
  }

  const json& array_at(const json& obj, const std::string& path, const char* key, bool required) const {
    static const json kEmpty = json::array();
    if (!required && (!obj.contains(key) || obj.at(key).is_null())) return kEmpty;
    const json& v = require(obj, path, key);
    if (!v.is_array()) fail(path + "/" + key, "expected an array");
    return v;
  }

  ConditionExpr condition_at(const json& v, const std::string& path) const {
    std::string src = string_at(v, path);
    try {
      return parse_condition(src);
    } catch (const ConditionParseError& e) {
      fail(path, "bad expression \"" + src + "\": " + e.detail() + " at position " + std::to_string(e.position()));
    }
  }

  TemplateString template_at(const json& v, const std::string& path) const {
    try {
      return TemplateString(string_at(v, path));
    } catch (const std::invalid_argument& e) {
      fail(path, e.what());
    }
  }

  AttributeRef ref_at(const json& v, const std::string& path) const {
    auto ref = parse_attribute_ref(string_at(v, path));
    if (!ref) fail(path, "expected an attribute reference 'scope.name'");
    return *ref;
  }

  void check_keys(const json& obj, const std::string& path, std::initializer_list<const char*> allowed) const {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
      bool ok = false;
      for (const char* a : allowed) ok = ok || it.key() == a;
      if (!ok) fail(path + "/" + it.key(), "unknown field '" + it.key() + "'");
    }
  }

  Node node_at(const json& j, const std::string& path) const {
    if (!j.is_object()) fail(path, "node must be an object");
    Node n;
    n.id = string_at(require(j, path, "id"), path + "/id");
    if (n.id.empty()) fail(path + "/id", "node id must not be empty");
    std::string kind = string_at(require(j, path, "kind"), path + "/kind");
    auto k = parse_node_kind(kind);
    if (!k) fail(path + "/kind", "unknown node kind '" + kind + "'");
    n.kind = *k;
    switch (n.kind) {
      case NodeKind::Enter:
        check_keys(j, path, {"id", "kind"});
        n.payload = EnterPayload{};
        break;
      case NodeKind::Exit:
        check_keys(j, path, {"id", "kind"});
        n.payload = ExitPayload{};
        break;
      case NodeKind::Speech: {
        check_keys(j, path, {"id", "kind", "responses", "nrg"});
        SpeechPayload p;
        const json& rs = array_at(j, path, "responses", false);
        for (std::size_t i = 0; i < rs.size(); ++i)
          p.responses.push_back(template_at(rs[i], path + "/responses/" + std::to_string(i)));
        if (j.contains("nrg")) {
          const std::string npath = path + "/nrg";
          const json& nj = j.at("nrg");
          if (!nj.is_object()) fail(npath, "expected an object");
          check_keys(nj, npath, {"act", "grounding", "awaitReply"});
          NrgSpec spec;
          std::string act = string_at(require(nj, npath, "act"), npath + "/act");
          auto a = parse_dialogue_act(act);
          if (!a) fail(npath + "/act", "unknown dialogue act '" + act + "'");
          spec.act = *a;
          if (nj.contains("grounding")) spec.grounding = template_at(nj.at("grounding"), npath + "/grounding");
          if (nj.contains("awaitReply")) {
            if (!nj.at("awaitReply").is_boolean()) fail(npath + "/awaitReply", "expected a boolean");
            spec.await_reply = nj.at("awaitReply").get<bool>();
          }
          p.nrg = std::move(spec);
        }
        n.payload = std::move(p);
        break;
      }
      case NodeKind::UserInput: {
        check_keys(j, path, {"id", "kind", "oodAction"});
        UserInputPayload p;
        if (j.contains("oodAction")) p.local_ood_action = string_at(j.at("oodAction"), path + "/oodAction");
        n.payload = std::move(p);
        break;
      }
      case NodeKind::Intent:
      case NodeKind::GlobalIntent: {
        check_keys(j, path, {"id", "kind", "examples"});
        IntentPayload p;
        p.is_global = n.kind == NodeKind::GlobalIntent;
        const json& ex = array_at(j, path, "examples", true);
        for (std::size_t i = 0; i < ex.size(); ++i) {
          const std::string epath = path + "/examples/" + std::to_string(i);
          try {
            p.examples.push_back(parse_example(string_at(ex[i], epath)));
          } catch (const MarkupError& e) {
            fail(epath, std::string("malformed entity markup: ") + e.what());
          }
        }
        n.payload = std::move(p);
        break;
      }
      case NodeKind::Function: {
        check_keys(j, path, {"id", "kind", "assignments", "transitions"});
        FunctionPayload p;
        const json& as = array_at(j, path, "assignments", false);
        for (std::size_t i = 0; i < as.size(); ++i) {
          const std::string apath = path + "/assignments/" + std::to_string(i);
          check_keys(as[i], apath, {"target", "expr"});
          p.assignments.push_back({ref_at(require(as[i], apath, "target"), apath + "/target"),
                                   condition_at(require(as[i], apath, "expr"), apath + "/expr")});
        }
        const json& ts = array_at(j, path, "transitions", true);
        for (std::size_t i = 0; i < ts.size(); ++i) {
          const std::string tpath = path + "/transitions/" + std::to_string(i);
          check_keys(ts[i], tpath, {"guard", "out"});
          p.transitions.push_back({condition_at(require(ts[i], tpath, "guard"), tpath + "/guard"),
                                   string_at(require(ts[i], tpath, "out"), tpath + "/out")});
        }
        n.payload = std::move(p);
        break;
      }
      case NodeKind::Action:
      case NodeKind::GlobalAction: {
        check_keys(j, path, {"id", "kind", "situation"});
        std::string s = string_at(require(j, path, "situation"), path + "/situation");
        auto sit = parse_situation(s);
        if (!sit) fail(path + "/situation", "unknown situation '" + s + "'");
        n.payload = ActionPayload{*sit, n.kind == NodeKind::GlobalAction};
        break;
      }
      case NodeKind::SubDialogueRef:
        check_keys(j, path, {"id", "kind", "dialogue"});
        n.payload = SubDialogueRefPayload{string_at(require(j, path, "dialogue"), path + "/dialogue")};
        break;
    }
    return n;
  }

  SubDialogue dialogue_at(const json& j, const std::string& path) const {
    if (!j.is_object()) fail(path, "dialogue must be an object");
    check_keys(j, path, {"id", "name", "labels", "entities", "startingCondition", "attributes", "nodes", "edges"});
    SubDialogue d;
    d.id = string_at(require(j, path, "id"), path + "/id");
    if (d.id.empty()) fail(path + "/id", "dialogue id must not be empty");
    d.name = j.contains("name") ? string_at(j.at("name"), path + "/name") : d.id;
    for (auto& l : strings_at(array_at(j, path, "labels", false), path + "/labels")) d.labels.insert(l);
    for (auto& e : strings_at(array_at(j, path, "entities", false), path + "/entities")) d.entity_tags.insert(e);
    if (j.contains("startingCondition") && !j.at("startingCondition").is_null())
      d.starting_condition = condition_at(j.at("startingCondition"), path + "/startingCondition");

    const json& attrs = array_at(j, path, "attributes", false);
    for (std::size_t i = 0; i < attrs.size(); ++i) {
      const std::string apath = path + "/attributes/" + std::to_string(i);
      check_keys(attrs[i], apath, {"name", "scope", "default"});
      AttributeDecl decl;
      decl.name = string_at(require(attrs[i], apath, "name"), apath + "/name");
      if (!is_identifier(decl.name)) fail(apath + "/name", "attribute name must be an identifier");
      std::string scope = string_at(require(attrs[i], apath, "scope"), apath + "/scope");
      auto s = parse_scope(scope);
      if (!s) fail(apath + "/scope", "unknown scope '" + scope + "'");
      decl.scope = *s;
      const json& def = require(attrs[i], apath, "default");
      try {
        decl.default_value = value_from_json(def);
      } catch (const std::invalid_argument& e) {
        fail(apath + "/default", e.what());
      }
      d.init_attributes.push_back(std::move(decl));
    }

    const json& nodes = array_at(j, path, "nodes", true);
    std::set<std::string> ids;
    bool seen_enter = false;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      const std::string npath = path + "/nodes/" + std::to_string(i);
      Node n = node_at(nodes[i], npath);
      if (!ids.insert(n.id).second) fail(npath + "/id", "duplicate node id '" + n.id + "'");
      if (n.kind == NodeKind::Enter) {
        if (seen_enter) fail(npath, "multiple Enter nodes in dialogue '" + d.id + "'");
        seen_enter = true;
      }
      d.nodes.push_back(std::move(n));
    }

    const json& edges = array_at(j, path, "edges", false);
    for (std::size_t i = 0; i < edges.size(); ++i) {
      const std::string epath = path + "/edges/" + std::to_string(i);
      check_keys(edges[i], epath, {"from", "out", "to"});
      Edge e;
      e.from = string_at(require(edges[i], epath, "from"), epath + "/from");
      e.to = string_at(require(edges[i], epath, "to"), epath + "/to");
      if (edges[i].contains("out")) e.out_key = string_at(edges[i].at("out"), epath + "/out");
      d.edges.push_back(std::move(e));
    }
    return d;
  }

  DialogueBundle bundle_at(const json& root) const {
    if (!root.is_object()) fail("", "bundle document must be a JSON object");
    check_keys(root, "", {"main", "dialogues", "entities", "skimmer", "selectorPool", "config"});
    DialogueBundle b;
    b.main_dialogue_id = string_at(require(root, "", "main"), "/main");

    const json& dialogues = array_at(root, "", "dialogues", true);
    std::set<std::string> dialogue_ids;
    for (std::size_t i = 0; i < dialogues.size(); ++i) {
      const std::string dpath = "/dialogues/" + std::to_string(i);
      SubDialogue d = dialogue_at(dialogues[i], dpath);
      if (!dialogue_ids.insert(d.id).second) fail(dpath + "/id", "duplicate dialogue id '" + d.id + "'");
      b.sub_dialogues.push_back(std::move(d));
    }

    const json& entities = array_at(root, "", "entities", false);
    std::set<std::string> types;
    for (std::size_t i = 0; i < entities.size(); ++i) {
      const std::string epath = "/entities/" + std::to_string(i);
      check_keys(entities[i], epath, {"type", "patterns", "normalizer"});
      std::string type = string_at(require(entities[i], epath, "type"), epath + "/type");
      if (!types.insert(type).second) fail(epath + "/type", "duplicate entity type '" + type + "'");
      auto patterns = strings_at(array_at(entities[i], epath, "patterns", false), epath + "/patterns");
      Normalizer norm = Normalizer::None;
      if (entities[i].contains("normalizer")) {
        std::string ns = string_at(entities[i].at("normalizer"), epath + "/normalizer");
        auto n = parse_normalizer(ns);
        if (!n) fail(epath + "/normalizer", "unknown normalizer '" + ns + "'");
        norm = *n;
      }
      if (patterns.empty() && norm == Normalizer::None)
        fail(epath + "/patterns", "entity type '" + type + "' needs patterns or a normalizer with built-in patterns");
      try {
        b.entity_rules.push_back(EntityRule::make(type, std::move(patterns), norm));
      } catch (const std::invalid_argument& e) {
        fail(epath + "/patterns", e.what());
      }
    }

    const json& skimmer = array_at(root, "", "skimmer", false);
    for (std::size_t i = 0; i < skimmer.size(); ++i) {
      const std::string spath = "/skimmer/" + std::to_string(i);
      check_keys(skimmer[i], spath, {"patterns", "attribute", "value"});
      auto patterns = strings_at(array_at(skimmer[i], spath, "patterns", true), spath + "/patterns");
      AttributeRef target = ref_at(require(skimmer[i], spath, "attribute"), spath + "/attribute");
      const json& v = require(skimmer[i], spath, "value");
      std::variant<Value, CaptureRef> value;
      if (v.is_object()) {
        const json& g = require(v, spath + "/value", "group");
        if (g.is_number_integer()) value = CaptureRef{g.get<int>()};
        else value = CaptureRef{string_at(g, spath + "/value/group")};
      } else if (v.is_boolean() || v.is_string()) {
        value = value_from_json(v);
      } else {
        fail(spath + "/value", "skimmer value must be true, false, a string or {\"group\": ...}");
      }
      try {
        b.skimmer_rules.push_back(SkimmerRule::make(std::move(patterns), target, std::move(value)));
      } catch (const std::invalid_argument& e) {
        fail(spath + "/patterns", e.what());
      }
    }

    b.selector_pool = strings_at(array_at(root, "", "selectorPool", false), "/selectorPool");

    if (root.contains("config")) {
      const json& c = root.at("config");
      if (!c.is_object()) fail("/config", "expected an object");
      check_keys(c, "/config", {"appId", "language", "oodThreshold", "seed", "nrgUrl", "nrgTimeoutMs"});
      if (c.contains("appId")) b.config.app_id = string_at(c.at("appId"), "/config/appId");
      if (c.contains("language")) b.config.language = string_at(c.at("language"), "/config/language");
      if (c.contains("oodThreshold")) {
        if (!c.at("oodThreshold").is_number()) fail("/config/oodThreshold", "expected a number");
        b.config.ood_threshold = c.at("oodThreshold").get<double>();
        if (b.config.ood_threshold < 0.0 || b.config.ood_threshold > 1.0)
          fail("/config/oodThreshold", "threshold must lie in [0, 1]");
      }
      if (c.contains("seed")) {
        if (!c.at("seed").is_number_unsigned()) fail("/config/seed", "expected a non-negative integer");
        b.config.seed = c.at("seed").get<std::uint64_t>();
      }
      if (c.contains("nrgUrl")) b.config.nrg_url = string_at(c.at("nrgUrl"), "/config/nrgUrl");
      if (c.contains("nrgTimeoutMs")) {
        if (!c.at("nrgTimeoutMs").is_number_integer()) fail("/config/nrgTimeoutMs", "expected an integer");
        b.config.nrg_timeout_ms = c.at("nrgTimeoutMs").get<int>();
      }
    }
    return b;
  }

 private:
  std::string_view text_;
  const JsonLocator& loc_;
};

json node_to_json(const Node& n) {
  json j = {{"id", n.id}, {"kind", std::string(to_string(n.kind))}};
  std::visit(
      [&](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, SpeechPayload>) {
          json rs = json::array();
          for (const auto& r : p.responses) rs.push_back(r.source());
          j["responses"] = rs;
          if (p.nrg) {
            json nj = {{"act", std::string(to_string(p.nrg->act))}, {"awaitReply", p.nrg->await_reply}};
            if (p.nrg->grounding) nj["grounding"] = p.nrg->grounding->source();
            j["nrg"] = nj;
          }
        } else if constexpr (std::is_same_v<T, UserInputPayload>) {
          if (p.local_ood_action) j["oodAction"] = *p.local_ood_action;
        } else if constexpr (std::is_same_v<T, IntentPayload>) {
          json ex = json::array();
          for (const auto& e : p.examples) ex.push_back(e.source);
          j["examples"] = ex;
        } else if constexpr (std::is_same_v<T, FunctionPayload>) {
          json as = json::array();
          for (const auto& a : p.assignments) as.push_back({{"target", a.target.str()}, {"expr", a.expr.source()}});
          json ts = json::array();
          for (const auto& t : p.transitions) ts.push_back({{"guard", t.guard.source()}, {"out", t.out_key}});
          j["assignments"] = as;
          j["transitions"] = ts;
        } else if constexpr (std::is_same_v<T, ActionPayload>) {
          j["situation"] = std::string(to_string(p.situation));
        } else if constexpr (std::is_same_v<T, SubDialogueRefPayload>) {
          j["dialogue"] = p.dialogue_id;
        }
      },
      n.payload);
  return j;
}

}  // namespace

DialogueBundle parse_bundle(std::string_view text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    std::size_t offset = e.byte > 0 ? e.byte - 1 : 0;
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i < offset && i < text.size(); ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    std::string msg = e.what();
    auto pos = msg.find("syntax error");
    throw BundleParseError(line, col, "", pos == std::string::npos ? msg : msg.substr(pos));
  }
  JsonLocator locator(text);
  return Reader(text, locator).bundle_at(root);
}

DialogueBundle load_bundle_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::ios_base::failure("cannot read bundle file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_bundle(ss.str());
}

std::string serialize_bundle(const DialogueBundle& b) {
  json root;
  root["main"] = b.main_dialogue_id;
  json ds = json::array();
  for (const auto& d : b.sub_dialogues) {
    json dj = {{"id", d.id}, {"name", d.name}, {"labels", d.labels}, {"entities", d.entity_tags}};
    if (d.starting_condition) dj["startingCondition"] = d.starting_condition->source();
    json attrs = json::array();
    for (const auto& a : d.init_attributes)
      attrs.push_back({{"name", a.name}, {"scope", std::string(to_string(a.scope))}, {"default", to_json(a.default_value)}});
    dj["attributes"] = attrs;
    json nodes = json::array();
    for (const auto& n : d.nodes) nodes.push_back(node_to_json(n));
    dj["nodes"] = nodes;
    json edges = json::array();
    for (const auto& e : d.edges) edges.push_back({{"from", e.from}, {"out", e.out_key}, {"to", e.to}});
    dj["edges"] = edges;
    ds.push_back(dj);
  }
  root["dialogues"] = ds;
  json ents = json::array();
  for (const auto& r : b.entity_rules)
    ents.push_back({{"type", r.type_name}, {"patterns", r.patterns}, {"normalizer", std::string(to_string(r.normalizer))}});
  root["entities"] = ents;
  json sk = json::array();
  for (const auto& r : b.skimmer_rules) {
    json v;
    if (const auto* lit = std::get_if<Value>(&r.value)) {
      v = to_json(*lit);
    } else {
      const auto& g = std::get<CaptureRef>(r.value).group;
      v = std::holds_alternative<int>(g) ? json{{"group", std::get<int>(g)}} : json{{"group", std::get<std::string>(g)}};
    }
    sk.push_back({{"patterns", r.patterns}, {"attribute", r.attribute.str()}, {"value", v}});
  }
  root["skimmer"] = sk;
  root["selectorPool"] = b.selector_pool;
  root["config"] = {{"appId", b.config.app_id},
                    {"language", b.config.language},
                    {"oodThreshold", b.config.ood_threshold},
                    {"seed", b.config.seed},
                    {"nrgUrl", b.config.nrg_url},
                    {"nrgTimeoutMs", b.config.nrg_timeout_ms}};
  return root.dump(2) + "\n";
}

std::string bundle_fingerprint(const DialogueBundle& bundle) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(serialize_bundle(bundle))));
  return buf;
}

}  // namespace flowkit
