#include "flowkit/dialogue.hpp"

#include <cctype>

namespace flowkit {

namespace {

constexpr std::pair<NodeKind, std::string_view> kKindNames[] = {
    {NodeKind::Enter, "enter"},           {NodeKind::Speech, "speech"},
    {NodeKind::UserInput, "userInput"},   {NodeKind::Intent, "intent"},
    {NodeKind::GlobalIntent, "globalIntent"}, {NodeKind::Function, "function"},
    {NodeKind::Action, "action"},         {NodeKind::GlobalAction, "globalAction"},
    {NodeKind::SubDialogueRef, "subDialogue"}, {NodeKind::Exit, "exit"},
};

bool is_type_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-'; }

}  // namespace

std::string_view to_string(NodeKind k) {
  for (auto [kind, name] : kKindNames)
    if (kind == k) return name;
  return "enter";
}

std::optional<NodeKind> parse_node_kind(std::string_view s) {
  for (auto [kind, name] : kKindNames)
    if (name == s) return kind;
  return std::nullopt;
}

std::string_view to_string(Situation s) {
  switch (s) {
    case Situation::Silence: return "silence";
    case Situation::Error: return "error";
    case Situation::OutOfDomain: return "outOfDomain";
  }
  return "outOfDomain";
}

std::optional<Situation> parse_situation(std::string_view s) {
  if (s == "silence") return Situation::Silence;
  if (s == "error") return Situation::Error;
  if (s == "outOfDomain") return Situation::OutOfDomain;
  return std::nullopt;
}

std::string_view to_string(DialogueAct a) {
  switch (a) {
    case DialogueAct::Statement: return "statement";
    case DialogueAct::Question: return "question";
    case DialogueAct::StatementThenQuestion: return "statementThenQuestion";
  }
  return "statement";
}

std::optional<DialogueAct> parse_dialogue_act(std::string_view s) {
  if (s == "statement") return DialogueAct::Statement;
  if (s == "question") return DialogueAct::Question;
  if (s == "statementThenQuestion") return DialogueAct::StatementThenQuestion;
  return std::nullopt;
}

TemplateString::TemplateString(std::string source) : source_(std::move(source)) {
  std::string literal;
  for (std::size_t i = 0; i < source_.size(); ++i) {
    char c = source_[i];
    if (c == '{' && i + 1 < source_.size() && source_[i + 1] == '{') {
      literal += '{';
      ++i;
    } else if (c == '}' && i + 1 < source_.size() && source_[i + 1] == '}') {
      literal += '}';
      ++i;
    } else if (c == '{') {
      auto close = source_.find('}', i);
      if (close == std::string::npos) throw std::invalid_argument("unterminated slot in \"" + source_ + "\"");
      auto ref = parse_attribute_ref(std::string_view(source_).substr(i + 1, close - i - 1));
      if (!ref) throw std::invalid_argument("malformed slot '" + source_.substr(i, close - i + 1) + "'");
      pieces_.push_back({std::move(literal), *ref});
      literal.clear();
      i = close;
    } else {
      literal += c;
    }
  }
  if (!literal.empty() || pieces_.empty()) pieces_.push_back({std::move(literal), std::nullopt});
}

std::vector<AttributeRef> TemplateString::slots() const {
  std::vector<AttributeRef> out;
  for (const auto& p : pieces_)
    if (p.slot) out.push_back(*p.slot);
  return out;
}

std::string TemplateString::render(const AttributeView& attrs) const {
  std::string out;
  for (const auto& p : pieces_) {
    out += p.literal;
    if (p.slot) out += attrs.get(*p.slot).to_display();
  }
  return out;
}

AnnotatedExample parse_example(std::string_view source) {
  AnnotatedExample ex;
  ex.source = std::string(source);
  for (std::size_t i = 0; i < source.size(); ++i) {
    char c = source[i];
    if (c == ']') throw MarkupError(i, "unmatched ']'");
    if (c != '[') {
      ex.plain += c;
      ex.masked += c;
      continue;
    }
    auto close = source.find(']', i + 1);
    if (close == std::string_view::npos) throw MarkupError(i, "unterminated '['");
    auto nested = source.find('[', i + 1);
    if (nested < close) throw MarkupError(nested, "nested '['");
    if (close + 1 >= source.size() || source[close + 1] != '{')
      throw MarkupError(close, "expected '{type}' after ']'");
    auto type_end = source.find('}', close + 2);
    if (type_end == std::string_view::npos) throw MarkupError(close + 1, "unterminated '{'");
    std::string type(source.substr(close + 2, type_end - close - 2));
    if (type.empty()) throw MarkupError(close + 1, "empty entity type");
    for (char t : type)
      if (!is_type_char(t)) throw MarkupError(close + 2, "invalid entity type '" + type + "'");
    std::string surface(source.substr(i + 1, close - i - 1));
    if (surface.empty()) throw MarkupError(i, "empty entity text");
    EntityMarkup m;
    m.start = ex.plain.size();
    ex.plain += surface;
    m.end = ex.plain.size();
    m.surface = surface;
    m.type_name = type;
    ex.masked += "{" + type + "}";
    ex.entities.push_back(std::move(m));
    i = type_end;
  }
  return ex;
}

bool payload_matches(const Node& n) {
  switch (n.kind) {
    case NodeKind::Enter: return std::holds_alternative<EnterPayload>(n.payload);
    case NodeKind::Exit: return std::holds_alternative<ExitPayload>(n.payload);
    case NodeKind::Speech: return std::holds_alternative<SpeechPayload>(n.payload);
    case NodeKind::UserInput: return std::holds_alternative<UserInputPayload>(n.payload);
    case NodeKind::Intent:
      return std::holds_alternative<IntentPayload>(n.payload) && !std::get<IntentPayload>(n.payload).is_global;
    case NodeKind::GlobalIntent:
      return std::holds_alternative<IntentPayload>(n.payload) && std::get<IntentPayload>(n.payload).is_global;
    case NodeKind::Function: return std::holds_alternative<FunctionPayload>(n.payload);
    case NodeKind::Action:
      return std::holds_alternative<ActionPayload>(n.payload) && !std::get<ActionPayload>(n.payload).is_global;
    case NodeKind::GlobalAction:
      return std::holds_alternative<ActionPayload>(n.payload) && std::get<ActionPayload>(n.payload).is_global;
    case NodeKind::SubDialogueRef: return std::holds_alternative<SubDialogueRefPayload>(n.payload);
  }
  return false;
}

const Node* SubDialogue::find(std::string_view node_id) const {
  for (const auto& n : nodes)
    if (n.id == node_id) return &n;
  return nullptr;
}

const Node* SubDialogue::enter() const {
  for (const auto& n : nodes)
    if (n.kind == NodeKind::Enter) return &n;
  return nullptr;
}

std::vector<const Edge*> SubDialogue::out_edges(std::string_view node_id) const {
  std::vector<const Edge*> out;
  for (const auto& e : edges)
    if (e.from == node_id) out.push_back(&e);
  return out;
}

const Edge* SubDialogue::out_edge(std::string_view node_id) const {
  for (const auto& e : edges)
    if (e.from == node_id) return &e;
  return nullptr;
}

const Edge* SubDialogue::out_edge(std::string_view node_id, std::string_view out_key) const {
  for (const auto& e : edges)
    if (e.from == node_id && e.out_key == out_key) return &e;
  return nullptr;
}

std::vector<const Node*> SubDialogue::local_intents(std::string_view user_input_id) const {
  std::vector<const Node*> out;
  for (const auto* e : out_edges(user_input_id)) {
    const Node* n = find(e->to);
    if (n && n->kind == NodeKind::Intent) out.push_back(n);
  }
  return out;
}

std::vector<const Node*> SubDialogue::global_intents() const {
  std::vector<const Node*> out;
  for (const auto& n : nodes)
    if (n.kind == NodeKind::GlobalIntent) out.push_back(&n);
  return out;
}

std::vector<const Node*> SubDialogue::user_inputs() const {
  std::vector<const Node*> out;
  for (const auto& n : nodes)
    if (n.kind == NodeKind::UserInput) out.push_back(&n);
  return out;
}

const Node* SubDialogue::local_action(std::string_view user_input_id, Situation s) const {
  const Node* input = find(user_input_id);
  if (!input || input->kind != NodeKind::UserInput) return nullptr;
  if (s == Situation::OutOfDomain) {
    if (const auto& explicit_id = input->as<UserInputPayload>().local_ood_action) return find(*explicit_id);
  }
  for (const auto* e : out_edges(user_input_id)) {
    const Node* n = find(e->to);
    if (n && n->kind == NodeKind::Action && n->as<ActionPayload>().situation == s) return n;
  }
  return nullptr;
}

const Node* SubDialogue::global_action(Situation s) const {
  for (const auto& n : nodes)
    if (n.kind == NodeKind::GlobalAction && n.as<ActionPayload>().situation == s) return &n;
  return nullptr;
}

const Node* SubDialogue::any_action(Situation s) const {
  for (const auto& n : nodes)
    if ((n.kind == NodeKind::Action || n.kind == NodeKind::GlobalAction) && n.as<ActionPayload>().situation == s)
      return &n;
  return nullptr;
}

const SubDialogue* DialogueBundle::find(std::string_view dialogue_id) const {
  for (const auto& d : sub_dialogues)
    if (d.id == dialogue_id) return &d;
  return nullptr;
}

const SubDialogue& DialogueBundle::main() const {
  const SubDialogue* d = find(main_dialogue_id);
  if (!d) throw std::logic_error("main dialogue '" + main_dialogue_id + "' does not exist");
  return *d;
}

std::map<AttributeRef, AttributeDecl> DialogueBundle::attribute_catalog() const {
  std::map<AttributeRef, AttributeDecl> out;
  for (const auto& d : sub_dialogues)
    for (const auto& a : d.init_attributes) out.emplace(a.ref(), a);
  return out;
}

}  // namespace flowkit
