#include "mtie/templates.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "mtie/error.hpp"
#include "mtie/text.hpp"

namespace mtie {

namespace detail {
const std::vector<std::string>& builtin_template_documents();
}

namespace {

constexpr std::string_view kOpen = "{{";
constexpr std::string_view kClose = "}}";

bool valid_slot_name(std::string_view name) {
  if (name.empty()) return false;
  return std::all_of(name.begin(), name.end(), [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_';
  });
}

// Walks the body calling on_literal / on_slot for each segment.
template <typename Literal, typename Slot>
void scan_body(std::string_view body, Literal&& on_literal, Slot&& on_slot) {
  std::size_t i = 0;
  std::string literal;
  while (i < body.size()) {
    if (body[i] == '\\' && body.substr(i + 1, kOpen.size()) == kOpen) {
      literal += kOpen;
      i += 1 + kOpen.size();
      continue;
    }
    if (body.substr(i, kOpen.size()) == kOpen) {
      auto close = body.find(kClose, i + kOpen.size());
      if (close == std::string_view::npos) {
        throw Error(ErrorCode::InvalidTemplate, "unterminated slot marker at offset " + std::to_string(i));
      }
      auto name = body.substr(i + kOpen.size(), close - i - kOpen.size());
      if (!valid_slot_name(name)) {
        throw Error(ErrorCode::InvalidTemplate, "bad slot name '" + std::string(name) + "'");
      }
      on_literal(literal);
      literal.clear();
      on_slot(std::string(name));
      i = close + kClose.size();
      continue;
    }
    literal.push_back(body[i++]);
  }
  on_literal(literal);
}

Stage parse_stage(const std::string& s) {
  if (s == "I" || s == "1") return Stage::I;
  if (s == "II" || s == "2") return Stage::II;
  throw Error(ErrorCode::InvalidTemplate, "unknown stage '" + s + "'");
}

PromptTemplate template_from_yaml(const YAML::Node& node) {
  static const std::set<std::string> kFields = {"id", "task", "stage", "language", "answer_form", "slots", "body"};
  if (!node.IsMap()) throw Error(ErrorCode::InvalidTemplate, "template entry must be a mapping");
  for (const auto& kv : node) {
    auto key = kv.first.as<std::string>();
    if (!kFields.count(key)) throw Error(ErrorCode::InvalidTemplate, "unknown template field '" + key + "'");
  }
  for (const auto& f : kFields) {
    if (!node[f]) throw Error(ErrorCode::InvalidTemplate, "template is missing field '" + f + "'");
  }
  PromptTemplate tpl;
  try {
    tpl.id = node["id"].as<std::string>();
    tpl.task = parse_task(node["task"].as<std::string>());
    tpl.stage = parse_stage(node["stage"].as<std::string>());
    tpl.language = parse_language(node["language"].as<std::string>());
    tpl.expected_answer_form = parse_answer_form(node["answer_form"].as<std::string>());
    tpl.slots = node["slots"].as<std::vector<std::string>>();
    tpl.body = node["body"].as<std::string>();
  } catch (const YAML::Exception& e) {
    throw Error(ErrorCode::InvalidTemplate, std::string("bad template field: ") + e.what());
  } catch (const Error& e) {
    throw Error(ErrorCode::InvalidTemplate, e.detail());
  }
  return tpl;
}

void add_document(TemplateRegistry& registry, const std::string& document) {
  YAML::Node root;
  try {
    root = YAML::Load(document);
  } catch (const YAML::Exception& e) {
    throw Error(ErrorCode::InvalidTemplate, std::string("template document is not valid YAML: ") + e.what());
  }
  if (root["templates"]) {
    if (root.size() != 1 || !root["templates"].IsSequence()) {
      throw Error(ErrorCode::InvalidTemplate, "'templates' must be the only key and hold a list");
    }
    for (const auto& entry : root["templates"]) registry.add(template_from_yaml(entry));
  } else {
    registry.add(template_from_yaml(root));
  }
}

RenderedPrompt render(const PromptTemplate& tpl, const std::map<std::string, std::string>& bindings) {
  RenderedPrompt out;
  out.template_id = tpl.id;
  out.text = fill_slots(tpl.body, bindings);
  out.expected_answer_form = tpl.expected_answer_form;
  out.context.task = tpl.task;
  out.context.stage = tpl.stage;
  if (text::trim(out.text).empty()) {
    throw Error(ErrorCode::InvalidTemplate, "template '" + tpl.id + "' rendered to empty text");
  }
  return out;
}

void require_stage(const PromptTemplate& tpl, Stage stage) {
  if (tpl.stage != stage) {
    throw Error(ErrorCode::TaskMismatch, "template '" + tpl.id + "' is a stage " +
                                             std::string(to_string(tpl.stage)) + " template");
  }
}

std::string single_quoted(std::string_view s) { return "'" + std::string(s) + "'"; }

}  // namespace

std::string_view to_string(Stage stage) { return stage == Stage::I ? "I" : "II"; }

std::string_view to_string(AnswerForm form) {
  switch (form) {
    case AnswerForm::TypeTuple: return "TypeTuple";
    case AnswerForm::TypeList: return "TypeList";
    case AnswerForm::PairTable: return "PairTable";
    case AnswerForm::EntityList: return "EntityList";
    case AnswerForm::RoleTable: return "RoleTable";
    case AnswerForm::EventTypeLine: return "EventTypeLine";
  }
  return "?";
}

AnswerForm parse_answer_form(std::string_view name) {
  for (auto f : {AnswerForm::TypeTuple, AnswerForm::TypeList, AnswerForm::PairTable, AnswerForm::EntityList,
                 AnswerForm::RoleTable, AnswerForm::EventTypeLine}) {
    if (to_string(f) == name) return f;
  }
  throw Error(ErrorCode::InvalidTemplate, "unknown answer form '" + std::string(name) + "'");
}

const TemplateRegistry& TemplateRegistry::builtin() {
  static const TemplateRegistry kRegistry = from_documents(detail::builtin_template_documents());
  return kRegistry;
}

TemplateRegistry TemplateRegistry::from_documents(const std::vector<std::string>& documents) {
  TemplateRegistry registry;
  for (const auto& doc : documents) add_document(registry, doc);
  return registry;
}

TemplateRegistry TemplateRegistry::load_directory(const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> files;
  std::error_code ec;
  for (const auto& entry : std::filesystem::directory_iterator(dir, ec)) {
    if (entry.is_regular_file() && entry.path().extension() == ".yaml") files.push_back(entry.path());
  }
  if (ec) throw Error(ErrorCode::InvalidTemplate, "cannot read template directory " + dir.string());
  std::sort(files.begin(), files.end());
  std::vector<std::string> docs;
  for (const auto& f : files) {
    std::ifstream in(f);
    std::stringstream ss;
    ss << in.rdbuf();
    docs.push_back(ss.str());
  }
  return from_documents(docs);
}

void TemplateRegistry::add(PromptTemplate tpl) {
  if (tpl.id.empty()) throw Error(ErrorCode::InvalidTemplate, "template id is empty");
  if (templates_.count(tpl.id)) throw Error(ErrorCode::InvalidTemplate, "duplicate template id '" + tpl.id + "'");
  std::set<std::string> declared(tpl.slots.begin(), tpl.slots.end());
  if (declared.size() != tpl.slots.size()) {
    throw Error(ErrorCode::InvalidTemplate, "template '" + tpl.id + "' declares a slot twice");
  }
  for (const auto& used : body_slots(tpl.body)) {
    if (!declared.count(used)) {
      throw Error(ErrorCode::InvalidTemplate, "template '" + tpl.id + "' uses undeclared slot '" + used + "'");
    }
  }
  if (tpl.stage == Stage::I && (!declared.count("sentence") || !declared.count("types"))) {
    throw Error(ErrorCode::InvalidTemplate, "stage I template '" + tpl.id + "' must declare 'sentence' and 'types'");
  }
  if (tpl.stage == Stage::II) {
    if (declared.count("sentence")) {
      throw Error(ErrorCode::InvalidTemplate, "stage II template '" + tpl.id + "' must not declare 'sentence'");
    }
    if (!declared.count("type")) {
      throw Error(ErrorCode::InvalidTemplate, "stage II template '" + tpl.id + "' must declare 'type'");
    }
  }
  auto id = tpl.id;
  templates_.emplace(std::move(id), std::move(tpl));
}

const PromptTemplate* TemplateRegistry::find(std::string_view id) const {
  auto it = templates_.find(id);
  return it == templates_.end() ? nullptr : &it->second;
}

const PromptTemplate& TemplateRegistry::get(std::string_view id) const {
  if (const auto* tpl = find(id)) return *tpl;
  throw Error(ErrorCode::UnresolvedTemplate, "no template with id '" + std::string(id) + "'");
}

const PromptTemplate& TemplateRegistry::stage1(Task task, Language language) const {
  return get(text::ascii_lower(to_string(task)) + ".stage1." + text::ascii_lower(to_string(language)));
}

const PromptTemplate& TemplateRegistry::stage2(Task task, Language language) const {
  return get(text::ascii_lower(to_string(task)) + ".stage2." + text::ascii_lower(to_string(language)));
}

std::string TemplateRegistry::attribute_template_id(Language language) {
  return "re.attribute." + text::ascii_lower(to_string(language));
}

std::vector<std::string> TemplateRegistry::ids() const {
  std::vector<std::string> out;
  for (const auto& [id, _] : templates_) out.push_back(id);
  return out;
}

std::vector<std::string> body_slots(std::string_view body) {
  std::vector<std::string> names;
  scan_body(
      body, [](const std::string&) {},
      [&](std::string name) {
        if (std::find(names.begin(), names.end(), name) == names.end()) names.push_back(std::move(name));
      });
  return names;
}

std::string fill_slots(std::string_view body, const std::map<std::string, std::string>& bindings) {
  std::string out;
  scan_body(
      body, [&](const std::string& lit) { out += lit; },
      [&](const std::string& name) {
        auto it = bindings.find(name);
        if (it == bindings.end()) throw Error(ErrorCode::SlotMissing, "no binding for slot '" + name + "'");
        out += it->second;
      });
  return out;
}

RenderedPrompt render_stage1(const PromptTemplate& tpl, const TaskSchema& schema, std::string_view sentence) {
  require_stage(tpl, Stage::I);
  if (tpl.task != schema.task) {
    throw Error(ErrorCode::TaskMismatch, "template '" + tpl.id + "' is for " + std::string(to_string(tpl.task)) +
                                             " but the schema is " + std::string(to_string(schema.task)));
  }
  if (text::trim(sentence).empty()) throw Error(ErrorCode::SlotMissing, "sentence is empty");
  auto inventory = schema.type_names();
  auto prompt = render(tpl, {{"sentence", std::string(sentence)}, {"types", format_type_list(inventory)}});
  prompt.context.inventory = std::move(inventory);
  return prompt;
}

RenderedPrompt render_stage2(const PromptTemplate& tpl, std::string_view element_type,
                             const std::map<std::string, std::string>& bindings) {
  require_stage(tpl, Stage::II);
  auto all = bindings;
  all["type"] = std::string(element_type);
  for (const auto& slot : tpl.slots) {
    if (!all.count(slot)) throw Error(ErrorCode::SlotMissing, "template '" + tpl.id + "' needs slot '" + slot + "'");
  }
  auto prompt = render(tpl, all);
  prompt.context.element_type = std::string(element_type);
  return prompt;
}

RenderedPrompt render_relation_question(const PromptTemplate& tpl, const RelationType& relation) {
  std::pair<std::string, std::string> header{relation.subject_type, relation.object_type};
  auto prompt = render_stage2(tpl, relation.name, {{"header", format_header(header)}});
  prompt.context.header = std::move(header);
  return prompt;
}

RenderedPrompt render_entity_question(const PromptTemplate& tpl, std::string_view entity_type) {
  return render_stage2(tpl, entity_type, {});
}

RenderedPrompt render_role_question(const PromptTemplate& tpl, const EventTypeSpec& event) {
  auto prompt = render_stage2(tpl, event.name, {{"roles", format_type_list(event.roles)}});
  prompt.context.roles = event.roles;
  return prompt;
}

RenderedPrompt render_attribute_question(const PromptTemplate& tpl, const RelationType& relation,
                                         const AttributeSpec& attribute,
                                         const std::vector<std::pair<std::string, std::string>>& groups) {
  auto prompt = render_stage2(tpl, relation.name,
                              {{"header", format_header({relation.subject_type, relation.object_type})},
                               {"groups", format_groups(groups)},
                               {"attribute", attribute.attribute_name}});
  prompt.context.header = {std::string(kGroupColumn), attribute.attribute_name};
  prompt.context.attribute = attribute.attribute_name;
  prompt.context.groups = groups;
  return prompt;
}

std::string format_header(const std::pair<std::string, std::string>& header) {
  return "(" + single_quoted(header.first) + ", " + single_quoted(header.second) + ")";
}

std::string format_groups(const std::vector<std::pair<std::string, std::string>>& groups) {
  std::string out;
  for (std::size_t i = 0; i < groups.size(); ++i) {
    if (i) out += "; ";
    out += std::to_string(i + 1) + ". " + format_header(groups[i]);
  }
  return out;
}

}  // namespace mtie
