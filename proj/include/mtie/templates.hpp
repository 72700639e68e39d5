#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "mtie/schema.hpp"
#include "mtie/types.hpp"

namespace mtie {

enum class Stage { I, II };

enum class AnswerForm { TypeTuple, TypeList, PairTable, EntityList, RoleTable, EventTypeLine };

std::string_view to_string(Stage stage);
std::string_view to_string(AnswerForm form);
AnswerForm parse_answer_form(std::string_view name);

// Slots are written {{name}} in a template body. A literal "{{" is written
// "\{{". No other escapes exist; slot values are inserted verbatim and never
// rescanned.
struct PromptTemplate {
  std::string id;
  Task task = Task::RE;
  Stage stage = Stage::I;
  Language language = Language::EN;
  std::string body;
  AnswerForm expected_answer_form = AnswerForm::TypeTuple;
  std::vector<std::string> slots;
};

// What a question asks, in structured form. Rendering fills it alongside the
// text so that parsers and the gold oracle never have to read prompt prose.
struct QuestionContext {
  Task task = Task::RE;
  Stage stage = Stage::I;
  std::vector<std::string> inventory;            // stage I
  std::string element_type;                      // stage II
  std::pair<std::string, std::string> header;    // pair tables
  std::vector<std::string> roles;                // role tables
  std::string attribute;                         // complex-object follow-ups
  std::vector<std::pair<std::string, std::string>> groups;
};

struct RenderedPrompt {
  std::string template_id;
  std::string text;
  AnswerForm expected_answer_form = AnswerForm::TypeTuple;
  QuestionContext context;
};

// Column label for the group index in complex-object follow-up tables.
inline constexpr std::string_view kGroupColumn = "group";

class TemplateRegistry {
 public:
  // Templates compiled into the library (data/templates).
  static const TemplateRegistry& builtin();

  static TemplateRegistry from_documents(const std::vector<std::string>& documents);
  static TemplateRegistry load_directory(const std::filesystem::path& dir);

  // Validates slot declarations; throws InvalidTemplate.
  void add(PromptTemplate tpl);

  const PromptTemplate* find(std::string_view id) const;
  // Throws UnresolvedTemplate.
  const PromptTemplate& get(std::string_view id) const;

  // The conventional "<task>.stage1.<lang>" / "<task>.stage2.<lang>" ids.
  const PromptTemplate& stage1(Task task, Language language) const;
  const PromptTemplate& stage2(Task task, Language language) const;
  // Default follow-up template for complex-object attributes.
  static std::string attribute_template_id(Language language);

  std::vector<std::string> ids() const;
  std::size_t size() const { return templates_.size(); }

 private:
  std::map<std::string, PromptTemplate, std::less<>> templates_;
};

// Names of the {{slots}} appearing in `body`, in order of first appearance.
std::vector<std::string> body_slots(std::string_view body);

// Substitutes every slot; throws SlotMissing when a slot has no binding.
std::string fill_slots(std::string_view body, const std::map<std::string, std::string>& bindings);

RenderedPrompt render_stage1(const PromptTemplate& tpl, const TaskSchema& schema, std::string_view sentence);

// `element_type` binds the {{type}} slot; `bindings` covers the rest.
RenderedPrompt render_stage2(const PromptTemplate& tpl, std::string_view element_type,
                             const std::map<std::string, std::string>& bindings);

RenderedPrompt render_relation_question(const PromptTemplate& tpl, const RelationType& relation);
RenderedPrompt render_entity_question(const PromptTemplate& tpl, std::string_view entity_type);
RenderedPrompt render_role_question(const PromptTemplate& tpl, const EventTypeSpec& event);
RenderedPrompt render_attribute_question(const PromptTemplate& tpl, const RelationType& relation,
                                         const AttributeSpec& attribute,
                                         const std::vector<std::pair<std::string, std::string>>& groups);

// ('a', 'b')
std::string format_header(const std::pair<std::string, std::string>& header);
// 1. ('s1', 'o1'); 2. ('s2', 'o2')
std::string format_groups(const std::vector<std::pair<std::string, std::string>>& groups);

}  // namespace mtie
