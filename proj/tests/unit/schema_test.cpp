#include <gtest/gtest.h>

#include "mtie/error.hpp"
#include "mtie/schema.hpp"
#include "mtie/templates.hpp"
#include "test_support.hpp"

namespace mtie {
namespace {

using testing::shipped_schema;

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no mtie::Error thrown";
  return ErrorCode::ConfigError;
}

std::string invalid_rule(const std::string& doc) {
  try {
    parse_schema(doc);
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InvalidSchema) << e.what();
    return e.what();
  }
  ADD_FAILURE() << "schema accepted";
  return {};
}

TEST(ShippedSchemas, Nyt11HasTwelveRelations) {
  const auto& s = shipped_schema("nyt11-hrl");
  EXPECT_EQ(s.task, Task::RE);
  EXPECT_EQ(s.relations.size(), 12u);
  EXPECT_EQ(s.relations.front().name, "location-located_in");
  EXPECT_EQ(s.relations.back().name, "person-place_of_birth");
}

TEST(ShippedSchemas, ConllppHasFourTypes) {
  const auto& s = shipped_schema("conllpp");
  EXPECT_EQ(s.task, Task::NER);
  ASSERT_TRUE(s.entities.has_value());
  EXPECT_EQ(s.entities->types, (std::vector<std::string>{"LOC", "MISC", "ORG", "PER"}));
}

TEST(ShippedSchemas, AllLoadAndValidate) {
  for (const auto* name : {"nyt11-hrl", "duie2", "conllpp", "msra", "duee1", "ace05"}) {
    SCOPED_TRACE(name);
    const auto& s = shipped_schema(name);
    EXPECT_NO_THROW(validate_schema(s, TemplateRegistry::builtin()));
  }
  EXPECT_EQ(shipped_schema("ace05").events.size(), 8u);
  EXPECT_EQ(shipped_schema("duee1").events.size(), 65u);
  EXPECT_EQ(shipped_schema("msra").language, Language::ZH);
}

TEST(ShippedSchemas, DuieChainsResolve) {
  const auto& s = shipped_schema("duie2");
  std::size_t complex = 0;
  for (const auto& r : s.relations) {
    if (!r.has_complex_object()) continue;
    ++complex;
    for (const auto& a : r.object_chain) EXPECT_NE(TemplateRegistry::builtin().find(a.question_template_id), nullptr);
  }
  EXPECT_GT(complex, 0u);
}

TEST(ShippedSchemas, RoundTripThroughSerialization) {
  for (const auto* name : {"nyt11-hrl", "duie2", "conllpp", "msra", "duee1", "ace05"}) {
    SCOPED_TRACE(name);
    const auto& s = shipped_schema(name);
    EXPECT_EQ(parse_schema(serialize_schema(s)), s);
  }
}

TEST(Lookup, RelationByCanonicalName) {
  const auto& s = shipped_schema("nyt11-hrl");
  const auto& r = lookup_relation(s, "person-nationality");
  EXPECT_EQ(r.subject_type, "person");
  EXPECT_EQ(r.object_type, "country");
  EXPECT_EQ(&lookup_relation(s, "Person-Nationality"), &r);
  EXPECT_EQ(&lookup_relation(s, " 'person-nationality' "), &r);
  EXPECT_EQ(code_of([&] { lookup_relation(s, "not-a-relation"); }), ErrorCode::UnknownType);
  EXPECT_EQ(code_of([&] { lookup_relation(s, "person-place-lived"); }), ErrorCode::UnknownType);
}

TEST(Lookup, TotalOverCanonicalizedInventory) {
  const auto& s = shipped_schema("nyt11-hrl");
  for (const auto& r : s.relations) {
    std::string upper = r.name;
    for (auto& c : upper) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    EXPECT_EQ(lookup_relation(s, upper).name, r.name);
    EXPECT_EQ(lookup_relation(s, "  \"" + r.name + "\"").name, r.name);
  }
}

TEST(Lookup, RelationOnNonReSchemaIsTaskMismatch) {
  EXPECT_EQ(code_of([] { lookup_relation(shipped_schema("conllpp"), "LOC"); }), ErrorCode::TaskMismatch);
}

TEST(Lookup, ResolveLabelUsesAliasesAndInverses) {
  const auto& s = shipped_schema("nyt11-hrl");
  EXPECT_EQ(resolve_label(s, "administration_division-country"), "administrative_division-country");
  EXPECT_EQ(resolve_label(s, "location-contains"), "location-contains");
  EXPECT_FALSE(resolve_label(s, "nope").has_value());
  const auto& ace = shipped_schema("ace05");
  const auto& die = lookup_event_type(ace, "Life:Die");
  EXPECT_EQ(resolve_role(ace, die, "Time-Within"), "Time");
}

TEST(LoadSchema, DuplicateRelationNames) {
  auto what = invalid_rule(R"(
name: dup
task: RE
language: EN
relations:
  - {name: a-b, subject_type: x, object_type: y}
  - {name: a-b, subject_type: x, object_type: y}
)");
  EXPECT_NE(what.find("relation-name-unique"), std::string::npos) << what;
}

TEST(LoadSchema, InventoryMustMatchTask) {
  auto what = invalid_rule(R"(
name: wrong
task: NER
language: EN
relations:
  - {name: a-b, subject_type: x, object_type: y}
)");
  EXPECT_NE(what.find("inventory-matches-task"), std::string::npos) << what;
}

TEST(LoadSchema, SkipStage1OnlyForNer) {
  auto what = invalid_rule(R"(
name: wrong
task: RE
language: EN
skip_stage1: true
relations:
  - {name: a-b, subject_type: x, object_type: y}
)");
  EXPECT_NE(what.find("skip-stage1-ner-only"), std::string::npos) << what;
}

TEST(LoadSchema, EmptyAndDuplicateEntityTypes) {
  EXPECT_NE(invalid_rule("name: n\ntask: NER\nlanguage: EN\nentities: []\n").find("entity-types-nonempty"),
            std::string::npos);
  EXPECT_NE(invalid_rule("name: n\ntask: NER\nlanguage: EN\nentities: [LOC, LOC]\n").find("entity-types-unique"),
            std::string::npos);
}

TEST(LoadSchema, EventRolesRules) {
  EXPECT_NE(invalid_rule("name: e\ntask: EE\nlanguage: EN\nevents:\n  - {name: A, roles: []}\n")
                .find("event-roles-nonempty"),
            std::string::npos);
  EXPECT_NE(invalid_rule("name: e\ntask: EE\nlanguage: EN\nevents:\n  - {name: A, roles: [x, x]}\n")
                .find("event-roles-unique"),
            std::string::npos);
}

TEST(LoadSchema, ChainAttributesDistinct) {
  auto what = invalid_rule(R"(
name: c
task: RE
language: ZH
relations:
  - name: r
    subject_type: a
    object_type: b
    object_chain: [{attribute: inWork}, {attribute: inWork}]
)");
  EXPECT_NE(what.find("chain-attribute-distinct"), std::string::npos) << what;
}

TEST(LoadSchema, IdentifierCharset) {
  auto what = invalid_rule("name: n\ntask: NER\nlanguage: EN\nentities: [\"A,B\"]\n");
  EXPECT_NE(what.find("identifier-charset"), std::string::npos) << what;
}

TEST(LoadSchema, InverseTargetMustExist) {
  auto what = invalid_rule(R"(
name: c
task: RE
language: EN
relations:
  - {name: r, subject_type: a, object_type: b}
inverse_relations:
  - [r-inv, missing]
)");
  EXPECT_NE(what.find("inverse-target-in-inventory"), std::string::npos) << what;
}

TEST(LoadSchema, UnknownFieldIsMalformed) {
  EXPECT_EQ(code_of([] { parse_schema("name: n\ntask: NER\nlanguage: EN\nentities: [LOC]\ncolour: red\n"); }),
            ErrorCode::MalformedSchema);
  EXPECT_EQ(code_of([] {
              parse_schema("name: n\ntask: RE\nlanguage: EN\nrelations:\n  - {name: r, subject_type: a, object_type: "
                           "b, extra: 1}\n");
            }),
            ErrorCode::MalformedSchema);
}

TEST(LoadSchema, SyntaxErrorIsMalformed) {
  EXPECT_EQ(code_of([] { parse_schema("name: [unclosed\n"); }), ErrorCode::MalformedSchema);
  EXPECT_EQ(code_of([] { parse_schema("task: XX\nlanguage: EN\nentities: [A]\n"); }), ErrorCode::MalformedSchema);
}

TEST(LoadSchema, MissingAttributeTemplate) {
  EXPECT_EQ(code_of([] {
              parse_schema(R"(
name: c
task: RE
language: EN
relations:
  - name: r
    subject_type: a
    object_type: b
    object_chain: [{attribute: when, template: no.such.template}]
)");
            }),
            ErrorCode::UnresolvedTemplate);
}

TEST(LoadSchema, MissingFileIsMalformed) {
  EXPECT_EQ(code_of([] { load_schema("/nonexistent/schema.yaml"); }), ErrorCode::MalformedSchema);
}

TEST(FormatTypeList, StraightSingleQuotes) {
  EXPECT_EQ(format_type_list({"LOC", "MISC", "ORG", "PER"}), "['LOC', 'MISC', 'ORG', 'PER']");
}

}  // namespace
}  // namespace mtie
