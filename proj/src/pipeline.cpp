#include "mtie/pipeline.hpp"

#include <atomic>
#include <chrono>
#include <charconv>
#include <fstream>
#include <sstream>
#include <thread>

#include "json_io.hpp"
#include "mtie/parse.hpp"
#include "mtie/text.hpp"

namespace mtie {

namespace {

using json_io::json;

// Per-sample state: one conversation spanning both stages.
class Session {
 public:
  Session(const Sample& sample, const TaskSchema& schema, ChatBackend& backend, const ExtractionOptions& options)
      : sample_(sample),
        schema_(schema),
        backend_(backend),
        options_(options),
        templates_(options.templates ? *options.templates : TemplateRegistry::builtin()),
        conversation_(sample.id) {
    if (text::trim(sample.sentence).empty()) throw Error(ErrorCode::ConfigError, "sample '" + sample.id + "' has an empty sentence");
    result_.sample_id = sample.id;
    result_.task = schema.task;
    sentence_ = text::normalize_punctuation(sample.sentence);
  }

  std::string ask_turn(const RenderedPrompt& prompt) {
    auto history = history_with(conversation_, prompt);
    auto reply = ask(conversation_, prompt, backend_);
    result_.transcript_ref = transcript_key(backend_.fingerprint(), history);
    result_.turns_used = conversation_.turns();
    result_.turns.push_back({prompt.template_id, prompt.context.element_type, prompt.context.attribute, reply});
    return reply;
  }

  void warn(std::string w) { result_.warnings.push_back(std::move(w)); }

  void warn_all(const ParsedAnswer& a, std::string_view where) {
    for (const auto& w : a.warnings) warn(std::string(where) + ": " + w);
  }

  // Stage II parse errors cost one element type, not the sample.
  template <typename Fn>
  std::optional<ParsedAnswer> parse_stage2(std::string_view where, Fn&& fn) {
    try {
      auto a = fn();
      warn_all(a, where);
      return a;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::Unparseable && e.code() != ErrorCode::ArityMismatch) throw;
      warn(std::string(where) + ": skipped, " + e.what());
      return std::nullopt;
    }
  }

  bool in_sentence(std::string_view span) {
    if (!options_.span_check) return true;
    auto needle = text::clean_cell(text::normalize_punctuation(span));
    if (!needle.empty() && sentence_.find(needle) != std::string::npos) return true;
    warn("span check dropped '" + std::string(span) + "'");
    return false;
  }

  std::vector<std::string> stage1(Task task, std::vector<std::string>* out_inventory = nullptr) {
    auto prompt = render_stage1(templates_.stage1(task, schema_.language), schema_, sample_.sentence);
    auto reply = ask_turn(prompt);
    auto parsed = task == Task::EE ? parse_event_types(reply, prompt.context.inventory)
                                   : parse_type_list(reply, prompt.context.inventory);
    warn_all(parsed, "stage I");
    if (out_inventory) *out_inventory = prompt.context.inventory;
    if (parsed.is_none()) return {};
    return parsed.as<TypeList>().names;
  }

  template <typename Set, typename Elem>
  void add(Set& set, std::map<Elem, std::size_t>& turns, Elem e) {
    auto turn = result_.turns_used;
    if (set.insert(e).second) {
      turns.emplace(std::move(e), turn);
    } else {
      ++duplicates_;
    }
  }

  ExtractionResult finish() {
    if (duplicates_ > 0) warn("collapsed " + std::to_string(duplicates_) + " duplicate element(s)");
    return std::move(result_);
  }

  const Sample& sample_;
  const TaskSchema& schema_;
  ChatBackend& backend_;
  const ExtractionOptions& options_;
  const TemplateRegistry& templates_;
  Conversation conversation_;
  ExtractionResult result_;
  std::string sentence_;
  std::size_t duplicates_ = 0;
};

void require_task(const TaskSchema& schema, Task task) {
  if (schema.task != task) {
    throw Error(ErrorCode::TaskMismatch, "schema '" + schema.name + "' is for " + std::string(to_string(schema.task)) +
                                             ", not " + std::string(to_string(task)));
  }
}

std::optional<std::size_t> group_index(std::string_view cell, std::size_t groups) {
  auto t = text::trim(cell);
  std::size_t value = 0;
  auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
  if (ec != std::errc() || ptr != t.data() + t.size() || value == 0 || value > groups) return std::nullopt;
  return value - 1;
}

}  // namespace

ExtractionResult extract_triples(const Sample& sample, const TaskSchema& schema, ChatBackend& backend,
                                 const ExtractionOptions& options) {
  require_task(schema, Task::RE);
  Session s(sample, schema, backend, options);
  for (const auto& name : s.stage1(Task::RE)) {
    const auto& rel = lookup_relation(schema, name);
    auto prompt = render_relation_question(s.templates_.stage2(Task::RE, schema.language), rel);
    auto reply = s.ask_turn(prompt);
    std::size_t stage2_turn = s.result_.turns_used;
    auto parsed = s.parse_stage2("stage II " + rel.name, [&] { return parse_pair_table(reply, prompt.context.header); });
    if (!parsed || parsed->is_none()) continue;

    std::vector<Triple> found;
    std::vector<std::pair<std::string, std::string>> groups;
    for (const auto& [subj, obj] : parsed->as<PairTable>().rows) {
      if (!s.in_sentence(subj) || !s.in_sentence(obj)) continue;
      if (std::find(groups.begin(), groups.end(), std::pair{subj, obj}) != groups.end()) {
        ++s.duplicates_;
        continue;
      }
      groups.emplace_back(subj, obj);
      found.push_back({subj, rel.name, obj, {}, rel.subject_type, rel.object_type});
    }

    if (rel.has_complex_object() && !groups.empty()) {
      for (const auto& attr : rel.object_chain) {
        auto q = render_attribute_question(s.templates_.get(attr.question_template_id), rel, attr, groups);
        auto answer = s.ask_turn(q);
        auto where = "attribute " + rel.name + "/" + attr.attribute_name;
        auto table = s.parse_stage2(where, [&] { return parse_pair_table(answer, q.context.header); });
        if (!table || table->is_none()) continue;
        for (const auto& [cell, value] : table->as<PairTable>().rows) {
          auto idx = group_index(cell, groups.size());
          if (!idx) {
            s.warn(where + ": no group numbered '" + cell + "'");
            continue;
          }
          if (!found[*idx].attributes.emplace(attr.attribute_name, value).second) {
            s.warn(where + ": group " + cell + " answered twice, kept the first");
          }
        }
      }
    }
    for (auto& t : found) {
      if (s.result_.triples.insert(t).second) {
        s.result_.triple_turn.emplace(std::move(t), stage2_turn);
      } else {
        ++s.duplicates_;
      }
    }
  }
  return s.finish();
}

ExtractionResult extract_entities(const Sample& sample, const TaskSchema& schema, ChatBackend& backend,
                                  const ExtractionOptions& options) {
  require_task(schema, Task::NER);
  Session s(sample, schema, backend, options);
  bool skip = options.skip_stage1.value_or(schema.skip_stage1);
  auto inventory = schema.type_names();
  auto types = skip ? inventory : s.stage1(Task::NER);
  const auto& tpl = s.templates_.stage2(Task::NER, schema.language);
  for (const auto& type : types) {
    auto reply = s.ask_turn(render_entity_question(tpl, type));
    auto parsed = s.parse_stage2("stage II " + type, [&] { return parse_entity_list(reply, inventory); });
    if (!parsed || parsed->is_none()) continue;
    for (const auto& [name, t] : parsed->as<EntityList>().items) {
      if (!s.in_sentence(name)) continue;
      s.add(s.result_.entities, s.result_.entity_turn, Entity{name, t});
    }
  }
  return s.finish();
}

ExtractionResult extract_events(const Sample& sample, const TaskSchema& schema, ChatBackend& backend,
                                const ExtractionOptions& options) {
  require_task(schema, Task::EE);
  Session s(sample, schema, backend, options);
  const auto& tpl = s.templates_.stage2(Task::EE, schema.language);
  for (const auto& name : s.stage1(Task::EE)) {
    const auto& ev = lookup_event_type(schema, name);
    auto reply = s.ask_turn(render_role_question(tpl, ev));
    auto parsed = s.parse_stage2("stage II " + ev.name, [&] { return parse_role_table(reply, ev.name, ev.roles); });
    if (!parsed) continue;
    EventRecord record{ev.name, {}};
    if (!parsed->is_none()) {
      for (const auto& row : parsed->as<RoleTable>().rows) {
        if (!s.in_sentence(row.content)) continue;
        if (!record.arguments.insert({row.role, row.content}).second) ++s.duplicates_;
      }
    }
    s.add(s.result_.events, s.result_.event_turn, std::move(record));
  }
  return s.finish();
}

ExtractionResult extract(const Sample& sample, const TaskSchema& schema, ChatBackend& backend,
                         const ExtractionOptions& options) {
  switch (schema.task) {
    case Task::RE: return extract_triples(sample, schema, backend, options);
    case Task::NER: return extract_entities(sample, schema, backend, options);
    case Task::EE: return extract_events(sample, schema, backend, options);
  }
  throw Error(ErrorCode::ConfigError, "unknown task");
}

std::size_t BatchReport::succeeded() const {
  return static_cast<std::size_t>(std::count_if(outcomes.begin(), outcomes.end(), [](const auto& o) { return o.result.has_value(); }));
}

std::size_t BatchReport::failed() const { return outcomes.size() - succeeded(); }

std::size_t BatchReport::turns() const {
  std::size_t n = 0;
  for (const auto& o : outcomes) {
    if (o.result) n += o.result->turns_used;
  }
  return n;
}

std::size_t BatchReport::warnings() const {
  std::size_t n = 0;
  for (const auto& o : outcomes) {
    if (o.result) n += o.result->warnings.size();
  }
  return n;
}

BatchReport run_batch(const std::vector<Sample>& samples, const TaskSchema& schema, ChatBackend& backend,
                      const ExtractionOptions& options) {
  if (samples.empty()) throw Error(ErrorCode::ConfigError, "no samples to extract");
  if (options.workers == 0) throw Error(ErrorCode::ConfigError, "workers must be at least 1");
  std::set<std::string> ids;
  for (const auto& s : samples) {
    if (!ids.insert(s.id).second) throw Error(ErrorCode::ConfigError, "duplicate sample id '" + s.id + "'");
  }

  BatchReport report;
  report.task = schema.task;
  report.schema_name = schema.name;
  report.outcomes.resize(samples.size());
  auto start = std::chrono::steady_clock::now();

  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < samples.size(); i = next++) {
      auto& out = report.outcomes[i];
      try {
        out.result = extract(samples[i], schema, backend, options);
      } catch (const Error& e) {
        out.failure = SampleFailure{samples[i].id, e.code(), e.detail()};
      } catch (const std::exception& e) {
        out.failure = SampleFailure{samples[i].id, ErrorCode::TransportError, e.what()};
      }
    }
  };
  std::size_t n = std::min(options.workers, samples.size());
  if (n == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t k = 0; k < n; ++k) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

// ---- serialization --------------------------------------------------------

namespace {

json outcome_json(const SampleOutcome& o) {
  json j = {{"record", "sample"}, {"id", o.id()}};
  if (o.failure) {
    j["status"] = "failed";
    j["error"] = {{"code", std::string(error_code_name(o.failure->code))}, {"message", o.failure->message}};
    return j;
  }
  const auto& r = *o.result;
  j["status"] = "ok";
  j["turns_used"] = r.turns_used;
  j["warnings"] = r.warnings;
  j["transcript_ref"] = r.transcript_ref ? json(*r.transcript_ref) : json(nullptr);
  json elements = json::array();
  switch (r.task) {
    case Task::RE:
      for (const auto& t : r.triples) {
        auto e = json_io::to_json(t);
        e["turn"] = r.triple_turn.at(t);
        elements.push_back(std::move(e));
      }
      j["triples"] = std::move(elements);
      break;
    case Task::NER:
      for (const auto& t : r.entities) {
        auto e = json_io::to_json(t);
        e["turn"] = r.entity_turn.at(t);
        elements.push_back(std::move(e));
      }
      j["entities"] = std::move(elements);
      break;
    case Task::EE:
      for (const auto& t : r.events) {
        auto e = json_io::to_json(t);
        e["turn"] = r.event_turn.at(t);
        elements.push_back(std::move(e));
      }
      j["events"] = std::move(elements);
      break;
  }
  json turns = json::array();
  for (const auto& t : r.turns) {
    json tj = {{"template", t.template_id}, {"reply", t.reply}};
    if (!t.element_type.empty()) tj["element_type"] = t.element_type;
    if (!t.attribute.empty()) tj["attribute"] = t.attribute;
    turns.push_back(std::move(tj));
  }
  j["turns"] = std::move(turns);
  return j;
}

ErrorCode parse_error_code(const std::string& name) {
  for (int c = 0; c <= static_cast<int>(ErrorCode::ConfigError); ++c) {
    if (error_code_name(static_cast<ErrorCode>(c)) == name) return static_cast<ErrorCode>(c);
  }
  return ErrorCode::ConfigError;
}

}  // namespace

std::string to_jsonl(const BatchReport& report) {
  std::string out;
  for (const auto& o : report.outcomes) out += outcome_json(o).dump() + "\n";
  json summary = {{"record", "summary"},
                  {"task", std::string(to_string(report.task))},
                  {"schema", report.schema_name},
                  {"samples", report.outcomes.size()},
                  {"succeeded", report.succeeded()},
                  {"failed", report.failed()},
                  {"turns", report.turns()},
                  {"warnings", report.warnings()},
                  {"wall_seconds", report.wall_seconds}};
  out += summary.dump() + "\n";
  return out;
}

void write_jsonl(const BatchReport& report, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << to_jsonl(report);
  if (!out) throw Error(ErrorCode::ConfigError, "cannot write " + path.string());
}

BatchReport parse_batch_report(std::string_view jsonl) {
  BatchReport report;
  std::size_t n = 0;
  bool have_task = false;
  for (const auto& line : text::split_lines(jsonl)) {
    ++n;
    if (text::trim(line).empty()) continue;
    try {
      auto j = json::parse(line);
      auto kind = j.at("record").get<std::string>();
      if (kind == "summary") {
        report.task = parse_task(j.at("task").get<std::string>());
        report.schema_name = j.value("schema", std::string());
        report.wall_seconds = j.value("wall_seconds", 0.0);
        have_task = true;
        continue;
      }
      SampleOutcome o;
      auto id = j.at("id").get<std::string>();
      if (j.at("status").get<std::string>() != "ok") {
        o.failure = SampleFailure{id, parse_error_code(j.at("error").at("code").get<std::string>()),
                                  j.at("error").at("message").get<std::string>()};
        report.outcomes.push_back(std::move(o));
        continue;
      }
      ExtractionResult r;
      r.sample_id = id;
      r.turns_used = j.value("turns_used", std::size_t{0});
      if (j.contains("warnings")) r.warnings = j.at("warnings").get<std::vector<std::string>>();
      if (j.contains("transcript_ref") && !j.at("transcript_ref").is_null()) {
        r.transcript_ref = j.at("transcript_ref").get<std::string>();
      }
      auto turn_of = [](const json& e) { return e.value("turn", std::size_t{0}); };
      if (j.contains("triples")) {
        r.task = Task::RE;
        for (const auto& e : j.at("triples")) {
          auto t = json_io::triple_from_json(e);
          r.triple_turn.emplace(t, turn_of(e));
          r.triples.insert(std::move(t));
        }
      } else if (j.contains("entities")) {
        r.task = Task::NER;
        for (const auto& e : j.at("entities")) {
          auto t = json_io::entity_from_json(e);
          r.entity_turn.emplace(t, turn_of(e));
          r.entities.insert(std::move(t));
        }
      } else if (j.contains("events")) {
        r.task = Task::EE;
        for (const auto& e : j.at("events")) {
          auto t = json_io::event_from_json(e);
          r.event_turn.emplace(t, turn_of(e));
          r.events.insert(std::move(t));
        }
      } else {
        throw Error(ErrorCode::MalformedRecord, "line " + std::to_string(n) + ": no triples, entities or events");
      }
      if (j.contains("turns")) {
        for (const auto& t : j.at("turns")) {
          r.turns.push_back({t.at("template").get<std::string>(), t.value("element_type", std::string()),
                             t.value("attribute", std::string()), t.at("reply").get<std::string>()});
        }
      }
      o.result = std::move(r);
      report.outcomes.push_back(std::move(o));
    } catch (const json::exception& e) {
      throw Error(ErrorCode::MalformedRecord, "line " + std::to_string(n) + ": " + e.what());
    }
  }
  if (!have_task) {
    for (const auto& o : report.outcomes) {
      if (o.result) {
        report.task = o.result->task;
        break;
      }
    }
  }
  for (auto& o : report.outcomes) {
    if (o.result) o.result->task = report.task;
  }
  return report;
}

BatchReport read_batch_report(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::MalformedRecord, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_batch_report(ss.str());
}

}  // namespace mtie
