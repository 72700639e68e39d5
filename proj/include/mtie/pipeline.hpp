#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mtie/chat.hpp"
#include "mtie/error.hpp"
#include "mtie/schema.hpp"
#include "mtie/templates.hpp"
#include "mtie/types.hpp"

namespace mtie {

struct ExtractionOptions {
  // Overrides the schema's skip_stage1 (NER only).
  std::optional<bool> skip_stage1;
  // Drop extracted strings that do not occur (after cleanup) in the sentence.
  bool span_check = false;
  // Worker threads for run_batch.
  std::size_t workers = 4;
  // Templates to render from; the builtin registry when null.
  const TemplateRegistry* templates = nullptr;
};

struct TurnLog {
  std::string template_id;
  std::string element_type;  // empty for stage I
  std::string attribute;     // complex-object follow-ups
  std::string reply;
};

struct ExtractionResult {
  std::string sample_id;
  Task task = Task::RE;
  TripleSet triples;
  EntitySet entities;
  EventSet events;
  // 1-based index of the turn whose answer produced each element.
  std::map<Triple, std::size_t> triple_turn;
  std::map<Entity, std::size_t> entity_turn;
  std::map<EventRecord, std::size_t> event_turn;
  std::size_t turns_used = 0;
  std::vector<std::string> warnings;
  // Transcript key of the conversation's final exchange.
  std::optional<std::string> transcript_ref;
  std::vector<TurnLog> turns;
};

ExtractionResult extract_triples(const Sample& sample, const TaskSchema& schema, ChatBackend& backend,
                                 const ExtractionOptions& options = {});
ExtractionResult extract_entities(const Sample& sample, const TaskSchema& schema, ChatBackend& backend,
                                  const ExtractionOptions& options = {});
ExtractionResult extract_events(const Sample& sample, const TaskSchema& schema, ChatBackend& backend,
                                const ExtractionOptions& options = {});
// Dispatches on schema.task.
ExtractionResult extract(const Sample& sample, const TaskSchema& schema, ChatBackend& backend,
                         const ExtractionOptions& options = {});

struct SampleFailure {
  std::string sample_id;
  ErrorCode code = ErrorCode::ConfigError;
  std::string message;
};

struct SampleOutcome {
  std::optional<ExtractionResult> result;
  std::optional<SampleFailure> failure;
  const std::string& id() const { return result ? result->sample_id : failure->sample_id; }
};

struct BatchReport {
  Task task = Task::RE;
  std::string schema_name;
  std::vector<SampleOutcome> outcomes;  // input order
  double wall_seconds = 0;

  std::size_t succeeded() const;
  std::size_t failed() const;
  std::size_t turns() const;
  std::size_t warnings() const;
};

// Extracts every sample with bounded parallelism. Sample-level errors are
// recorded as failures; only an unusable configuration throws (ConfigError).
BatchReport run_batch(const std::vector<Sample>& samples, const TaskSchema& schema, ChatBackend& backend,
                      const ExtractionOptions& options = {});

// One JSON record per sample followed by a summary record. wall_seconds
// appears only in the summary.
std::string to_jsonl(const BatchReport& report);
void write_jsonl(const BatchReport& report, const std::filesystem::path& path);

// Reads the per-sample records of a BatchReport file. Throws MalformedRecord.
BatchReport read_batch_report(const std::filesystem::path& path);
BatchReport parse_batch_report(std::string_view jsonl);

}  // namespace mtie
