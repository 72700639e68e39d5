#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "mtie/chat.hpp"
#include "mtie/datasets.hpp"
#include "mtie/eval.hpp"
#include "mtie/types.hpp"

namespace mtie::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 1;
inline constexpr int kExitPartial = 2;

// Raw settings by key before typing. Keys use underscores: task, schema,
// dataset, format, backend, endpoint, model, timeout, max_retries,
// rate_limit, transcripts, api_key_env, sample_limit, seed, workers,
// output_dir, skip_stage1, span_check, record, fail_on_sample_errors.
using Settings = std::map<std::string, std::string>;

struct RunConfig {
  Task task = Task::RE;
  std::filesystem::path schema_path;
  std::filesystem::path dataset_path;
  DatasetFormat format = DatasetFormat::Nyt11;
  BackendConfig backend;
  std::optional<std::size_t> sample_limit;
  std::uint64_t seed = 0;
  std::size_t workers = 4;
  std::filesystem::path output_dir;
  std::optional<bool> skip_stage1;
  bool span_check = false;
  bool record_transcripts = false;
  // Exit with kExitPartial when any sample failed.
  bool fail_on_sample_errors = false;

  // Where each key's value came from: flag, config, env or default.
  std::map<std::string, std::string> sources;

  // Semantic fields only (everything that can change the extraction
  // output); workers and output_dir are excluded. Never contains secrets.
  std::string semantic_json() const;
  // sha256 of semantic_json().
  std::string fingerprint() const;
};

// Precedence: flags > config file > environment (MTIE_<KEY>). Throws
// ConfigError for unknown keys, bad values or missing required settings.
using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;
RunConfig resolve_config(const Settings& flags, const std::optional<std::filesystem::path>& config_file,
                         const EnvLookup& env);
EnvLookup process_env();

// Flat YAML mapping of the keys above; dashes in keys are accepted.
Settings read_config_file(const std::filesystem::path& path);

// Hooks for substituting the network and the clock (tests, record/replay
// checks against a mocked endpoint).
struct Runtime {
  std::function<std::shared_ptr<HttpTransport>(const std::string&)> transport = make_http_transport;
  Clock* clock = nullptr;  // SystemClock when null
  std::function<std::string()> timestamp = utc_timestamp;
};

struct Io {
  std::ostream& out;
  std::ostream& err;
};

int cmd_extract(const RunConfig& config, Io io, const Runtime& runtime = {});
// Requires a live backend; transcripts are persisted to backend.transcript_path
// (default <output_dir>/transcripts.jsonl).
int cmd_record(RunConfig config, Io io, const Runtime& runtime = {});
// Requires a transcript store; network use is impossible.
int cmd_replay(RunConfig config, Io io, const Runtime& runtime = {});

struct EvalConfig {
  std::filesystem::path predictions;
  std::filesystem::path dataset;
  DatasetFormat format = DatasetFormat::Nyt11;
  std::filesystem::path schema;
  Regime regime = Regime::REBorder;
  // YAML list of [inverse, canonical] pairs; the schema's own declarations
  // are used when absent.
  std::optional<std::filesystem::path> equivalences;
  std::filesystem::path output_dir;
};

// Writes metrics.json and metrics.txt into output_dir and prints the table.
int cmd_eval(const EvalConfig& config, Io io);

int cmd_schemas_validate(const std::vector<std::filesystem::path>& paths, Io io);

// Writes via a temporary file in the same directory and renames it into
// place, so a crash never leaves a partial file under the final name.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

std::vector<InverseRelation> read_equivalences(const std::filesystem::path& path);

}  // namespace mtie::cli
