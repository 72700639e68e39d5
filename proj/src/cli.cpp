#include "mtie/cli.hpp"

#include <unistd.h>

#include <atomic>
#include <charconv>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>
#include <yaml-cpp/yaml.h>

#include "mtie/error.hpp"
#include "mtie/pipeline.hpp"
#include "mtie/schema.hpp"
#include "mtie/text.hpp"

namespace mtie::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys = {
      "task",        "schema",     "dataset",  "format",      "backend",      "endpoint",
      "model",       "timeout",    "max_retries", "rate_limit", "transcripts", "api_key_env",
      "sample_limit", "seed",      "workers",  "output_dir",  "skip_stage1",  "span_check",
      "record",      "fail_on_sample_errors"};
  return keys;
}

std::string normalize_key(std::string key) {
  for (auto& c : key) {
    if (c == '-') c = '_';
  }
  return text::ascii_lower(key);
}

[[noreturn]] void config_error(const std::string& msg) { throw Error(ErrorCode::ConfigError, msg); }

bool to_bool(const std::string& key, const std::string& v) {
  auto s = text::ascii_lower(text::trim(v));
  if (s == "1" || s == "true" || s == "yes" || s == "on") return true;
  if (s == "0" || s == "false" || s == "no" || s == "off") return false;
  config_error(key + ": expected a boolean, got '" + v + "'");
}

template <typename T>
T to_number(const std::string& key, const std::string& v) {
  auto s = text::trim(v);
  T value{};
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size()) config_error(key + ": expected a number, got '" + v + "'");
  return value;
}

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    double d = std::stod(v, &used);
    if (used == v.size() && d > 0) return d;
  } catch (const std::exception&) {
  }
  config_error(key + ": expected a positive number, got '" + v + "'");
}

std::string read_all(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) config_error("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string one_line(const std::string& s) {
  std::string out = s;
  for (auto& c : out) {
    if (c == '\n' || c == '\r') c = ' ';
  }
  return out;
}

}  // namespace

// ---- configuration ---------------------------------------------------------

std::string RunConfig::semantic_json() const {
  json j = {{"task", std::string(to_string(task))},
            {"schema", schema_path.lexically_normal().string()},
            {"dataset", dataset_path.lexically_normal().string()},
            {"format", std::string(to_string(format))},
            {"backend", std::string(to_string(backend.kind))},
            {"endpoint", backend.endpoint},
            {"model", backend.model_name},
            {"timeout", backend.request_timeout_s},
            {"max_retries", backend.max_retries},
            {"rate_limit", backend.rate_limit},
            {"transcripts", backend.transcript_path.lexically_normal().string()},
            {"sample_limit", sample_limit ? json(*sample_limit) : json(nullptr)},
            {"seed", seed},
            {"skip_stage1", skip_stage1 ? json(*skip_stage1) : json(nullptr)},
            {"span_check", span_check},
            {"record", record_transcripts}};
  return j.dump();
}

std::string RunConfig::fingerprint() const { return text::sha256_hex(semantic_json()); }

Settings read_config_file(const fs::path& path) {
  YAML::Node root;
  try {
    root = YAML::LoadFile(path.string());
  } catch (const YAML::Exception& e) {
    config_error("config file " + path.string() + ": " + e.what());
  }
  Settings out;
  if (!root || root.IsNull()) return out;
  if (!root.IsMap()) config_error("config file " + path.string() + " must be a mapping");
  for (const auto& kv : root) {
    auto key = normalize_key(kv.first.as<std::string>());
    if (!kv.second.IsScalar()) config_error("config file " + path.string() + ": '" + key + "' must be a scalar");
    out[key] = kv.second.as<std::string>();
  }
  return out;
}

EnvLookup process_env() {
  return [](const std::string& name) -> std::optional<std::string> {
    const char* v = std::getenv(name.c_str());
    if (!v) return std::nullopt;
    return std::string(v);
  };
}

RunConfig resolve_config(const Settings& flags, const std::optional<fs::path>& config_file, const EnvLookup& env) {
  Settings file;
  if (config_file) file = read_config_file(*config_file);
  for (const Settings* layer : {&flags, static_cast<const Settings*>(&file)}) {
    for (const auto& [k, _] : *layer) {
      if (!known_keys().count(normalize_key(k))) config_error("unknown setting '" + k + "'");
    }
  }

  RunConfig c;
  auto get = [&](const std::string& key) -> std::optional<std::string> {
    for (const auto& [k, v] : flags) {
      if (normalize_key(k) == key) {
        c.sources[key] = "flag";
        return v;
      }
    }
    if (auto it = file.find(key); it != file.end()) {
      c.sources[key] = "config";
      return it->second;
    }
    if (env) {
      auto name = "MTIE_" + key;
      for (auto& ch : name) ch = static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
      if (auto v = env(name)) {
        c.sources[key] = "env";
        return v;
      }
    }
    return std::nullopt;
  };
  auto require = [&](const std::string& key) {
    auto v = get(key);
    if (!v || text::trim(*v).empty()) config_error("missing required setting '" + key + "'");
    return *v;
  };

  c.schema_path = require("schema");
  c.dataset_path = require("dataset");
  c.format = parse_dataset_format(require("format"));
  c.output_dir = require("output_dir");
  if (auto v = get("task")) {
    c.task = parse_task(*v);
  } else {
    c.task = task_of(c.format);
    c.sources["task"] = "derived";
  }
  if (auto v = get("backend")) {
    c.backend.kind = parse_backend_kind(*v);
  } else {
    c.sources["backend"] = "default";
  }
  if (auto v = get("endpoint")) c.backend.endpoint = *v;
  if (auto v = get("model")) c.backend.model_name = *v;
  if (auto v = get("timeout")) c.backend.request_timeout_s = to_double("timeout", *v);
  if (auto v = get("max_retries")) c.backend.max_retries = to_number<int>("max_retries", *v);
  if (auto v = get("rate_limit")) c.backend.rate_limit = to_number<int>("rate_limit", *v);
  if (auto v = get("transcripts")) c.backend.transcript_path = *v;
  if (auto v = get("api_key_env")) c.backend.api_key_env = *v;
  if (auto v = get("sample_limit")) {
    c.sample_limit = to_number<std::size_t>("sample_limit", *v);
    if (*c.sample_limit == 0) config_error("sample_limit must be positive");
  }
  if (auto v = get("seed")) c.seed = to_number<std::uint64_t>("seed", *v);
  if (auto v = get("workers")) c.workers = to_number<std::size_t>("workers", *v);
  if (auto v = get("skip_stage1")) c.skip_stage1 = to_bool("skip_stage1", *v);
  if (auto v = get("span_check")) c.span_check = to_bool("span_check", *v);
  if (auto v = get("record")) c.record_transcripts = to_bool("record", *v);
  if (auto v = get("fail_on_sample_errors")) c.fail_on_sample_errors = to_bool("fail_on_sample_errors", *v);

  if (c.workers == 0) config_error("workers must be at least 1");
  if (c.backend.max_retries < 0) config_error("max_retries must not be negative");
  if (c.backend.rate_limit <= 0) config_error("rate_limit must be positive");
  if (c.task != task_of(c.format)) {
    config_error("task " + std::string(to_string(c.task)) + " does not fit dataset format " +
                 std::string(to_string(c.format)));
  }
  return c;
}

// ---- files -----------------------------------------------------------------

void write_file_atomic(const fs::path& path, const std::string& content) {
  static std::atomic<unsigned> counter{0};
  auto dir = path.parent_path().empty() ? fs::path(".") : path.parent_path();
  auto tmp = dir / ("." + path.filename().string() + ".tmp." + std::to_string(::getpid()) + "." +
                    std::to_string(counter++));
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) config_error("cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) {
      out.close();
      fs::remove(tmp);
      config_error("write failed for " + tmp.string());
    }
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp);
    config_error("cannot move " + tmp.string() + " to " + path.string() + ": " + ec.message());
  }
}

std::vector<InverseRelation> read_equivalences(const fs::path& path) {
  YAML::Node root;
  try {
    root = YAML::LoadFile(path.string());
  } catch (const YAML::Exception& e) {
    config_error("equivalences file " + path.string() + ": " + e.what());
  }
  if (root.IsMap() && root["inverse_relations"]) root = root["inverse_relations"];
  if (!root.IsSequence()) config_error("equivalences file must hold a list of [inverse, canonical] pairs");
  std::vector<InverseRelation> out;
  for (const auto& pair : root) {
    if (!pair.IsSequence() || pair.size() != 2) config_error("each equivalence must be a pair [inverse, canonical]");
    out.push_back({pair[0].as<std::string>(), pair[1].as<std::string>()});
  }
  return out;
}

// ---- commands --------------------------------------------------------------

namespace {

void ensure_output_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) config_error("cannot create output directory " + dir.string() + ": " + ec.message());
  auto probe = dir / ".mtie-write-probe";
  {
    std::ofstream out(probe);
    if (!out) config_error("output directory " + dir.string() + " is not writable");
  }
  fs::remove(probe);
}

std::string file_sha256(const fs::path& path) { return text::sha256_hex(read_all(path)); }

// The store's single fingerprint when the config names no model.
std::string replay_fingerprint(const TranscriptStore& store, const std::string& model) {
  if (!model.empty()) return model;
  auto fps = store.fingerprints();
  if (fps.size() == 1) return fps.front();
  if (fps.empty()) config_error("the transcript store is empty");
  config_error("the transcript store holds several models; pick one with --model");
}

int run_extract(const RunConfig& config, Io io, const Runtime& runtime, const std::string& command) {
  auto started = runtime.timestamp();
  auto t0 = std::chrono::steady_clock::now();

  auto schema = load_schema(config.schema_path);
  if (schema.task != config.task) {
    config_error("schema '" + schema.name + "' is for " + std::string(to_string(schema.task)) + ", not " +
                 std::string(to_string(config.task)));
  }
  auto samples = load_dataset(config.dataset_path, config.format, schema);
  if (samples.empty()) config_error("dataset " + config.dataset_path.string() + " holds no samples");
  if (config.sample_limit && *config.sample_limit < samples.size()) {
    samples = subsample(samples, *config.sample_limit, config.seed);
  }
  ensure_output_dir(config.output_dir);

  BackendConfig bc = config.backend;
  bool record = config.record_transcripts || bc.record;
  if (record && bc.kind == BackendConfig::Kind::Replay) config_error("a replay run cannot record transcripts");
  if (record && bc.transcript_path.empty()) bc.transcript_path = config.output_dir / "transcripts.jsonl";
  bc.record = record;
  bc.validate();

  SystemClock system_clock;
  Clock& clock = runtime.clock ? *runtime.clock : system_clock;
  std::unique_ptr<ChatBackend> base;
  switch (bc.kind) {
    case BackendConfig::Kind::Live:
      base = std::make_unique<LiveBackend>(bc, runtime.transport(bc.endpoint), clock);
      break;
    case BackendConfig::Kind::Replay: {
      if (!fs::exists(bc.transcript_path)) config_error("transcript store " + bc.transcript_path.string() + " not found");
      auto store = TranscriptStore::load(bc.transcript_path);
      base = std::make_unique<ReplayBackend>(store, replay_fingerprint(*store, bc.model_name));
      break;
    }
    case BackendConfig::Kind::GoldOracle:
      base = std::make_unique<GoldOracleBackend>(schema, samples);
      break;
  }
  std::unique_ptr<ChatBackend> recorder;
  std::shared_ptr<TranscriptStore> store;
  if (record) {
    store = TranscriptStore::open_for_append(bc.transcript_path);
    recorder = std::make_unique<RecordingBackend>(*base, store, runtime.timestamp);
  }
  ChatBackend& backend = recorder ? *recorder : *base;

  ExtractionOptions opts;
  opts.skip_stage1 = config.skip_stage1;
  opts.span_check = config.span_check;
  opts.workers = config.workers;
  auto report = run_batch(samples, schema, backend, opts);

  auto report_path = config.output_dir / "report.jsonl";
  write_file_atomic(report_path, to_jsonl(report));

  json sources = json::object();
  for (const auto& [k, v] : config.sources) sources[k] = v;
  json artifacts = json::array({report_path.filename().string()});
  if (record) artifacts.push_back(bc.transcript_path.string());
  json manifest = {
      {"tool", "mtie"},
      {"command", command},
      {"config", json::parse(config.semantic_json())},
      {"config_fingerprint", config.fingerprint()},
      {"sources", sources},
      {"workers", config.workers},
      {"inputs", {{"schema_sha256", file_sha256(config.schema_path)}, {"dataset_sha256", file_sha256(config.dataset_path)}}},
      {"timings",
       {{"started", started},
        {"finished", runtime.timestamp()},
        {"wall_seconds", std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count()}}},
      {"requests", base->requests()},
      {"samples", {{"total", samples.size()}, {"succeeded", report.succeeded()}, {"failed", report.failed()}}},
      {"turns", report.turns()},
      {"artifacts", artifacts}};
  write_file_atomic(config.output_dir / "manifest.json", manifest.dump(2) + "\n");

  io.out << "extracted " << report.succeeded() << "/" << samples.size() << " samples (" << report.failed()
         << " failed, " << report.turns() << " turns, " << base->requests() << " requests) -> " << report_path.string()
         << "\n";
  for (const auto& o : report.outcomes) {
    if (o.failure) io.err << "sample " << o.failure->sample_id << ": " << error_code_name(o.failure->code) << ": "
                          << one_line(o.failure->message) << "\n";
  }
  if (config.fail_on_sample_errors && report.failed() > 0) return kExitPartial;
  return kExitOk;
}

template <typename Fn>
int guarded(Io io, Fn&& fn) {
  try {
    return fn();
  } catch (const Error& e) {
    io.err << "mtie: " << one_line(e.what()) << "\n";
  } catch (const std::exception& e) {
    io.err << "mtie: " << one_line(e.what()) << "\n";
  }
  return kExitConfig;
}

}  // namespace

int cmd_extract(const RunConfig& config, Io io, const Runtime& runtime) {
  return guarded(io, [&] { return run_extract(config, io, runtime, "extract"); });
}

int cmd_record(RunConfig config, Io io, const Runtime& runtime) {
  return guarded(io, [&] {
    if (config.backend.kind != BackendConfig::Kind::Live) config_error("record needs the live backend");
    config.record_transcripts = true;
    return run_extract(config, io, runtime, "record");
  });
}

int cmd_replay(RunConfig config, Io io, const Runtime& runtime) {
  return guarded(io, [&] {
    auto src = config.sources.find("backend");
    if (src != config.sources.end() && src->second != "default" && config.backend.kind != BackendConfig::Kind::Replay) {
      config_error("replay cannot use the " + std::string(to_string(config.backend.kind)) + " backend");
    }
    auto ep = config.sources.find("endpoint");
    if (ep != config.sources.end() && (ep->second == "flag" || ep->second == "config")) {
      config_error("replay forbids network use, but an endpoint was given");
    }
    config.backend.kind = BackendConfig::Kind::Replay;
    config.backend.endpoint.clear();
    config.backend.allow_network = false;
    if (config.backend.transcript_path.empty()) config_error("replay needs a transcript store (--transcripts)");
    if (!fs::exists(config.backend.transcript_path)) {
      config_error("transcript store " + config.backend.transcript_path.string() + " not found");
    }
    return run_extract(config, io, runtime, "replay");
  });
}

int cmd_eval(const EvalConfig& config, Io io) {
  return guarded(io, [&] {
    auto schema = load_schema(config.schema);
    if (task_of(config.format) != schema.task) config_error("dataset format does not fit schema '" + schema.name + "'");
    if (task_of(config.regime) != schema.task) {
      throw Error(ErrorCode::RegimeUnsupported, std::string(to_string(config.regime)) + " does not apply to " +
                                                    std::string(to_string(schema.task)));
    }
    if (config.equivalences) schema.inverse_relations = read_equivalences(*config.equivalences);
    auto gold = load_dataset(config.dataset, config.format, schema);
    auto report = read_batch_report(config.predictions);
    if (report.task != schema.task) config_error("predictions are for a different task");
    // Subsampled runs are scored against the samples they cover.
    std::set<std::string> covered;
    for (const auto& o : report.outcomes) covered.insert(o.id());
    std::vector<Sample> scored;
    for (const auto& s : gold) {
      if (covered.count(s.id)) scored.push_back(s);
    }
    auto metrics = score_report(report, scored, config.regime, schema);
    ensure_output_dir(config.output_dir);
    write_file_atomic(config.output_dir / "metrics.json", metrics.to_json() + "\n");
    write_file_atomic(config.output_dir / "metrics.txt", metrics.to_table());
    io.out << metrics.to_table();
    return kExitOk;
  });
}

int cmd_schemas_validate(const std::vector<fs::path>& paths, Io io) {
  if (paths.empty()) {
    io.err << "mtie: no schema files given\n";
    return kExitConfig;
  }
  int status = kExitOk;
  for (const auto& p : paths) {
    try {
      auto s = load_schema(p);
      io.out << p.string() << ": ok (" << to_string(s.task) << ", " << s.type_names().size() << " types)\n";
    } catch (const std::exception& e) {
      io.out << p.string() << ": " << one_line(e.what()) << "\n";
      status = kExitConfig;
    }
  }
  return status;
}

}  // namespace mtie::cli
