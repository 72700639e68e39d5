#include "mtie/chat.hpp"

#include <algorithm>
#include <cmath>
#include <ctime>
#include <fstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "mtie/error.hpp"
#include "mtie/text.hpp"

namespace mtie {

using nlohmann::json;

std::string_view to_string(Role role) {
  switch (role) {
    case Role::System: return "system";
    case Role::User: return "user";
    case Role::Assistant: return "assistant";
  }
  return "user";
}

Role parse_role(std::string_view name) {
  if (name == "system") return Role::System;
  if (name == "user") return Role::User;
  if (name == "assistant") return Role::Assistant;
  throw Error(ErrorCode::MalformedTranscript, "unknown message role '" + std::string(name) + "'");
}

void Conversation::append(Role role, std::string content) {
  if (role == Role::System) {
    if (!messages_.empty()) throw Error(ErrorCode::ConfigError, "a system message may only open a conversation");
  } else {
    if (text::trim(content).empty()) throw Error(ErrorCode::ConfigError, "empty " + std::string(to_string(role)) + " message");
    Role last = messages_.empty() ? Role::System : messages_.back().role;
    Role want = last == Role::User ? Role::Assistant : Role::User;
    if (role != want) {
      throw Error(ErrorCode::ConfigError, "expected a " + std::string(to_string(want)) + " message next");
    }
  }
  messages_.push_back({role, std::move(content)});
}

std::size_t Conversation::turns() const {
  return static_cast<std::size_t>(
      std::count_if(messages_.begin(), messages_.end(), [](const ChatMessage& m) { return m.role == Role::Assistant; }));
}

// ---- transcripts --------------------------------------------------------

namespace {

json messages_json(const std::vector<ChatMessage>& messages) {
  json arr = json::array();
  for (const auto& m : messages) arr.push_back({{"role", std::string(to_string(m.role))}, {"content", m.content}});
  return arr;
}

[[noreturn]] void bad_line(std::size_t line, const std::string& what) {
  throw Error(ErrorCode::MalformedTranscript, "line " + std::to_string(line) + ": " + what);
}

}  // namespace

std::string transcript_key(std::string_view fingerprint, const std::vector<ChatMessage>& history) {
  std::string material = "mtie-transcript-v1\n";
  material += fingerprint;
  material += '\n';
  material += messages_json(history).dump();
  return text::sha256_hex(material);
}

std::vector<ChatMessage> history_with(const Conversation& conversation, const RenderedPrompt& prompt) {
  auto history = conversation.messages();
  history.push_back({Role::User, prompt.text});
  return history;
}

std::string to_json_line(const TranscriptEntry& e) {
  json j = {{"key", e.key},
            {"fingerprint", e.fingerprint},
            {"messages", messages_json(e.messages)},
            {"reply", e.reply},
            {"timestamp", e.timestamp}};
  return j.dump();
}

std::shared_ptr<TranscriptStore> TranscriptStore::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::MalformedTranscript, "cannot open transcript file " + path.string());
  auto store = std::make_shared<TranscriptStore>();
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (text::trim(line).empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      bad_line(n, std::string("invalid JSON: ") + e.what());
    }
    TranscriptEntry entry;
    try {
      entry.key = j.at("key").get<std::string>();
      entry.fingerprint = j.at("fingerprint").get<std::string>();
      entry.reply = j.at("reply").get<std::string>();
      entry.timestamp = j.value("timestamp", std::string());
      for (const auto& m : j.at("messages")) {
        entry.messages.push_back({parse_role(m.at("role").get<std::string>()), m.at("content").get<std::string>()});
      }
    } catch (const json::exception& e) {
      bad_line(n, std::string("missing or mistyped field: ") + e.what());
    }
    if (entry.messages.empty() || entry.messages.back().role != Role::User) {
      bad_line(n, "message history must end with a user message");
    }
    if (transcript_key(entry.fingerprint, entry.messages) != entry.key) bad_line(n, "key does not match its contents");
    std::unique_lock lock(store->mu_);
    store->insert_locked(std::move(entry), n);
  }
  return store;
}

std::shared_ptr<TranscriptStore> TranscriptStore::open_for_append(const std::filesystem::path& path) {
  std::shared_ptr<TranscriptStore> store;
  if (std::filesystem::exists(path)) {
    store = load(path);
  } else {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream touch(path, std::ios::app);
    if (!touch) throw Error(ErrorCode::MalformedTranscript, "cannot create transcript file " + path.string());
    store = std::make_shared<TranscriptStore>();
  }
  store->path_ = path;
  return store;
}

void TranscriptStore::insert_locked(TranscriptEntry entry, std::size_t line) {
  auto it = index_.find(entry.key);
  if (it != index_.end()) {
    if (entries_[it->second].reply != entry.reply) {
      throw Error(ErrorCode::MalformedTranscript,
                  (line ? "line " + std::to_string(line) + ": " : std::string()) + "key " + entry.key.substr(0, 12) +
                      " recorded with two different replies");
    }
    return;
  }
  index_.emplace(entry.key, entries_.size());
  entries_.push_back(std::move(entry));
}

std::optional<TranscriptEntry> TranscriptStore::find(const std::string& key) const {
  std::shared_lock lock(mu_);
  auto it = index_.find(key);
  if (it == index_.end()) return std::nullopt;
  return entries_[it->second];
}

void TranscriptStore::append(TranscriptEntry entry) {
  if (entry.key.empty()) entry.key = transcript_key(entry.fingerprint, entry.messages);
  std::unique_lock lock(mu_);
  if (index_.count(entry.key)) {
    insert_locked(std::move(entry), 0);  // throws on conflict
    return;
  }
  if (path_) {
    std::ofstream out(*path_, std::ios::app | std::ios::binary);
    out << to_json_line(entry) << '\n';
    out.flush();
    if (!out) throw Error(ErrorCode::MalformedTranscript, "cannot append to " + path_->string());
  }
  insert_locked(std::move(entry), 0);
}

std::size_t TranscriptStore::size() const {
  std::shared_lock lock(mu_);
  return entries_.size();
}

std::vector<TranscriptEntry> TranscriptStore::entries() const {
  std::shared_lock lock(mu_);
  return entries_;
}

std::vector<std::string> TranscriptStore::fingerprints() const {
  std::shared_lock lock(mu_);
  std::vector<std::string> out;
  for (const auto& e : entries_) {
    if (std::find(out.begin(), out.end(), e.fingerprint) == out.end()) out.push_back(e.fingerprint);
  }
  return out;
}

// ---- time and rate limiting --------------------------------------------

Seconds SystemClock::now() {
  return std::chrono::duration_cast<Seconds>(std::chrono::steady_clock::now().time_since_epoch());
}

void SystemClock::sleep_until(Seconds t) {
  auto d = t - now();
  if (d.count() > 0) std::this_thread::sleep_for(d);
}

Seconds FakeClock::now() {
  std::lock_guard lock(mu_);
  return now_;
}

void FakeClock::sleep_until(Seconds t) {
  std::lock_guard lock(mu_);
  if (t > now_) now_ = t;
}

RateLimiter::RateLimiter(int per_minute, Clock& clock) : per_minute_(per_minute), clock_(clock) {
  if (per_minute <= 0) throw Error(ErrorCode::ConfigError, "rate_limit must be positive");
}

Seconds RateLimiter::acquire() {
  Seconds slot;
  {
    std::lock_guard lock(mu_);
    slot = clock_.now();
    if (!recent_.empty()) slot = std::max(slot, recent_.back());
    if (recent_.size() == static_cast<std::size_t>(per_minute_)) {
      auto front = recent_.front();
      slot = std::max(slot, front + Seconds(60));
      // front + 60 can round to a value less than 60 s after front.
      while (slot - front < Seconds(60)) slot = Seconds(std::nextafter(slot.count(), HUGE_VAL));
      recent_.pop_front();
    }
    recent_.push_back(slot);
  }
  clock_.sleep_until(slot);
  return slot;
}

// ---- ask ----------------------------------------------------------------

std::string ask(Conversation& conversation, const RenderedPrompt& prompt, ChatBackend& backend) {
  if (text::trim(prompt.text).empty()) throw Error(ErrorCode::ConfigError, "empty prompt");
  std::string reply = backend.reply(conversation, prompt);
  if (text::trim(reply).empty()) {
    reply = backend.reply(conversation, prompt);
    if (text::trim(reply).empty()) throw Error(ErrorCode::EmptyReply, "blank reply to " + prompt.template_id);
  }
  conversation.append(Role::User, prompt.text);
  conversation.append(Role::Assistant, reply);
  return reply;
}

// ---- config -------------------------------------------------------------

std::string_view to_string(BackendConfig::Kind kind) {
  switch (kind) {
    case BackendConfig::Kind::Live: return "live";
    case BackendConfig::Kind::Replay: return "replay";
    case BackendConfig::Kind::GoldOracle: return "gold_oracle";
  }
  return "replay";
}

BackendConfig::Kind parse_backend_kind(std::string_view name) {
  if (name == "live") return BackendConfig::Kind::Live;
  if (name == "replay") return BackendConfig::Kind::Replay;
  if (name == "gold_oracle" || name == "gold-oracle") return BackendConfig::Kind::GoldOracle;
  throw Error(ErrorCode::ConfigError, "unknown backend kind '" + std::string(name) + "'");
}

void BackendConfig::validate() const {
  auto need = [](bool ok, const char* what) {
    if (!ok) throw Error(ErrorCode::ConfigError, what);
  };
  need(max_retries >= 0, "max_retries must be non-negative");
  need(rate_limit > 0, "rate_limit must be positive");
  need(request_timeout_s > 0, "request_timeout must be positive");
  switch (kind) {
    case Kind::Live:
      need(!endpoint.empty(), "a live backend needs an endpoint");
      need(!model_name.empty(), "a live backend needs a model_name");
      need(!record || !transcript_path.empty(), "recording needs a transcript_path");
      break;
    case Kind::Replay:
      need(!transcript_path.empty(), "a replay backend needs a transcript_path");
      break;
    case Kind::GoldOracle:
      break;
  }
}

// ---- live ---------------------------------------------------------------

LiveBackend::LiveBackend(BackendConfig config, std::shared_ptr<HttpTransport> transport, Clock& clock,
                         std::optional<std::string> api_key, std::uint64_t jitter_seed)
    : config_(std::move(config)),
      transport_(std::move(transport)),
      clock_(clock),
      limiter_(config_.rate_limit, clock),
      api_key_(std::move(api_key)),
      rng_(jitter_seed) {
  if (!config_.allow_network) throw Error(ErrorCode::NetworkForbidden, "live requests are disabled in this mode");
  config_.validate();
  if (!api_key_) {
    if (const char* env = std::getenv(config_.api_key_env.c_str()); env && *env) api_key_ = env;
  }
}

Seconds LiveBackend::backoff(int attempt) {
  double base = backoff_base_s * static_cast<double>(1ULL << std::min(attempt, 20));
  std::uniform_real_distribution<double> jitter(0.0, base);
  std::lock_guard lock(rng_mu_);
  return Seconds(base + jitter(rng_));
}

std::string LiveBackend::reply(const Conversation& conversation, const RenderedPrompt& prompt) {
  json body = {{"model", config_.model_name},
               {"messages", messages_json(history_with(conversation, prompt))},
               {"temperature", 0}};
  std::map<std::string, std::string> headers = {{"Content-Type", "application/json"}};
  if (api_key_) headers["Authorization"] = "Bearer " + *api_key_;
  const std::string payload = body.dump();

  HttpResponse last;
  for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
    if (attempt > 0) clock_.sleep_for(backoff(attempt - 1));
    limiter_.acquire();
    ++requests_;
    last = transport_->post(payload, headers, config_.request_timeout_s);
    if (last.status == 200) {
      try {
        auto j = json::parse(last.body);
        return j.at("choices").at(0).at("message").at("content").get<std::string>();
      } catch (const json::exception& e) {
        throw Error(ErrorCode::TransportError, std::string("unexpected response body: ") + e.what());
      }
    }
    bool retryable = last.status == 0 || last.status == 429 || last.status >= 500;
    if (!retryable) break;
  }
  if (last.status == 429) {
    throw Error(ErrorCode::RateLimited, "endpoint kept answering 429 after " + std::to_string(config_.max_retries) +
                                            " retries");
  }
  throw Error(ErrorCode::TransportError,
              last.status == 0 ? "request failed: " + last.error
                               : "HTTP " + std::to_string(last.status) + ": " + last.body.substr(0, 200));
}

// ---- replay / record / scripted -----------------------------------------

ReplayBackend::ReplayBackend(std::shared_ptr<const TranscriptStore> store, std::string fingerprint)
    : store_(std::move(store)), fingerprint_(std::move(fingerprint)) {}

std::string ReplayBackend::reply(const Conversation& conversation, const RenderedPrompt& prompt) {
  auto key = transcript_key(fingerprint_, history_with(conversation, prompt));
  auto entry = store_->find(key);
  if (!entry) {
    throw Error(ErrorCode::ReplayMiss, "no recorded reply for conversation '" + conversation.id() + "' turn " +
                                           std::to_string(conversation.turns() + 1) + " (key " + key.substr(0, 12) +
                                           ")");
  }
  ++requests_;
  return entry->reply;
}

RecordingBackend::RecordingBackend(ChatBackend& inner, std::shared_ptr<TranscriptStore> store, Timestamp timestamp)
    : inner_(inner), store_(std::move(store)), timestamp_(timestamp ? std::move(timestamp) : Timestamp(utc_timestamp)) {}

std::string RecordingBackend::reply(const Conversation& conversation, const RenderedPrompt& prompt) {
  auto reply = inner_.reply(conversation, prompt);
  ++requests_;
  if (text::trim(reply).empty()) return reply;
  TranscriptEntry entry;
  entry.fingerprint = inner_.fingerprint();
  entry.messages = history_with(conversation, prompt);
  entry.key = transcript_key(entry.fingerprint, entry.messages);
  entry.reply = reply;
  entry.timestamp = timestamp_();
  store_->append(std::move(entry));
  return reply;
}

ScriptedBackend::ScriptedBackend(Script script, std::string fingerprint)
    : script_(std::move(script)), fingerprint_(std::move(fingerprint)) {}

std::string ScriptedBackend::reply(const Conversation& conversation, const RenderedPrompt& prompt) {
  ++requests_;
  return script_(conversation, prompt);
}

std::string utc_timestamp() {
  auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace mtie
