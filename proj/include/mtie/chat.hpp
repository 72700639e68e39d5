#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <vector>

#include "mtie/schema.hpp"
#include "mtie/templates.hpp"
#include "mtie/types.hpp"

namespace mtie {

enum class Role { System, User, Assistant };

std::string_view to_string(Role role);
Role parse_role(std::string_view name);

struct ChatMessage {
  Role role = Role::User;
  std::string content;
  bool operator==(const ChatMessage&) const = default;
};

// Message history of one sample. Roles alternate user/assistant after an
// optional leading system message.
class Conversation {
 public:
  explicit Conversation(std::string id = {}) : id_(std::move(id)) {}

  const std::string& id() const { return id_; }
  const std::vector<ChatMessage>& messages() const { return messages_; }

  // Throws ConfigError when the role breaks alternation or the content of a
  // user/assistant message is empty.
  void append(Role role, std::string content);

  // Number of completed user/assistant exchanges.
  std::size_t turns() const;

 private:
  std::string id_;
  std::vector<ChatMessage> messages_;
};

// ---- transcripts --------------------------------------------------------

// sha256 over "mtie-transcript-v1\n" + fingerprint + "\n" + the compact JSON
// array of {"content","role"} objects (keys sorted, UTF-8 unescaped).
// `history` is the full conversation including the newly asked user prompt.
std::string transcript_key(std::string_view fingerprint, const std::vector<ChatMessage>& history);

// The history a backend answers: the conversation plus the new user prompt.
std::vector<ChatMessage> history_with(const Conversation& conversation, const RenderedPrompt& prompt);

struct TranscriptEntry {
  std::string key;
  std::string fingerprint;
  std::vector<ChatMessage> messages;
  std::string reply;
  std::string timestamp;  // ISO 8601, UTC
};

std::string to_json_line(const TranscriptEntry& entry);

// Append-only JSONL store. Concurrent readers; appends are serialized and
// flushed line by line when the store is backed by a file.
class TranscriptStore {
 public:
  TranscriptStore() = default;

  // Reads an existing file. Keys are recomputed and checked; a key that
  // appears twice with different replies is rejected. Throws
  // MalformedTranscript.
  static std::shared_ptr<TranscriptStore> load(const std::filesystem::path& path);

  // Opens (creating if needed) a file for appending; existing entries are
  // loaded first.
  static std::shared_ptr<TranscriptStore> open_for_append(const std::filesystem::path& path);

  std::optional<TranscriptEntry> find(const std::string& key) const;

  // Adds an entry; an identical existing entry is a no-op, a conflicting one
  // throws MalformedTranscript.
  void append(TranscriptEntry entry);

  std::size_t size() const;
  std::vector<TranscriptEntry> entries() const;
  std::vector<std::string> fingerprints() const;

 private:
  void insert_locked(TranscriptEntry entry, std::size_t line);

  mutable std::shared_mutex mu_;
  std::map<std::string, std::size_t> index_;
  std::vector<TranscriptEntry> entries_;
  std::optional<std::filesystem::path> path_;
};

// ---- time and rate limiting --------------------------------------------

using Seconds = std::chrono::duration<double>;

class Clock {
 public:
  virtual ~Clock() = default;
  virtual Seconds now() = 0;
  virtual void sleep_until(Seconds t) = 0;
  void sleep_for(Seconds d) { sleep_until(now() + d); }
};

class SystemClock : public Clock {
 public:
  Seconds now() override;
  void sleep_until(Seconds t) override;
};

// Sleeping advances the clock instantly. Safe to share between threads.
class FakeClock : public Clock {
 public:
  explicit FakeClock(Seconds start = Seconds(0)) : now_(start) {}
  Seconds now() override;
  void sleep_until(Seconds t) override;

 private:
  std::mutex mu_;
  Seconds now_;
};

// Sliding-window limiter: at most `per_minute` request starts in any 60 s
// window. Each caller reserves the earliest slot that keeps the window
// property, then sleeps until it.
class RateLimiter {
 public:
  RateLimiter(int per_minute, Clock& clock);

  // Blocks until the caller may start; returns the reserved start time.
  Seconds acquire();

  int per_minute() const { return per_minute_; }

 private:
  int per_minute_;
  Clock& clock_;
  std::mutex mu_;
  std::deque<Seconds> recent_;
};

// ---- backends -----------------------------------------------------------

class ChatBackend {
 public:
  virtual ~ChatBackend() = default;
  // Returns the assistant reply to `prompt` asked at the end of
  // `conversation`. Must not modify anything visible to other samples.
  virtual std::string reply(const Conversation& conversation, const RenderedPrompt& prompt) = 0;
  // Identifies the model/configuration; part of every transcript key.
  virtual std::string fingerprint() const = 0;
  // Requests that reached the model (or its stand-in).
  std::size_t requests() const { return requests_.load(); }

 protected:
  std::atomic<std::size_t> requests_{0};
};

// Appends the prompt and the reply to `conversation` and returns the reply
// verbatim. A blank reply is asked again once, then reported as EmptyReply
// with the conversation left unchanged.
std::string ask(Conversation& conversation, const RenderedPrompt& prompt, ChatBackend& backend);

struct BackendConfig {
  enum class Kind { Live, Replay, GoldOracle };
  Kind kind = Kind::Replay;
  std::string endpoint;
  std::string model_name;
  double request_timeout_s = 60.0;
  int max_retries = 3;
  int rate_limit = 20;  // requests per minute
  std::filesystem::path transcript_path;
  std::string api_key_env = "MTIE_API_KEY";
  // Record live traffic to transcript_path.
  bool record = false;
  // When false a live backend cannot be constructed (NetworkForbidden).
  bool allow_network = true;

  // Throws ConfigError naming the missing field.
  void validate() const;
};

std::string_view to_string(BackendConfig::Kind kind);
BackendConfig::Kind parse_backend_kind(std::string_view name);

struct HttpResponse {
  int status = 0;  // 0: the request never completed
  std::string body;
  std::string error;
};

class HttpTransport {
 public:
  virtual ~HttpTransport() = default;
  virtual HttpResponse post(const std::string& body, const std::map<std::string, std::string>& headers,
                            double timeout_s) = 0;
};

// cpp-httplib client for an http:// or https:// chat-completions URL.
std::shared_ptr<HttpTransport> make_http_transport(const std::string& endpoint);

// OpenAI-compatible chat-completions client: POSTs {model, messages,
// temperature: 0} and returns choices[0].message.content. Retries transport
// failures, 429 and 5xx with exponential backoff plus jitter.
class LiveBackend : public ChatBackend {
 public:
  LiveBackend(BackendConfig config, std::shared_ptr<HttpTransport> transport, Clock& clock,
              std::optional<std::string> api_key = std::nullopt, std::uint64_t jitter_seed = 0x6d746965);

  std::string reply(const Conversation& conversation, const RenderedPrompt& prompt) override;
  std::string fingerprint() const override { return config_.model_name; }

  double backoff_base_s = 1.0;

 private:
  Seconds backoff(int attempt);

  BackendConfig config_;
  std::shared_ptr<HttpTransport> transport_;
  Clock& clock_;
  RateLimiter limiter_;
  std::optional<std::string> api_key_;
  std::mutex rng_mu_;
  std::mt19937_64 rng_;
};

// Answers solely from a transcript store; a missing key is ReplayMiss.
class ReplayBackend : public ChatBackend {
 public:
  ReplayBackend(std::shared_ptr<const TranscriptStore> store, std::string fingerprint);
  std::string reply(const Conversation& conversation, const RenderedPrompt& prompt) override;
  std::string fingerprint() const override { return fingerprint_; }

 private:
  std::shared_ptr<const TranscriptStore> store_;
  std::string fingerprint_;
};

// Forwards to another backend and records every exchange.
class RecordingBackend : public ChatBackend {
 public:
  using Timestamp = std::function<std::string()>;
  RecordingBackend(ChatBackend& inner, std::shared_ptr<TranscriptStore> store, Timestamp timestamp = {});
  std::string reply(const Conversation& conversation, const RenderedPrompt& prompt) override;
  std::string fingerprint() const override { return inner_.fingerprint(); }

 private:
  ChatBackend& inner_;
  std::shared_ptr<TranscriptStore> store_;
  Timestamp timestamp_;
};

// Replies computed by a callback; used for tests and fixture generation.
class ScriptedBackend : public ChatBackend {
 public:
  using Script = std::function<std::string(const Conversation&, const RenderedPrompt&)>;
  ScriptedBackend(Script script, std::string fingerprint = "scripted");
  std::string reply(const Conversation& conversation, const RenderedPrompt& prompt) override;
  std::string fingerprint() const override { return fingerprint_; }

 private:
  Script script_;
  std::string fingerprint_;
};

// The reply a perfectly cooperative model would give to `prompt` for a
// sentence annotated with `gold`, in the answer form the prompt requests.
// Throws UnsupportedForm when gold cannot be written in that form.
std::string gold_oracle_reply(const Conversation& conversation, const RenderedPrompt& prompt,
                              const GoldAnnotation& gold, const TaskSchema& schema);

// Looks up the gold annotation by conversation id (= sample id).
class GoldOracleBackend : public ChatBackend {
 public:
  GoldOracleBackend(const TaskSchema& schema, const std::vector<Sample>& samples);
  std::string reply(const Conversation& conversation, const RenderedPrompt& prompt) override;
  std::string fingerprint() const override { return "gold-oracle"; }

 private:
  const TaskSchema& schema_;
  std::map<std::string, GoldAnnotation> gold_;
};

// Current UTC time as 2026-01-30T12:00:00Z.
std::string utc_timestamp();

}  // namespace mtie
