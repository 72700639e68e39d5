#include <gtest/gtest.h>

#include <deque>
#include <fstream>

#include "mtie/chat.hpp"
#include "mtie/error.hpp"
#include "mtie/text.hpp"
#include "test_support.hpp"

using namespace mtie;

namespace {

RenderedPrompt prompt(std::string text) {
  RenderedPrompt p;
  p.template_id = "t";
  p.text = std::move(text);
  return p;
}

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no mtie::Error thrown";
  return ErrorCode::ConfigError;
}

struct FakeTransport : HttpTransport {
  std::deque<HttpResponse> script;
  std::vector<std::string> bodies;
  std::vector<std::map<std::string, std::string>> headers;
  HttpResponse post(const std::string& body, const std::map<std::string, std::string>& h, double) override {
    bodies.push_back(body);
    headers.push_back(h);
    if (script.empty()) return {200, R"({"choices":[{"message":{"role":"assistant","content":"ok"}}]})", ""};
    auto r = script.front();
    script.pop_front();
    return r;
  }
};

BackendConfig live_config() {
  BackendConfig c;
  c.kind = BackendConfig::Kind::Live;
  c.endpoint = "http://localhost:1/v1/chat/completions";
  c.model_name = "test-model";
  c.max_retries = 2;
  c.api_key_env = "MTIE_TEST_UNSET_KEY";
  return c;
}

}  // namespace

TEST(Conversation, EnforcesAlternation) {
  Conversation c("s1");
  EXPECT_EQ(code_of([&] { c.append(Role::Assistant, "hi"); }), ErrorCode::ConfigError);
  c.append(Role::User, "q");
  EXPECT_EQ(code_of([&] { c.append(Role::User, "q2"); }), ErrorCode::ConfigError);
  EXPECT_EQ(code_of([&] { c.append(Role::Assistant, "  "); }), ErrorCode::ConfigError);
  c.append(Role::Assistant, "a");
  EXPECT_EQ(c.turns(), 1u);
}

TEST(Conversation, SystemMessageOnlyFirst) {
  Conversation c;
  c.append(Role::System, "be terse");
  c.append(Role::User, "q");
  c.append(Role::Assistant, "a");
  EXPECT_EQ(c.turns(), 1u);
  EXPECT_EQ(code_of([&] { c.append(Role::System, "again"); }), ErrorCode::ConfigError);
}

TEST(TranscriptKey, MatchesHandBuiltPreimage) {
  std::vector<ChatMessage> h = {{Role::User, "Say \"hi\"\n"}, {Role::Assistant, "hi"}, {Role::User, "日本"}};
  std::string preimage =
      "mtie-transcript-v1\nfp\n"
      R"([{"content":"Say \"hi\"\n","role":"user"},{"content":"hi","role":"assistant"},{"content":"日本","role":"user"}])";
  EXPECT_EQ(transcript_key("fp", h), text::sha256_hex(preimage));
  EXPECT_NE(transcript_key("fp2", h), transcript_key("fp", h));
}

TEST(TranscriptKey, Sha256KnownVector) {
  EXPECT_EQ(text::sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(TranscriptStore, AppendFindConflict) {
  TranscriptStore store;
  TranscriptEntry e{"", "fp", {{Role::User, "q"}}, "a", "2026-01-01T00:00:00Z"};
  e.key = transcript_key(e.fingerprint, e.messages);
  store.append(e);
  store.append(e);
  EXPECT_EQ(store.size(), 1u);
  ASSERT_TRUE(store.find(e.key));
  EXPECT_EQ(store.find(e.key)->reply, "a");
  auto other = e;
  other.reply = "b";
  EXPECT_EQ(code_of([&] { store.append(other); }), ErrorCode::MalformedTranscript);
}

TEST(TranscriptStore, FileRoundTripAndTamperCheck) {
  auto dir = mtie::testing::scratch_dir("store");
  auto path = dir / "t.jsonl";
  {
    auto store = TranscriptStore::open_for_append(path);
    TranscriptEntry e{"", "fp", {{Role::User, "q1"}}, "a1", "2026-01-01T00:00:00Z"};
    e.key = transcript_key(e.fingerprint, e.messages);
    store->append(e);
  }
  auto loaded = TranscriptStore::load(path);
  EXPECT_EQ(loaded->size(), 1u);
  EXPECT_EQ(loaded->fingerprints(), std::vector<std::string>{"fp"});

  auto body = mtie::testing::read_file(path);
  auto pos = body.find("q1");
  body.replace(pos, 2, "q2");
  std::ofstream(dir / "bad.jsonl") << body;
  EXPECT_EQ(code_of([&] { TranscriptStore::load(dir / "bad.jsonl"); }), ErrorCode::MalformedTranscript);
  std::ofstream(dir / "junk.jsonl") << "{not json\n";
  EXPECT_EQ(code_of([&] { TranscriptStore::load(dir / "junk.jsonl"); }), ErrorCode::MalformedTranscript);
}

TEST(RateLimiter, HundredRequestsAtTwentyPerMinute) {
  FakeClock clock;
  RateLimiter limiter(20, clock);
  std::vector<double> starts;
  for (int i = 0; i < 100; ++i) starts.push_back(limiter.acquire().count());
  EXPECT_DOUBLE_EQ(starts.front(), 0.0);
  // Five windows of 20: the last batch starts at 4 * 60 s and the budget
  // spans five full minutes.
  EXPECT_DOUBLE_EQ(starts.back(), 240.0);
  EXPECT_GE(starts.back() + 60.0, 300.0);
  for (std::size_t i = 20; i < starts.size(); ++i) EXPECT_GE(starts[i] - starts[i - 20], 60.0);
}

TEST(RateLimiter, WindowHoldsAtAwkwardStartTimes) {
  // x + 60 - x is below 60 for many doubles x.
  FakeClock clock(Seconds(12345.6789));
  RateLimiter limiter(3, clock);
  std::vector<double> starts;
  for (int i = 0; i < 3000; ++i) {
    starts.push_back(limiter.acquire().count());
    if (i % 7 == 0) clock.sleep_for(Seconds(0.7316));
  }
  for (std::size_t i = 3; i < starts.size(); ++i) ASSERT_GE(starts[i] - starts[i - 3], 60.0) << i;
}

TEST(Ask, RetriesBlankOnceThenFails) {
  int calls = 0;
  ScriptedBackend flaky([&](const Conversation&, const RenderedPrompt&) { return ++calls == 1 ? "  " : "fine"; });
  Conversation c("x");
  EXPECT_EQ(ask(c, prompt("q"), flaky), "fine");
  EXPECT_EQ(c.turns(), 1u);

  ScriptedBackend blank([](const Conversation&, const RenderedPrompt&) { return std::string(); });
  Conversation d("y");
  EXPECT_EQ(code_of([&] { ask(d, prompt("q"), blank); }), ErrorCode::EmptyReply);
  EXPECT_TRUE(d.messages().empty());
}

TEST(LiveBackend, RequestShapeAndAuth) {
  FakeClock clock;
  auto transport = std::make_shared<FakeTransport>();
  LiveBackend live(live_config(), transport, clock, std::string("sk-test"));
  Conversation c("s");
  EXPECT_EQ(ask(c, prompt("hello"), live), "ok");
  ASSERT_EQ(transport->bodies.size(), 1u);
  EXPECT_EQ(transport->bodies[0],
            R"({"messages":[{"content":"hello","role":"user"}],"model":"test-model","temperature":0})");
  EXPECT_EQ(transport->headers[0].at("Authorization"), "Bearer sk-test");
}

TEST(LiveBackend, RetriesServerErrorsWithBackoff) {
  FakeClock clock;
  auto transport = std::make_shared<FakeTransport>();
  transport->script = {{503, "busy", ""}, {0, "", "connection refused"}};
  LiveBackend live(live_config(), transport, clock);
  Conversation c("s");
  EXPECT_EQ(ask(c, prompt("q"), live), "ok");
  EXPECT_EQ(live.requests(), 3u);
  // backoff 1 s then 2 s, each plus jitter below the base
  EXPECT_GE(clock.now().count(), 3.0);
  EXPECT_LT(clock.now().count(), 6.0);
}

TEST(LiveBackend, ExhaustedRetriesMapToErrors) {
  FakeClock clock;
  auto t429 = std::make_shared<FakeTransport>();
  t429->script = {{429, "", ""}, {429, "", ""}, {429, "", ""}};
  LiveBackend a(live_config(), t429, clock);
  Conversation c("s");
  EXPECT_EQ(code_of([&] { ask(c, prompt("q"), a); }), ErrorCode::RateLimited);

  auto t400 = std::make_shared<FakeTransport>();
  t400->script = {{400, "bad request", ""}};
  LiveBackend b(live_config(), t400, clock);
  EXPECT_EQ(code_of([&] { ask(c, prompt("q"), b); }), ErrorCode::TransportError);
  EXPECT_EQ(t400->bodies.size(), 1u);
}

TEST(LiveBackend, ForbiddenWithoutNetwork) {
  FakeClock clock;
  auto cfg = live_config();
  cfg.allow_network = false;
  EXPECT_EQ(code_of([&] { LiveBackend(cfg, std::make_shared<FakeTransport>(), clock); }),
            ErrorCode::NetworkForbidden);
}

TEST(BackendConfig, ValidateNamesMissingField) {
  BackendConfig c;
  c.kind = BackendConfig::Kind::Replay;
  EXPECT_EQ(code_of([&] { c.validate(); }), ErrorCode::ConfigError);
  EXPECT_EQ(parse_backend_kind("gold-oracle"), BackendConfig::Kind::GoldOracle);
  EXPECT_EQ(code_of([&] { parse_backend_kind("psychic"); }), ErrorCode::ConfigError);
}

TEST(RecordReplay, ReplayAnswersWhatWasRecorded) {
  auto store = std::make_shared<TranscriptStore>();
  ScriptedBackend scripted([](const Conversation& c, const RenderedPrompt& p) { return c.id() + ":" + p.text; }, "m");
  RecordingBackend rec(scripted, store, [] { return std::string("T"); });
  Conversation a("a");
  ask(a, prompt("one"), rec);
  ask(a, prompt("two"), rec);
  EXPECT_EQ(store->size(), 2u);

  ReplayBackend replay(store, "m");
  Conversation b("a");
  EXPECT_EQ(ask(b, prompt("one"), replay), "a:one");
  EXPECT_EQ(ask(b, prompt("two"), replay), "a:two");
  EXPECT_EQ(b.messages(), a.messages());

  Conversation other("a");
  EXPECT_EQ(code_of([&] { ask(other, prompt("two"), replay); }), ErrorCode::ReplayMiss);
  ReplayBackend wrong_model(store, "m2");
  Conversation e("a");
  EXPECT_EQ(code_of([&] { ask(e, prompt("one"), wrong_model); }), ErrorCode::ReplayMiss);
}

TEST(HttpTransport, RejectsUnknownScheme) {
  EXPECT_EQ(code_of([] { make_http_transport("ftp://example.org/x"); }), ErrorCode::ConfigError);
}
