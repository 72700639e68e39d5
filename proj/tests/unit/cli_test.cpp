#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "mtie/cli.hpp"
#include "mtie/error.hpp"
#include "test_support.hpp"

using namespace mtie;
using namespace mtie::cli;
namespace mt = mtie::testing;
namespace fs = std::filesystem;

namespace {

Settings base_flags(const fs::path& out) {
  return {{"schema", mt::data_path("schemas/nyt11-hrl.yaml").string()},
          {"dataset", mt::fixture_path("datasets/nyt11_cases.jsonl").string()},
          {"format", "nyt11"},
          {"output_dir", out.string()}};
}

EnvLookup fake_env(std::map<std::string, std::string> vars) {
  return [vars](const std::string& k) -> std::optional<std::string> {
    auto it = vars.find(k);
    if (it == vars.end()) return std::nullopt;
    return it->second;
  };
}

struct Captured {
  std::ostringstream out, err;
  Io io() { return {out, err}; }
};

}  // namespace

TEST(ResolveConfig, PrecedenceFlagsFileEnv) {
  auto dir = mt::scratch_dir("cfg");
  std::ofstream(dir / "run.yaml") << "workers: 7\nseed: 11\nrate-limit: 30\n";
  auto flags = base_flags(dir);
  flags["seed"] = "5";
  auto c = resolve_config(flags, dir / "run.yaml",
                          fake_env({{"MTIE_SEED", "1"}, {"MTIE_WORKERS", "2"}, {"MTIE_MODEL", "env-model"}}));
  EXPECT_EQ(c.seed, 5u);
  EXPECT_EQ(c.sources.at("seed"), "flag");
  EXPECT_EQ(c.workers, 7u);
  EXPECT_EQ(c.sources.at("workers"), "config");
  EXPECT_EQ(c.backend.rate_limit, 30);
  EXPECT_EQ(c.backend.model_name, "env-model");
  EXPECT_EQ(c.sources.at("model"), "env");
  EXPECT_EQ(c.task, Task::RE);
  EXPECT_EQ(c.sources.at("task"), "derived");
}

TEST(ResolveConfig, Rejections) {
  auto dir = mt::scratch_dir("cfg");
  auto flags = base_flags(dir);
  auto bad = [&](Settings f) {
    try {
      resolve_config(f, std::nullopt, fake_env({}));
    } catch (const Error& e) {
      return e.code() == ErrorCode::ConfigError;
    }
    return false;
  };
  auto f1 = flags;
  f1["colour"] = "blue";
  EXPECT_TRUE(bad(f1));
  auto f2 = flags;
  f2.erase("schema");
  EXPECT_TRUE(bad(f2));
  auto f3 = flags;
  f3["task"] = "ner";
  EXPECT_TRUE(bad(f3));
  auto f4 = flags;
  f4["workers"] = "many";
  EXPECT_TRUE(bad(f4));
  auto f5 = flags;
  f5["span_check"] = "perhaps";
  EXPECT_TRUE(bad(f5));
}

TEST(RunConfig, FingerprintTracksSemanticFieldsOnly) {
  auto dir = mt::scratch_dir("fp");
  auto base = resolve_config(base_flags(dir), std::nullopt, fake_env({}));
  auto fp = base.fingerprint();

  std::vector<std::pair<std::string, std::string>> semantic = {
      {"backend", "gold-oracle"}, {"endpoint", "http://h/v1"}, {"model", "m"},       {"timeout", "5"},
      {"max_retries", "1"},       {"rate_limit", "3"},         {"transcripts", "t"}, {"sample_limit", "2"},
      {"seed", "9"},              {"skip_stage1", "true"},     {"span_check", "true"}, {"record", "true"},
      {"dataset", "other.jsonl"}, {"schema", "other.yaml"}};
  std::set<std::string> seen = {fp};
  for (const auto& [k, v] : semantic) {
    auto flags = base_flags(dir);
    flags[k] = v;
    auto fpk = resolve_config(flags, std::nullopt, fake_env({})).fingerprint();
    EXPECT_NE(fpk, fp) << k;
    EXPECT_TRUE(seen.insert(fpk).second) << k;
  }
  for (const auto& [k, v] : std::vector<std::pair<std::string, std::string>>{
           {"workers", "16"}, {"output_dir", "/elsewhere"}, {"api_key_env", "OTHER_KEY"}}) {
    auto flags = base_flags(dir);
    flags[k] = v;
    EXPECT_EQ(resolve_config(flags, std::nullopt, fake_env({})).fingerprint(), fp) << k;
  }
}

TEST(AtomicWrite, ReplacesWholeFileAndLeavesNoTemp) {
  auto dir = mt::scratch_dir("atomic");
  write_file_atomic(dir / "a.txt", "first");
  write_file_atomic(dir / "a.txt", "second");
  EXPECT_EQ(mt::read_file(dir / "a.txt"), "second");
  std::size_t n = 0;
  for ([[maybe_unused]] const auto& e : fs::directory_iterator(dir)) ++n;
  EXPECT_EQ(n, 1u);
  EXPECT_THROW(write_file_atomic(dir / "missing" / "a.txt", "x"), Error);
  EXPECT_FALSE(fs::exists(dir / "missing" / "a.txt"));
}

TEST(CmdExtract, GoldOracleConllppScoresPerfectly) {
  auto dir = mt::scratch_dir("extract");
  Settings flags = {{"schema", mt::data_path("schemas/conllpp.yaml").string()},
                    {"dataset", mt::fixture_path("datasets/conllpp_cases.jsonl").string()},
                    {"format", "conllpp"},
                    {"backend", "gold-oracle"},
                    {"output_dir", (dir / "run").string()}};
  Captured cap;
  ASSERT_EQ(cmd_extract(resolve_config(flags, std::nullopt, fake_env({})), cap.io()), kExitOk) << cap.err.str();
  EXPECT_TRUE(fs::exists(dir / "run" / "manifest.json"));
  auto manifest = mt::read_file(dir / "run" / "manifest.json");
  EXPECT_NE(manifest.find("\"config_fingerprint\""), std::string::npos);
  EXPECT_EQ(manifest.find("sk-"), std::string::npos);

  EvalConfig ev{dir / "run" / "report.jsonl", mt::fixture_path("datasets/conllpp_cases.jsonl"),
                DatasetFormat::Conllpp,       mt::data_path("schemas/conllpp.yaml"),
                Regime::NERExact,             std::nullopt,
                dir / "eval"};
  Captured cap2;
  ASSERT_EQ(cmd_eval(ev, cap2.io()), kExitOk) << cap2.err.str();
  EXPECT_NE(mt::read_file(dir / "eval" / "metrics.json").find("\"f1\":1.0"), std::string::npos);
}

TEST(CmdExtract, TaskMismatchIsConfigExit) {
  auto dir = mt::scratch_dir("extract");
  auto flags = base_flags(dir);
  flags["schema"] = mt::data_path("schemas/duie2.yaml").string();
  flags["format"] = "nyt11";
  flags["backend"] = "gold-oracle";
  Captured cap;
  // duie2 is RE as well but rejects NYT labels.
  EXPECT_EQ(cmd_extract(resolve_config(flags, std::nullopt, fake_env({})), cap.io()), kExitConfig);
  flags["schema"] = mt::data_path("schemas/ace05.yaml").string();
  Captured cap2;
  EXPECT_EQ(cmd_extract(resolve_config(flags, std::nullopt, fake_env({})), cap2.io()), kExitConfig);
  auto err = cap2.err.str();
  EXPECT_NE(err.find("ConfigError"), std::string::npos);
  EXPECT_EQ(std::count(err.begin(), err.end(), '\n'), 1);
}

TEST(CmdReplay, FixtureAndFailures) {
  auto dir = mt::scratch_dir("replay");
  auto flags = base_flags(dir / "run");
  flags["transcripts"] = mt::fixture_path("transcripts/re_cases.jsonl").string();
  Captured cap;
  ASSERT_EQ(cmd_replay(resolve_config(flags, std::nullopt, fake_env({})), cap.io()), kExitOk) << cap.err.str();
  auto report = mt::read_file(dir / "run" / "report.jsonl");
  EXPECT_NE(report.find("\"subject\":\"Jacques Chirac\""), std::string::npos);

  auto missing = flags;
  missing["transcripts"] = (dir / "nope.jsonl").string();
  Captured c2;
  EXPECT_EQ(cmd_replay(resolve_config(missing, std::nullopt, fake_env({})), c2.io()), kExitConfig);

  auto live = flags;
  live["endpoint"] = "http://localhost:9/v1/chat/completions";
  Captured c3;
  EXPECT_EQ(cmd_replay(resolve_config(live, std::nullopt, fake_env({})), c3.io()), kExitConfig);

  // A store lacking one sample: the run completes, the miss is a failed sample.
  auto partial = flags;
  partial["dataset"] = mt::fixture_path("datasets/nyt11_cases.jsonl").string();
  partial["transcripts"] = mt::fixture_path("transcripts/ner_cases.jsonl").string();
  partial["fail_on_sample_errors"] = "true";
  Captured c4;
  EXPECT_EQ(cmd_replay(resolve_config(partial, std::nullopt, fake_env({})), c4.io()), kExitPartial);
  EXPECT_NE(c4.err.str().find("ReplayMiss"), std::string::npos);
}

TEST(CmdRecord, RecordThenReplayIsIdentical) {
  auto dir = mt::scratch_dir("record");
  auto fixture = TranscriptStore::load(mt::fixture_path("transcripts/re_cases.jsonl"));
  auto endpoint = std::make_shared<mt::StoreEndpoint>(fixture, "recorded-fixture");
  FakeClock clock;
  Runtime rt;
  rt.transport = [&](const std::string&) { return endpoint; };
  rt.clock = &clock;
  rt.timestamp = [] { return std::string("2026-01-01T00:00:00Z"); };

  auto flags = base_flags(dir / "live");
  flags["backend"] = "live";
  flags["endpoint"] = "http://mock/v1/chat/completions";
  flags["model"] = "recorded-fixture";
  flags["transcripts"] = (dir / "t.jsonl").string();
  flags["workers"] = "1";
  Captured cap;
  ASSERT_EQ(cmd_record(resolve_config(flags, std::nullopt, fake_env({})), cap.io(), rt), kExitOk) << cap.err.str();
  EXPECT_EQ(endpoint->calls(), 7u);
  EXPECT_EQ(mt::read_file(dir / "t.jsonl"), mt::read_file(mt::fixture_path("transcripts/re_cases.jsonl")));

  auto rflags = base_flags(dir / "replayed");
  rflags["transcripts"] = (dir / "t.jsonl").string();
  Captured cap2;
  ASSERT_EQ(cmd_replay(resolve_config(rflags, std::nullopt, fake_env({})), cap2.io(), rt), kExitOk);
  EXPECT_EQ(mt::strip_wall_time(mt::read_file(dir / "live" / "report.jsonl")),
            mt::strip_wall_time(mt::read_file(dir / "replayed" / "report.jsonl")));

  auto gold = flags;
  gold["backend"] = "gold-oracle";
  Captured cap3;
  EXPECT_EQ(cmd_record(resolve_config(gold, std::nullopt, fake_env({})), cap3.io(), rt), kExitConfig);
}

TEST(CmdEval, UnknownIdsAndRegimes) {
  auto dir = mt::scratch_dir("eval");
  std::ofstream(dir / "report.jsonl")
      << R"({"record":"sample","id":"ghost","status":"ok","turns_used":1,"warnings":[],"entities":[],"turns":[]})"
      << "\n"
      << R"({"record":"summary","task":"NER","schema":"conllpp","samples":1,"succeeded":1,"failed":0,"turns":1,"warnings":0,"wall_seconds":0})"
      << "\n";
  EvalConfig ev{dir / "report.jsonl",     mt::fixture_path("datasets/conllpp_cases.jsonl"),
                DatasetFormat::Conllpp,   mt::data_path("schemas/conllpp.yaml"),
                Regime::NERExact,         std::nullopt,
                dir / "out"};
  Captured cap;
  EXPECT_EQ(cmd_eval(ev, cap.io()), kExitConfig);
  EXPECT_NE(cap.err.str().find("IdMismatch"), std::string::npos);
  ev.regime = Regime::REStrict;
  Captured cap2;
  EXPECT_EQ(cmd_eval(ev, cap2.io()), kExitConfig);
  EXPECT_NE(cap2.err.str().find("RegimeUnsupported"), std::string::npos);
}

TEST(CmdSchemas, Validate) {
  auto dir = mt::scratch_dir("schemas");
  std::ofstream(dir / "bad.yaml") << "name: x\ntask: RE\nlanguage: EN\nrelations: []\n";
  Captured cap;
  EXPECT_EQ(cmd_schemas_validate({mt::data_path("schemas/conllpp.yaml")}, cap.io()), kExitOk);
  Captured cap2;
  EXPECT_EQ(cmd_schemas_validate({mt::data_path("schemas/conllpp.yaml"), dir / "bad.yaml"}, cap2.io()), kExitConfig);
}
