#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mtie/cli.hpp"
#include "mtie/error.hpp"

namespace {

struct RunFlags {
  std::map<std::string, std::string> values;
  std::optional<std::string> config;
  bool skip_stage1 = false;
  bool ask_stage1 = false;
  bool span_check = false;
  bool record = false;
  bool fail_on_sample_errors = false;
};

void add_run_options(CLI::App* cmd, RunFlags& f) {
  auto opt = [&](const std::string& name, const std::string& key, const std::string& help) {
    cmd->add_option_function<std::string>(name, [&f, key](const std::string& v) { f.values[key] = v; }, help);
  };
  cmd->add_option("--config", f.config, "YAML file with run settings (flags win over it, it wins over MTIE_* env)");
  opt("--task", "task", "re, ner or ee (default: from --format)");
  opt("--schema", "schema", "schema YAML file");
  opt("--dataset", "dataset", "line-delimited dataset file");
  opt("--format", "format", "nyt11, duie2, conllpp, msra, duee1 or ace05-lines");
  opt("--backend", "backend", "live, replay or gold-oracle");
  opt("--endpoint", "endpoint", "chat-completions URL (live backend)");
  opt("--model", "model", "model name; also selects the replay fingerprint");
  opt("--timeout", "timeout", "request timeout in seconds");
  opt("--max-retries", "max_retries", "retries on transport errors, 429 and 5xx");
  opt("--rate-limit", "rate_limit", "requests per minute");
  opt("--transcripts", "transcripts", "transcript store (JSONL)");
  opt("--api-key-env", "api_key_env", "environment variable holding the API key");
  opt("--sample-limit", "sample_limit", "extract a seeded random subset of this size");
  opt("--seed", "seed", "subset seed");
  opt("--workers", "workers", "parallel samples");
  opt("--output-dir,-o", "output_dir", "directory for report.jsonl and manifest.json");
  cmd->add_flag("--skip-stage1", f.skip_stage1, "NER: ask for every entity type directly");
  cmd->add_flag("--no-skip-stage1", f.ask_stage1, "NER: always ask the type question first");
  cmd->add_flag("--span-check", f.span_check, "drop extracted strings that are not in the sentence");
  cmd->add_flag("--record", f.record, "persist every exchange to the transcript store");
  cmd->add_flag("--fail-on-sample-errors", f.fail_on_sample_errors, "exit 2 when any sample failed");
}

mtie::cli::Settings to_settings(const RunFlags& f) {
  auto s = f.values;
  if (f.skip_stage1) s["skip_stage1"] = "true";
  if (f.ask_stage1) s["skip_stage1"] = "false";
  if (f.span_check) s["span_check"] = "true";
  if (f.record) s["record"] = "true";
  if (f.fail_on_sample_errors) s["fail_on_sample_errors"] = "true";
  return s;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Zero-shot information extraction through multi-turn chat"};
  app.require_subcommand(1);

  RunFlags extract_flags, record_flags, replay_flags;
  auto* extract = app.add_subcommand("extract", "run extraction over a dataset");
  add_run_options(extract, extract_flags);
  auto* record = app.add_subcommand("record", "run against a live endpoint and persist transcripts");
  add_run_options(record, record_flags);
  auto* replay = app.add_subcommand("replay", "rerun from a transcript store without network access");
  add_run_options(replay, replay_flags);

  mtie::cli::EvalConfig eval_cfg;
  std::string eval_format, eval_regime, eval_equivalences;
  auto* eval = app.add_subcommand("eval", "score a report against dataset gold");
  eval->add_option("--predictions", eval_cfg.predictions, "report.jsonl from extract")->required();
  eval->add_option("--dataset", eval_cfg.dataset, "dataset file with gold")->required();
  eval->add_option("--format", eval_format, "dataset format")->required();
  eval->add_option("--schema", eval_cfg.schema, "schema YAML file")->required();
  eval->add_option("--regime", eval_regime,
                   "RE-border, RE-strict, NER-exact, EE-wordlevel or EE-entitylevel")->required();
  eval->add_option("--equivalences", eval_equivalences, "YAML list of [inverse, canonical] relation pairs");
  eval->add_option("--output-dir,-o", eval_cfg.output_dir, "directory for metrics.json and metrics.txt")->required();

  auto* schemas = app.add_subcommand("schemas", "schema utilities");
  schemas->require_subcommand(1);
  std::vector<std::string> schema_paths;
  auto* validate = schemas->add_subcommand("validate", "load and check schema files");
  validate->add_option("paths", schema_paths, "schema files")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : mtie::cli::kExitConfig;
  }

  mtie::cli::Io io{std::cout, std::cerr};
  auto run = [&](RunFlags& f, auto&& cmd) -> int {
    try {
      std::optional<std::filesystem::path> config;
      if (f.config) config = *f.config;
      auto cfg = mtie::cli::resolve_config(to_settings(f), config, mtie::cli::process_env());
      return cmd(cfg);
    } catch (const std::exception& e) {
      std::cerr << "mtie: " << e.what() << "\n";
      return mtie::cli::kExitConfig;
    }
  };

  if (*extract) return run(extract_flags, [&](auto& c) { return mtie::cli::cmd_extract(c, io); });
  if (*record) return run(record_flags, [&](auto& c) { return mtie::cli::cmd_record(c, io); });
  if (*replay) return run(replay_flags, [&](auto& c) { return mtie::cli::cmd_replay(c, io); });
  if (*eval) {
    try {
      eval_cfg.format = mtie::parse_dataset_format(eval_format);
      eval_cfg.regime = mtie::parse_regime(eval_regime);
      if (!eval_equivalences.empty()) eval_cfg.equivalences = eval_equivalences;
    } catch (const std::exception& e) {
      std::cerr << "mtie: " << e.what() << "\n";
      return mtie::cli::kExitConfig;
    }
    return mtie::cli::cmd_eval(eval_cfg, io);
  }
  std::vector<std::filesystem::path> paths(schema_paths.begin(), schema_paths.end());
  return mtie::cli::cmd_schemas_validate(paths, io);
}
