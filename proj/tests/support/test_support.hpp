#pragma once

#include <filesystem>
#include <atomic>
#include <memory>
#include <string>

#include "mtie/chat.hpp"
#include "mtie/schema.hpp"

namespace mtie::testing {

std::filesystem::path fixture_path(const std::string& relative);
std::filesystem::path data_path(const std::string& relative);
std::string read_file(const std::filesystem::path& path);

// One of the shipped schemas under data/schemas, by file stem.
const TaskSchema& shipped_schema(const std::string& name);

// A fresh, empty scratch directory under the system temp dir.
std::filesystem::path scratch_dir(const std::string& tag);

// A chat-completions endpoint stand-in: answers each request body from a
// transcript store, keyed as if the request came from `fingerprint`.
// Unknown conversations get 404.
class StoreEndpoint : public HttpTransport {
 public:
  StoreEndpoint(std::shared_ptr<const TranscriptStore> store, std::string fingerprint);
  HttpResponse post(const std::string& body, const std::map<std::string, std::string>& headers,
                    double timeout_s) override;
  std::size_t calls() const { return calls_.load(); }

 private:
  std::shared_ptr<const TranscriptStore> store_;
  std::string fingerprint_;
  std::atomic<std::size_t> calls_{0};
};

// report.jsonl text with the summary's wall_seconds removed.
std::string strip_wall_time(const std::string& report_jsonl);

}  // namespace mtie::testing
