#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "mtie/schema.hpp"
#include "mtie/types.hpp"

namespace mtie {

enum class DatasetFormat { Nyt11, Duie2, Conllpp, Msra, Duee1, Ace05Lines };

std::string_view to_string(DatasetFormat format);
// Accepts the names used on the command line: nyt11, duie2, conllpp, msra,
// duee1, ace05-lines. Throws ConfigError.
DatasetFormat parse_dataset_format(std::string_view name);
Task task_of(DatasetFormat format);

// Line-delimited JSON, one sample per line; see docs/datasets.md for the
// fields of each format. Labels are mapped onto `schema` names (aliases and
// declared inverse relations included). Throws MalformedRecord (with the
// line number), UnknownLabel, or ConfigError when the schema's task does not
// fit the format.
std::vector<Sample> load_dataset(const std::filesystem::path& path, DatasetFormat format, const TaskSchema& schema);
std::vector<Sample> parse_dataset(std::string_view jsonl, DatasetFormat format, const TaskSchema& schema);

// A deterministic subset of n samples in their original order. The
// selection depends only on (|samples|, n, seed). Throws BadSize unless
// 0 < n <= |samples|.
std::vector<Sample> subsample(const std::vector<Sample>& samples, std::size_t n, std::uint64_t seed);

struct TagSpan {
  std::size_t begin = 0;  // token index
  std::size_t end = 0;    // one past the last token
  std::string type;
  bool operator==(const TagSpan&) const = default;
};

// BIO / BIOES decoding. I- after O or after a different type starts a new
// span; E- and S- close one.
std::vector<TagSpan> decode_tags(const std::vector<std::string>& tags);
// Inverse of decode_tags for non-overlapping spans, in BIO.
std::vector<std::string> encode_bio(std::size_t n_tokens, const std::vector<TagSpan>& spans);

// Surface string of a span: tokens joined by a space (EN) or nothing (ZH).
std::string join_tokens(const std::vector<std::string>& tokens, std::size_t begin, std::size_t end, Language language);

}  // namespace mtie
