#include "mtie/datasets.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include <nlohmann/json.hpp>

#include "mtie/error.hpp"
#include "mtie/text.hpp"

namespace mtie {

using nlohmann::json;

std::string_view to_string(DatasetFormat format) {
  switch (format) {
    case DatasetFormat::Nyt11: return "nyt11";
    case DatasetFormat::Duie2: return "duie2";
    case DatasetFormat::Conllpp: return "conllpp";
    case DatasetFormat::Msra: return "msra";
    case DatasetFormat::Duee1: return "duee1";
    case DatasetFormat::Ace05Lines: return "ace05-lines";
  }
  return "nyt11";
}

DatasetFormat parse_dataset_format(std::string_view name) {
  for (auto f : {DatasetFormat::Nyt11, DatasetFormat::Duie2, DatasetFormat::Conllpp, DatasetFormat::Msra,
                 DatasetFormat::Duee1, DatasetFormat::Ace05Lines}) {
    if (to_string(f) == name) return f;
  }
  throw Error(ErrorCode::ConfigError, "unknown dataset format '" + std::string(name) +
                                          "' (expected nyt11, duie2, conllpp, msra, duee1 or ace05-lines)");
}

Task task_of(DatasetFormat format) {
  switch (format) {
    case DatasetFormat::Nyt11:
    case DatasetFormat::Duie2: return Task::RE;
    case DatasetFormat::Conllpp:
    case DatasetFormat::Msra: return Task::NER;
    case DatasetFormat::Duee1:
    case DatasetFormat::Ace05Lines: return Task::EE;
  }
  return Task::RE;
}

// ---- BIO ------------------------------------------------------------------

std::vector<TagSpan> decode_tags(const std::vector<std::string>& tags) {
  std::vector<TagSpan> spans;
  bool open = false;
  auto close = [&](std::size_t end) {
    if (open) spans.back().end = end;
    open = false;
  };
  for (std::size_t i = 0; i < tags.size(); ++i) {
    const auto& tag = tags[i];
    if (tag.empty() || tag == "O") {
      close(i);
      continue;
    }
    char prefix = 'B';
    std::string type = tag;
    if (tag.size() >= 2 && (tag[1] == '-' || tag[1] == '_') && std::string_view("BIESM").find(tag[0]) != std::string_view::npos) {
      prefix = tag[0];
      type = tag.substr(2);
    }
    bool continues = open && spans.back().type == type && (prefix == 'I' || prefix == 'E' || prefix == 'M');
    if (!continues) {
      close(i);
      spans.push_back({i, i + 1, type});
      open = true;
    }
    spans.back().end = i + 1;
    if (prefix == 'E' || prefix == 'S') close(i + 1);
  }
  close(tags.size());
  return spans;
}

std::vector<std::string> encode_bio(std::size_t n_tokens, const std::vector<TagSpan>& spans) {
  std::vector<std::string> tags(n_tokens, "O");
  for (const auto& s : spans) {
    if (s.begin >= s.end || s.end > n_tokens) throw Error(ErrorCode::MalformedRecord, "span out of range");
    tags[s.begin] = "B-" + s.type;
    for (auto i = s.begin + 1; i < s.end; ++i) tags[i] = "I-" + s.type;
  }
  return tags;
}

std::string join_tokens(const std::vector<std::string>& tokens, std::size_t begin, std::size_t end, Language language) {
  std::string out;
  for (auto i = begin; i < end; ++i) {
    if (i > begin && language == Language::EN) out += ' ';
    out += tokens[i];
  }
  return out;
}

// ---- loaders --------------------------------------------------------------

namespace {

class RecordReader {
 public:
  RecordReader(const TaskSchema& schema, std::size_t line) : schema_(schema), line_(line) {}

  [[noreturn]] void malformed(const std::string& what) const {
    throw Error(ErrorCode::MalformedRecord, "line " + std::to_string(line_) + ": " + what);
  }
  [[noreturn]] void unknown(const std::string& kind, const std::string& label) const {
    throw Error(ErrorCode::UnknownLabel, "line " + std::to_string(line_) + ": " + kind + " '" + label +
                                             "' is not in schema '" + schema_.name + "'");
  }

  std::string str(const json& j, const char* key) const {
    if (!j.is_object() || !j.contains(key)) malformed(std::string("missing field '") + key + "'");
    const auto& v = j.at(key);
    if (!v.is_string()) malformed(std::string("field '") + key + "' must be a string");
    return v.get<std::string>();
  }

  const json& arr(const json& j, const char* key) const {
    if (!j.is_object() || !j.contains(key)) malformed(std::string("missing field '") + key + "'");
    const auto& v = j.at(key);
    if (!v.is_array()) malformed(std::string("field '") + key + "' must be a list");
    return v;
  }

  std::string label(const std::string& raw, const char* kind) const {
    auto r = resolve_label(schema_, raw);
    if (!r) unknown(kind, raw);
    return *r;
  }

  std::string id(const json& j) const {
    if (j.contains("id")) {
      const auto& v = j.at("id");
      if (v.is_string()) return v.get<std::string>();
      if (v.is_number_integer()) return std::to_string(v.get<long long>());
      malformed("field 'id' must be a string or integer");
    }
    return "line-" + std::to_string(line_);
  }

  std::string nonempty(std::string s, const char* what) const {
    if (text::trim(s).empty()) malformed(std::string(what) + " is empty");
    return s;
  }

  const TaskSchema& schema_;
  std::size_t line_;
};

// "/location/location/contains" -> "location-contains"
std::string freebase_short_name(const std::string& rtext) {
  if (rtext.empty() || rtext[0] != '/') return rtext;
  auto last = rtext.rfind('/');
  auto prev = rtext.rfind('/', last - 1);
  if (last == 0 || prev == std::string::npos) return rtext.substr(1);
  return rtext.substr(prev + 1, last - prev - 1) + "-" + rtext.substr(last + 1);
}

Sample read_nyt11(const json& j, const RecordReader& r) {
  Sample s{r.id(j), r.nonempty(r.str(j, "sentext"), "sentext"), {}};
  TripleSet triples;
  for (const auto& rel : r.arr(j, "relations")) {
    auto rtext = r.str(rel, "rtext");
    if (rtext == "None" || rtext == "NA") continue;
    Triple t;
    t.subject = r.nonempty(r.str(rel, "em1"), "em1");
    t.object = r.nonempty(r.str(rel, "em2"), "em2");
    t.relation = r.label(freebase_short_name(rtext), "relation");
    triples.insert(std::move(t));
  }
  s.gold = GoldAnnotation{std::move(triples)};
  return s;
}

Sample read_duie2(const json& j, const RecordReader& r) {
  Sample s{r.id(j), r.nonempty(r.str(j, "text"), "text"), {}};
  TripleSet triples;
  for (const auto& spo : r.arr(j, "spo_list")) {
    Triple t;
    t.relation = r.label(r.str(spo, "predicate"), "relation");
    const auto& rel = lookup_relation(r.schema_, t.relation);
    t.subject = r.nonempty(r.str(spo, "subject"), "subject");
    t.subject_type = r.str(spo, "subject_type");
    if (!spo.contains("object") || !spo.at("object").is_object()) r.malformed("'object' must be an object");
    if (!spo.contains("object_type") || !spo.at("object_type").is_object()) r.malformed("'object_type' must be an object");
    const auto& obj = spo.at("object");
    t.object = r.nonempty(r.str(obj, "@value"), "object @value");
    t.object_type = r.str(spo.at("object_type"), "@value");
    for (const auto& [key, value] : obj.items()) {
      if (key == "@value") continue;
      if (!value.is_string()) r.malformed("object attribute '" + key + "' must be a string");
      bool known = std::any_of(rel.object_chain.begin(), rel.object_chain.end(),
                               [&](const AttributeSpec& a) { return a.attribute_name == key; });
      if (!known) r.unknown("attribute of " + rel.name, key);
      t.attributes.emplace(key, value.get<std::string>());
    }
    triples.insert(std::move(t));
  }
  s.gold = GoldAnnotation{std::move(triples)};
  return s;
}

Sample read_tagged(const json& j, const RecordReader& r, Language language) {
  const auto& tokens_j = r.arr(j, "tokens");
  const auto& tags_j = r.arr(j, "tags");
  if (tokens_j.size() != tags_j.size()) r.malformed("tokens and tags differ in length");
  if (tokens_j.empty()) r.malformed("no tokens");
  std::vector<std::string> tokens, tags;
  for (const auto& t : tokens_j) {
    if (!t.is_string()) r.malformed("tokens must be strings");
    tokens.push_back(t.get<std::string>());
  }
  for (const auto& t : tags_j) {
    if (!t.is_string()) r.malformed("tags must be strings");
    tags.push_back(t.get<std::string>());
  }
  Sample s{r.id(j), join_tokens(tokens, 0, tokens.size(), language), {}};
  if (j.contains("text")) s.sentence = r.nonempty(r.str(j, "text"), "text");
  EntitySet entities;
  for (const auto& span : decode_tags(tags)) {
    entities.insert({join_tokens(tokens, span.begin, span.end, language), r.label(span.type, "entity type")});
  }
  s.gold = GoldAnnotation{std::move(entities)};
  return s;
}

EventSet read_events(const json& events, const RecordReader& r, const char* content_key) {
  std::map<std::string, std::set<Argument>> grouped;
  for (const auto& ev : events) {
    auto type = r.label(r.str(ev, "event_type"), "event type");
    const auto& spec = lookup_event_type(r.schema_, type);
    auto& args = grouped[type];
    for (const auto& a : r.arr(ev, "arguments")) {
      auto raw_role = r.str(a, "role");
      auto role = resolve_role(r.schema_, spec, raw_role);
      if (!role) r.unknown("role of " + type, raw_role);
      std::string content = a.contains(content_key) ? r.str(a, content_key) : r.str(a, "argument");
      args.insert({*role, r.nonempty(content, "argument")});
    }
  }
  EventSet out;
  for (auto& [type, args] : grouped) out.insert({type, std::move(args)});
  return out;
}

Sample read_duee1(const json& j, const RecordReader& r) {
  Sample s{r.id(j), r.nonempty(r.str(j, "text"), "text"), {}};
  s.gold = GoldAnnotation{read_events(r.arr(j, "event_list"), r, "argument")};
  return s;
}

Sample read_ace05(const json& j, const RecordReader& r) {
  Sample s{r.id(j), r.nonempty(r.str(j, "sentence"), "sentence"), {}};
  s.gold = GoldAnnotation{read_events(r.arr(j, "events"), r, "content")};
  return s;
}

}  // namespace

std::vector<Sample> parse_dataset(std::string_view jsonl, DatasetFormat format, const TaskSchema& schema) {
  if (schema.task != task_of(format)) {
    throw Error(ErrorCode::ConfigError, "dataset format " + std::string(to_string(format)) + " is " +
                                            std::string(to_string(task_of(format))) + " but schema '" + schema.name +
                                            "' is " + std::string(to_string(schema.task)));
  }
  std::vector<Sample> out;
  std::set<std::string> ids;
  auto lines = text::split_lines(jsonl);
  for (std::size_t n = 0; n < lines.size(); ++n) {
    if (text::trim(lines[n]).empty()) continue;
    RecordReader r(schema, n + 1);
    json j;
    try {
      j = json::parse(lines[n]);
    } catch (const json::exception& e) {
      r.malformed(std::string("invalid JSON: ") + e.what());
    }
    if (!j.is_object()) r.malformed("record must be a JSON object");
    Sample s;
    switch (format) {
      case DatasetFormat::Nyt11: s = read_nyt11(j, r); break;
      case DatasetFormat::Duie2: s = read_duie2(j, r); break;
      case DatasetFormat::Conllpp: s = read_tagged(j, r, Language::EN); break;
      case DatasetFormat::Msra: s = read_tagged(j, r, Language::ZH); break;
      case DatasetFormat::Duee1: s = read_duee1(j, r); break;
      case DatasetFormat::Ace05Lines: s = read_ace05(j, r); break;
    }
    if (!ids.insert(s.id).second) r.malformed("duplicate id '" + s.id + "'");
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<Sample> load_dataset(const std::filesystem::path& path, DatasetFormat format, const TaskSchema& schema) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::MalformedRecord, "cannot open dataset " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_dataset(ss.str(), format, schema);
}

// ---- subsampling -------------------------------------------------------------

namespace {

// Uniform integer in [0, bound) from raw 64-bit draws. Standard
// distributions are implementation-defined, so they would break
// cross-platform stability.
std::uint64_t bounded(std::mt19937_64& rng, std::uint64_t bound) {
  std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return x % bound;
}

}  // namespace

std::vector<Sample> subsample(const std::vector<Sample>& samples, std::size_t n, std::uint64_t seed) {
  if (n == 0 || n > samples.size()) {
    throw Error(ErrorCode::BadSize, "cannot draw " + std::to_string(n) + " of " + std::to_string(samples.size()) + " samples");
  }
  std::vector<std::size_t> idx(samples.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i < n; ++i) {
    auto j = i + bounded(rng, idx.size() - i);
    std::swap(idx[i], idx[j]);
  }
  idx.resize(n);
  std::sort(idx.begin(), idx.end());
  std::vector<Sample> out;
  out.reserve(n);
  for (auto i : idx) out.push_back(samples[i]);
  return out;
}

}  // namespace mtie
