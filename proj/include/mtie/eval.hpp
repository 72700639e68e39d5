#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "mtie/pipeline.hpp"
#include "mtie/schema.hpp"
#include "mtie/types.hpp"

namespace mtie {

enum class Regime { REBorder, REStrict, NERExact, EEWordLevel, EEEntityLevel };

std::string_view to_string(Regime regime);
// "RE-border", "RE-strict", "NER-exact", "EE-wordlevel", "EE-entitylevel";
// also accepts "border", "strict", "exact", "wordlevel", "entitylevel".
Regime parse_regime(std::string_view name);
Task task_of(Regime regime);

struct Counts {
  double tp = 0;  // fractional in the word-level regime
  std::size_t n_pred = 0;
  std::size_t n_gold = 0;
  bool operator==(const Counts&) const = default;
};

struct PRF {
  double precision = 0;
  double recall = 0;
  double f1 = 0;
};

// Divisions by zero yield 0.
PRF micro_f1(double tp, std::size_t n_pred, std::size_t n_gold);

struct MetricReport {
  Task task = Task::RE;
  Regime regime = Regime::REBorder;
  double tp = 0;
  std::size_t n_pred = 0;
  std::size_t n_gold = 0;
  double precision = 0;
  double recall = 0;
  double f1 = 0;
  std::map<std::string, Counts> per_type;

  // Pools another report's counts (same regime) and recomputes P/R/F1.
  void add(const MetricReport& other);
  void recompute();

  // Regime label; the word-level regime is this library's own definition.
  std::string label() const;
  std::string to_json() const;
  // P/R/F1 in percent, one decimal, then one row per type.
  std::string to_table() const;
};

// Cleanup applied to every compared string, identical to parser cell
// cleanup (after full-width punctuation mapping). No case folding.
std::string eval_cleanup(std::string_view s);

// Triples match on cleaned (subject, relation, object, attributes); the
// strict regime also compares subject and object types. Triples stated with
// a declared inverse relation are rewritten to the canonical direction on
// both sides first. Matching is one-to-one. Throws RegimeUnsupported for a
// non-RE regime or, under strict, gold triples without types.
MetricReport score_re(const TripleSet& pred, const TripleSet& gold, Regime regime,
                      const std::vector<InverseRelation>& equivalences = {});

MetricReport score_ner(const EntitySet& pred, const EntitySet& gold);

// Unit: (event_type, role, content) argument tuples.
MetricReport score_ee_entity(const EventSet& pred, const EventSet& gold);

// Per (event_type, role) slot, predicted and gold contents are paired by the
// assignment maximizing total token F1; each pair contributes its token F1
// to tp. Tokens: whitespace-separated (EN) or characters (ZH).
MetricReport score_ee_wordlevel(const EventSet& pred, const EventSet& gold, Language language);

// Bag-of-tokens F1 between two strings.
double token_f1(std::string_view pred, std::string_view gold, Language language);
std::vector<std::string> eval_tokens(std::string_view s, Language language);

// Maximum total weight of a one-to-one assignment in a rectangular matrix
// of non-negative weights.
double max_weight_assignment(const std::vector<std::vector<double>>& weights);

// Scores a whole run against the dataset gold. Samples that failed count as
// empty predictions. Throws IdMismatch for predictions of unknown samples.
MetricReport score_report(const BatchReport& predictions, const std::vector<Sample>& gold, Regime regime,
                          const TaskSchema& schema);

}  // namespace mtie
