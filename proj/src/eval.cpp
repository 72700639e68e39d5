#include "mtie/eval.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>

#include <nlohmann/json.hpp>

#include "mtie/error.hpp"
#include "mtie/text.hpp"

namespace mtie {

std::string_view to_string(Regime regime) {
  switch (regime) {
    case Regime::REBorder: return "RE-border";
    case Regime::REStrict: return "RE-strict";
    case Regime::NERExact: return "NER-exact";
    case Regime::EEWordLevel: return "EE-wordlevel";
    case Regime::EEEntityLevel: return "EE-entitylevel";
  }
  return "RE-border";
}

Regime parse_regime(std::string_view name) {
  auto n = text::ascii_lower(name);
  if (n == "re-border" || n == "border") return Regime::REBorder;
  if (n == "re-strict" || n == "strict") return Regime::REStrict;
  if (n == "ner-exact" || n == "exact") return Regime::NERExact;
  if (n == "ee-wordlevel" || n == "wordlevel" || n == "word-level") return Regime::EEWordLevel;
  if (n == "ee-entitylevel" || n == "entitylevel" || n == "entity-level") return Regime::EEEntityLevel;
  throw Error(ErrorCode::RegimeUnsupported, "unknown regime '" + std::string(name) + "'");
}

Task task_of(Regime regime) {
  switch (regime) {
    case Regime::REBorder:
    case Regime::REStrict: return Task::RE;
    case Regime::NERExact: return Task::NER;
    case Regime::EEWordLevel:
    case Regime::EEEntityLevel: return Task::EE;
  }
  return Task::RE;
}

PRF micro_f1(double tp, std::size_t n_pred, std::size_t n_gold) {
  PRF r;
  r.precision = n_pred == 0 ? 0.0 : tp / static_cast<double>(n_pred);
  r.recall = n_gold == 0 ? 0.0 : tp / static_cast<double>(n_gold);
  r.f1 = r.precision + r.recall == 0 ? 0.0 : 2 * r.precision * r.recall / (r.precision + r.recall);
  return r;
}

void MetricReport::recompute() {
  auto r = micro_f1(tp, n_pred, n_gold);
  precision = r.precision;
  recall = r.recall;
  f1 = r.f1;
}

void MetricReport::add(const MetricReport& other) {
  if (other.regime != regime) throw Error(ErrorCode::RegimeUnsupported, "cannot pool reports of different regimes");
  tp += other.tp;
  n_pred += other.n_pred;
  n_gold += other.n_gold;
  for (const auto& [type, c] : other.per_type) {
    auto& mine = per_type[type];
    mine.tp += c.tp;
    mine.n_pred += c.n_pred;
    mine.n_gold += c.n_gold;
  }
  recompute();
}

std::string MetricReport::label() const {
  if (regime == Regime::EEWordLevel) return "word-level (mtie definition)";
  return std::string(to_string(regime));
}

std::string MetricReport::to_json() const {
  nlohmann::json per = nlohmann::json::object();
  for (const auto& [type, c] : per_type) {
    auto prf = micro_f1(c.tp, c.n_pred, c.n_gold);
    per[type] = {{"tp", c.tp}, {"n_pred", c.n_pred}, {"n_gold", c.n_gold},
                 {"precision", prf.precision}, {"recall", prf.recall}, {"f1", prf.f1}};
  }
  nlohmann::json j = {{"task", std::string(mtie::to_string(task))},
                      {"regime", std::string(mtie::to_string(regime))},
                      {"label", label()},
                      {"tp", tp},
                      {"n_pred", n_pred},
                      {"n_gold", n_gold},
                      {"precision", precision},
                      {"recall", recall},
                      {"f1", f1},
                      {"per_type", per}};
  return j.dump();
}

std::string MetricReport::to_table() const {
  std::ostringstream out;
  auto pct = [](double v) {
    std::ostringstream s;
    s << std::fixed << std::setprecision(1) << v * 100.0;
    return s.str();
  };
  std::size_t width = label().size();
  for (const auto& [type, _] : per_type) width = std::max(width, text::utf8_chars(type).size() + 2);
  auto pad = [&](const std::string& s) {
    auto w = text::utf8_chars(s).size();
    return s + std::string(width > w ? width - w : 0, ' ');
  };
  auto row = [&](const std::string& name, double p, double r, double f) {
    out << pad(name) << "  " << std::setw(6) << pct(p) << "  " << std::setw(6) << pct(r) << "  " << std::setw(6)
        << pct(f) << "\n";
  };
  out << pad("") << "  " << std::setw(6) << "P" << "  " << std::setw(6) << "R" << "  " << std::setw(6) << "F1" << "\n";
  row(label(), precision, recall, f1);
  for (const auto& [type, c] : per_type) {
    auto prf = micro_f1(c.tp, c.n_pred, c.n_gold);
    row("  " + type, prf.precision, prf.recall, prf.f1);
  }
  return out.str();
}

std::string eval_cleanup(std::string_view s) { return text::clean_cell(text::normalize_punctuation(s)); }

namespace {

using Key = std::vector<std::string>;

// Multiset intersection over keys; key[0] is the per-type bucket.
MetricReport score_keys(Task task, Regime regime, const std::vector<Key>& pred, const std::vector<Key>& gold) {
  MetricReport r;
  r.task = task;
  r.regime = regime;
  std::map<Key, std::size_t> pred_count, gold_count;
  for (const auto& k : pred) {
    ++pred_count[k];
    ++r.per_type[k[0]].n_pred;
  }
  for (const auto& k : gold) {
    ++gold_count[k];
    ++r.per_type[k[0]].n_gold;
  }
  for (const auto& [k, n] : pred_count) {
    auto it = gold_count.find(k);
    if (it == gold_count.end()) continue;
    auto m = static_cast<double>(std::min(n, it->second));
    r.tp += m;
    r.per_type[k[0]].tp += m;
  }
  r.n_pred = pred.size();
  r.n_gold = gold.size();
  r.recompute();
  return r;
}

Triple canonical(const Triple& t, const std::vector<InverseRelation>& eq) {
  auto key = text::canonicalize(t.relation);
  for (const auto& inv : eq) {
    if (text::canonicalize(inv.inverse) != key) continue;
    Triple out = t;
    out.relation = inv.canonical;
    std::swap(out.subject, out.object);
    std::swap(out.subject_type, out.object_type);
    return out;
  }
  return t;
}

Key triple_key(const Triple& raw, Regime regime, const std::vector<InverseRelation>& eq) {
  auto t = canonical(raw, eq);
  Key k = {text::canonicalize(t.relation), eval_cleanup(t.subject), eval_cleanup(t.object)};
  for (const auto& [name, value] : t.attributes) k.push_back(name + "=" + eval_cleanup(value));
  if (regime == Regime::REStrict) {
    k.push_back("@s:" + text::canonicalize(t.subject_type));
    k.push_back("@o:" + text::canonicalize(t.object_type));
  }
  return k;
}

}  // namespace

MetricReport score_re(const TripleSet& pred, const TripleSet& gold, Regime regime,
                      const std::vector<InverseRelation>& equivalences) {
  if (regime != Regime::REBorder && regime != Regime::REStrict) {
    throw Error(ErrorCode::RegimeUnsupported, std::string(to_string(regime)) + " cannot score triples");
  }
  if (regime == Regime::REStrict) {
    for (const auto& g : gold) {
      if (g.subject_type.empty() || g.object_type.empty()) {
        throw Error(ErrorCode::RegimeUnsupported, "strict scoring needs entity types, but the gold triple (" +
                                                      g.subject + ", " + g.relation + ", " + g.object + ") has none");
      }
    }
  }
  std::vector<Key> p, g;
  for (const auto& t : pred) p.push_back(triple_key(t, regime, equivalences));
  for (const auto& t : gold) g.push_back(triple_key(t, regime, equivalences));
  auto r = score_keys(Task::RE, regime, p, g);
  // Buckets keyed by canonicalized names; report them under the names seen.
  std::map<std::string, Counts> named;
  std::map<std::string, std::string> display;
  for (const auto* set : {&gold, &pred}) {
    for (const auto& t : *set) {
      auto c = canonical(t, equivalences);
      display.emplace(text::canonicalize(c.relation), c.relation);
    }
  }
  for (auto& [k, c] : r.per_type) named[display.count(k) ? display[k] : k] = c;
  r.per_type = std::move(named);
  return r;
}

MetricReport score_ner(const EntitySet& pred, const EntitySet& gold) {
  std::vector<Key> p, g;
  for (const auto& e : pred) p.push_back({e.type, eval_cleanup(e.name)});
  for (const auto& e : gold) g.push_back({e.type, eval_cleanup(e.name)});
  return score_keys(Task::NER, Regime::NERExact, p, g);
}

MetricReport score_ee_entity(const EventSet& pred, const EventSet& gold) {
  std::vector<Key> p, g;
  for (const auto& e : pred) {
    for (const auto& a : e.arguments) p.push_back({e.event_type, a.role, eval_cleanup(a.content)});
  }
  for (const auto& e : gold) {
    for (const auto& a : e.arguments) g.push_back({e.event_type, a.role, eval_cleanup(a.content)});
  }
  return score_keys(Task::EE, Regime::EEEntityLevel, p, g);
}

std::vector<std::string> eval_tokens(std::string_view s, Language language) {
  auto cleaned = eval_cleanup(s);
  std::vector<std::string> out;
  if (language == Language::ZH) {
    for (auto& ch : text::utf8_chars(cleaned)) {
      if (ch.size() == 1 && text::is_space(ch[0])) continue;
      if (ch == "\xE3\x80\x80") continue;
      out.push_back(std::move(ch));
    }
    return out;
  }
  std::istringstream in(cleaned);
  std::string tok;
  while (in >> tok) out.push_back(tok);
  return out;
}

double token_f1(std::string_view pred, std::string_view gold, Language language) {
  auto p = eval_tokens(pred, language);
  auto g = eval_tokens(gold, language);
  if (p.empty() || g.empty()) return 0.0;
  std::map<std::string, int> pc, gc;
  for (const auto& t : p) ++pc[t];
  for (const auto& t : g) ++gc[t];
  double common = 0;
  for (const auto& [t, n] : pc) {
    auto it = gc.find(t);
    if (it != gc.end()) common += std::min(n, it->second);
  }
  if (common == 0) return 0.0;
  double precision = common / static_cast<double>(p.size());
  double recall = common / static_cast<double>(g.size());
  return 2 * precision * recall / (precision + recall);
}

double max_weight_assignment(const std::vector<std::vector<double>>& weights) {
  std::size_t rows = weights.size();
  std::size_t cols = rows ? weights[0].size() : 0;
  if (rows == 0 || cols == 0) return 0.0;
  std::size_t n = std::max(rows, cols);
  double top = 0;
  for (const auto& r : weights) {
    for (double w : r) top = std::max(top, w);
  }
  // Hungarian algorithm (potentials form) on cost = top - weight, padded
  // to a square matrix with zero-weight cells.
  auto cost = [&](std::size_t i, std::size_t j) {
    double w = (i < rows && j < cols) ? weights[i][j] : 0.0;
    return top - w;
  };
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0), v(n + 1, 0);
  std::vector<std::size_t> match(n + 1, 0), way(n + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    match[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<bool> used(n + 1, false);
    do {
      used[j0] = true;
      std::size_t i0 = match[j0], j1 = 0;
      double delta = inf;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[match[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (match[j0] != 0);
    do {
      std::size_t j1 = way[j0];
      match[j0] = match[j1];
      j0 = j1;
    } while (j0);
  }
  double total = 0;
  for (std::size_t j = 1; j <= n; ++j) {
    std::size_t i = match[j];
    if (i >= 1 && i <= rows && j <= cols) total += weights[i - 1][j - 1];
  }
  return total;
}

MetricReport score_ee_wordlevel(const EventSet& pred, const EventSet& gold, Language language) {
  using Slot = std::pair<std::string, std::string>;
  std::map<Slot, std::pair<std::vector<std::string>, std::vector<std::string>>> slots;
  for (const auto& e : pred) {
    for (const auto& a : e.arguments) slots[{e.event_type, a.role}].first.push_back(a.content);
  }
  for (const auto& e : gold) {
    for (const auto& a : e.arguments) slots[{e.event_type, a.role}].second.push_back(a.content);
  }
  MetricReport r;
  r.task = Task::EE;
  r.regime = Regime::EEWordLevel;
  for (const auto& [slot, contents] : slots) {
    const auto& [p, g] = contents;
    auto& c = r.per_type[slot.first];
    c.n_pred += p.size();
    c.n_gold += g.size();
    r.n_pred += p.size();
    r.n_gold += g.size();
    if (p.empty() || g.empty()) continue;
    std::vector<std::vector<double>> w(p.size(), std::vector<double>(g.size()));
    for (std::size_t i = 0; i < p.size(); ++i) {
      for (std::size_t j = 0; j < g.size(); ++j) w[i][j] = token_f1(p[i], g[j], language);
    }
    double credit = max_weight_assignment(w);
    c.tp += credit;
    r.tp += credit;
  }
  r.recompute();
  return r;
}

MetricReport score_report(const BatchReport& predictions, const std::vector<Sample>& gold, Regime regime,
                          const TaskSchema& schema) {
  if (task_of(regime) != schema.task) {
    throw Error(ErrorCode::RegimeUnsupported, std::string(to_string(regime)) + " does not apply to " +
                                                  std::string(to_string(schema.task)) + " schema '" + schema.name + "'");
  }
  std::map<std::string, const ExtractionResult*> by_id;
  for (const auto& o : predictions.outcomes) {
    by_id.emplace(o.id(), o.result ? &*o.result : nullptr);
  }
  std::set<std::string> known;
  for (const auto& s : gold) known.insert(s.id);
  for (const auto& [id, _] : by_id) {
    if (!known.count(id)) throw Error(ErrorCode::IdMismatch, "prediction for unknown sample '" + id + "'");
  }
  MetricReport total;
  total.task = schema.task;
  total.regime = regime;
  for (const auto& s : gold) {
    if (!s.gold) throw Error(ErrorCode::IdMismatch, "sample '" + s.id + "' has no gold annotation");
    if (s.gold->task() != schema.task) throw Error(ErrorCode::RegimeUnsupported, "gold task does not match the schema");
    auto it = by_id.find(s.id);
    const ExtractionResult* r = it == by_id.end() ? nullptr : it->second;
    MetricReport one;
    switch (regime) {
      case Regime::REBorder:
      case Regime::REStrict:
        one = score_re(r ? r->triples : TripleSet{}, s.gold->triples(), regime, schema.inverse_relations);
        break;
      case Regime::NERExact: one = score_ner(r ? r->entities : EntitySet{}, s.gold->entities()); break;
      case Regime::EEEntityLevel: one = score_ee_entity(r ? r->events : EventSet{}, s.gold->events()); break;
      case Regime::EEWordLevel:
        one = score_ee_wordlevel(r ? r->events : EventSet{}, s.gold->events(), schema.language);
        break;
    }
    total.add(one);
  }
  return total;
}

}  // namespace mtie
