#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <random>

#include "mtie/error.hpp"
#include "mtie/eval.hpp"
#include "test_support.hpp"

using namespace mtie;
namespace mt = mtie::testing;

namespace {

// Brute force: best total weight over every injective map rows -> cols.
double brute_assignment(const std::vector<std::vector<double>>& w) {
  std::size_t rows = w.size(), cols = rows ? w[0].size() : 0;
  std::vector<bool> used(cols, false);
  std::function<double(std::size_t)> go = [&](std::size_t i) -> double {
    if (i == rows) return 0.0;
    double best = go(i + 1);  // row i unmatched
    for (std::size_t j = 0; j < cols; ++j) {
      if (used[j]) continue;
      used[j] = true;
      best = std::max(best, w[i][j] + go(i + 1));
      used[j] = false;
    }
    return best;
  };
  return go(0);
}

// Token overlap by removing matched tokens one at a time.
double naive_token_f1(const std::vector<std::string>& p, const std::vector<std::string>& g) {
  if (p.empty() || g.empty()) return 0.0;
  auto pool = g;
  double common = 0;
  for (const auto& t : p) {
    auto it = std::find(pool.begin(), pool.end(), t);
    if (it != pool.end()) {
      pool.erase(it);
      ++common;
    }
  }
  if (common == 0) return 0.0;
  double prec = common / p.size(), rec = common / g.size();
  return 2 * prec * rec / (prec + rec);
}

}  // namespace

TEST(MicroF1, Conventions) {
  auto a = micro_f1(1, 2, 3);
  EXPECT_DOUBLE_EQ(a.precision, 0.5);
  EXPECT_DOUBLE_EQ(a.recall, 1.0 / 3);
  EXPECT_DOUBLE_EQ(a.f1, 0.4);
  auto b = micro_f1(0, 0, 5);
  EXPECT_EQ(b.precision, 0.0);
  EXPECT_EQ(b.recall, 0.0);
  EXPECT_EQ(b.f1, 0.0);
  for (int k : {1, 7, 1000}) EXPECT_DOUBLE_EQ(micro_f1(k, k, k).f1, 1.0);
}

TEST(ScoreRe, ExactAndArithmetic) {
  TripleSet one = {{"Jacques Chirac", "person-nationality", "France", {}, "", ""}};
  auto r = score_re(one, one, Regime::REBorder);
  EXPECT_DOUBLE_EQ(r.f1, 1.0);

  TripleSet gold = {{"a", "r", "b", {}, "", ""}, {"c", "r", "d", {}, "", ""}, {"e", "r", "f", {}, "", ""},
                    {"g", "r", "h", {}, "", ""}};
  TripleSet pred = {{"a", "r", "b", {}, "", ""}, {"x", "r", "y", {}, "", ""}};
  auto m = score_re(pred, gold, Regime::REBorder);
  EXPECT_DOUBLE_EQ(m.precision, 0.5);
  EXPECT_DOUBLE_EQ(m.recall, 0.25);
  EXPECT_DOUBLE_EQ(m.f1, 1.0 / 3);
}

TEST(ScoreRe, InverseRelationEquivalence) {
  const auto& nyt = mt::shipped_schema("nyt11-hrl");
  TripleSet pred = {{"Delhi", "location-located_in", "India", {}, "", ""}};
  TripleSet gold = {{"India", "location-contains", "Delhi", {}, "", ""}};
  EXPECT_EQ(score_re(pred, gold, Regime::REBorder, nyt.inverse_relations).tp, 1.0);
  EXPECT_EQ(score_re(pred, gold, Regime::REBorder).tp, 0.0);
}

TEST(ScoreRe, StrictNeedsTypes) {
  TripleSet pred = {{"a", "r", "b", {}, "P", "Q"}};
  TripleSet typed = {{"a", "r", "b", {}, "P", "Q"}};
  TripleSet wrong = {{"a", "r", "b", {}, "P", "Z"}};
  TripleSet untyped = {{"a", "r", "b", {}, "", ""}};
  EXPECT_DOUBLE_EQ(score_re(pred, typed, Regime::REStrict).f1, 1.0);
  EXPECT_DOUBLE_EQ(score_re(pred, wrong, Regime::REStrict).f1, 0.0);
  EXPECT_DOUBLE_EQ(score_re(pred, wrong, Regime::REBorder).f1, 1.0);
  EXPECT_THROW(score_re(pred, untyped, Regime::REStrict), Error);
  EXPECT_THROW(score_re(pred, typed, Regime::NERExact), Error);
}

TEST(ScoreRe, AttributesAndCleanup) {
  TripleSet pred = {{" 逆光飞翔 ", "上映时间", "2012年", {{"inArea", "台湾。"}}, "", ""}};
  TripleSet gold = {{"逆光飞翔", "上映时间", "2012年", {{"inArea", "台湾"}}, "", ""}};
  EXPECT_DOUBLE_EQ(score_re(pred, gold, Regime::REBorder).f1, 1.0);
  TripleSet other = {{"逆光飞翔", "上映时间", "2012年", {{"inArea", "香港"}}, "", ""}};
  EXPECT_DOUBLE_EQ(score_re(pred, other, Regime::REBorder).f1, 0.0);
  TripleSet cased = {{"Ann", "r", "acme", {}, "", ""}};
  TripleSet upper = {{"Ann", "r", "Acme", {}, "", ""}};
  EXPECT_DOUBLE_EQ(score_re(cased, upper, Regime::REBorder).f1, 0.0);
}

TEST(ScoreNer, JapanSyrianHalf) {
  auto r = score_ner({{"Japan", "LOC"}, {"Syrian", "LOC"}}, {{"Japan", "LOC"}, {"Syrian", "MISC"}});
  EXPECT_EQ(r.tp, 1.0);
  EXPECT_DOUBLE_EQ(r.precision, 0.5);
  EXPECT_DOUBLE_EQ(r.recall, 0.5);
  EXPECT_DOUBLE_EQ(r.f1, 0.5);
  EXPECT_EQ(r.per_type.at("LOC"), (Counts{1, 2, 1}));
  EXPECT_EQ(r.per_type.at("MISC"), (Counts{0, 0, 1}));
  auto empty = score_ner({}, {{"Japan", "LOC"}});
  EXPECT_EQ(empty.recall, 0.0);
  EXPECT_EQ(empty.f1, 0.0);
}

TEST(ScoreEe, EntityLevel) {
  EventSet gold = {{"Life:Die", {{"Victim", "over a million of his own citizens"}, {"Agent", "Saddam Hussein"}}}};
  EXPECT_DOUBLE_EQ(score_ee_entity(gold, gold).f1, 1.0);
  EventSet agent = {{"Life:Die", {{"Agent", "Saddam Hussein"}}}};
  auto r = score_ee_entity(agent, gold);
  EXPECT_DOUBLE_EQ(r.precision, 1.0);
  EXPECT_DOUBLE_EQ(r.recall, 0.5);
  EXPECT_DOUBLE_EQ(r.f1, 2.0 / 3);
  EventSet wrong_type = {{"Conflict:Attack", {{"Agent", "Saddam Hussein"}}}};
  EXPECT_EQ(score_ee_entity(wrong_type, gold).tp, 0.0);
}

TEST(ScoreEe, WordLevelTokenF1) {
  EXPECT_DOUBLE_EQ(token_f1("19 Rangers", "19 Rangers that died", Language::EN), 2.0 / 3);
  EXPECT_DOUBLE_EQ(naive_token_f1({"19", "Rangers"}, {"19", "Rangers", "that", "died"}), 2.0 / 3);
  EXPECT_DOUBLE_EQ(token_f1("a b", "a b", Language::EN), 1.0);
  EXPECT_DOUBLE_EQ(token_f1("a b", "c d", Language::EN), 0.0);
  EXPECT_DOUBLE_EQ(token_f1("雀巢公司", "雀巢", Language::ZH), 2 * 0.5 * 1.0 / 1.5);

  EventSet pred = {{"Life:Die", {{"Victim", "19 Rangers"}}}};
  EventSet gold = {{"Life:Die", {{"Victim", "19 Rangers that died"}}}};
  auto r = score_ee_wordlevel(pred, gold, Language::EN);
  EXPECT_DOUBLE_EQ(r.tp, 2.0 / 3);
  EXPECT_EQ(r.label(), "word-level (mtie definition)");
}

TEST(ScoreEe, WordLevelMatchesBruteForce) {
  std::mt19937 rng(5);
  const std::vector<std::string> vocab = {"a", "b", "c", "d", "e"};
  auto phrase = [&] {
    std::string s;
    std::size_t n = 1 + rng() % 4;
    for (std::size_t i = 0; i < n; ++i) s += (i ? " " : "") + vocab[rng() % vocab.size()];
    return s;
  };
  for (int iter = 0; iter < 300; ++iter) {
    std::vector<std::string> p(rng() % 5), g(rng() % 5);
    for (auto& x : p) x = phrase();
    for (auto& x : g) x = phrase();
    EventRecord pe{"E", {}}, ge{"E", {}};
    for (auto& x : p) pe.arguments.insert({"R", x});
    for (auto& x : g) ge.arguments.insert({"R", x});
    std::vector<std::string> pu, gu;
    for (const auto& a : pe.arguments) pu.push_back(a.content);
    for (const auto& a : ge.arguments) gu.push_back(a.content);
    std::vector<std::vector<double>> w(pu.size(), std::vector<double>(gu.size()));
    auto split = [](const std::string& s) {
      std::vector<std::string> out;
      std::istringstream in(s);
      for (std::string t; in >> t;) out.push_back(t);
      return out;
    };
    for (std::size_t i = 0; i < pu.size(); ++i) {
      for (std::size_t j = 0; j < gu.size(); ++j) w[i][j] = naive_token_f1(split(pu[i]), split(gu[j]));
    }
    EventSet ps, gs;
    if (!pu.empty()) ps.insert(pe);
    if (!gu.empty()) gs.insert(ge);
    auto r = score_ee_wordlevel(ps, gs, Language::EN);
    EXPECT_NEAR(r.tp, brute_assignment(w), 1e-12);
    EXPECT_EQ(r.n_pred, pu.size());
    EXPECT_EQ(r.n_gold, gu.size());
  }
}

TEST(Assignment, MatchesBruteForceOnRectangles) {
  std::mt19937 rng(9);
  std::uniform_real_distribution<double> u(0, 1);
  for (int iter = 0; iter < 300; ++iter) {
    std::size_t r = 1 + rng() % 6, c = 1 + rng() % 6;
    std::vector<std::vector<double>> w(r, std::vector<double>(c));
    for (auto& row : w) {
      for (auto& x : row) x = rng() % 3 == 0 ? 0.0 : u(rng);
    }
    EXPECT_NEAR(max_weight_assignment(w), brute_assignment(w), 1e-9);
  }
  EXPECT_EQ(max_weight_assignment({}), 0.0);
}

TEST(MetricReport, PerTypeSumsAndRendering) {
  auto r = score_ner({{"Japan", "LOC"}, {"Syrian", "LOC"}}, {{"Japan", "LOC"}, {"Syrian", "MISC"}});
  double tp = 0;
  std::size_t np = 0, ng = 0;
  for (const auto& [_, c] : r.per_type) {
    tp += c.tp;
    np += c.n_pred;
    ng += c.n_gold;
  }
  EXPECT_EQ(tp, r.tp);
  EXPECT_EQ(np, r.n_pred);
  EXPECT_EQ(ng, r.n_gold);
  auto table = r.to_table();
  EXPECT_NE(table.find("50.0"), std::string::npos);
  EXPECT_NE(r.to_json().find("\"regime\":\"NER-exact\""), std::string::npos);
}

TEST(Regime, NamesRoundTrip) {
  for (auto g : {Regime::REBorder, Regime::REStrict, Regime::NERExact, Regime::EEWordLevel, Regime::EEEntityLevel}) {
    EXPECT_EQ(parse_regime(to_string(g)), g);
  }
  EXPECT_EQ(parse_regime("strict"), Regime::REStrict);
  EXPECT_THROW(parse_regime("fuzzy"), Error);
}

TEST(ScoreReport, IdMismatchAndFailures) {
  const auto& conll = mt::shipped_schema("conllpp");
  std::vector<Sample> gold = {{"a", "Japan won .", GoldAnnotation{EntitySet{{"Japan", "LOC"}}}}};
  BatchReport rep;
  rep.task = Task::NER;
  ExtractionResult res;
  res.sample_id = "zzz";
  res.task = Task::NER;
  rep.outcomes.push_back({res, std::nullopt});
  try {
    score_report(rep, gold, Regime::NERExact, conll);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::IdMismatch);
  }
  rep.outcomes = {{std::nullopt, SampleFailure{"a", ErrorCode::ReplayMiss, "x"}}};
  auto r = score_report(rep, gold, Regime::NERExact, conll);
  EXPECT_EQ(r.n_gold, 1u);
  EXPECT_EQ(r.n_pred, 0u);
  EXPECT_THROW(score_report(rep, gold, Regime::REBorder, conll), Error);
}
