#include <cmath>
#include <map>
#include <set>

#include "doctest.h"

#include "chunklearn/grammar.hpp"

using namespace chunklearn;

namespace {

std::string joined(const std::vector<std::string>& v) {
  std::string s;
  for (const auto& x : v) s += (s.empty() ? "" : " ") + x;
  return s;
}

}  // namespace

TEST_CASE("built-in grammars validate") {
  CHECK_FALSE(validate_pcfg(builtin_nvn(5, 5)).has_value());
  CHECK_FALSE(validate_pcfg(builtin_md(5, 1, 1)).has_value());
  CHECK_FALSE(validate_pcfg(builtin_relclause(5, 1, 1, 1)).has_value());
  CHECK_FALSE(validate_pcfg(builtin_complexnp(1, 1, 1, 1, 1, 1)).has_value());
  CHECK_THROWS_AS(builtin_nvn(0, 5), GrammarError);
}

TEST_CASE("validation errors") {
  SUBCASE("probability sum") {
    Pcfg g = builtin_nvn(5, 5);
    auto rule = g.rules.front();
    g.rules.front().probability = 0.6;
    rule.probability = 0.6;
    g.rules.push_back(rule);
    auto err = validate_pcfg(g);
    REQUIRE(err.has_value());
    CHECK(err->kind == GrammarErrorKind::kProbabilitySum);
  }
  SUBCASE("undeclared symbol") {
    Pcfg g = builtin_nvn(5, 5);
    g.rules.front().rhs = {"X"};
    auto err = validate_pcfg(g);
    REQUIRE(err.has_value());
    CHECK(err->kind == GrammarErrorKind::kUndeclaredSymbol);
    CHECK(err->symbol == "X");
    CHECK_THROWS_AS(require_valid(g), GrammarError);
  }
  SUBCASE("unreachable nonterminal") {
    Pcfg g = builtin_nvn(5, 5);
    g.nonterminals.push_back("Z");
    g.rules.push_back(ProductionRule{"Z", {"N"}, 1.0});
    auto err = validate_pcfg(g);
    REQUIRE(err.has_value());
    CHECK(err->kind == GrammarErrorKind::kUnreachable);
  }
  SUBCASE("non-terminating") {
    Pcfg g;
    g.nonterminals = {"S"};
    g.classes = {{"N", 1}};
    g.start = "S";
    g.rules = {{"S", {"N", "S"}, 1.0}};
    auto err = validate_pcfg(g);
    REQUIRE(err.has_value());
    CHECK(err->kind == GrammarErrorKind::kNonTerminating);
  }
  SUBCASE("missing start") {
    Pcfg g = builtin_nvn(5, 5);
    g.start = "Q";
    REQUIRE(validate_pcfg(g).has_value());
    CHECK(validate_pcfg(g)->kind == GrammarErrorKind::kMissingStart);
  }
}

TEST_CASE("sentence structure counts") {
  CHECK(enumerate_class_sequences(builtin_nvn(5, 5)).size() == 1);
  CHECK(enumerate_class_sequences(builtin_md(5, 1, 1)).size() == 2);
  CHECK(enumerate_class_sequences(builtin_relclause(5, 1, 1, 1)).size() == 4);
  CHECK(enumerate_class_sequences(builtin_complexnp(1, 1, 1, 1, 1, 1)).size() == 150);
  CHECK(vocabulary_size(builtin_nvn(5, 5)) == 10);
  CHECK(make_builtin("md", {}).classes.size() == 3);
  CHECK_THROWS_WITH_AS(make_builtin("nope", {}), "unknown grammar 'nope'", GrammarError);
  CHECK_THROWS_AS(make_builtin("nvn", {5}), GrammarError);
}

TEST_CASE("NVN samples are N V N") {
  std::mt19937_64 rng(3);
  const Pcfg g = builtin_nvn(5, 5);
  for (int i = 0; i < 200; ++i) {
    auto s = sample_sentence(g, rng);
    CHECK(s.length == 3);
    CHECK(s.class_sequence == std::vector<std::string>{"N", "V", "N"});
    for (const auto& w : s.words) {
      CHECK(w.index >= 1);
      CHECK(w.index <= 5);
    }
  }
}

TEST_CASE("MD sentence ratio is about one half") {
  std::mt19937_64 rng(11);
  const Pcfg g = builtin_md(5, 1, 1);
  int mono = 0;
  const int n = 10000;
  for (int i = 0; i < n; ++i) {
    auto s = sample_sentence(g, rng);
    const auto seq = joined(s.class_sequence);
    REQUIRE((seq == "N MV N" || seq == "N DV N N"));
    mono += seq == "N MV N";
  }
  CHECK(std::abs(mono / double(n) - 0.5) <= 0.02);
}

TEST_CASE("ComplexNP double-adjective NP frequency") {
  // Whole-sentence class sequences do not mark NP extents, so NP expansions are
  // counted by a sampler-independent parse: ComplexNP NPs are N | D N | D A N |
  // D A A N | N P N and verbs separate subject from objects.
  std::mt19937_64 rng(17);
  const Pcfg g = builtin_complexnp(1, 1, 1, 1, 1, 1);
  auto np_kinds = [](const std::vector<std::string>& seq) {
    std::vector<std::string> kinds;
    std::size_t i = 0;
    auto take_np = [&] {
      std::string k;
      if (seq[i] == "N") {
        if (i + 2 < seq.size() && seq[i + 1] == "P") {
          k = "N P N";
          i += 3;
        } else {
          k = "N";
          i += 1;
        }
      } else {
        while (seq[i] != "N") k += seq[i++] + " ";
        k += "N";
        ++i;
      }
      kinds.push_back(k);
    };
    take_np();
    const bool ditransitive = seq[i] == "DV";
    ++i;
    take_np();
    if (ditransitive) take_np();
    return kinds;
  };
  std::size_t nps = 0, daan = 0;
  while (nps < 100000) {
    for (const auto& k : np_kinds(sample_sentence(g, rng).class_sequence)) {
      ++nps;
      daan += k == "D A A N";
    }
  }
  CHECK(std::abs(double(daan) / double(nps) - 0.0625) <= 0.005);
}

TEST_CASE("top-level production frequencies within 3 standard errors") {
  std::mt19937_64 rng(23);
  const Pcfg g = builtin_relclause(5, 1, 1, 1);
  std::map<std::string, int> counts;
  const int n = 100000;
  for (int i = 0; i < n; ++i) counts[joined(sample_sentence(g, rng).class_sequence)]++;
  const std::map<std::string, double> expected{{"N MV N", 0.3},
                                               {"N DV N N", 0.3},
                                               {"N MV N R MV N", 0.2},
                                               {"N DV N N R MV N", 0.2}};
  for (const auto& [seq, p] : expected) {
    const double se = std::sqrt(p * (1 - p) / n);
    CHECK(std::abs(counts[seq] / double(n) - p) <= 3 * se);
  }
}

TEST_CASE("stream cursor flags and positions") {
  StreamCursor c(builtin_nvn(5, 5), 42);
  for (int i = 0; i < 12; ++i) {
    auto e = c.next_word();
    CHECK(e.word.position == i);
    CHECK(e.boundary_before == (i % 3 == 0));
  }
  CHECK(c.sentence_length_at(3) == 3);
  CHECK(c.sentence_length_at(4) == 0);
  CHECK_THROWS_AS(c.boundary_before(-1), std::out_of_range);
}

TEST_CASE("streams are deterministic and partition into sentences") {
  for (const auto& g : {builtin_md(5, 1, 1), builtin_complexnp(1, 1, 1, 1, 1, 1)}) {
    StreamCursor a(g, 7), b(g, 7);
    std::set<std::string> language;
    for (const auto& seq : enumerate_class_sequences(g)) language.insert(joined(seq));
    std::vector<std::string> current;
    for (int i = 0; i < 10000; ++i) {
      auto ea = a.next_word();
      auto eb = b.next_word();
      REQUIRE(ea.word.same_identity(eb.word));
      REQUIRE(ea.boundary_before == eb.boundary_before);
      if (ea.boundary_before && !current.empty()) {
        CHECK(language.count(joined(current)) == 1);
        current.clear();
      }
      current.push_back(ea.word.class_name);
    }
  }
}

TEST_CASE("skip to next sentence") {
  StreamCursor c(builtin_nvn(5, 5), 1);
  c.next_word();
  c.next_word();  // position 1
  CHECK(c.skip_to_next_sentence().position == 3);
  c.next_word();
  c.next_word();  // position 5, sentence-final
  CHECK(c.skip_to_next_sentence().position == 6);
  StreamCursor d(builtin_nvn(5, 5), 1);
  d.next_word();
  d.next_word();
  const Word w = d.skip_to_next_sentence();
  StreamCursor e(builtin_nvn(5, 5), 1);
  e.next_word();
  e.next_word();
  CHECK(e.skip_to_next_sentence().same_identity(w));
}

TEST_CASE("grammar file round trip") {
  const std::string text =
      "[grammar]\nstart = S\nnonterminals = S, VP\nclasses = N:3, V:2\n\n"
      "[rules]\nS = N VP\nVP = V N : 0.25 | V : 0.75\n";
  const Pcfg g = parse_grammar_text(text);
  CHECK_FALSE(validate_pcfg(g).has_value());
  CHECK(g.rules_for("VP").size() == 2);
  const Pcfg again = parse_grammar_text(format_grammar_text(g));
  CHECK(enumerate_class_sequences(again) == enumerate_class_sequences(g));
  CHECK_THROWS_AS(parse_grammar_text("[grammar]\nstart = S\n"), GrammarError);
}
