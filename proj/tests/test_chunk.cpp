#include "doctest.h"

#include "chunklearn/chunk.hpp"
#include "chunklearn/qtable.hpp"
#include "property_checks.hpp"

using namespace chunklearn;

namespace {

Chunk leaf(const char* cls, int idx, std::int64_t pos) { return Chunk::leaf(Word{cls, idx, pos}); }

// [John, [eats, cake]] followed by "and".
State example_state() {
  Chunk john = leaf("N", 1, 0), eats = leaf("V", 1, 1), cake = leaf("N", 2, 2);
  return State(Chunk::node(john, Chunk::node(eats, cake)), leaf("C", 1, 3));
}

}  // namespace

TEST_CASE("right depth") {
  CHECK(right_depth(leaf("N", 2, 0)) == 1);
  CHECK(right_depth(example_state().first()) == 3);
  CHECK(right_depth(Chunk::node(Chunk::node(leaf("N", 1, 0), leaf("V", 1, 1)), leaf("N", 2, 2))) == 2);
}

TEST_CASE("sub-states of the example state") {
  const State s = example_state();
  CHECK(canonical_key(substate(s, 1).first()) == "(V#1 N#2)");
  CHECK(canonical_key(substate(s, 2).first()) == "N#2");
  CHECK(canonical_key(substate(s, 1).second()) == "C#1");
  CHECK(state_key_text(substate(s, 0)) == state_key_text(s));
  CHECK_THROWS_AS(substate(s, 3), std::out_of_range);
  CHECK_THROWS_AS(substate(s, -1), std::out_of_range);
}

TEST_CASE("chunk actions on the example state") {
  const State s = example_state();
  CHECK(s.action_count() == 4);
  CHECK(s.action(3).kind == ActionKind::kBoundary);
  CHECK(s.action(0).kind == ActionKind::kChunk);
  CHECK(canonical_key(apply_chunk_action(s, 0)) == "((N#1 (V#1 N#2)) C#1)");
  CHECK(canonical_key(apply_chunk_action(s, 1)) == "(N#1 ((V#1 N#2) C#1))");
  CHECK(canonical_key(apply_chunk_action(s, 2)) == "(N#1 (V#1 (N#2 C#1)))");
  const State two(leaf("N", 1, 0), leaf("V", 1, 1));
  const Chunk nv = apply_chunk_action(two, 0);
  CHECK(canonical_key(nv) == "(N#1 V#1)");
  CHECK(right_depth(nv) == 2);
  CHECK_THROWS_AS(apply_chunk_action(two, 1), std::out_of_range);
}

TEST_CASE("state construction is validated") {
  CHECK_THROWS_AS(State(leaf("N", 1, 0), leaf("V", 1, 2)), std::invalid_argument);
  CHECK_THROWS_AS(State(leaf("N", 1, 0), Chunk::node(leaf("V", 1, 1), leaf("N", 1, 2))),
                  std::invalid_argument);
  CHECK_THROWS_AS(Chunk::node(leaf("N", 1, 0), leaf("V", 1, 5)), std::invalid_argument);
}

TEST_CASE("canonical keys and patterns") {
  CHECK(canonical_key(leaf("N", 3, 0)) == "N#3");
  const Chunk a = Chunk::node(Chunk::node(leaf("N", 1, 0), leaf("V", 2, 1)), leaf("N", 4, 2));
  const Chunk b = Chunk::node(Chunk::node(leaf("N", 1, 50), leaf("V", 2, 51)), leaf("N", 4, 52));
  CHECK(canonical_key(a) == "((N#1 V#2) N#4)");
  CHECK(canonical_key(a) == canonical_key(b));
  CHECK(structure_pattern(Chunk::node(leaf("N", 2, 0), leaf("V", 3, 1))) ==
        structure_pattern(Chunk::node(leaf("N", 1, 9), leaf("V", 5, 10))));
  CHECK(structure_pattern(Chunk::node(leaf("N", 2, 0), leaf("V", 3, 1))) == "(N V)");
  CHECK(structure_pattern(leaf("DV", 1, 0)) == "DV");
  CHECK(canonical_key(parse_canonical_key("((N#1 V#2) N#4)", 10)) == "((N#1 V#2) N#4)");
  CHECK(parse_canonical_key("((N#1 V#2) N#4)", 10).end() == 12);
  CHECK_THROWS_AS(parse_canonical_key("((N#1 V#2) N#4", 0), std::invalid_argument);
  CHECK_THROWS_AS(parse_canonical_key("N", 0), std::invalid_argument);
}

TEST_CASE("pattern instance totals") {
  const Pcfg nvn = builtin_nvn(5, 5);
  CHECK(pattern_instance_total("(N V)", nvn) == 25);
  CHECK(pattern_instance_total("(N V)|N", nvn) == 125);
  CHECK(pattern_instance_total("N|N", nvn) == 25);
  CHECK(pattern_instance_total("((N V) N)|N", nvn) == 625);
  CHECK(pattern_length("((N V) N)") == 3);
  CHECK_THROWS_AS(pattern_instance_total("(N X)", nvn), std::invalid_argument);
}

TEST_CASE("brute-force chunk algebra up to six leaves") {
  const auto r = checks::chunk_algebra();
  INFO(r.detail);
  CHECK(r.ok);
}

TEST_CASE("canonical key injectivity up to six leaves") {
  const auto r = checks::canonical_key_injective();
  INFO(r.detail);
  CHECK(r.ok);
}

TEST_CASE("tree enumeration matches Catalan numbers") {
  const std::size_t expected[] = {1, 1, 2, 5, 14, 42};
  for (int n = 1; n <= 6; ++n) CHECK(checks::all_trees(checks::make_words(n)).size() == expected[n - 1]);
}
