#include "doctest.h"

#include "chunklearn/environment.hpp"
#include "property_checks.hpp"

using namespace chunklearn;

namespace {

AgentConfig nvn_config(Algorithm alg, BorderCondition border, std::uint64_t seed) {
  AgentConfig c;
  c.algorithm = alg;
  c.border = border;
  c.seed = seed;
  return c;
}

}  // namespace

TEST_CASE("initial state is the first two stream words") {
  const auto cfg = nvn_config(Algorithm::kQLearning, BorderCondition::kContinuous, 5);
  Simulation a(builtin_nvn(5, 5), cfg), b(builtin_nvn(5, 5), cfg);
  CHECK(a.current().first().is_leaf());
  CHECK(a.current().first().word().class_name == "N");
  CHECK(a.current().second().word().class_name == "V");
  CHECK(a.current().first().word().position == 0);
  CHECK(a.trial() == 0);
  CHECK(state_key_text(a.current()) == state_key_text(b.current()));
}

TEST_CASE("ground-truth sentence check on an NVN stream") {
  StreamCursor c(builtin_nvn(5, 5), 3);
  std::vector<Word> w;
  for (int i = 0; i < 7; ++i) w.push_back(c.next_word().word);
  const auto span = [&](int from, int to) {
    Chunk ch = Chunk::leaf(w[from]);
    for (int i = from + 1; i <= to; ++i) ch = Chunk::node(ch, Chunk::leaf(w[i]));
    return ch;
  };
  CHECK(is_correct_sentence(span(0, 2), c));
  CHECK(is_correct_sentence(Chunk::node(Chunk::leaf(w[0]), Chunk::node(Chunk::leaf(w[1]), Chunk::leaf(w[2]))), c));
  CHECK_FALSE(is_correct_sentence(span(0, 1), c));
  CHECK_FALSE(is_correct_sentence(span(1, 3), c));
  CHECK(is_correct_sentence(span(3, 5), c));
  CHECK_FALSE(is_correct_sentence(span(0, 5), c));
}

TEST_CASE("boundary oracle agrees with brute-force segmentation") {
  const auto r = checks::boundary_oracle_equivalence();
  INFO(r.detail);
  CHECK(r.ok);
}

TEST_CASE("rewards, lengths and learned episodes") {
  const auto cfg = nvn_config(Algorithm::kQLearning, BorderCondition::kContinuous, 21);
  Agent agent(cfg);
  Simulation sim(builtin_nvn(5, 5), cfg, SimulationOptions{64, 10000, true});
  int late_correct = 0;
  for (int t = 1; t <= 3000; ++t) {
    const auto rec = sim.run_episode(agent);
    REQUIRE(rec.trial_index == t);
    REQUIRE((rec.reward == cfg.r_plus || rec.reward == cfg.r_minus));
    REQUIRE(rec.correct == (rec.reward == cfg.r_plus));
    if (rec.correct) {
      REQUIRE(rec.sentence_length == 3);
      REQUIRE(pattern_length(rec.final_tree_pattern) == 3);
      REQUIRE(rec.steps == 3);
    }
    REQUIRE((rec.sentence_length == 0 || rec.sentence_length == 3));
    if (t == 1) CHECK(rec.sentence_length == 3);
    if (t > 2500) late_correct += rec.correct;
  }
  CHECK(late_correct > 450);
  CHECK(sim.guard_events() == 0);
}

TEST_CASE("continuous reinitialization carries the second element over") {
  const auto cfg = nvn_config(Algorithm::kRescorlaWagner, BorderCondition::kContinuous, 8);
  Agent agent(cfg);
  Simulation sim(builtin_nvn(5, 5), cfg);
  EpisodeTrace trace;
  std::int64_t expected = 0;
  for (int t = 0; t < 500; ++t) {
    sim.run_episode(agent, trace);
    const State& last = trace.steps.back().state;
    // Tiling: each final first element picks up where the previous stopped.
    for (const auto& w : leaves(last.first())) REQUIRE(w.position == expected++);
    REQUIRE(sim.current().first().is_leaf());
    REQUIRE(sim.current().first().word().position == last.second().word().position);
    REQUIRE(sim.current().first().word().same_identity(last.second().word()));
  }
}

TEST_CASE("next-sentence episodes start aligned") {
  const auto cfg = nvn_config(Algorithm::kQLearning, BorderCondition::kNextSentence, 4);
  Agent agent(cfg);
  Simulation md(builtin_md(5, 5, 5), cfg);
  for (int t = 0; t < 1000; ++t) {
    const auto rec = md.run_episode(agent);
    REQUIRE(rec.sentence_length > 0);
    REQUIRE(md.cursor().boundary_before(rec.start_position));
    REQUIRE(md.cursor().boundary_before(md.current().first().word().position));
  }
}

TEST_CASE("guard limit covers every built-in grammar") {
  CHECK(max_sentence_length(builtin_nvn(5, 5)) == 3);
  CHECK(max_sentence_length(builtin_complexnp(5, 5, 5, 5, 5, 5)) == 13);
  for (const auto& g : builtin_grammars()) {
    const int longest = max_sentence_length(make_builtin(g.name, g.default_sizes));
    INFO(g.name);
    CHECK(longest >= 3);
    CHECK(longest <= SimulationOptions{}.guard_limit);
  }
}

TEST_CASE("guard forces termination") {
  auto cfg = nvn_config(Algorithm::kQLearning, BorderCondition::kContinuous, 1);
  cfg.q_b = -50.0;
  cfg.q_c = 50.0;
  Agent agent(cfg);
  Simulation sim(builtin_nvn(5, 5), cfg, SimulationOptions{13, 10000, false});
  const auto rec = sim.run_episode(agent);
  CHECK(rec.guard_forced);
  CHECK_FALSE(rec.correct);
  CHECK(rec.reward == cfg.r_minus);
  CHECK(sim.guard_events() == 1);
}
