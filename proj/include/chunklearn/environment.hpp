#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "chunklearn/agent.hpp"
#include "chunklearn/chunk.hpp"
#include "chunklearn/grammar.hpp"

namespace chunklearn {

struct EpisodeRecord {
  std::int64_t trial_index = 0;  // 1-based
  bool correct = false;
  double reward = 0.0;
  /// Length of the true sentence starting at the episode's first word, or 0
  /// when the episode started mid-sentence.
  int sentence_length = 0;
  int steps = 0;
  /// structure_pattern of the first element at boundary placement; only
  /// filled when the simulation records patterns.
  std::string final_tree_pattern;
  bool guard_forced = false;
  std::int64_t start_position = 0;
};

struct SimulationOptions {
  /// Longest first element allowed before an episode is forced to end as an
  /// incorrect boundary placement.
  int guard_limit = 64;
  std::size_t history = 10000;
  bool record_patterns = false;
};

/// Ground-truth check: the chunk starts at a boundary, is followed by a
/// boundary, and contains none.
bool is_correct_sentence(const Chunk& chunk, const StreamCursor& cursor);

class Simulation {
 public:
  /// Reads the first two words and sets S_0 = (leaf(w0), leaf(w1)). The
  /// stream seed is derived from config.seed.
  Simulation(Pcfg pcfg, const AgentConfig& config, SimulationOptions options = {});

  const State& current() const { return *current_; }
  const StreamCursor& cursor() const { return cursor_; }
  std::int64_t trial() const { return trial_; }
  std::int64_t guard_events() const { return guard_events_; }
  const SimulationOptions& options() const { return options_; }
  void set_record_patterns(bool on) { options_.record_patterns = on; }

  /// Plays one episode to its boundary placement, updates the agent and
  /// reinitializes per the agent's border condition.
  EpisodeRecord run_episode(Agent& agent);

  /// Starts the next episode after a boundary placement.
  void reinitialize(BorderCondition condition);

  /// Like run_episode but also returns the finished trace (for inspection).
  EpisodeRecord run_episode(Agent& agent, EpisodeTrace& trace_out);

 private:
  Chunk read_leaf();

  StreamCursor cursor_;
  SimulationOptions options_;
  std::optional<State> current_;
  std::int64_t trial_ = 0;
  std::int64_t guard_events_ = 0;
  EpisodeTrace trace_;
};

/// Largest sentence the grammar derives, for finite languages; 0 otherwise.
int max_sentence_length(const Pcfg& pcfg);

}  // namespace chunklearn
