#include "chunklearn/environment.hpp"

#include <algorithm>

#include "chunklearn/rng.hpp"

namespace chunklearn {

bool is_correct_sentence(const Chunk& chunk, const StreamCursor& cursor) {
  if (!cursor.boundary_before(chunk.start())) return false;
  if (!cursor.boundary_before(chunk.end() + 1)) return false;
  for (std::int64_t p = chunk.start() + 1; p <= chunk.end(); ++p) {
    if (cursor.boundary_before(p)) return false;
  }
  return true;
}

int max_sentence_length(const Pcfg& pcfg) {
  try {
    std::size_t longest = 0;
    for (const auto& seq : enumerate_class_sequences(pcfg)) longest = std::max(longest, seq.size());
    return static_cast<int>(longest);
  } catch (const GrammarError&) {
    return 0;
  }
}

Simulation::Simulation(Pcfg pcfg, const AgentConfig& config, SimulationOptions options)
    : cursor_(std::move(pcfg), derive_seed(config.seed, SubStream::kGrammar), options.history),
      options_(options) {
  if (options_.guard_limit < 2) throw ConfigError("guard_limit", "must be at least 2");
  if (const int longest = max_sentence_length(cursor_.pcfg());
      longest > options_.guard_limit) {
    throw ConfigError("guard_limit", "shorter than the longest sentence (" +
                                         std::to_string(longest) + " words)");
  }
  if (options_.history < static_cast<std::size_t>(options_.guard_limit) + 2) {
    throw ConfigError("history", "must cover the guard limit");
  }
  Chunk first = read_leaf();
  Chunk second = read_leaf();
  current_.emplace(std::move(first), std::move(second));
}

Chunk Simulation::read_leaf() { return Chunk::leaf(cursor_.next_word().word); }

void Simulation::reinitialize(BorderCondition condition) {
  if (condition == BorderCondition::kContinuous) {
    Chunk first = current_->second();
    Chunk second = read_leaf();
    current_.emplace(std::move(first), std::move(second));
    return;
  }
  Chunk first = Chunk::leaf(cursor_.skip_to_next_sentence());
  Chunk second = read_leaf();
  current_.emplace(std::move(first), std::move(second));
}

EpisodeRecord Simulation::run_episode(Agent& agent) { return run_episode(agent, trace_); }

EpisodeRecord Simulation::run_episode(Agent& agent, EpisodeTrace& trace) {
  const AgentConfig& config = agent.config();
  trace.steps.clear();
  EpisodeRecord record;
  record.start_position = current_->first().start();
  record.sentence_length = cursor_.sentence_length_at(record.start_position);

  std::vector<StateKey> spine;
  bool forced = false;
  while (true) {
    const int action = agent.choose(*current_, spine);
    const int d = current_->right_depth();
    trace.steps.push_back(TraceStep{*current_, action, spine});
    if (action == d) break;

    Chunk first = apply_chunk_action(*current_, action);
    Chunk second = read_leaf();
    current_.emplace(std::move(first), std::move(second));
    if (current_->first().word_count() > options_.guard_limit) {
      // Runaway chunk: close it as a wrong boundary placement.
      std::vector<StateKey> closing;
      agent.table().spine_keys(*current_, closing);
      trace.steps.push_back(TraceStep{*current_, current_->right_depth(), std::move(closing)});
      forced = true;
      break;
    }
  }

  record.correct = !forced && is_correct_sentence(current_->first(), cursor_);
  record.reward = record.correct ? config.r_plus : config.r_minus;
  record.steps = static_cast<int>(trace.steps.size());
  record.guard_forced = forced;
  if (options_.record_patterns) record.final_tree_pattern = structure_pattern(current_->first());
  if (forced) ++guard_events_;

  trace.final_reward = record.reward;
  agent.learn(trace);

  ++trial_;
  record.trial_index = trial_;
  reinitialize(config.border);
  return record;
}

}  // namespace chunklearn
