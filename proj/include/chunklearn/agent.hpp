#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "chunklearn/chunk.hpp"
#include "chunklearn/qtable.hpp"

namespace chunklearn {

enum class Algorithm { kQLearning, kRescorlaWagner };
enum class BorderCondition { kContinuous, kNextSentence };

/// How an episode's steps read the table while it is being written.
enum class UpdateOrder {
  kInOrder,      // steps t = 0..T in turn; later steps see earlier writes
  kFrozenTable,  // every prediction taken from the pre-episode table
};

struct AgentConfig {
  double alpha = 0.1;
  double beta = 1.9;
  double r_plus = 25.0;
  double r_minus = -10.0;
  double q_b = 1.0;
  double q_c = -1.0;
  Algorithm algorithm = Algorithm::kQLearning;
  BorderCondition border = BorderCondition::kContinuous;
  UpdateOrder update_order = UpdateOrder::kInOrder;
  std::uint64_t seed = 1;
};

class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field, const std::string& what)
      : std::runtime_error(field + ": " + what), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

/// Throws ConfigError naming the offending field.
void validate(const AgentConfig& config);

std::string to_string(Algorithm a);
std::string to_string(BorderCondition b);
std::string to_string(UpdateOrder u);
Algorithm parse_algorithm(const std::string& text);
BorderCondition parse_border(const std::string& text);
UpdateOrder parse_update_order(const std::string& text);

struct TraceStep {
  State state;
  int action = 0;
  /// Optional cache of the sub-state keys; filled on demand if empty.
  std::vector<StateKey> spine;
};

struct EpisodeTrace {
  std::vector<TraceStep> steps;
  double final_reward = 0.0;
};

/// Stored value for (state, i), or q_b / q_c when absent.
double q_lookup(const QTable& table, const State& state, int i);

/// Mean over the sub-states k with i - k >= 0 of Q(S^k, a_{i-k}).
double composite_avg(const QTable& table, const State& state, int i);
/// Sum over the same gated terms.
double composite_add(const QTable& table, const State& state, int i);

/// Soft-max over composite_avg across the d + 1 legal actions.
std::vector<double> policy_probs(const QTable& table, const State& state, double beta);

int select_action(const QTable& table, const State& state, double beta, std::mt19937_64& rng);

/// Samples an index from a probability vector.
int sample_index(const std::vector<double>& probs, std::mt19937_64& rng);

/// Applies the configured learning rule to every gated (sub-state, action)
/// pair of every step, using the episode's terminal reward.
void update_episode(QTable& table, EpisodeTrace& trace, const AgentConfig& config);

/// Composite values of all d + 1 actions from the sub-state keys.
void composite_values(const QTable& table, const std::vector<StateKey>& spine,
                      std::vector<double>& avg, std::vector<double>& add);

/// Soft-max with max-subtraction.
void softmax(const std::vector<double>& values, double beta, std::vector<double>& probs);

/// A learner: its long-term memory plus the policy random stream.
class Agent {
 public:
  explicit Agent(AgentConfig config);

  const AgentConfig& config() const { return config_; }
  QTable& table() { return table_; }
  const QTable& table() const { return table_; }

  /// Soft-max action for `state`; writes the sub-state keys to `spine`.
  int choose(const State& state, std::vector<StateKey>& spine);
  void learn(EpisodeTrace& trace) { update_episode(table_, trace, config_); }

 private:
  AgentConfig config_;
  QTable table_;
  std::mt19937_64 policy_rng_;
  std::vector<double> avg_;
  std::vector<double> add_;
  std::vector<double> probs_;
};

}  // namespace chunklearn
