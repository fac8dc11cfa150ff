#include "chunklearn/agent.hpp"

#include <algorithm>
#include <cmath>

#include "chunklearn/rng.hpp"

namespace chunklearn {

void validate(const AgentConfig& c) {
  if (!(c.alpha > 0.0 && c.alpha <= 1.0)) throw ConfigError("alpha", "must lie in (0, 1]");
  if (!(c.beta > 0.0) || !std::isfinite(c.beta)) throw ConfigError("beta", "must be positive");
  if (!(c.r_plus > 0.0)) throw ConfigError("r_plus", "must be positive");
  if (!(c.r_minus < 0.0)) throw ConfigError("r_minus", "must be negative");
  if (!std::isfinite(c.q_b)) throw ConfigError("q_b", "must be finite");
  if (!std::isfinite(c.q_c)) throw ConfigError("q_c", "must be finite");
}

std::string to_string(Algorithm a) { return a == Algorithm::kQLearning ? "q" : "rw"; }
std::string to_string(BorderCondition b) {
  return b == BorderCondition::kContinuous ? "continuous" : "next";
}
std::string to_string(UpdateOrder u) {
  return u == UpdateOrder::kInOrder ? "in_order" : "frozen_table";
}

Algorithm parse_algorithm(const std::string& text) {
  if (text == "q" || text == "q_learning") return Algorithm::kQLearning;
  if (text == "rw" || text == "rw_q_learning") return Algorithm::kRescorlaWagner;
  throw ConfigError("algorithm", "expected q or rw, got '" + text + "'");
}

BorderCondition parse_border(const std::string& text) {
  if (text == "continuous" || text == "c") return BorderCondition::kContinuous;
  if (text == "next" || text == "next_sentence" || text == "n") {
    return BorderCondition::kNextSentence;
  }
  throw ConfigError("border", "expected continuous or next, got '" + text + "'");
}

UpdateOrder parse_update_order(const std::string& text) {
  if (text == "in_order") return UpdateOrder::kInOrder;
  if (text == "frozen_table") return UpdateOrder::kFrozenTable;
  throw ConfigError("update_order", "expected in_order or frozen_table, got '" + text + "'");
}

namespace {

void check_action(const State& state, int i) {
  if (i < 0 || i > state.right_depth()) {
    throw std::out_of_range("action " + std::to_string(i) + " outside [0, " +
                            std::to_string(state.right_depth()) + "]");
  }
}

// Q(S^k, a_{i-k}) for every gated k, read without touching the interner.
std::vector<double> gated_terms(const QTable& table, const State& state, int i) {
  check_action(state, i);
  const int d = state.right_depth();
  std::vector<double> terms;
  for (int k = 0; k < d && i - k >= 0; ++k) {
    terms.push_back(q_lookup(table, substate(state, k), i - k));
  }
  return terms;
}

}  // namespace

double q_lookup(const QTable& table, const State& state, int i) {
  check_action(state, i);
  if (const auto key = table.find_key(state)) return table.value(*key, i);
  return table.default_value(state.right_depth(), i);
}

double composite_avg(const QTable& table, const State& state, int i) {
  const auto terms = gated_terms(table, state, i);
  double sum = 0.0;
  for (double t : terms) sum += t;
  return sum / static_cast<double>(terms.size());
}

double composite_add(const QTable& table, const State& state, int i) {
  double sum = 0.0;
  for (double t : gated_terms(table, state, i)) sum += t;
  return sum;
}

void composite_values(const QTable& table, const std::vector<StateKey>& spine,
                      std::vector<double>& avg, std::vector<double>& add) {
  const int d = static_cast<int>(spine.size());
  avg.assign(static_cast<std::size_t>(d + 1), 0.0);
  add.assign(static_cast<std::size_t>(d + 1), 0.0);
  for (int k = 0; k < d; ++k) {
    const int sub_depth = d - k;
    const std::vector<double>* row = table.stored_row(spine[k]);
    // Sub-state k contributes its action a_j to the composite action a_{j+k}.
    for (int j = 0; j <= sub_depth; ++j) {
      double v = row ? (*row)[static_cast<std::size_t>(j)] : std::nan("");
      if (std::isnan(v)) v = table.default_value(sub_depth, j);
      add[static_cast<std::size_t>(j + k)] += v;
    }
  }
  for (int i = 0; i <= d; ++i) {
    const int contributors = std::min(i, d - 1) + 1;
    avg[static_cast<std::size_t>(i)] = add[static_cast<std::size_t>(i)] / contributors;
  }
}

void softmax(const std::vector<double>& values, double beta, std::vector<double>& probs) {
  probs.resize(values.size());
  const double top = *std::max_element(values.begin(), values.end());
  double total = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    probs[i] = std::exp(beta * (values[i] - top));
    total += probs[i];
  }
  for (double& p : probs) p /= total;
}

std::vector<double> policy_probs(const QTable& table, const State& state, double beta) {
  std::vector<double> values;
  for (int i = 0; i <= state.right_depth(); ++i) values.push_back(composite_avg(table, state, i));
  std::vector<double> probs;
  softmax(values, beta, probs);
  return probs;
}

int sample_index(const std::vector<double>& probs, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double u = unit(rng);
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (u < probs[i]) return static_cast<int>(i);
    u -= probs[i];
  }
  // Rounding left a sliver past the last bucket; take the last action with
  // non-zero mass.
  for (std::size_t i = probs.size(); i-- > 0;) {
    if (probs[i] > 0.0) return static_cast<int>(i);
  }
  return static_cast<int>(probs.size()) - 1;
}

int select_action(const QTable& table, const State& state, double beta, std::mt19937_64& rng) {
  return sample_index(policy_probs(table, state, beta), rng);
}

void update_episode(QTable& table, EpisodeTrace& trace, const AgentConfig& config) {
  const double reward = trace.final_reward;
  const double alpha = config.alpha;
  const bool rw = config.algorithm == Algorithm::kRescorlaWagner;

  for (auto& step : trace.steps) {
    if (step.spine.empty()) table.spine_keys(step.state, step.spine);
  }

  auto prediction = [&](const TraceStep& step) {
    double p = 0.0;
    const int d = static_cast<int>(step.spine.size());
    for (int k = 0; k < d && step.action - k >= 0; ++k) {
      p += table.value(step.spine[k], step.action - k);
    }
    return p;
  };

  if (config.update_order == UpdateOrder::kInOrder) {
    for (const auto& step : trace.steps) {
      const int d = static_cast<int>(step.spine.size());
      const double shared = rw ? prediction(step) : 0.0;
      for (int k = 0; k < d && step.action - k >= 0; ++k) {
        double& q = table.slot(step.spine[k], step.action - k);
        q += alpha * (reward - (rw ? shared : q));
      }
    }
    return;
  }

  struct Delta {
    StateKey key;
    int action;
    double amount;
  };
  std::vector<Delta> deltas;
  for (const auto& step : trace.steps) {
    const int d = static_cast<int>(step.spine.size());
    const double shared = rw ? prediction(step) : 0.0;
    for (int k = 0; k < d && step.action - k >= 0; ++k) {
      const double pred = rw ? shared : table.value(step.spine[k], step.action - k);
      deltas.push_back({step.spine[k], step.action - k, alpha * (reward - pred)});
    }
  }
  for (const auto& delta : deltas) table.slot(delta.key, delta.action) += delta.amount;
}

Agent::Agent(AgentConfig config)
    : config_(config),
      table_(config.q_b, config.q_c),
      policy_rng_(derive_seed(config.seed, SubStream::kPolicy)) {
  validate(config_);
}

int Agent::choose(const State& state, std::vector<StateKey>& spine) {
  table_.spine_keys(state, spine);
  composite_values(table_, spine, avg_, add_);
  softmax(avg_, config_.beta, probs_);
  return sample_index(probs_, policy_rng_);
}

}  // namespace chunklearn
