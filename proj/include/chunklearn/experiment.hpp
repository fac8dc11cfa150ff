#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "chunklearn/agent.hpp"
#include "chunklearn/environment.hpp"
#include "chunklearn/grammar.hpp"
#include "chunklearn/logistic.hpp"
#include "chunklearn/qtable.hpp"

namespace chunklearn {

/// A built-in grammar name with class sizes, or a grammar definition file.
struct GrammarSpec {
  std::string name = "nvn";
  std::vector<int> sizes;
  std::string file;

  Pcfg build() const;
  std::string describe() const;
};

enum class SnapshotMode { kFocal, kPopulation, kBoth };

std::string to_string(SnapshotMode m);
SnapshotMode parse_snapshot_mode(const std::string& text);

struct TrialWindow {
  std::int64_t start = 0;
  std::int64_t end = 0;
};

struct ExperimentConfig {
  GrammarSpec grammar;
  AgentConfig agent;
  int population = 100;
  std::int64_t trials = 4000;
  std::vector<std::int64_t> snapshot_trials{300, 600, 900, 2000, 4000};
  double extraction_threshold = 5.0;
  std::optional<TrialWindow> parse_window;
  int smoothing_window = 51;
  std::uint64_t base_seed = 1;
  int focal_agent = 0;
  SnapshotMode snapshot_mode = SnapshotMode::kBoth;
  SimulationOptions simulation;
  int workers = 1;
  bool keep_final_tables = true;
  bool episode_log = false;
};

/// Throws ConfigError naming the field.
void validate(const ExperimentConfig& config);

/// Seed of agent `index`: base_seed + index.
std::uint64_t agent_seed(const ExperimentConfig& config, int index);

/// Per-trial population outcome, overall and by true sentence length.
class LearningCurve {
 public:
  LearningCurve() = default;
  LearningCurve(int population, std::int64_t trials);

  void add(std::int64_t trial, bool correct, int sentence_length);

  int population() const { return population_; }
  std::int64_t trials() const { return static_cast<std::int64_t>(correct_.size()); }

  /// correct / population at 1-based trial t.
  double fraction(std::int64_t t) const;
  std::vector<double> fractions() const;

  /// Lengths with at least one encounter, including 0.
  std::vector<int> lengths() const;
  int encounters(int length, std::int64_t t) const;
  int correct_at(int length, std::int64_t t) const;
  /// NaN where no agent met a sentence of that length.
  double length_fraction(int length, std::int64_t t) const;

  void merge(const LearningCurve& other);

 private:
  struct PerLength {
    std::vector<std::int32_t> correct;
    std::vector<std::int32_t> count;
  };
  int population_ = 0;
  std::vector<std::int32_t> correct_;
  std::map<int, PerLength> by_length_;
};

/// Builds the curve from per-agent episode records.
LearningCurve breakdown_by_length(const std::vector<std::vector<EpisodeRecord>>& per_agent);

/// Centered moving average; the window shrinks at the edges.
std::vector<double> moving_average(const std::vector<double>& values, int window);

/// Pooled per-length fraction over a centered window (sum correct / sum
/// count), NaN where the window holds no encounter.
std::vector<double> smoothed_length_fraction(const LearningCurve& curve, int length, int window);

/// First 1-based index where `series` reaches `threshold`, if any.
std::optional<std::int64_t> first_crossing(const std::vector<double>& series, double threshold);

/// Mean of the last `count` fractions.
double trailing_mean(const LearningCurve& curve, std::int64_t count);

LogisticFit fit_curve(const LearningCurve& curve, const LogisticFitOptions& options = {});

struct ExtractedRule {
  std::string first_pattern;
  std::string second_pattern;
  int action = 0;
  std::string label;
  double mean_q = 0.0;
  std::int64_t instance_count = 0;
  std::int64_t total_instances = 0;

  int first_length() const;
};

/// "chunk", "chunk at root", "chunk deep", "chunk deepest" or "border".
std::string action_label(int action, int depth);

/// Groups above-threshold entries by (first pattern, second pattern,
/// action). Sorted by first-pattern length, patterns, then action.
std::vector<ExtractedRule> extract_grammar(const QTable& table, double threshold,
                                           const Pcfg& pcfg);

/// A rule pooled over a population of tables.
struct PopulationRule {
  std::string first_pattern;
  std::string second_pattern;
  int action = 0;
  std::string label;
  double mean_q = 0.0;              // over every pooled instance
  double mean_instances = 0.0;      // instance_count averaged over all agents
  std::int64_t pooled_instances = 0;
  int agents_with_rule = 0;
  std::int64_t total_instances = 0;
};

std::vector<PopulationRule> aggregate_rules(const std::vector<std::vector<ExtractedRule>>& per_agent);

/// Sum of instance counts over rules whose first element has at least
/// `min_length` words.
std::int64_t instances_with_first_length(const std::vector<ExtractedRule>& rules, int min_length);

/// Number of binary tree shapes over n words: C_{n-1}. Requires 1 <= n <= 30.
std::uint64_t catalan(int n);

struct ParseFrequencyReport {
  struct Tree {
    std::string pattern;
    std::int64_t count = 0;
    double frequency = 0.0;
  };
  struct Sentence {
    std::string classes;  // space-separated class sequence
    int length = 0;
    std::uint64_t catalan_bound = 0;
    std::int64_t total = 0;
    std::vector<Tree> trees;  // most frequent first
  };

  std::vector<Sentence> sentences;  // sorted by class sequence

  void add(const std::string& tree_pattern);
  /// Recomputes frequencies and ordering after a batch of add() calls.
  void finalize();
  const Sentence* find(const std::string& classes) const;

 private:
  std::map<std::string, std::map<std::string, std::int64_t>> tallies_;
};

/// Space-separated classes of a structure pattern: "((D A) N)" -> "D A N".
std::string pattern_classes(const std::string& pattern);

/// Continues learning through window.end, tallying the tree pattern of each
/// correctly identified sentence whose trial lies in [window.start,
/// window.end]. `on_episode` sees every episode played.
ParseFrequencyReport record_parse_frequencies(
    Simulation& sim, Agent& agent, TrialWindow window,
    const std::function<void(const EpisodeRecord&)>& on_episode = {});

struct Snapshot {
  std::int64_t trial = 0;
  std::optional<QTable> focal_table;
  std::vector<ExtractedRule> focal_rules;
  std::vector<std::vector<ExtractedRule>> agent_rules;  // population mode
  std::vector<PopulationRule> population_rules;
};

struct PopulationResult {
  LearningCurve curve;
  std::vector<Snapshot> snapshots;
  std::vector<QTable> final_tables;
  std::optional<ParseFrequencyReport> parses;
  std::vector<std::uint64_t> agent_seeds;
  std::int64_t guard_events = 0;
  std::vector<EpisodeRecord> focal_log;
  double wall_seconds = 0.0;
};

/// Runs every agent for config.trials episodes. Output is independent of
/// config.workers.
PopulationResult run_population(const ExperimentConfig& config);

}  // namespace chunklearn
