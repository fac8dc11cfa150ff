#include "chunklearn/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>
#include <tuple>

namespace chunklearn {

Pcfg GrammarSpec::build() const {
  if (!file.empty()) return load_grammar_file(file);
  return make_builtin(name, sizes);
}

std::string GrammarSpec::describe() const {
  if (!file.empty()) return "file:" + file;
  std::string out = name;
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    out += (i == 0 ? "(" : ",") + std::to_string(sizes[i]);
  }
  if (!sizes.empty()) out += ")";
  return out;
}

std::string to_string(SnapshotMode m) {
  switch (m) {
    case SnapshotMode::kFocal: return "focal";
    case SnapshotMode::kPopulation: return "population";
    case SnapshotMode::kBoth: return "both";
  }
  return "both";
}

SnapshotMode parse_snapshot_mode(const std::string& text) {
  if (text == "focal") return SnapshotMode::kFocal;
  if (text == "population") return SnapshotMode::kPopulation;
  if (text == "both") return SnapshotMode::kBoth;
  throw ConfigError("snapshot_mode", "expected focal, population or both, got '" + text + "'");
}

void validate(const ExperimentConfig& config) {
  validate(config.agent);
  if (config.population < 1) throw ConfigError("agents", "must be at least 1");
  if (config.trials < 1) throw ConfigError("trials", "must be at least 1");
  for (auto t : config.snapshot_trials) {
    if (t < 1 || t > config.trials) {
      throw ConfigError("snapshots", "trial " + std::to_string(t) + " outside [1, " +
                                         std::to_string(config.trials) + "]");
    }
  }
  if (!(config.extraction_threshold > 0.0 && config.extraction_threshold < config.agent.r_plus)) {
    throw ConfigError("tg", "threshold must lie in (0, r_plus)");
  }
  if (config.parse_window) {
    const auto& w = *config.parse_window;
    if (w.start < 1 || w.end < w.start || w.end > config.trials) {
      throw ConfigError("parse_window", "needs 1 <= start <= end <= trials");
    }
  }
  if (config.smoothing_window < 1 || config.smoothing_window % 2 == 0) {
    throw ConfigError("smoothing", "must be a positive odd integer");
  }
  if (config.focal_agent < 0 || config.focal_agent >= config.population) {
    throw ConfigError("focal_agent", "must index an agent of the population");
  }
  if (config.workers < 0) throw ConfigError("workers", "must be non-negative");
}

std::uint64_t agent_seed(const ExperimentConfig& config, int index) {
  return config.base_seed + static_cast<std::uint64_t>(index);
}

// ---------------------------------------------------------------------------
// Learning curves

LearningCurve::LearningCurve(int population, std::int64_t trials)
    : population_(population), correct_(static_cast<std::size_t>(trials), 0) {}

void LearningCurve::add(std::int64_t trial, bool correct, int sentence_length) {
  if (trial < 1 || trial > trials()) throw std::out_of_range("trial outside curve");
  const auto t = static_cast<std::size_t>(trial - 1);
  auto& per = by_length_[sentence_length];
  if (per.count.empty()) {
    per.count.assign(correct_.size(), 0);
    per.correct.assign(correct_.size(), 0);
  }
  ++per.count[t];
  if (correct) {
    ++per.correct[t];
    ++correct_[t];
  }
}

double LearningCurve::fraction(std::int64_t t) const {
  return static_cast<double>(correct_.at(static_cast<std::size_t>(t - 1))) / population_;
}

std::vector<double> LearningCurve::fractions() const {
  std::vector<double> out(correct_.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = static_cast<double>(correct_[i]) / population_;
  }
  return out;
}

std::vector<int> LearningCurve::lengths() const {
  std::vector<int> out;
  for (const auto& [len, per] : by_length_) out.push_back(len);
  return out;
}

int LearningCurve::encounters(int length, std::int64_t t) const {
  auto it = by_length_.find(length);
  if (it == by_length_.end()) return 0;
  return it->second.count.at(static_cast<std::size_t>(t - 1));
}

int LearningCurve::correct_at(int length, std::int64_t t) const {
  auto it = by_length_.find(length);
  if (it == by_length_.end()) return 0;
  return it->second.correct.at(static_cast<std::size_t>(t - 1));
}

double LearningCurve::length_fraction(int length, std::int64_t t) const {
  const int n = encounters(length, t);
  if (n == 0) return std::numeric_limits<double>::quiet_NaN();
  return static_cast<double>(correct_at(length, t)) / n;
}

void LearningCurve::merge(const LearningCurve& other) {
  if (other.trials() != trials()) throw std::invalid_argument("curves differ in length");
  population_ += other.population_;
  for (std::size_t i = 0; i < correct_.size(); ++i) correct_[i] += other.correct_[i];
  for (const auto& [len, src] : other.by_length_) {
    auto& dst = by_length_[len];
    if (dst.count.empty()) {
      dst.count.assign(correct_.size(), 0);
      dst.correct.assign(correct_.size(), 0);
    }
    for (std::size_t i = 0; i < correct_.size(); ++i) {
      dst.count[i] += src.count[i];
      dst.correct[i] += src.correct[i];
    }
  }
}

LearningCurve breakdown_by_length(const std::vector<std::vector<EpisodeRecord>>& per_agent) {
  std::int64_t trials = 0;
  for (const auto& records : per_agent) {
    for (const auto& r : records) trials = std::max(trials, r.trial_index);
  }
  LearningCurve curve(static_cast<int>(per_agent.size()), trials);
  for (const auto& records : per_agent) {
    for (const auto& r : records) curve.add(r.trial_index, r.correct, r.sentence_length);
  }
  return curve;
}

std::vector<double> moving_average(const std::vector<double>& values, int window) {
  if (window < 1) throw std::invalid_argument("window must be positive");
  const auto n = static_cast<std::int64_t>(values.size());
  std::vector<double> prefix(values.size() + 1, 0.0);
  for (std::int64_t i = 0; i < n; ++i) prefix[i + 1] = prefix[i] + values[i];
  const std::int64_t half = window / 2;
  std::vector<double> out(values.size());
  for (std::int64_t i = 0; i < n; ++i) {
    const std::int64_t lo = std::max<std::int64_t>(0, i - half);
    const std::int64_t hi = std::min<std::int64_t>(n, i + half + 1);
    out[i] = (prefix[hi] - prefix[lo]) / static_cast<double>(hi - lo);
  }
  return out;
}

std::vector<double> smoothed_length_fraction(const LearningCurve& curve, int length, int window) {
  const std::int64_t n = curve.trials();
  std::vector<std::int64_t> pc(n + 1, 0), pn(n + 1, 0);
  for (std::int64_t t = 1; t <= n; ++t) {
    pc[t] = pc[t - 1] + curve.correct_at(length, t);
    pn[t] = pn[t - 1] + curve.encounters(length, t);
  }
  const std::int64_t half = window / 2;
  std::vector<double> out(static_cast<std::size_t>(n));
  for (std::int64_t i = 0; i < n; ++i) {
    const std::int64_t lo = std::max<std::int64_t>(0, i - half);
    const std::int64_t hi = std::min<std::int64_t>(n, i + half + 1);
    const auto count = pn[hi] - pn[lo];
    out[i] = count == 0 ? std::numeric_limits<double>::quiet_NaN()
                        : static_cast<double>(pc[hi] - pc[lo]) / static_cast<double>(count);
  }
  return out;
}

std::optional<std::int64_t> first_crossing(const std::vector<double>& series, double threshold) {
  for (std::size_t i = 0; i < series.size(); ++i) {
    if (series[i] >= threshold) return static_cast<std::int64_t>(i + 1);
  }
  return std::nullopt;
}

double trailing_mean(const LearningCurve& curve, std::int64_t count) {
  const std::int64_t n = curve.trials();
  count = std::min(count, n);
  if (count <= 0) return std::numeric_limits<double>::quiet_NaN();
  double s = 0.0;
  for (std::int64_t t = n - count + 1; t <= n; ++t) s += curve.fraction(t);
  return s / static_cast<double>(count);
}

LogisticFit fit_curve(const LearningCurve& curve, const LogisticFitOptions& options) {
  const auto y = curve.fractions();
  return fit_logistic(y, options);
}

// ---------------------------------------------------------------------------
// Grammar extraction

int ExtractedRule::first_length() const { return pattern_length(first_pattern); }

std::string action_label(int action, int depth) {
  if (action == depth) return "border";
  if (depth == 1) return "chunk";
  if (action == 0) return "chunk at root";
  if (action == depth - 1 && depth >= 3) return "chunk deepest";
  return "chunk deep";
}

namespace {

bool rule_less(const std::string& f1, const std::string& s1, int a1, const std::string& f2,
               const std::string& s2, int a2) {
  const int l1 = pattern_length(f1);
  const int l2 = pattern_length(f2);
  return std::tie(l1, f1, s1, a1) < std::tie(l2, f2, s2, a2);
}

}  // namespace

std::vector<ExtractedRule> extract_grammar(const QTable& table, double threshold,
                                           const Pcfg& pcfg) {
  const auto& interner = table.interner();
  absl::flat_hash_map<ChunkId, std::string> pattern_cache;
  auto pattern_of = [&](ChunkId id) -> const std::string& {
    auto it = pattern_cache.find(id);
    if (it == pattern_cache.end()) it = pattern_cache.emplace(id, interner.structure_pattern(id)).first;
    return it->second;
  };

  struct Acc {
    int depth = 0;
    std::vector<double> values;
  };
  std::map<std::tuple<std::string, std::string, int>, Acc> groups;
  table.for_each_stored([&](StateKey key, int action, double v) {
    if (!(v > threshold)) return;
    auto& acc = groups[{pattern_of(key.first), pattern_of(key.second), action}];
    acc.depth = interner.right_depth(key.first);
    acc.values.push_back(v);
  });
  // Sorted summation keeps the mean independent of table layout (a reloaded
  // table has different ids and iteration order).
  for (auto& [k, acc] : groups) std::sort(acc.values.begin(), acc.values.end());

  std::vector<ExtractedRule> out;
  out.reserve(groups.size());
  for (const auto& [k, acc] : groups) {
    ExtractedRule r;
    r.first_pattern = std::get<0>(k);
    r.second_pattern = std::get<1>(k);
    r.action = std::get<2>(k);
    r.label = action_label(r.action, acc.depth);
    double sum = 0.0;
    for (double v : acc.values) sum += v;
    r.instance_count = static_cast<std::int64_t>(acc.values.size());
    r.mean_q = sum / static_cast<double>(r.instance_count);
    r.total_instances = pattern_instance_total(r.first_pattern + "|" + r.second_pattern, pcfg);
    out.push_back(std::move(r));
  }
  std::sort(out.begin(), out.end(), [](const ExtractedRule& a, const ExtractedRule& b) {
    return rule_less(a.first_pattern, a.second_pattern, a.action, b.first_pattern,
                     b.second_pattern, b.action);
  });
  return out;
}

std::vector<PopulationRule> aggregate_rules(const std::vector<std::vector<ExtractedRule>>& per_agent) {
  struct Acc {
    std::string label;
    double q_sum = 0.0;
    std::int64_t instances = 0;
    int agents = 0;
    std::int64_t total = 0;
  };
  std::map<std::tuple<std::string, std::string, int>, Acc> groups;
  for (const auto& rules : per_agent) {
    for (const auto& r : rules) {
      auto& acc = groups[{r.first_pattern, r.second_pattern, r.action}];
      acc.label = r.label;
      acc.q_sum += r.mean_q * static_cast<double>(r.instance_count);
      acc.instances += r.instance_count;
      ++acc.agents;
      acc.total = r.total_instances;
    }
  }
  const double n_agents = per_agent.empty() ? 1.0 : static_cast<double>(per_agent.size());
  std::vector<PopulationRule> out;
  for (const auto& [k, acc] : groups) {
    PopulationRule p;
    p.first_pattern = std::get<0>(k);
    p.second_pattern = std::get<1>(k);
    p.action = std::get<2>(k);
    p.label = acc.label;
    p.mean_q = acc.q_sum / static_cast<double>(acc.instances);
    p.pooled_instances = acc.instances;
    p.mean_instances = static_cast<double>(acc.instances) / n_agents;
    p.agents_with_rule = acc.agents;
    p.total_instances = acc.total;
    out.push_back(std::move(p));
  }
  std::sort(out.begin(), out.end(), [](const PopulationRule& a, const PopulationRule& b) {
    return rule_less(a.first_pattern, a.second_pattern, a.action, b.first_pattern,
                     b.second_pattern, b.action);
  });
  return out;
}

std::int64_t instances_with_first_length(const std::vector<ExtractedRule>& rules, int min_length) {
  std::int64_t n = 0;
  for (const auto& r : rules) {
    if (r.first_length() >= min_length) n += r.instance_count;
  }
  return n;
}

std::uint64_t catalan(int n) {
  if (n < 1 || n > 30) throw std::out_of_range("catalan: n must lie in [1, 30]");
  // C_{m+1} = C_m * 2(2m+1) / (m+2), exact in integers.
  std::uint64_t c = 1;
  for (int m = 0; m < n - 1; ++m) {
    c = c * 2 * (2 * static_cast<std::uint64_t>(m) + 1) / (static_cast<std::uint64_t>(m) + 2);
  }
  return c;
}

// ---------------------------------------------------------------------------
// Parse frequencies

std::string pattern_classes(const std::string& pattern) {
  std::string out;
  std::string token;
  auto flush = [&] {
    if (token.empty()) return;
    if (auto hash = token.find('#'); hash != std::string::npos) token.resize(hash);
    if (!out.empty()) out += ' ';
    out += token;
    token.clear();
  };
  for (char c : pattern) {
    if (c == '(' || c == ')' || c == '[' || c == ']' || c == ' ' || c == '|') {
      flush();
    } else {
      token += c;
    }
  }
  flush();
  return out;
}

void ParseFrequencyReport::add(const std::string& tree_pattern) {
  ++tallies_[pattern_classes(tree_pattern)][tree_pattern];
}

void ParseFrequencyReport::finalize() {
  sentences.clear();
  for (const auto& [classes, trees] : tallies_) {
    Sentence s;
    s.classes = classes;
    s.length = pattern_length(classes);
    s.catalan_bound = s.length >= 1 && s.length <= 30 ? catalan(s.length) : 0;
    for (const auto& [pattern, count] : trees) {
      s.total += count;
      s.trees.push_back(Tree{pattern, count, 0.0});
    }
    for (auto& t : s.trees) t.frequency = static_cast<double>(t.count) / static_cast<double>(s.total);
    std::stable_sort(s.trees.begin(), s.trees.end(),
                     [](const Tree& a, const Tree& b) { return a.count > b.count; });
    sentences.push_back(std::move(s));
  }
}

const ParseFrequencyReport::Sentence* ParseFrequencyReport::find(const std::string& classes) const {
  for (const auto& s : sentences) {
    if (s.classes == classes) return &s;
  }
  return nullptr;
}

ParseFrequencyReport record_parse_frequencies(
    Simulation& sim, Agent& agent, TrialWindow window,
    const std::function<void(const EpisodeRecord&)>& on_episode) {
  ParseFrequencyReport report;
  const bool was_recording = sim.options().record_patterns;
  while (sim.trial() < window.end) {
    const bool inside = sim.trial() + 1 >= window.start;
    sim.set_record_patterns(was_recording || inside);
    const EpisodeRecord record = sim.run_episode(agent);
    if (inside && record.correct) report.add(record.final_tree_pattern);
    if (on_episode) on_episode(record);
  }
  sim.set_record_patterns(was_recording);
  report.finalize();
  return report;
}

// ---------------------------------------------------------------------------
// Population runs

namespace {

struct AgentSnapshot {
  std::optional<QTable> table;
  std::vector<ExtractedRule> rules;
  bool has_rules = false;
};

struct AgentOutcome {
  std::vector<std::uint8_t> correct;
  std::vector<std::uint8_t> length;
  std::vector<AgentSnapshot> snapshots;
  std::optional<QTable> final_table;
  std::optional<ParseFrequencyReport> parses;
  std::vector<EpisodeRecord> log;
  std::int64_t guard_events = 0;
};

AgentOutcome run_agent(const ExperimentConfig& config, const Pcfg& pcfg,
                       const std::vector<std::int64_t>& snapshots, int index) {
  AgentConfig ac = config.agent;
  ac.seed = agent_seed(config, index);
  Agent agent(ac);
  Simulation sim(pcfg, ac, config.simulation);
  const bool focal = index == config.focal_agent;
  const bool focal_snap = focal && config.snapshot_mode != SnapshotMode::kPopulation;
  const bool pop_snap = config.snapshot_mode != SnapshotMode::kFocal;

  AgentOutcome out;
  out.correct.reserve(static_cast<std::size_t>(config.trials));
  out.length.reserve(static_cast<std::size_t>(config.trials));
  out.snapshots.resize(snapshots.size());
  std::size_t next_snap = 0;

  auto after = [&](const EpisodeRecord& r) {
    out.correct.push_back(r.correct ? 1 : 0);
    out.length.push_back(static_cast<std::uint8_t>(std::min(r.sentence_length, 255)));
    if (focal && config.episode_log) out.log.push_back(r);
    while (next_snap < snapshots.size() && snapshots[next_snap] == r.trial_index) {
      auto& snap = out.snapshots[next_snap];
      if (focal_snap) snap.table.emplace(agent.table());
      if (focal_snap || pop_snap) {
        snap.rules = extract_grammar(agent.table(), config.extraction_threshold, pcfg);
        snap.has_rules = true;
      }
      ++next_snap;
    }
  };

  while (sim.trial() < config.trials) {
    if (focal && config.parse_window && sim.trial() + 1 == config.parse_window->start) {
      out.parses = record_parse_frequencies(sim, agent, *config.parse_window, after);
      continue;
    }
    after(sim.run_episode(agent));
  }
  out.guard_events = sim.guard_events();
  if (config.keep_final_tables) out.final_table.emplace(std::move(agent.table()));
  return out;
}

}  // namespace

PopulationResult run_population(const ExperimentConfig& config) {
  validate(config);
  const auto started = std::chrono::steady_clock::now();
  const Pcfg pcfg = config.grammar.build();
  require_valid(pcfg);

  std::vector<std::int64_t> snapshots = config.snapshot_trials;
  std::sort(snapshots.begin(), snapshots.end());
  snapshots.erase(std::unique(snapshots.begin(), snapshots.end()), snapshots.end());

  const int n = config.population;
  std::vector<AgentOutcome> outcomes(static_cast<std::size_t>(n));
  int workers = config.workers;
  if (workers == 0) workers = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  workers = std::min(workers, n);

  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto work = [&] {
    while (true) {
      const int i = next.fetch_add(1);
      if (i >= n) return;
      try {
        outcomes[static_cast<std::size_t>(i)] = run_agent(config, pcfg, snapshots, i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next.store(n);
        return;
      }
    }
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);

  PopulationResult result;
  result.curve = LearningCurve(n, config.trials);
  for (int i = 0; i < n; ++i) {
    auto& o = outcomes[static_cast<std::size_t>(i)];
    for (std::size_t t = 0; t < o.correct.size(); ++t) {
      result.curve.add(static_cast<std::int64_t>(t + 1), o.correct[t] != 0, o.length[t]);
    }
    result.agent_seeds.push_back(agent_seed(config, i));
    result.guard_events += o.guard_events;
  }

  const bool pop_snap = config.snapshot_mode != SnapshotMode::kFocal;
  for (std::size_t s = 0; s < snapshots.size(); ++s) {
    Snapshot snap;
    snap.trial = snapshots[s];
    auto& focal = outcomes[static_cast<std::size_t>(config.focal_agent)].snapshots[s];
    if (config.snapshot_mode != SnapshotMode::kPopulation) {
      snap.focal_table = std::move(focal.table);
      snap.focal_rules = focal.rules;
    }
    if (pop_snap) {
      for (auto& o : outcomes) snap.agent_rules.push_back(std::move(o.snapshots[s].rules));
      snap.population_rules = aggregate_rules(snap.agent_rules);
    }
    result.snapshots.push_back(std::move(snap));
  }

  auto& focal = outcomes[static_cast<std::size_t>(config.focal_agent)];
  result.parses = std::move(focal.parses);
  result.focal_log = std::move(focal.log);
  if (config.keep_final_tables) {
    for (auto& o : outcomes) result.final_tables.push_back(std::move(*o.final_table));
  }
  result.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return result;
}

}  // namespace chunklearn
