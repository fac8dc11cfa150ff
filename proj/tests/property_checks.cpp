#include "property_checks.hpp"

#include <cmath>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "chunklearn/agent.hpp"
#include "chunklearn/experiment.hpp"
#include "chunklearn/io.hpp"

namespace chunklearn::checks {

namespace {

void fail(CheckResult& r, const std::string& what) {
  if (r.ok) r.detail = what;
  r.ok = false;
}

// Independent right-depth: walk the right spine by hand.
int spine_length(const Chunk& c) {
  int d = 1;
  const Chunk* cur = &c;
  while (!cur->is_leaf()) {
    ++d;
    cur = &cur->right();
  }
  return d;
}

Chunk walk_right(Chunk c, int k) {
  for (int j = 0; j < k; ++j) c = c.right();
  return c;
}

// Printer with a different format from canonical_key, as an oracle.
void describe(const Chunk& c, std::string& out) {
  if (c.is_leaf()) {
    out += '<' + c.word().class_name + ':' + std::to_string(c.word().index) + '>';
    return;
  }
  out += '[';
  describe(c.left(), out);
  out += ',';
  describe(c.right(), out);
  out += ']';
}

std::vector<Word> word_positions(const Chunk& c) { return leaves(c); }

Chunk random_tree(const std::vector<Word>& words, std::size_t lo, std::size_t hi, std::mt19937_64& rng) {
  if (hi - lo == 1) return Chunk::leaf(words[lo]);
  std::uniform_int_distribution<std::size_t> split(lo + 1, hi - 1);
  const std::size_t m = split(rng);
  return Chunk::node(random_tree(words, lo, m, rng), random_tree(words, m, hi, rng));
}

}  // namespace

std::vector<Chunk> all_trees(const std::vector<Word>& leaves_in) {
  std::vector<Chunk> out;
  if (leaves_in.size() == 1) {
    out.push_back(Chunk::leaf(leaves_in[0]));
    return out;
  }
  for (std::size_t m = 1; m < leaves_in.size(); ++m) {
    const std::vector<Word> l(leaves_in.begin(), leaves_in.begin() + static_cast<std::ptrdiff_t>(m));
    const std::vector<Word> r(leaves_in.begin() + static_cast<std::ptrdiff_t>(m), leaves_in.end());
    for (const auto& a : all_trees(l)) {
      for (const auto& b : all_trees(r)) out.push_back(Chunk::node(a, b));
    }
  }
  return out;
}

std::vector<Word> make_words(int n, std::int64_t start) {
  std::vector<Word> w;
  for (int i = 0; i < n; ++i) {
    w.push_back(Word{i % 2 == 0 ? "N" : "V", i + 1, start + i});
  }
  return w;
}

CheckResult chunk_algebra() {
  CheckResult r;
  int states = 0;
  for (int nf = 1; nf <= 5; ++nf) {
    const auto words = make_words(nf + 1);
    const Chunk second = Chunk::leaf(words.back());
    for (const auto& tree : all_trees(std::vector<Word>(words.begin(), words.end() - 1))) {
      const State s(tree, second);
      ++states;
      const int d = spine_length(tree);
      if (s.right_depth() != d) fail(r, "right_depth disagrees with spine walk");
      if (s.action_count() != d + 1) fail(r, "action count != d + 1");
      for (int i = 0; i < d; ++i) {
        const Chunk c = apply_chunk_action(s, i);
        if (spine_length(c) != i + 2) fail(r, "d(apply(s, i)) != i + 2");
        const auto got = word_positions(c);
        if (got.size() != words.size()) fail(r, "leaf count changed");
        for (std::size_t j = 0; j < got.size() && j < words.size(); ++j) {
          if (got[j].position != words[j].position || !got[j].same_identity(words[j])) {
            fail(r, "leaf order not preserved");
          }
        }
        // The new node sits i steps down the spine and pairs the old subtree with second.
        const Chunk at = walk_right(c, i);
        if (at.is_leaf() || canonical_key(at.left()) != canonical_key(walk_right(tree, i)) ||
            !at.right().is_leaf() || at.right().start() != second.start()) {
          fail(r, "chunk not attached at spine depth i");
        }
      }
      for (int k = 0; k < d; ++k) {
        const State sub = substate(s, k);
        if (sub.right_depth() != d - k) fail(r, "d(substate(s, k)) != d - k");
        if (canonical_key(sub.first()) != canonical_key(walk_right(tree, k))) fail(r, "wrong sub-state");
      }
      bool threw = false;
      try {
        apply_chunk_action(s, d);
      } catch (const std::out_of_range&) {
        threw = true;
      }
      if (!threw) fail(r, "apply_chunk_action accepted the boundary index");
    }
  }
  if (r.ok) r.detail = std::to_string(states) + " states with up to 6 leaves";
  return r;
}

CheckResult canonical_key_injective() {
  CheckResult r;
  const std::vector<std::pair<std::string, int>> alphabet{{"N", 1}, {"N", 2}, {"V", 1}};
  std::map<std::string, std::string> seen;
  std::size_t total = 0;
  for (int n = 1; n <= 6; ++n) {
    int combos = 1;
    for (int j = 0; j < n; ++j) combos *= 3;
    for (int code = 0; code < combos; ++code) {
      std::vector<Word> words;
      int c = code;
      for (int j = 0; j < n; ++j) {
        words.push_back(Word{alphabet[c % 3].first, alphabet[c % 3].second, 7 + j});
        c /= 3;
      }
      for (const auto& tree : all_trees(words)) {
        ++total;
        std::string desc;
        describe(tree, desc);
        const std::string key = canonical_key(tree);
        auto [it, inserted] = seen.emplace(key, desc);
        if (!inserted && it->second != desc) fail(r, "key collision: " + key);
        if (canonical_key(parse_canonical_key(key, 100)) != key) fail(r, "key does not round-trip: " + key);
      }
    }
  }
  // Position shifts leave the key unchanged.
  for (const auto& tree : all_trees(make_words(5, 0))) {
    const Chunk moved = parse_canonical_key(canonical_key(tree), 1000);
    if (moved.start() != 1000 || canonical_key(moved) != canonical_key(tree)) fail(r, "shifted chunk changed key");
  }
  if (seen.size() != total) fail(r, "distinct chunks share keys");
  if (r.ok) r.detail = std::to_string(total) + " labelled trees, all keys distinct";
  return r;
}

CheckResult heaviside_gate_audit() {
  CheckResult r;
  int audited = 0;
  for (int nf = 1; nf <= 4; ++nf) {
    const auto words = make_words(nf + 1);
    const Chunk second = Chunk::leaf(words.back());
    for (const auto& tree : all_trees(std::vector<Word>(words.begin(), words.end() - 1))) {
      const State s(tree, second);
      const int d = spine_length(tree);
      for (int i = 0; i <= d; ++i) {
        std::set<std::pair<std::string, int>> expected;
        for (int k = 0; k < d && i - k >= 0; ++k) {
          expected.emplace(state_key_text(State(walk_right(tree, k), second)), i - k);
        }
        // Write side: exactly the gated pairs are stored.
        for (auto alg : {Algorithm::kQLearning, Algorithm::kRescorlaWagner}) {
          for (auto order : {UpdateOrder::kInOrder, UpdateOrder::kFrozenTable}) {
            AgentConfig cfg;
            cfg.algorithm = alg;
            cfg.update_order = order;
            QTable table(cfg.q_b, cfg.q_c);
            EpisodeTrace trace;
            trace.steps.push_back(TraceStep{s, i, {}});
            trace.final_reward = cfg.r_plus;
            update_episode(table, trace, cfg);
            std::set<std::pair<std::string, int>> written;
            for (const auto& e : table.entries()) written.emplace(e.state_key, e.action);
            if (written != expected) fail(r, "update wrote outside the gate for " + state_key_text(s));
            ++audited;
          }
        }
        // Read side: poison every non-gated action of every sub-state.
        QTable table;
        double sum = 0.0;
        int terms = 0;
        for (int k = 0; k < d; ++k) {
          const State sub(walk_right(tree, k), second);
          const StateKey key = table.key_of(sub);
          for (int a = 0; a <= d - k; ++a) {
            if (a == i - k) {
              table.set(key, a, 2.0 + k);
              sum += 2.0 + k;
              ++terms;
            } else {
              table.set(key, a, 1e6);
            }
          }
        }
        if (std::abs(composite_add(table, s, i) - sum) > 1e-9) fail(r, "composite_add read a gated-out entry");
        if (std::abs(composite_avg(table, s, i) - sum / terms) > 1e-9) fail(r, "composite_avg read a gated-out entry");
      }
    }
  }
  if (r.ok) r.detail = std::to_string(audited) + " single-step updates audited";
  return r;
}

CheckResult depth_one_degeneracy() {
  CheckResult r;
  std::mt19937_64 rng(99);
  std::uniform_int_distribution<int> idx(1, 5);
  std::uniform_int_distribution<int> coin(0, 1);
  AgentConfig q;
  AgentConfig rw = q;
  rw.algorithm = Algorithm::kRescorlaWagner;
  QTable tq, trw;
  std::int64_t pos = 0;
  for (int ep = 0; ep < 2000; ++ep) {
    EpisodeTrace trace;
    const int steps = 1 + coin(rng) + coin(rng);
    for (int s = 0; s < steps; ++s) {
      State st(Chunk::leaf(Word{coin(rng) ? "N" : "V", idx(rng), pos}),
               Chunk::leaf(Word{coin(rng) ? "N" : "V", idx(rng), pos + 1}));
      pos += 2;
      trace.steps.push_back(TraceStep{st, s + 1 == steps ? 1 : coin(rng), {}});
    }
    trace.final_reward = coin(rng) ? q.r_plus : q.r_minus;
    EpisodeTrace copy = trace;
    update_episode(tq, trace, q);
    update_episode(trw, copy, rw);
  }
  if (tq.to_csv() != trw.to_csv()) fail(r, "q and rw tables differ on depth-1 traces");
  for (const auto& e : tq.entries()) {
    const Chunk c = parse_canonical_key(e.state_key.substr(0, e.state_key.find('|')), 0);
    const Chunk s2 = parse_canonical_key(e.state_key.substr(e.state_key.find('|') + 1), 1);
    const State st(c, s2);
    for (int i = 0; i <= 1; ++i) {
      const double v = q_lookup(tq, st, i);
      if (composite_avg(tq, st, i) != v || composite_add(tq, st, i) != v) {
        fail(r, "composite values differ from q_lookup at d = 1");
      }
    }
  }
  if (r.ok) r.detail = std::to_string(tq.size()) + " entries identical under both rules";
  return r;
}

CheckResult update_arithmetic() {
  CheckResult r;
  auto near = [](double a, double b) { return std::abs(a - b) < 1e-12; };
  const auto w = make_words(3);
  {
    AgentConfig cfg;
    QTable t;
    State s(Chunk::leaf(w[0]), Chunk::leaf(w[1]));
    EpisodeTrace tr;
    tr.steps.push_back(TraceStep{s, 1, {}});
    tr.final_reward = 25.0;
    update_episode(t, tr, cfg);
    if (!near(q_lookup(t, s, 1), 3.4)) fail(r, "q-learning boundary update != 3.4");
    if (!near(q_lookup(t, s, 0), -1.0)) fail(r, "unchosen action changed");
  }
  {
    AgentConfig cfg;
    cfg.algorithm = Algorithm::kRescorlaWagner;
    QTable t;
    State s(Chunk::node(Chunk::leaf(w[0]), Chunk::leaf(w[1])), Chunk::leaf(w[2]));
    EpisodeTrace tr;
    tr.steps.push_back(TraceStep{s, 2, {}});
    tr.final_reward = 25.0;
    update_episode(t, tr, cfg);
    if (!near(q_lookup(t, s, 2), 3.3)) fail(r, "rw boundary update on state != 3.3");
    if (!near(q_lookup(t, substate(s, 1), 1), 3.3)) fail(r, "rw boundary update on sub-state != 3.3");
  }
  {
    AgentConfig cfg;
    cfg.algorithm = Algorithm::kRescorlaWagner;
    QTable t;
    State s(Chunk::leaf(w[0]), Chunk::leaf(w[1]));
    EpisodeTrace tr;
    tr.steps.push_back(TraceStep{s, 1, {}});
    tr.final_reward = cfg.r_minus;
    update_episode(t, tr, cfg);
    if (!near(q_lookup(t, s, 1), -0.1)) fail(r, "rw negative update != -0.1");
  }
  if (r.ok) r.detail = "3.4, 3.3/3.3, -0.1";
  return r;
}

CheckResult softmax_shift_invariance() {
  CheckResult r;
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> val(-30.0, 30.0), shift(-100.0, 100.0), beta(0.1, 5.0);
  std::uniform_int_distribution<int> len(2, 8);
  double worst = 0.0;
  for (int trial = 0; trial < 5000; ++trial) {
    std::vector<double> v(static_cast<std::size_t>(len(rng)));
    for (auto& x : v) x = val(rng);
    const double c = shift(rng);
    const double b = beta(rng);
    std::vector<double> v2 = v;
    for (auto& x : v2) x += c;
    std::vector<double> p1, p2;
    softmax(v, b, p1);
    softmax(v2, b, p2);
    double sum = 0.0;
    for (std::size_t j = 0; j < v.size(); ++j) {
      worst = std::max(worst, std::abs(p1[j] - p2[j]));
      sum += p1[j];
    }
    if (std::abs(sum - 1.0) > 1e-12) fail(r, "probabilities do not sum to 1");
  }
  if (worst > 1e-12) fail(r, "shift changed probabilities by " + format_number(worst));
  if (r.ok) r.detail = "max deviation " + format_number(worst);
  return r;
}

CheckResult boundary_oracle_equivalence() {
  CheckResult r;
  std::mt19937_64 rng(2024);
  int checked = 0, positives = 0;
  const Pcfg grammars[] = {builtin_nvn(5, 5), builtin_md(5, 1, 1), builtin_relclause(5, 1, 1, 1),
                           builtin_complexnp(1, 1, 1, 1, 1, 1)};
  for (int stream = 0; stream < 40; ++stream) {
    StreamCursor cursor(grammars[stream % 4], 1000 + static_cast<std::uint64_t>(stream), 4000);
    std::vector<Word> words;
    std::vector<bool> flags;
    for (int j = 0; j < 400; ++j) {
      auto e = cursor.next_word();
      words.push_back(e.word);
      flags.push_back(e.boundary_before);
    }
    // Oracle: sentence spans re-segmented from the flag array.
    std::set<std::pair<std::int64_t, std::int64_t>> spans;
    std::int64_t start = 0;
    for (std::int64_t p = 1; p < static_cast<std::int64_t>(flags.size()); ++p) {
      if (flags[static_cast<std::size_t>(p)]) {
        spans.emplace(start, p - 1);
        start = p;
      }
    }
    const std::vector<std::pair<std::int64_t, std::int64_t>> span_list(spans.begin(), spans.end());
    std::uniform_int_distribution<std::size_t> pick_span(0, span_list.size() - 1);
    std::uniform_int_distribution<std::int64_t> pick_start(0, 360);
    std::uniform_int_distribution<std::int64_t> pick_len(1, 14);
    for (int j = 0; j < 250; ++j) {
      std::int64_t s = 0, e = 0;
      if (j % 3 == 0) {
        std::tie(s, e) = span_list[pick_span(rng)];
      } else {
        s = pick_start(rng);
        e = s + pick_len(rng) - 1;
      }
      if (e + 1 >= static_cast<std::int64_t>(words.size())) continue;
      const Chunk c = random_tree(words, static_cast<std::size_t>(s), static_cast<std::size_t>(e + 1), rng);
      const bool oracle = spans.count({s, e}) > 0;
      positives += oracle ? 1 : 0;
      if (is_correct_sentence(c, cursor) != oracle) {
        fail(r, "disagreement on span " + std::to_string(s) + ".." + std::to_string(e));
      }
      ++checked;
    }
  }
  if (checked < 9000) fail(r, "too few chunks checked");
  if (r.ok) r.detail = std::to_string(checked) + " chunks, " + std::to_string(positives) + " sentences";
  return r;
}

CheckResult worker_determinism() {
  CheckResult r;
  for (const std::string g : {"nvn", "md"}) {
    ExperimentConfig c;
    c.grammar.name = g;
    c.population = 9;
    c.trials = 600;
    c.snapshot_trials = {200, 600};
    c.agent.algorithm = g == "md" ? Algorithm::kRescorlaWagner : Algorithm::kQLearning;
    std::vector<std::string> dumps;
    for (int workers : {1, 3, 8}) {
      c.workers = workers;
      const auto res = run_population(c);
      std::string d = curve_csv(res.curve);
      for (const auto& s : res.snapshots) {
        d += rules_csv(s.focal_rules) + population_rules_csv(s.population_rules);
        if (s.focal_table) d += s.focal_table->to_csv();
      }
      for (const auto& t : res.final_tables) d += t.to_csv();
      dumps.push_back(std::move(d));
    }
    if (dumps[0] != dumps[1] || dumps[0] != dumps[2]) fail(r, g + ": outputs depend on worker count");
  }
  if (r.ok) r.detail = "1, 3 and 8 workers agree on nvn and md";
  return r;
}

CheckResult catalan_values() {
  CheckResult r;
  // Oracle: C_{m} = sum_{j<m} C_j C_{m-1-j}.
  std::vector<std::uint64_t> c(30, 0);
  c[0] = 1;
  for (int m = 1; m < 30; ++m) {
    for (int j = 0; j < m; ++j) c[m] += c[j] * c[m - 1 - j];
  }
  for (int n = 1; n <= 30; ++n) {
    if (catalan(n) != c[n - 1]) fail(r, "catalan(" + std::to_string(n) + ") wrong");
  }
  if (catalan(8) != 429 || catalan(10) != 4862 || catalan(11) != 16796 || catalan(1) != 1 || catalan(2) != 1) {
    fail(r, "reference values wrong");
  }
  for (int bad : {0, 31}) {
    try {
      catalan(bad);
      fail(r, "catalan accepted " + std::to_string(bad));
    } catch (const std::out_of_range&) {
    }
  }
  if (r.ok) r.detail = "catalan(8)=429, catalan(11)=16796";
  return r;
}

}  // namespace chunklearn::checks
