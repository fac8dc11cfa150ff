#include "chunklearn/qtable.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace chunklearn {

namespace {

constexpr double kAbsent = std::numeric_limits<double>::quiet_NaN();

std::uint64_t pack(std::uint32_t a, std::uint32_t b) {
  return (static_cast<std::uint64_t>(a) << 32) | b;
}

std::string format_double(double v) {
  std::ostringstream out;
  out.imbue(std::locale::classic());
  out.precision(17);
  out << v;
  return out.str();
}

}  // namespace

std::optional<std::uint32_t> ChunkInterner::find_class(std::string_view name) const {
  const auto it = class_ids_.find(std::string(name));
  if (it == class_ids_.end()) return std::nullopt;
  return it->second;
}

ChunkId ChunkInterner::leaf(std::string_view class_name, int index) {
  std::uint32_t cls;
  if (auto found = find_class(class_name)) {
    cls = *found;
  } else {
    cls = static_cast<std::uint32_t>(class_names_.size());
    class_names_.emplace_back(class_name);
    class_ids_.emplace(std::string(class_name), cls);
  }
  const auto [it, inserted] =
      leaf_ids_.try_emplace(pack(cls, static_cast<std::uint32_t>(index)),
                            static_cast<ChunkId>(entries_.size()));
  if (inserted) entries_.push_back(Entry{true, cls, static_cast<std::uint32_t>(index), 1, 1});
  return it->second;
}

ChunkId ChunkInterner::node(ChunkId left, ChunkId right) {
  const auto [it, inserted] =
      node_ids_.try_emplace(pack(left, right), static_cast<ChunkId>(entries_.size()));
  if (inserted) {
    entries_.push_back(Entry{false, left, right,
                             entries_[left].words + entries_[right].words,
                             1 + entries_[right].right_depth});
  }
  return it->second;
}

ChunkId ChunkInterner::intern(const Chunk& chunk) {
  if (chunk.is_leaf()) return leaf(chunk.word().class_name, chunk.word().index);
  const ChunkId l = intern(chunk.left());
  const ChunkId r = intern(chunk.right());
  return node(l, r);
}

void ChunkInterner::intern_spine(const Chunk& chunk, std::vector<ChunkId>& spine) {
  const int d = chunk.right_depth();
  spine.resize(static_cast<std::size_t>(d));
  // Walk down once, then intern bottom-up so each subtree is visited once.
  thread_local std::vector<const Chunk*> nodes;
  nodes.clear();
  const Chunk* cur = &chunk;
  for (int k = 0; k < d; ++k) {
    nodes.push_back(cur);
    if (!cur->is_leaf()) cur = &cur->right();
  }
  spine[d - 1] = intern(*nodes[d - 1]);
  for (int k = d - 2; k >= 0; --k) {
    spine[k] = node(intern(nodes[k]->left()), spine[k + 1]);
  }
}

std::optional<ChunkId> ChunkInterner::find(const Chunk& chunk) const {
  if (chunk.is_leaf()) {
    const auto cls = find_class(chunk.word().class_name);
    if (!cls) return std::nullopt;
    const auto it = leaf_ids_.find(pack(*cls, static_cast<std::uint32_t>(chunk.word().index)));
    if (it == leaf_ids_.end()) return std::nullopt;
    return it->second;
  }
  const auto l = find(chunk.left());
  if (!l) return std::nullopt;
  const auto r = find(chunk.right());
  if (!r) return std::nullopt;
  const auto it = node_ids_.find(pack(*l, *r));
  if (it == node_ids_.end()) return std::nullopt;
  return it->second;
}

void ChunkInterner::write(ChunkId id, std::string& out, bool with_index) const {
  const Entry& e = entries_[id];
  if (e.leaf) {
    out += class_names_[e.a];
    if (with_index) {
      out += '#';
      out += std::to_string(e.b);
    }
    return;
  }
  out += '(';
  write(e.a, out, with_index);
  out += ' ';
  write(e.b, out, with_index);
  out += ')';
}

std::string ChunkInterner::canonical_key(ChunkId id) const {
  std::string out;
  write(id, out, true);
  return out;
}

std::string ChunkInterner::structure_pattern(ChunkId id) const {
  std::string out;
  write(id, out, false);
  return out;
}

QTable::QTable(double q_boundary, double q_chunk) : q_boundary_(q_boundary), q_chunk_(q_chunk) {}

StateKey QTable::key_of(const State& state) {
  return StateKey{interner_.intern(state.first()), interner_.intern(state.second())};
}

std::optional<StateKey> QTable::find_key(const State& state) const {
  const auto f = interner_.find(state.first());
  if (!f) return std::nullopt;
  const auto s = interner_.find(state.second());
  if (!s) return std::nullopt;
  return StateKey{*f, *s};
}

void QTable::spine_keys(const State& state, std::vector<StateKey>& keys) {
  thread_local std::vector<ChunkId> spine;
  interner_.intern_spine(state.first(), spine);
  const ChunkId second = interner_.intern(state.second());
  keys.resize(spine.size());
  for (std::size_t k = 0; k < spine.size(); ++k) keys[k] = StateKey{spine[k], second};
}

const QTable::Row* QTable::find_row(StateKey key) const {
  const auto it = rows_.find(key.packed());
  return it == rows_.end() ? nullptr : &it->second;
}

const std::vector<double>* QTable::stored_row(StateKey key) const {
  const Row* row = find_row(key);
  return row ? &row->values : nullptr;
}

double QTable::value(StateKey key, int action) const {
  const int d = depth(key);
  if (action < 0 || action > d) throw std::out_of_range("action outside [0, d]");
  if (const Row* row = find_row(key)) {
    const double v = row->values[static_cast<std::size_t>(action)];
    if (!std::isnan(v)) return v;
  }
  return default_value(d, action);
}

bool QTable::contains(StateKey key, int action) const {
  const Row* row = find_row(key);
  return row && action >= 0 && action < static_cast<int>(row->values.size()) &&
         !std::isnan(row->values[static_cast<std::size_t>(action)]);
}

double& QTable::slot(StateKey key, int action) {
  const int d = depth(key);
  if (action < 0 || action > d) throw std::out_of_range("action outside [0, d]");
  auto [it, inserted] = rows_.try_emplace(key.packed());
  if (inserted) it->second.values.assign(static_cast<std::size_t>(d + 1), kAbsent);
  double& v = it->second.values[static_cast<std::size_t>(action)];
  if (std::isnan(v)) {
    v = default_value(d, action);
    ++stored_;
  }
  return v;
}

std::vector<QTable::Entry> QTable::entries() const {
  std::vector<Entry> out;
  out.reserve(stored_);
  for (const auto& [packed, row] : rows_) {
    const StateKey key{static_cast<ChunkId>(packed >> 32),
                       static_cast<ChunkId>(packed & 0xffffffffu)};
    const std::string text =
        interner_.canonical_key(key.first) + "|" + interner_.canonical_key(key.second);
    for (std::size_t a = 0; a < row.values.size(); ++a) {
      if (!std::isnan(row.values[a])) {
        out.push_back(Entry{text, key, static_cast<int>(a), row.values[a]});
      }
    }
  }
  std::sort(out.begin(), out.end(), [](const Entry& x, const Entry& y) {
    if (x.state_key != y.state_key) return x.state_key < y.state_key;
    return x.action < y.action;
  });
  return out;
}

std::string QTable::to_csv() const {
  std::string out = "state_key,action,value\n";
  for (const auto& e : entries()) {
    out += e.state_key;
    out += ',';
    out += std::to_string(e.action);
    out += ',';
    out += format_double(e.value);
    out += '\n';
  }
  return out;
}

std::string QTable::to_json() const {
  nlohmann::ordered_json j;
  j["q_boundary"] = q_boundary_;
  j["q_chunk"] = q_chunk_;
  auto rows = nlohmann::ordered_json::array();
  for (const auto& e : entries()) rows.push_back({e.state_key, e.action, e.value});
  j["entries"] = std::move(rows);
  return j.dump();
}

void QTable::insert_from_text(std::string_view state_key, int action, double value) {
  const auto bar = state_key.find('|');
  if (bar == std::string_view::npos) {
    throw std::invalid_argument("state key '" + std::string(state_key) + "' lacks '|'");
  }
  const Chunk first = parse_canonical_key(state_key.substr(0, bar), 0);
  const Chunk second = parse_canonical_key(state_key.substr(bar + 1), first.end() + 1);
  if (!second.is_leaf()) throw std::invalid_argument("second element must be a single word");
  const StateKey key = key_of(State(first, second));
  if (action < 0 || action > depth(key)) {
    throw std::invalid_argument("action " + std::to_string(action) + " invalid for state '" +
                                std::string(state_key) + "'");
  }
  set(key, action, value);
}

QTable QTable::from_csv(std::string_view text, double q_boundary, double q_chunk) {
  QTable table(q_boundary, q_chunk);
  std::istringstream in{std::string(text)};
  std::string line;
  bool header = true;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (header) {
      header = false;
      if (line.rfind("state_key", 0) == 0) continue;
    }
    const auto c2 = line.rfind(',');
    const auto c1 = c2 == std::string::npos ? c2 : line.rfind(',', c2 - 1);
    if (c1 == std::string::npos) {
      throw std::invalid_argument("qtable csv line " + std::to_string(line_no) +
                                  ": expected state_key,action,value");
    }
    try {
      const int action = std::stoi(line.substr(c1 + 1, c2 - c1 - 1));
      std::istringstream num(line.substr(c2 + 1));
      num.imbue(std::locale::classic());
      double value;
      if (!(num >> value)) throw std::invalid_argument("bad value");
      table.insert_from_text(std::string_view(line).substr(0, c1), action, value);
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument("qtable csv line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return table;
}

QTable QTable::from_json(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
    QTable table(j.at("q_boundary").get<double>(), j.at("q_chunk").get<double>());
    for (const auto& row : j.at("entries")) {
      table.insert_from_text(row.at(0).get<std::string>(), row.at(1).get<int>(),
                             row.at(2).get<double>());
    }
    return table;
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("qtable json: ") + e.what());
  }
}

std::string state_key_text(const State& state) {
  return canonical_key(state.first()) + "|" + canonical_key(state.second());
}

}  // namespace chunklearn
