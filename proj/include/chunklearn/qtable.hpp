#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <absl/container/flat_hash_map.h>

#include "chunklearn/chunk.hpp"

namespace chunklearn {

using ChunkId = std::uint32_t;

/// Hash-conses position-free chunk structures into dense ids. Two chunks get
/// the same id iff their canonical keys are equal.
class ChunkInterner {
 public:
  ChunkId leaf(std::string_view class_name, int index);
  ChunkId node(ChunkId left, ChunkId right);
  ChunkId intern(const Chunk& chunk);

  /// Interns `chunk` and writes the ids of its right-spine subtrees,
  /// spine[k] = id of the subtree k right-steps below the root.
  void intern_spine(const Chunk& chunk, std::vector<ChunkId>& spine);

  /// Lookup without inserting.
  std::optional<ChunkId> find(const Chunk& chunk) const;

  int right_depth(ChunkId id) const { return entries_[id].right_depth; }
  int word_count(ChunkId id) const { return entries_[id].words; }
  std::string canonical_key(ChunkId id) const;
  std::string structure_pattern(ChunkId id) const;
  std::size_t size() const { return entries_.size(); }

 private:
  struct Entry {
    bool leaf = true;
    std::uint32_t a = 0;  // class id or left child
    std::uint32_t b = 0;  // word index or right child
    int words = 1;
    int right_depth = 1;
  };

  std::optional<std::uint32_t> find_class(std::string_view name) const;
  void write(ChunkId id, std::string& out, bool with_index) const;

  std::vector<Entry> entries_;
  std::vector<std::string> class_names_;
  absl::flat_hash_map<std::string, std::uint32_t> class_ids_;
  absl::flat_hash_map<std::uint64_t, ChunkId> leaf_ids_;
  absl::flat_hash_map<std::uint64_t, ChunkId> node_ids_;
};

struct StateKey {
  ChunkId first = 0;
  ChunkId second = 0;

  std::uint64_t packed() const {
    return (static_cast<std::uint64_t>(first) << 32) | second;
  }
  friend bool operator==(const StateKey&, const StateKey&) = default;
};

/// Sparse state-action values. Missing entries read as q_boundary for the
/// boundary action and q_chunk for every chunk action.
class QTable {
 public:
  explicit QTable(double q_boundary = 1.0, double q_chunk = -1.0);

  double q_boundary() const { return q_boundary_; }
  double q_chunk() const { return q_chunk_; }

  ChunkInterner& interner() { return interner_; }
  const ChunkInterner& interner() const { return interner_; }

  StateKey key_of(const State& state);
  std::optional<StateKey> find_key(const State& state) const;

  /// Keys of the state's sub-states; keys[k] addresses substate(state, k).
  void spine_keys(const State& state, std::vector<StateKey>& keys);

  /// Right-depth of the state a key denotes.
  int depth(StateKey key) const { return interner_.right_depth(key.first); }

  double default_value(int depth, int action) const {
    return action == depth ? q_boundary_ : q_chunk_;
  }

  double value(StateKey key, int action) const;

  /// Raw stored row for a key (NaN marks absent actions), or nullptr.
  const std::vector<double>* stored_row(StateKey key) const;
  bool contains(StateKey key, int action) const;

  /// Stored slot for (key, action), created at its default if absent.
  double& slot(StateKey key, int action);
  void set(StateKey key, int action, double value) { slot(key, action) = value; }

  /// Number of stored (state, action) entries.
  std::size_t size() const { return stored_; }
  std::size_t state_count() const { return rows_.size(); }

  struct Entry {
    std::string state_key;  // canonical_key(first) + "|" + canonical_key(second)
    StateKey key;
    int action = 0;
    double value = 0.0;
  };

  /// Visits stored entries in unspecified order: fn(StateKey, action, value).
  template <typename Fn>
  void for_each_stored(Fn&& fn) const {
    for (const auto& [packed, row] : rows_) {
      const StateKey key{static_cast<ChunkId>(packed >> 32), static_cast<ChunkId>(packed & 0xffffffffu)};
      for (std::size_t a = 0; a < row.values.size(); ++a) {
        if (row.values[a] == row.values[a]) fn(key, static_cast<int>(a), row.values[a]);
      }
    }
  }

  /// All stored entries sorted by state key text, then action.
  std::vector<Entry> entries() const;

  /// Writes "state_key,action,value" rows with a header.
  std::string to_csv() const;
  std::string to_json() const;
  static QTable from_csv(std::string_view text, double q_boundary = 1.0, double q_chunk = -1.0);
  static QTable from_json(std::string_view text);
  void insert_from_text(std::string_view state_key, int action, double value);

 private:
  struct Row {
    // NaN marks an absent action.
    std::vector<double> values;
  };
  const Row* find_row(StateKey key) const;

  double q_boundary_;
  double q_chunk_;
  ChunkInterner interner_;
  absl::flat_hash_map<std::uint64_t, Row> rows_;
  std::size_t stored_ = 0;
};

std::string state_key_text(const State& state);

}  // namespace chunklearn
