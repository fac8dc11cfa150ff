#pragma once

#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "chunklearn/grammar.hpp"

namespace chunklearn {

/// Immutable binary tree over a contiguous run of stream words. Copies share
/// structure; building a larger chunk reuses the untouched subtrees.
class Chunk {
 public:
  static Chunk leaf(Word word);
  /// Throws std::invalid_argument unless right starts where left ends.
  static Chunk node(Chunk left, Chunk right);

  bool is_leaf() const;
  /// Leaf only.
  const Word& word() const;
  /// Node only.
  const Chunk& left() const;
  const Chunk& right() const;

  std::int64_t start() const;
  std::int64_t end() const;
  int word_count() const;
  int right_depth() const;

  bool same_node(const Chunk& other) const { return node_ == other.node_; }

 private:
  struct Node;
  explicit Chunk(std::shared_ptr<const Node> node) : node_(std::move(node)) {}
  std::shared_ptr<const Node> node_;
};

struct Chunk::Node {
  bool leaf = true;
  Word word;
  Chunk left{nullptr};
  Chunk right{nullptr};
  std::int64_t start = 0;
  std::int64_t end = 0;
  int words = 1;
  int right_depth = 1;
};

inline bool Chunk::is_leaf() const { return node_->leaf; }
inline std::int64_t Chunk::start() const { return node_->start; }
inline std::int64_t Chunk::end() const { return node_->end; }
inline int Chunk::word_count() const { return node_->words; }
inline int Chunk::right_depth() const { return node_->right_depth; }

/// Number of attachment points along the right spine: 1 for a leaf,
/// 1 + right_depth(right child) for a node.
int right_depth(const Chunk& chunk);

/// Subtree reached by `steps` right-child moves from the root.
Chunk right_spine_at(const Chunk& chunk, int steps);

/// In-order leaves.
std::vector<Word> leaves(const Chunk& chunk);
std::vector<std::string> class_sequence(const Chunk& chunk);

enum class ActionKind { kChunk, kBoundary };

struct ActionIndex {
  int index = 0;
  ActionKind kind = ActionKind::kChunk;
};

/// A (first, second) pair where second is the single most recent word.
class State {
 public:
  /// Throws std::invalid_argument if second is not a leaf or does not
  /// immediately follow first in the stream.
  State(Chunk first, Chunk second);

  const Chunk& first() const { return first_; }
  const Chunk& second() const { return second_; }
  int right_depth() const { return first_.right_depth(); }
  int action_count() const { return right_depth() + 1; }
  ActionIndex action(int i) const;

 private:
  Chunk first_;
  Chunk second_;
};

/// k = 0 is the state itself; k > 0 pairs the subtree k right-steps below
/// first's root with the same second element. Throws std::out_of_range
/// unless 0 <= k < d.
State substate(const State& state, int k);

/// Attaches second as a new right sibling of the spine subtree at depth i.
/// i = 0 chunks at the root; i = d - 1 groups the last two words. Throws
/// std::out_of_range for i outside [0, d).
Chunk apply_chunk_action(const State& state, int i);

/// Position-free serialization: leaf "N#3", node "(<left> <right>)".
std::string canonical_key(const Chunk& chunk);

/// canonical_key with leaves reduced to their class name.
std::string structure_pattern(const Chunk& chunk);

/// Rebuilds a chunk from canonical_key text, placing its first leaf at
/// `start`. Throws std::invalid_argument on malformed text.
Chunk parse_canonical_key(std::string_view text, std::int64_t start = 0);

/// Number of leaves in a pattern or key text ("((N V) N)" -> 3).
int pattern_length(std::string_view pattern);

/// Product of class sizes over every class token in `pattern`. Accepts a
/// single pattern or a state pattern such as "((N V) N)|N". Throws
/// std::invalid_argument on a class the grammar does not declare.
std::int64_t pattern_instance_total(std::string_view pattern, const Pcfg& pcfg);

}  // namespace chunklearn
