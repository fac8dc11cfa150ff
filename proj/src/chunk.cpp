#include "chunklearn/chunk.hpp"

#include <cctype>

namespace chunklearn {

Chunk Chunk::leaf(Word word) {
  auto n = std::make_shared<Node>();
  n->leaf = true;
  n->start = word.position;
  n->end = word.position;
  n->word = std::move(word);
  return Chunk(std::move(n));
}

Chunk Chunk::node(Chunk left, Chunk right) {
  if (right.start() != left.end() + 1) {
    throw std::invalid_argument("chunk children must cover contiguous positions");
  }
  auto n = std::make_shared<Node>();
  n->leaf = false;
  n->start = left.start();
  n->end = right.end();
  n->words = left.word_count() + right.word_count();
  n->right_depth = 1 + right.right_depth();
  n->left = std::move(left);
  n->right = std::move(right);
  return Chunk(std::move(n));
}

const Word& Chunk::word() const {
  if (!is_leaf()) throw std::logic_error("word() called on an internal chunk node");
  return node_->word;
}

const Chunk& Chunk::left() const {
  if (is_leaf()) throw std::logic_error("left() called on a leaf chunk");
  return node_->left;
}

const Chunk& Chunk::right() const {
  if (is_leaf()) throw std::logic_error("right() called on a leaf chunk");
  return node_->right;
}

int right_depth(const Chunk& chunk) { return chunk.right_depth(); }

Chunk right_spine_at(const Chunk& chunk, int steps) {
  if (steps < 0 || steps >= chunk.right_depth()) {
    throw std::out_of_range("right-spine depth " + std::to_string(steps) + " outside [0, " +
                            std::to_string(chunk.right_depth()) + ")");
  }
  Chunk cur = chunk;
  for (int s = 0; s < steps; ++s) cur = cur.right();
  return cur;
}

namespace {

void collect_leaves(const Chunk& c, std::vector<Word>& out) {
  if (c.is_leaf()) {
    out.push_back(c.word());
    return;
  }
  collect_leaves(c.left(), out);
  collect_leaves(c.right(), out);
}

void write_key(const Chunk& c, std::string& out, bool with_index) {
  if (c.is_leaf()) {
    out += c.word().class_name;
    if (with_index) {
      out += '#';
      out += std::to_string(c.word().index);
    }
    return;
  }
  out += '(';
  write_key(c.left(), out, with_index);
  out += ' ';
  write_key(c.right(), out, with_index);
  out += ')';
}

Chunk replace_on_spine(const Chunk& c, int depth, const Chunk& second) {
  if (depth == 0) return Chunk::node(c, second);
  return Chunk::node(c.left(), replace_on_spine(c.right(), depth - 1, second));
}

class KeyParser {
 public:
  KeyParser(std::string_view text, std::int64_t start) : text_(text), next_pos_(start) {}

  Chunk parse() {
    Chunk c = parse_chunk();
    skip_space();
    if (at_ < text_.size()) fail("trailing characters");
    return c;
  }

 private:
  Chunk parse_chunk() {
    skip_space();
    if (at_ >= text_.size()) fail("unexpected end");
    if (text_[at_] == '(') {
      ++at_;
      Chunk left = parse_chunk();
      Chunk right = parse_chunk();
      skip_space();
      if (at_ >= text_.size() || text_[at_] != ')') fail("expected ')'");
      ++at_;
      return Chunk::node(std::move(left), std::move(right));
    }
    const auto begin = at_;
    while (at_ < text_.size() && text_[at_] != '#' && text_[at_] != ' ' &&
           text_[at_] != '(' && text_[at_] != ')') {
      ++at_;
    }
    if (at_ == begin || at_ >= text_.size() || text_[at_] != '#') fail("expected CLASS#index");
    std::string name(text_.substr(begin, at_ - begin));
    ++at_;
    const auto digits = at_;
    while (at_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[at_]))) ++at_;
    if (at_ == digits) fail("missing word index");
    const int index = std::stoi(std::string(text_.substr(digits, at_ - digits)));
    return Chunk::leaf(Word{std::move(name), index, next_pos_++});
  }

  void skip_space() {
    while (at_ < text_.size() && text_[at_] == ' ') ++at_;
  }

  [[noreturn]] void fail(const char* why) const {
    throw std::invalid_argument("malformed chunk key '" + std::string(text_) + "': " + why);
  }

  std::string_view text_;
  std::size_t at_ = 0;
  std::int64_t next_pos_;
};

template <typename Fn>
void for_each_class_token(std::string_view pattern, Fn&& fn) {
  std::size_t i = 0;
  while (i < pattern.size()) {
    const char ch = pattern[i];
    if (ch == '(' || ch == ')' || ch == ' ' || ch == '|' || ch == ',' || ch == '[' ||
        ch == ']') {
      ++i;
      continue;
    }
    const auto begin = i;
    while (i < pattern.size() && pattern[i] != '(' && pattern[i] != ')' && pattern[i] != ' ' &&
           pattern[i] != '|' && pattern[i] != ',' && pattern[i] != '[' && pattern[i] != ']') {
      ++i;
    }
    std::string_view token = pattern.substr(begin, i - begin);
    // Keys carry "#index"; only the class part matters here.
    if (const auto hash = token.find('#'); hash != std::string_view::npos) {
      token = token.substr(0, hash);
    }
    fn(token);
  }
}

}  // namespace

std::vector<Word> leaves(const Chunk& chunk) {
  std::vector<Word> out;
  out.reserve(static_cast<std::size_t>(chunk.word_count()));
  collect_leaves(chunk, out);
  return out;
}

std::vector<std::string> class_sequence(const Chunk& chunk) {
  std::vector<std::string> out;
  for (auto& w : leaves(chunk)) out.push_back(std::move(w.class_name));
  return out;
}

State::State(Chunk first, Chunk second) : first_(std::move(first)), second_(std::move(second)) {
  if (!second_.is_leaf()) throw std::invalid_argument("second element must be a single word");
  if (second_.start() != first_.end() + 1) {
    throw std::invalid_argument("second element must immediately follow the first");
  }
}

ActionIndex State::action(int i) const {
  if (i < 0 || i > right_depth()) {
    throw std::out_of_range("action " + std::to_string(i) + " outside [0, " +
                            std::to_string(right_depth()) + "]");
  }
  return ActionIndex{i, i == right_depth() ? ActionKind::kBoundary : ActionKind::kChunk};
}

State substate(const State& state, int k) {
  return State(right_spine_at(state.first(), k), state.second());
}

Chunk apply_chunk_action(const State& state, int i) {
  if (i < 0 || i >= state.right_depth()) {
    throw std::out_of_range("chunk action " + std::to_string(i) + " outside [0, " +
                            std::to_string(state.right_depth()) + ")");
  }
  return replace_on_spine(state.first(), i, state.second());
}

std::string canonical_key(const Chunk& chunk) {
  std::string out;
  write_key(chunk, out, true);
  return out;
}

std::string structure_pattern(const Chunk& chunk) {
  std::string out;
  write_key(chunk, out, false);
  return out;
}

Chunk parse_canonical_key(std::string_view text, std::int64_t start) {
  return KeyParser(text, start).parse();
}

int pattern_length(std::string_view pattern) {
  int n = 0;
  for_each_class_token(pattern, [&](std::string_view) { ++n; });
  return n;
}

std::int64_t pattern_instance_total(std::string_view pattern, const Pcfg& pcfg) {
  std::int64_t total = 1;
  for_each_class_token(pattern, [&](std::string_view name) {
    const WordClass* cls = pcfg.find_class(name);
    if (!cls) throw std::invalid_argument("unknown class '" + std::string(name) + "' in pattern");
    total *= cls->size;
  });
  return total;
}

}  // namespace chunklearn
