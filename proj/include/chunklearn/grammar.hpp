#pragma once

#include <cstdint>
#include <deque>
#include <memory>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace chunklearn {

/// A terminal class such as nouns ("N") with `size` interchangeable words.
struct WordClass {
  std::string name;
  int size = 1;
};

/// One stream word. Identity is (class_name, index); position is assigned
/// by the stream cursor.
struct Word {
  std::string class_name;
  int index = 1;
  std::int64_t position = -1;

  bool same_identity(const Word& other) const {
    return index == other.index && class_name == other.class_name;
  }
};

struct ProductionRule {
  std::string lhs;
  std::vector<std::string> rhs;
  double probability = 1.0;
};

struct Pcfg {
  std::vector<std::string> nonterminals;
  std::vector<WordClass> classes;
  std::vector<ProductionRule> rules;
  std::string start;

  const WordClass* find_class(std::string_view name) const;
  bool is_nonterminal(std::string_view name) const;
  std::vector<const ProductionRule*> rules_for(std::string_view lhs) const;
};

enum class GrammarErrorKind {
  kProbabilitySum,
  kUndeclaredSymbol,
  kUnreachable,
  kNonTerminating,
  kBadClassSize,
  kDuplicateName,
  kMissingStart,
  kParse,
};

struct ValidationError {
  GrammarErrorKind kind;
  std::string symbol;
  std::string message;
};

class GrammarError : public std::runtime_error {
 public:
  GrammarError(GrammarErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  GrammarErrorKind kind() const { return kind_; }

 private:
  GrammarErrorKind kind_;
};

/// Returns nothing when the grammar is well formed, otherwise the first
/// violated invariant.
std::optional<ValidationError> validate_pcfg(const Pcfg& pcfg);

/// Throws GrammarError when validate_pcfg reports a problem.
void require_valid(const Pcfg& pcfg);

struct SentenceSample {
  std::vector<Word> words;
  std::vector<std::string> class_sequence;
  int length = 0;
};

/// Leftmost derivation from the start symbol.
SentenceSample sample_sentence(const Pcfg& pcfg, std::mt19937_64& rng);

Pcfg builtin_nvn(int kn, int kv);
Pcfg builtin_md(int kn, int km, int kd);
Pcfg builtin_relclause(int kn, int km, int kd, int kr);
Pcfg builtin_complexnp(int kn, int km, int kv, int ka, int kd, int kp);

struct BuiltinInfo {
  std::string name;
  std::vector<std::string> size_params;
  std::vector<int> default_sizes;
  std::string description;
};

const std::vector<BuiltinInfo>& builtin_grammars();

/// Builds a built-in grammar by name. Empty `sizes` selects the defaults.
/// Throws GrammarError (kUndeclaredSymbol) on an unknown name.
Pcfg make_builtin(std::string_view name, const std::vector<int>& sizes);

/// Reads the INI-style grammar definition format:
///
///   [grammar]
///   start = S
///   nonterminals = S VP
///   classes = N:5 MV:1 DV:1
///   [rules]
///   S = N VP
///   VP = MV N : 0.5 | DV N N : 0.5
Pcfg parse_grammar_text(const std::string& text);
Pcfg load_grammar_file(const std::string& path);
std::string format_grammar_text(const Pcfg& pcfg);

/// Distinct class sequences the grammar can derive, for grammars whose
/// language is finite. Throws GrammarError if more than `limit` are found or
/// a derivation exceeds `max_length` symbols.
std::vector<std::vector<std::string>> enumerate_class_sequences(
    const Pcfg& pcfg, std::size_t limit = 100000, std::size_t max_length = 64);

/// Total number of terminals across all classes.
int vocabulary_size(const Pcfg& pcfg);

class CompiledGrammar;

/// Lazily samples sentences into an unbounded word stream and keeps the
/// ground-truth boundary flags for a sliding window of recent positions.
class StreamCursor {
 public:
  StreamCursor(Pcfg pcfg, std::uint64_t seed, std::size_t history = 10000);

  struct Emission {
    Word word;
    bool boundary_before = false;
  };

  Emission next_word();

  /// Drops the rest of the sentence holding the last emitted word and
  /// returns the first word of the following sentence.
  Word skip_to_next_sentence();

  std::int64_t emitted() const { return next_position_; }
  const Pcfg& pcfg() const { return pcfg_; }

  /// Oldest position whose boundary flag is still known.
  std::int64_t window_begin() const { return window_begin_; }
  bool in_window(std::int64_t position) const {
    return position >= window_begin_ && position < known_end();
  }

  /// Throws std::out_of_range outside the retained window.
  bool boundary_before(std::int64_t position) const;

  /// Length of the sentence starting at `position`, or 0 if `position` is
  /// not a sentence start.
  int sentence_length_at(std::int64_t position) const;

  /// (start, length) of the sentence holding the most recently emitted word.
  std::pair<std::int64_t, int> current_sentence_span() const;

 private:
  struct Slot {
    bool boundary = false;
    int sentence_length = 0;
  };

  void sample_next_sentence();
  std::int64_t known_end() const {
    return window_begin_ + static_cast<std::int64_t>(slots_.size());
  }
  void trim();

  Pcfg pcfg_;
  std::shared_ptr<const CompiledGrammar> compiled_;
  std::mt19937_64 rng_;
  std::size_t history_;
  std::vector<Word> pending_;
  std::size_t pending_index_ = 0;
  std::int64_t next_position_ = 0;
  std::int64_t sentence_start_ = 0;
  int sentence_length_ = 0;
  std::deque<Slot> slots_;
  std::int64_t window_begin_ = 0;
};

}  // namespace chunklearn
