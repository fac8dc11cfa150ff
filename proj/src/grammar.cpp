#include "chunklearn/grammar.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <unordered_map>

#include <boost/algorithm/string.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

namespace chunklearn {

namespace {
constexpr double kProbabilityTolerance = 1e-9;
}  // namespace

// Grammar with symbols resolved to indices; shared by sample_sentence and
// the stream cursor so both consume the RNG identically.
class CompiledGrammar {
 public:
  explicit CompiledGrammar(const Pcfg& pcfg) {
    std::unordered_map<std::string, int> index;
    for (const auto& nt : pcfg.nonterminals) {
      index.emplace(nt, static_cast<int>(symbols_.size()));
      symbols_.push_back({nt, false, 0, {}});
    }
    for (const auto& cls : pcfg.classes) {
      index.emplace(cls.name, static_cast<int>(symbols_.size()));
      symbols_.push_back({cls.name, true, cls.size, {}});
    }
    for (const auto& rule : pcfg.rules) {
      auto& sym = symbols_[index.at(rule.lhs)];
      Alternative alt;
      alt.probability = rule.probability;
      for (const auto& s : rule.rhs) alt.rhs.push_back(index.at(s));
      sym.alternatives.push_back(std::move(alt));
    }
    start_ = index.at(pcfg.start);
  }

  SentenceSample sample(std::mt19937_64& rng) const {
    SentenceSample out;
    std::vector<int> stack{start_};
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    while (!stack.empty()) {
      const int top = stack.back();
      stack.pop_back();
      const Symbol& sym = symbols_[top];
      if (sym.terminal_class) {
        std::uniform_int_distribution<int> pick(1, sym.size);
        out.words.push_back(Word{sym.name, pick(rng), -1});
        out.class_sequence.push_back(sym.name);
        continue;
      }
      const Alternative* chosen = &sym.alternatives.back();
      if (sym.alternatives.size() > 1) {
        double u = unit(rng);
        for (const auto& alt : sym.alternatives) {
          if (u < alt.probability) {
            chosen = &alt;
            break;
          }
          u -= alt.probability;
        }
      }
      for (auto it = chosen->rhs.rbegin(); it != chosen->rhs.rend(); ++it) {
        stack.push_back(*it);
      }
    }
    out.length = static_cast<int>(out.words.size());
    return out;
  }

 private:
  struct Alternative {
    double probability = 1.0;
    std::vector<int> rhs;
  };
  struct Symbol {
    std::string name;
    bool terminal_class = false;
    int size = 0;
    std::vector<Alternative> alternatives;
  };
  std::vector<Symbol> symbols_;
  int start_ = 0;
};

namespace {

ValidationError make_error(GrammarErrorKind kind, std::string symbol,
                           std::string message) {
  return ValidationError{kind, std::move(symbol), std::move(message)};
}

}  // namespace

const WordClass* Pcfg::find_class(std::string_view name) const {
  for (const auto& c : classes) {
    if (c.name == name) return &c;
  }
  return nullptr;
}

bool Pcfg::is_nonterminal(std::string_view name) const {
  return std::find(nonterminals.begin(), nonterminals.end(), name) !=
         nonterminals.end();
}

std::vector<const ProductionRule*> Pcfg::rules_for(std::string_view lhs) const {
  std::vector<const ProductionRule*> out;
  for (const auto& r : rules) {
    if (r.lhs == lhs) out.push_back(&r);
  }
  return out;
}

std::optional<ValidationError> validate_pcfg(const Pcfg& pcfg) {
  std::set<std::string> names;
  for (const auto& c : pcfg.classes) {
    if (c.size < 1) {
      return make_error(GrammarErrorKind::kBadClassSize, c.name,
                        "class '" + c.name + "' has non-positive size " +
                            std::to_string(c.size));
    }
    if (!names.insert(c.name).second) {
      return make_error(GrammarErrorKind::kDuplicateName, c.name,
                        "duplicate class name '" + c.name + "'");
    }
  }
  for (const auto& nt : pcfg.nonterminals) {
    if (!names.insert(nt).second) {
      return make_error(GrammarErrorKind::kDuplicateName, nt,
                        "duplicate symbol name '" + nt + "'");
    }
  }
  if (!pcfg.is_nonterminal(pcfg.start)) {
    return make_error(GrammarErrorKind::kMissingStart, pcfg.start,
                      "start symbol '" + pcfg.start +
                          "' is not a declared nonterminal");
  }
  for (const auto& rule : pcfg.rules) {
    if (!pcfg.is_nonterminal(rule.lhs)) {
      return make_error(GrammarErrorKind::kUndeclaredSymbol, rule.lhs,
                        "rule lhs '" + rule.lhs +
                            "' is not a declared nonterminal");
    }
    if (rule.rhs.empty()) {
      return make_error(GrammarErrorKind::kParse, rule.lhs,
                        "rule for '" + rule.lhs + "' has an empty rhs");
    }
    for (const auto& s : rule.rhs) {
      if (!names.count(s)) {
        return make_error(GrammarErrorKind::kUndeclaredSymbol, s,
                          "undeclared symbol '" + s + "' in rule for '" +
                              rule.lhs + "'");
      }
    }
    if (!(rule.probability > 0.0 && rule.probability <= 1.0 + kProbabilityTolerance)) {
      return make_error(GrammarErrorKind::kProbabilitySum, rule.lhs,
                        "rule for '" + rule.lhs +
                            "' has probability outside (0,1]");
    }
  }
  for (const auto& nt : pcfg.nonterminals) {
    double sum = 0.0;
    for (const auto* r : pcfg.rules_for(nt)) sum += r->probability;
    if (std::abs(sum - 1.0) > kProbabilityTolerance) {
      std::ostringstream msg;
      msg << "probabilities for '" << nt << "' sum to " << sum << ", not 1";
      return make_error(GrammarErrorKind::kProbabilitySum, nt, msg.str());
    }
  }

  // Productive nonterminals: least fixed point.
  std::set<std::string> productive;
  for (const auto& c : pcfg.classes) productive.insert(c.name);
  for (bool changed = true; changed;) {
    changed = false;
    for (const auto& rule : pcfg.rules) {
      if (productive.count(rule.lhs)) continue;
      const bool all = std::all_of(rule.rhs.begin(), rule.rhs.end(),
                                   [&](const auto& s) { return productive.count(s) > 0; });
      if (all) {
        productive.insert(rule.lhs);
        changed = true;
      }
    }
  }
  for (const auto& nt : pcfg.nonterminals) {
    if (!productive.count(nt)) {
      return make_error(GrammarErrorKind::kNonTerminating, nt,
                        "nonterminal '" + nt + "' derives no terminal string");
    }
  }

  std::set<std::string> reached{pcfg.start};
  std::vector<std::string> frontier{pcfg.start};
  while (!frontier.empty()) {
    const std::string cur = frontier.back();
    frontier.pop_back();
    for (const auto* r : pcfg.rules_for(cur)) {
      for (const auto& s : r->rhs) {
        if (pcfg.is_nonterminal(s) && reached.insert(s).second) frontier.push_back(s);
      }
    }
  }
  for (const auto& nt : pcfg.nonterminals) {
    if (!reached.count(nt)) {
      return make_error(GrammarErrorKind::kUnreachable, nt,
                        "nonterminal '" + nt + "' is unreachable from '" +
                            pcfg.start + "'");
    }
  }
  return std::nullopt;
}

void require_valid(const Pcfg& pcfg) {
  if (auto err = validate_pcfg(pcfg)) throw GrammarError(err->kind, err->message);
}

SentenceSample sample_sentence(const Pcfg& pcfg, std::mt19937_64& rng) {
  return CompiledGrammar(pcfg).sample(rng);
}

namespace {

void check_sizes(std::initializer_list<int> sizes) {
  for (int s : sizes) {
    if (s < 1) {
      throw GrammarError(GrammarErrorKind::kBadClassSize,
                         "class sizes must be positive, got " + std::to_string(s));
    }
  }
}

ProductionRule rule(std::string lhs, std::vector<std::string> rhs, double p) {
  return ProductionRule{std::move(lhs), std::move(rhs), p};
}

}  // namespace

Pcfg builtin_nvn(int kn, int kv) {
  check_sizes({kn, kv});
  Pcfg g;
  g.start = "S";
  g.nonterminals = {"S"};
  g.classes = {{"N", kn}, {"V", kv}};
  g.rules = {rule("S", {"N", "V", "N"}, 1.0)};
  return g;
}

Pcfg builtin_md(int kn, int km, int kd) {
  check_sizes({kn, km, kd});
  Pcfg g;
  g.start = "S";
  g.nonterminals = {"S"};
  g.classes = {{"N", kn}, {"MV", km}, {"DV", kd}};
  g.rules = {rule("S", {"N", "MV", "N"}, 0.5), rule("S", {"N", "DV", "N", "N"}, 0.5)};
  return g;
}

Pcfg builtin_relclause(int kn, int km, int kd, int kr) {
  check_sizes({kn, km, kd, kr});
  Pcfg g;
  g.start = "S";
  g.nonterminals = {"S", "VP", "Rel"};
  g.classes = {{"N", kn}, {"MV", km}, {"DV", kd}, {"R", kr}};
  g.rules = {
      rule("S", {"N", "VP"}, 1.0),
      rule("VP", {"MV", "N"}, 0.3),
      rule("VP", {"DV", "N", "N"}, 0.3),
      rule("VP", {"MV", "N", "Rel"}, 0.2),
      rule("VP", {"DV", "N", "N", "Rel"}, 0.2),
      rule("Rel", {"R", "MV", "N"}, 1.0),
  };
  return g;
}

Pcfg builtin_complexnp(int kn, int km, int kv, int ka, int kd, int kp) {
  check_sizes({kn, km, kv, ka, kd, kp});
  Pcfg g;
  g.start = "S";
  g.nonterminals = {"S", "NP", "VP"};
  g.classes = {{"N", kn}, {"MV", km}, {"DV", kv}, {"A", ka}, {"D", kd}, {"P", kp}};
  g.rules = {
      rule("S", {"NP", "VP"}, 1.0),
      rule("NP", {"N"}, 0.25),
      rule("NP", {"D", "N"}, 0.25),
      rule("NP", {"D", "A", "N"}, 0.1875),
      rule("NP", {"D", "A", "A", "N"}, 0.0625),
      rule("NP", {"N", "P", "N"}, 0.25),
      rule("VP", {"MV", "NP"}, 0.5),
      rule("VP", {"DV", "NP", "NP"}, 0.5),
  };
  return g;
}

const std::vector<BuiltinInfo>& builtin_grammars() {
  static const std::vector<BuiltinInfo> kInfo = {
      {"nvn", {"Kn", "Kv"}, {5, 5}, "S -> N V N"},
      {"md", {"Kn", "Km", "Kd"}, {5, 1, 1}, "S -> N MV N (0.5) | N DV N N (0.5)"},
      {"relclause",
       {"Kn", "Km", "Kd", "Kr"},
       {5, 1, 1, 1},
       "S -> N VP; VP -> MV N | DV N N (0.3 each) | MV N Rel | DV N N Rel (0.2 each); "
       "Rel -> R MV N"},
      {"complexnp",
       {"Kn", "Km", "Kv", "Ka", "Kd", "Kp"},
       {1, 1, 1, 1, 1, 1},
       "S -> NP VP; NP -> N | D N | D A N | D A A N | N P N; VP -> MV NP | DV NP NP"},
  };
  return kInfo;
}

Pcfg make_builtin(std::string_view name, const std::vector<int>& sizes) {
  for (const auto& info : builtin_grammars()) {
    if (info.name != name) continue;
    std::vector<int> s = sizes.empty() ? info.default_sizes : sizes;
    if (s.size() != info.size_params.size()) {
      throw GrammarError(GrammarErrorKind::kParse,
                         "grammar '" + info.name + "' takes " +
                             std::to_string(info.size_params.size()) +
                             " class sizes, got " + std::to_string(s.size()));
    }
    if (name == "nvn") return builtin_nvn(s[0], s[1]);
    if (name == "md") return builtin_md(s[0], s[1], s[2]);
    if (name == "relclause") return builtin_relclause(s[0], s[1], s[2], s[3]);
    return builtin_complexnp(s[0], s[1], s[2], s[3], s[4], s[5]);
  }
  throw GrammarError(GrammarErrorKind::kUndeclaredSymbol,
                     "unknown grammar '" + std::string(name) + "'");
}

Pcfg parse_grammar_text(const std::string& text) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  std::istringstream in(text);
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw GrammarError(GrammarErrorKind::kParse, e.what());
  }
  Pcfg g;
  const auto header = tree.get_child_optional("grammar");
  if (!header) throw GrammarError(GrammarErrorKind::kParse, "missing [grammar] section");
  g.start = boost::trim_copy(header->get<std::string>("start", ""));
  std::vector<std::string> nts;
  const auto nt_text = header->get<std::string>("nonterminals", "");
  boost::split(nts, nt_text, boost::is_any_of(", "), boost::token_compress_on);
  for (auto& nt : nts) {
    if (!nt.empty()) g.nonterminals.push_back(nt);
  }
  std::vector<std::string> cls;
  const auto cls_text = header->get<std::string>("classes", "");
  boost::split(cls, cls_text, boost::is_any_of(", "), boost::token_compress_on);
  for (const auto& c : cls) {
    if (c.empty()) continue;
    const auto colon = c.find(':');
    if (colon == std::string::npos) {
      throw GrammarError(GrammarErrorKind::kParse, "class '" + c + "' needs name:size");
    }
    try {
      g.classes.push_back({c.substr(0, colon), std::stoi(c.substr(colon + 1))});
    } catch (const std::exception&) {
      throw GrammarError(GrammarErrorKind::kParse, "bad class size in '" + c + "'");
    }
  }
  const auto rules = tree.get_child_optional("rules");
  if (!rules) throw GrammarError(GrammarErrorKind::kParse, "missing [rules] section");
  for (const auto& [lhs, node] : *rules) {
    std::vector<std::string> alts;
    const auto body = node.get_value<std::string>();
    boost::split(alts, body, boost::is_any_of("|"));
    for (auto& alt : alts) {
      ProductionRule r;
      r.lhs = lhs;
      std::string symbols = alt;
      const auto colon = alt.rfind(':');
      if (colon != std::string::npos) {
        symbols = alt.substr(0, colon);
        try {
          r.probability = std::stod(alt.substr(colon + 1));
        } catch (const std::exception&) {
          throw GrammarError(GrammarErrorKind::kParse,
                             "bad probability in rule for '" + lhs + "'");
        }
      } else if (alts.size() > 1) {
        r.probability = 1.0 / static_cast<double>(alts.size());
      }
      boost::trim(symbols);
      boost::split(r.rhs, symbols, boost::is_any_of(" \t,"), boost::token_compress_on);
      r.rhs.erase(std::remove(r.rhs.begin(), r.rhs.end(), std::string()), r.rhs.end());
      g.rules.push_back(std::move(r));
    }
  }
  require_valid(g);
  return g;
}

Pcfg load_grammar_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw GrammarError(GrammarErrorKind::kParse, "cannot open grammar file " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_grammar_text(buf.str());
}

std::string format_grammar_text(const Pcfg& pcfg) {
  std::ostringstream out;
  out.precision(17);
  out << "[grammar]\nstart = " << pcfg.start << "\nnonterminals =";
  for (const auto& nt : pcfg.nonterminals) out << ' ' << nt;
  out << "\nclasses =";
  for (const auto& c : pcfg.classes) out << ' ' << c.name << ':' << c.size;
  out << "\n[rules]\n";
  for (const auto& nt : pcfg.nonterminals) {
    out << nt << " =";
    bool first = true;
    for (const auto* r : pcfg.rules_for(nt)) {
      if (!first) out << " |";
      first = false;
      for (const auto& s : r->rhs) out << ' ' << s;
      out << " : " << r->probability;
    }
    out << '\n';
  }
  return out.str();
}

std::vector<std::vector<std::string>> enumerate_class_sequences(const Pcfg& pcfg,
                                                                std::size_t limit,
                                                                std::size_t max_length) {
  require_valid(pcfg);
  std::set<std::vector<std::string>> found;
  std::vector<std::vector<std::string>> work{{pcfg.start}};
  while (!work.empty()) {
    auto form = std::move(work.back());
    work.pop_back();
    const auto nt = std::find_if(form.begin(), form.end(),
                                 [&](const auto& s) { return pcfg.is_nonterminal(s); });
    if (nt == form.end()) {
      found.insert(form);
      if (found.size() > limit) {
        throw GrammarError(GrammarErrorKind::kParse, "language exceeds enumeration limit");
      }
      continue;
    }
    const auto pos = static_cast<std::size_t>(nt - form.begin());
    for (const auto* r : pcfg.rules_for(*nt)) {
      std::vector<std::string> next(form.begin(), form.begin() + pos);
      next.insert(next.end(), r->rhs.begin(), r->rhs.end());
      next.insert(next.end(), form.begin() + pos + 1, form.end());
      if (next.size() > max_length) {
        throw GrammarError(GrammarErrorKind::kParse,
                           "derivation exceeds maximum length; language may be infinite");
      }
      work.push_back(std::move(next));
    }
  }
  return {found.begin(), found.end()};
}

int vocabulary_size(const Pcfg& pcfg) {
  int total = 0;
  for (const auto& c : pcfg.classes) total += c.size;
  return total;
}

// StreamCursor

StreamCursor::StreamCursor(Pcfg pcfg, std::uint64_t seed, std::size_t history)
    : pcfg_(std::move(pcfg)), rng_(seed), history_(std::max<std::size_t>(history, 1)) {
  require_valid(pcfg_);
  compiled_ = std::make_shared<const CompiledGrammar>(pcfg_);
}

void StreamCursor::sample_next_sentence() {
  SentenceSample s = compiled_->sample(rng_);
  pending_ = std::move(s.words);
  pending_index_ = 0;
  sentence_start_ = next_position_;
  sentence_length_ = static_cast<int>(pending_.size());
  for (int i = 0; i < sentence_length_; ++i) {
    slots_.push_back(Slot{i == 0, i == 0 ? sentence_length_ : 0});
  }
  trim();
}

void StreamCursor::trim() {
  const std::int64_t keep_from = next_position_ - static_cast<std::int64_t>(history_);
  while (window_begin_ < keep_from && !slots_.empty()) {
    slots_.pop_front();
    ++window_begin_;
  }
}

StreamCursor::Emission StreamCursor::next_word() {
  if (pending_index_ >= pending_.size()) sample_next_sentence();
  Emission e;
  e.word = pending_[pending_index_];
  e.word.position = next_position_;
  e.boundary_before = pending_index_ == 0;
  ++pending_index_;
  ++next_position_;
  return e;
}

Word StreamCursor::skip_to_next_sentence() {
  if (next_position_ == 0) return next_word().word;
  next_position_ += static_cast<std::int64_t>(pending_.size() - pending_index_);
  pending_index_ = pending_.size();
  return next_word().word;
}

bool StreamCursor::boundary_before(std::int64_t position) const {
  if (!in_window(position)) {
    throw std::out_of_range("position " + std::to_string(position) +
                            " is outside the retained boundary window");
  }
  return slots_[static_cast<std::size_t>(position - window_begin_)].boundary;
}

int StreamCursor::sentence_length_at(std::int64_t position) const {
  if (!in_window(position)) {
    throw std::out_of_range("position " + std::to_string(position) +
                            " is outside the retained boundary window");
  }
  return slots_[static_cast<std::size_t>(position - window_begin_)].sentence_length;
}

std::pair<std::int64_t, int> StreamCursor::current_sentence_span() const {
  return {sentence_start_, sentence_length_};
}

}  // namespace chunklearn
