#include "cfgmask/grammar.hpp"

#include <algorithm>
#include <map>
#include <sstream>
#include <unordered_map>

namespace cfgmask {

namespace {

std::string escape_literal(std::string_view bytes) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out;
  for (char c : bytes) {
    auto b = static_cast<unsigned char>(c);
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      default:
        if (b < 0x20 || b >= 0x7f) {
          out += "\\x";
          out.push_back(kDigits[b >> 4]);
          out.push_back(kDigits[b & 15]);
        } else {
          out.push_back(c);
        }
    }
  }
  return out;
}

std::string escape_regex(std::string_view pattern) {
  std::string out;
  for (std::size_t i = 0; i < pattern.size(); ++i) {
    char c = pattern[i];
    if (c == '\\' && i + 1 < pattern.size()) {
      out.push_back(c);
      out.push_back(pattern[++i]);
    } else if (c == '"') {
      out += "\\\"";
    } else {
      out.push_back(c);
    }
  }
  return out;
}

bool is_name_start(char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_'; }
bool is_name_char(char c) { return is_name_start(c) || (c >= '0' && c <= '9') || c == '\''; }

struct RawSymbol {
  enum class Kind { name, literal, regex } kind;
  std::string text;
  std::size_t line;
  std::size_t column;
};

struct RawRule {
  std::string name;
  std::vector<std::vector<RawSymbol>> alternatives;
};

class GrammarLexer {
 public:
  explicit GrammarLexer(std::string_view text) : text_(text) {}

  std::vector<RawRule> parse_rules() {
    std::vector<RawRule> rules;
    skip_trivia();
    while (!at_end()) {
      rules.push_back(parse_rule());
      skip_trivia();
    }
    return rules;
  }

 private:
  [[noreturn]] void fail(const std::string& message) const {
    throw GrammarError(GrammarError::Code::syntax,
                       "syntax error at " + std::to_string(line_) + ":" + std::to_string(column()) + ": " + message,
                       line_, column());
  }

  std::size_t column() const { return pos_ - line_start_ + 1; }
  bool at_end() const { return pos_ >= text_.size(); }
  char peek() const { return text_[pos_]; }

  void advance() {
    if (text_[pos_] == '\n') {
      ++line_;
      line_start_ = pos_ + 1;
    }
    ++pos_;
  }

  void skip_trivia() {
    while (!at_end()) {
      char c = peek();
      if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
        advance();
      } else if (c == '/' && pos_ + 1 < text_.size() && text_[pos_ + 1] == '/') {
        while (!at_end() && peek() != '\n') advance();
      } else {
        break;
      }
    }
  }

  std::string parse_name() {
    if (at_end() || !is_name_start(peek())) fail("expected a rule name");
    std::size_t begin = pos_;
    while (!at_end() && is_name_char(peek())) advance();
    return std::string(text_.substr(begin, pos_ - begin));
  }

  RawRule parse_rule() {
    RawRule rule;
    rule.name = parse_name();
    skip_trivia();
    if (text_.substr(pos_, 3) != "::=") fail("expected '::='");
    pos_ += 3;
    rule.alternatives.emplace_back();
    while (true) {
      skip_trivia();
      if (at_end()) fail("missing ';' at end of rule '" + rule.name + "'");
      char c = peek();
      if (c == ';') {
        advance();
        return rule;
      }
      if (c == '|') {
        advance();
        rule.alternatives.emplace_back();
        continue;
      }
      std::size_t line = line_;
      std::size_t col = column();
      if (c == '"') {
        rule.alternatives.back().push_back({RawSymbol::Kind::literal, parse_literal(), line, col});
      } else if (c == '#') {
        advance();
        if (at_end() || peek() != '"') fail("expected '\"' after '#'");
        rule.alternatives.back().push_back({RawSymbol::Kind::regex, parse_regex_body(), line, col});
      } else if (is_name_start(c)) {
        rule.alternatives.back().push_back({RawSymbol::Kind::name, parse_name(), line, col});
      } else {
        fail(std::string("unexpected character '") + c + "'");
      }
    }
  }

  unsigned hex_digit() {
    if (at_end()) fail("truncated \\x escape");
    char c = peek();
    advance();
    if (c >= '0' && c <= '9') return static_cast<unsigned>(c - '0');
    if (c >= 'a' && c <= 'f') return static_cast<unsigned>(c - 'a' + 10);
    if (c >= 'A' && c <= 'F') return static_cast<unsigned>(c - 'A' + 10);
    fail("invalid hex digit in \\x escape");
  }

  std::string parse_literal() {
    advance();  // opening quote
    std::string out;
    while (true) {
      if (at_end() || peek() == '\n') fail("unterminated string literal");
      char c = peek();
      advance();
      if (c == '"') return out;
      if (c != '\\') {
        out.push_back(c);
        continue;
      }
      if (at_end()) fail("unterminated string literal");
      char e = peek();
      advance();
      switch (e) {
        case '"': out.push_back('"'); break;
        case '\\': out.push_back('\\'); break;
        case 'n': out.push_back('\n'); break;
        case 't': out.push_back('\t'); break;
        case 'r': out.push_back('\r'); break;
        case 'x': {
          unsigned hi = hex_digit();
          unsigned lo = hex_digit();
          out.push_back(static_cast<char>(hi << 4 | lo));
          break;
        }
        default:
          fail(std::string("unknown escape '\\") + e + "'");
      }
    }
  }

  // Regex bodies keep backslash pairs intact for the regex compiler; only
  // `\"` is rewritten so a quote can appear inside the pattern.
  std::string parse_regex_body() {
    advance();  // opening quote
    std::string out;
    while (true) {
      if (at_end() || peek() == '\n') fail("unterminated regex literal");
      char c = peek();
      advance();
      if (c == '"') return out;
      if (c == '\\') {
        if (at_end()) fail("unterminated regex literal");
        char e = peek();
        advance();
        if (e == '"') {
          out.push_back('"');
        } else {
          out.push_back('\\');
          out.push_back(e);
        }
        continue;
      }
      out.push_back(c);
    }
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  std::size_t line_ = 1;
  std::size_t line_start_ = 0;
};

}  // namespace

std::string Terminal::display() const {
  if (!is_regex) return "\"" + escape_literal(pattern) + "\"";
  return "#\"" + escape_regex(pattern) + (nonempty ? "\"!" : "\"");
}

GrammarError::GrammarError(Code code, const std::string& message, std::size_t line, std::size_t column)
    : std::runtime_error(message), code_(code), line_(line), column_(column) {}

Grammar::Grammar(std::vector<std::string> nonterminal_names, std::vector<Terminal> terminals,
                 std::vector<Production> productions, std::uint32_t start)
    : nonterminal_names_(std::move(nonterminal_names)),
      terminals_(std::move(terminals)),
      productions_(std::move(productions)),
      start_(start),
      by_lhs_(nonterminal_names_.size()) {
  if (start_ >= nonterminal_names_.size()) throw GrammarError(GrammarError::Code::invalid, "start symbol out of range");
  for (std::uint32_t p = 0; p < productions_.size(); ++p) {
    const auto& prod = productions_[p];
    if (prod.lhs >= nonterminal_names_.size())
      throw GrammarError(GrammarError::Code::invalid, "production lhs out of range");
    for (auto s : prod.rhs) {
      auto limit = s.is_terminal() ? terminals_.size() : nonterminal_names_.size();
      if (s.id >= limit) throw GrammarError(GrammarError::Code::invalid, "production symbol out of range");
    }
    by_lhs_[prod.lhs].push_back(p);
  }
}

std::optional<std::uint32_t> Grammar::find_nonterminal(std::string_view name) const {
  for (std::uint32_t i = 0; i < nonterminal_names_.size(); ++i)
    if (nonterminal_names_[i] == name) return i;
  return std::nullopt;
}

std::size_t Grammar::max_rhs_length() const {
  std::size_t n = 0;
  for (const auto& p : productions_) n = std::max(n, p.rhs.size());
  return n;
}

bool Grammar::has_empty_productions() const {
  return std::any_of(productions_.begin(), productions_.end(), [](const Production& p) { return p.rhs.empty(); });
}

std::string Grammar::symbol_to_string(Symbol s) const {
  return s.is_terminal() ? terminals_[s.id].display() : nonterminal_names_[s.id];
}

std::string Grammar::production_to_string(std::uint32_t id) const {
  const auto& p = productions_[id];
  std::string out = nonterminal_names_[p.lhs] + " ::=";
  if (p.rhs.empty()) out += " \"\"";
  for (auto s : p.rhs) out += " " + symbol_to_string(s);
  return out;
}

std::string Grammar::to_text() const {
  std::ostringstream out;
  // Start rule first so the text parses with the same default start.
  std::vector<std::uint32_t> order{start_};
  for (std::uint32_t nt = 0; nt < nonterminal_count(); ++nt)
    if (nt != start_) order.push_back(nt);
  for (auto nt : order) {
    if (by_lhs_[nt].empty()) continue;
    out << nonterminal_names_[nt] << " ::=";
    bool first = true;
    for (auto p : by_lhs_[nt]) {
      if (!first) out << " |";
      first = false;
      if (productions_[p].rhs.empty()) out << " \"\"";
      for (auto s : productions_[p].rhs) out << ' ' << symbol_to_string(s);
    }
    out << " ;\n";
  }
  return out.str();
}

Grammar parse_grammar(std::string_view text, std::optional<std::string_view> start_name) {
  std::vector<RawRule> rules = GrammarLexer(text).parse_rules();
  if (rules.empty()) throw GrammarError(GrammarError::Code::empty_grammar, "grammar contains no rules");

  std::vector<std::string> names;
  std::unordered_map<std::string, std::uint32_t> name_ids;
  for (const auto& rule : rules) {
    if (name_ids.emplace(rule.name, static_cast<std::uint32_t>(names.size())).second) names.push_back(rule.name);
  }
  const std::size_t declared = names.size();

  std::vector<Terminal> terminals;
  // Key kind: 0 literal, 1 regex, 2 regex minus the empty string.
  std::map<std::pair<int, std::string>, std::uint32_t> terminal_ids;
  // Regex terminals whose language contains "" become `<name> ::= t' | ""`.
  std::map<std::string, std::uint32_t> nullable_wrappers;
  std::vector<Production> extra;

  auto fresh_name = [&](std::string base) {
    while (name_ids.count(base)) base += '_';
    name_ids.emplace(base, static_cast<std::uint32_t>(names.size()));
    names.push_back(base);
    return name_ids.at(base);
  };

  auto intern_terminal = [&](int kind, const std::string& pattern, TerminalAutomaton automaton) {
    auto key = std::make_pair(kind, pattern);
    auto it = terminal_ids.find(key);
    if (it != terminal_ids.end()) return it->second;
    auto id = static_cast<std::uint32_t>(terminals.size());
    terminals.push_back(Terminal{pattern, kind != 0, kind == 2, std::move(automaton)});
    terminal_ids.emplace(std::move(key), id);
    return id;
  };

  std::vector<Production> productions;
  for (const auto& rule : rules) {
    auto lhs = name_ids.at(rule.name);
    for (const auto& alt : rule.alternatives) {
      Production prod{lhs, {}};
      for (const auto& raw : alt) {
        switch (raw.kind) {
          case RawSymbol::Kind::name: {
            auto it = name_ids.find(raw.text);
            if (it == name_ids.end() || it->second >= declared)
              throw GrammarError(GrammarError::Code::undefined_nonterminal,
                                 "undefined nonterminal '" + raw.text + "' at " + std::to_string(raw.line) + ":" +
                                     std::to_string(raw.column),
                                 raw.line, raw.column);
            prod.rhs.push_back(Symbol::nonterminal(it->second));
            break;
          }
          case RawSymbol::Kind::literal:
            if (raw.text.empty()) break;  // "" is the empty string
            prod.rhs.push_back(Symbol::terminal(intern_terminal(0, raw.text, literal_automaton(raw.text))));
            break;
          case RawSymbol::Kind::regex: {
            TerminalAutomaton automaton;
            try {
              automaton = compile_terminal(raw.text);
            } catch (const RegexError& e) {
              throw GrammarError(GrammarError::Code::invalid_regex,
                                 "invalid regex at " + std::to_string(raw.line) + ":" + std::to_string(raw.column) +
                                     ": " + e.what(),
                                 raw.line, raw.column);
            }
            if (!automaton.accepts_empty()) {
              prod.rhs.push_back(Symbol::terminal(intern_terminal(1, raw.text, std::move(automaton))));
              break;
            }
            if (automaton.only_empty()) break;
            auto wrapper = nullable_wrappers.find(raw.text);
            if (wrapper == nullable_wrappers.end()) {
              auto nt = fresh_name("_opt" + std::to_string(nullable_wrappers.size()));
              auto t = intern_terminal(2, raw.text, automaton.without_empty());
              extra.push_back(Production{nt, {Symbol::terminal(t)}});
              extra.push_back(Production{nt, {}});
              wrapper = nullable_wrappers.emplace(raw.text, nt).first;
            }
            prod.rhs.push_back(Symbol::nonterminal(wrapper->second));
            break;
          }
        }
      }
      productions.push_back(std::move(prod));
    }
  }
  productions.insert(productions.end(), extra.begin(), extra.end());

  std::string start = start_name ? std::string(*start_name) : std::string("start");
  auto start_it = name_ids.find(start);
  if (start_it == name_ids.end() || start_it->second >= declared)
    throw GrammarError(GrammarError::Code::undefined_nonterminal, "start symbol '" + start + "' is not defined");
  return Grammar(std::move(names), std::move(terminals), std::move(productions), start_it->second);
}

}  // namespace cfgmask
