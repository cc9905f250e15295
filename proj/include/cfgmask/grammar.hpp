#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "cfgmask/automaton.hpp"

namespace cfgmask {

struct Symbol {
  enum class Kind : std::uint8_t { terminal, nonterminal };

  Kind kind = Kind::terminal;
  std::uint32_t id = 0;

  static Symbol terminal(std::uint32_t id) { return {Kind::terminal, id}; }
  static Symbol nonterminal(std::uint32_t id) { return {Kind::nonterminal, id}; }
  bool is_terminal() const { return kind == Kind::terminal; }

  friend auto operator<=>(const Symbol&, const Symbol&) = default;
};

struct Production {
  std::uint32_t lhs = 0;
  std::vector<Symbol> rhs;

  friend bool operator==(const Production&, const Production&) = default;
};

struct Terminal {
  std::string pattern;  // literal bytes, or regex source when is_regex
  bool is_regex = false;
  /// Regex language with the empty string removed (see parse_grammar).
  bool nonempty = false;
  TerminalAutomaton automaton;

  /// Grammar-format spelling, e.g. `"a"` or `#"[0-9]+"`; a trailing `!`
  /// marks a nonempty-only regex.
  std::string display() const;

  friend bool operator==(const Terminal&, const Terminal&) = default;
};

class GrammarError : public std::runtime_error {
 public:
  enum class Code { syntax, undefined_nonterminal, empty_grammar, invalid_regex, empty_language, invalid };

  GrammarError(Code code, const std::string& message, std::size_t line = 0, std::size_t column = 0);

  Code code() const { return code_; }
  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }

 private:
  Code code_;
  std::size_t line_;
  std::size_t column_;
};

/// Immutable context-free grammar over byte-level terminal automata.
class Grammar {
 public:
  Grammar(std::vector<std::string> nonterminal_names, std::vector<Terminal> terminals,
          std::vector<Production> productions, std::uint32_t start);

  std::size_t nonterminal_count() const { return nonterminal_names_.size(); }
  std::size_t terminal_count() const { return terminals_.size(); }
  std::size_t production_count() const { return productions_.size(); }

  const std::vector<Production>& productions() const { return productions_; }
  const Production& production(std::uint32_t id) const { return productions_[id]; }
  const std::vector<std::uint32_t>& productions_of(std::uint32_t nonterminal) const { return by_lhs_[nonterminal]; }
  const std::vector<Terminal>& terminals() const { return terminals_; }
  const Terminal& terminal(std::uint32_t id) const { return terminals_[id]; }
  const std::vector<std::string>& nonterminal_names() const { return nonterminal_names_; }
  const std::string& name(std::uint32_t nonterminal) const { return nonterminal_names_[nonterminal]; }
  std::uint32_t start() const { return start_; }
  std::optional<std::uint32_t> find_nonterminal(std::string_view name) const;

  std::size_t max_rhs_length() const;
  /// True when some production has an empty right-hand side.
  bool has_empty_productions() const;

  std::string symbol_to_string(Symbol s) const;
  std::string production_to_string(std::uint32_t id) const;
  /// Grammar-format text, for reports. Nonempty-only regex terminals print
  /// with a trailing `!` and do not reparse.
  std::string to_text() const;

  friend bool operator==(const Grammar& a, const Grammar& b) {
    return a.nonterminal_names_ == b.nonterminal_names_ && a.terminals_ == b.terminals_ &&
           a.productions_ == b.productions_ && a.start_ == b.start_;
  }

 private:
  std::vector<std::string> nonterminal_names_;
  std::vector<Terminal> terminals_;
  std::vector<Production> productions_;
  std::uint32_t start_;
  std::vector<std::vector<std::uint32_t>> by_lhs_;
};

/// Parses the textual grammar format:
///
///     // comment
///     start ::= value ;
///     value ::= "true" | "false" | #"[0-9]+" ;
///
/// Nonterminal ids follow first declaration order; terminal ids follow first
/// occurrence. Identical terminals share one id. `start_name` overrides the
/// default start symbol `start`. A regex terminal whose language contains the
/// empty string is replaced by a fresh nonterminal `_optN ::= t! | ""` where
/// `t!` is the same regex minus the empty string.
Grammar parse_grammar(std::string_view text, std::optional<std::string_view> start_name = std::nullopt);

}  // namespace cfgmask
