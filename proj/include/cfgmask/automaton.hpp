#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace cfgmask {

/// Byte-level DFA used to match one terminal.
///
/// Every retained state is live (can reach an accepting state); transitions
/// that leave the live part point at kDead. State 0 is the start state.
class TerminalAutomaton {
 public:
  static constexpr std::int32_t kDead = -1;

  TerminalAutomaton() = default;
  TerminalAutomaton(std::vector<std::int32_t> transitions, std::vector<std::uint8_t> accepting);

  std::size_t state_count() const { return accepting_.size(); }
  std::uint32_t start() const { return 0; }

  std::int32_t next(std::uint32_t state, std::uint8_t byte) const {
    return transitions_[static_cast<std::size_t>(state) * 256 + byte];
  }
  bool is_accepting(std::uint32_t state) const { return accepting_[state] != 0; }
  /// True when at least one byte leads to a live state.
  bool can_extend(std::uint32_t state) const { return extendable_[state] != 0; }

  bool accepts(std::string_view bytes) const;
  bool accepts_empty() const { return is_accepting(start()); }

  /// Same language minus the empty string. Requires a non-empty remainder.
  TerminalAutomaton without_empty() const;
  /// True when the language is exactly {""}.
  bool only_empty() const;

  friend bool operator==(const TerminalAutomaton&, const TerminalAutomaton&) = default;

 private:
  std::vector<std::int32_t> transitions_;
  std::vector<std::uint8_t> accepting_;
  std::vector<std::uint8_t> extendable_;
};

class RegexError : public std::runtime_error {
 public:
  RegexError(std::size_t position, const std::string& message);
  std::size_t position() const { return position_; }

 private:
  std::size_t position_;
};

/// Compiles a regular expression over bytes to a minimal DFA.
///
/// Supported: literals, `.`, classes with ranges and negation, escapes
/// (\n \t \r \f \v \0 \xHH \d \D \w \W \s \S and escaped punctuation),
/// `*` `+` `?` `{m}` `{m,}` `{m,n}`, alternation, `(...)` and `(?:...)`.
/// Anchors, backreferences and lookaround throw RegexError, as does a
/// pattern whose language is empty.
TerminalAutomaton compile_terminal(std::string_view pattern);

/// Automaton accepting exactly `bytes`.
TerminalAutomaton literal_automaton(std::string_view bytes);

}  // namespace cfgmask
