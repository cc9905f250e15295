#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include "cfgmask/grammar.hpp"

namespace cfgmask {

/// Nonterminals deriving the empty string, indexed by nonterminal id.
std::vector<bool> nullable_nonterminals(const Grammar& g);

/// Drops every nonterminal that is unreachable from the start symbol or
/// derives no terminal string, along with its productions, and renumbers
/// the survivors in their original order. Terminals no longer referenced
/// are dropped the same way.
///
/// Throws GrammarError(empty_language) when the start symbol is unproductive.
Grammar remove_useless_rules(const Grammar& g);

/// Rewrites the grammar so no production has an empty right-hand side,
/// except `start ::= ""` when the language contains the empty string. If
/// the start symbol is nullable and also used on some right-hand side, a
/// fresh start `start'` is introduced so the empty production never feeds
/// a completion.
Grammar eliminate_nullables(const Grammar& g);

/// remove_useless_rules, eliminate_nullables, remove_useless_rules.
Grammar prepare_grammar(const Grammar& g);

enum class HrrForm {
  terminal,               // A -> c
  nonterminal_terminal,   // A -> B a, B with a single production
  empty,                  // A -> ""
};

std::string_view to_string(HrrForm form);

struct HrrRule {
  std::uint32_t production;
  HrrForm form;

  friend bool operator==(const HrrRule&, const HrrRule&) = default;
};

/// Productions whose completed sub-parses can never be consulted again.
/// Unambiguity of B is approximated by "B has exactly one production".
std::vector<HrrRule> detect_hrr_rules(const Grammar& g);

}  // namespace cfgmask
