#include "cfgmask/transform.hpp"

#include <set>

namespace cfgmask {

std::vector<bool> nullable_nonterminals(const Grammar& g) {
  std::vector<bool> nullable(g.nonterminal_count(), false);
  bool changed = true;
  while (changed) {
    changed = false;
    for (const auto& p : g.productions()) {
      if (nullable[p.lhs]) continue;
      bool all = true;
      for (auto s : p.rhs)
        if (s.is_terminal() || !nullable[s.id]) {
          all = false;
          break;
        }
      if (all) {
        nullable[p.lhs] = true;
        changed = true;
      }
    }
  }
  return nullable;
}

namespace {

// Keeps `keep_production` productions and the symbols they mention, with
// stable renumbering.
Grammar restrict(const Grammar& g, const std::vector<bool>& keep_nonterminal, const std::vector<bool>& keep_production) {
  std::vector<std::int64_t> nt_map(g.nonterminal_count(), -1);
  std::vector<std::string> names;
  for (std::uint32_t nt = 0; nt < g.nonterminal_count(); ++nt)
    if (keep_nonterminal[nt]) {
      nt_map[nt] = static_cast<std::int64_t>(names.size());
      names.push_back(g.name(nt));
    }
  std::vector<bool> used_terminal(g.terminal_count(), false);
  for (std::uint32_t p = 0; p < g.production_count(); ++p)
    if (keep_production[p])
      for (auto s : g.production(p).rhs)
        if (s.is_terminal()) used_terminal[s.id] = true;
  std::vector<std::int64_t> t_map(g.terminal_count(), -1);
  std::vector<Terminal> terminals;
  for (std::uint32_t t = 0; t < g.terminal_count(); ++t)
    if (used_terminal[t]) {
      t_map[t] = static_cast<std::int64_t>(terminals.size());
      terminals.push_back(g.terminal(t));
    }
  std::vector<Production> productions;
  for (std::uint32_t p = 0; p < g.production_count(); ++p) {
    if (!keep_production[p]) continue;
    const auto& old = g.production(p);
    Production prod{static_cast<std::uint32_t>(nt_map[old.lhs]), {}};
    for (auto s : old.rhs)
      prod.rhs.push_back(s.is_terminal() ? Symbol::terminal(static_cast<std::uint32_t>(t_map[s.id]))
                                         : Symbol::nonterminal(static_cast<std::uint32_t>(nt_map[s.id])));
    productions.push_back(std::move(prod));
  }
  return Grammar(std::move(names), std::move(terminals), std::move(productions),
                 static_cast<std::uint32_t>(nt_map[g.start()]));
}

}  // namespace

Grammar remove_useless_rules(const Grammar& g) {
  const auto n = g.nonterminal_count();
  std::vector<bool> productive(n, false);
  bool changed = true;
  while (changed) {
    changed = false;
    for (const auto& p : g.productions()) {
      if (productive[p.lhs]) continue;
      bool all = true;
      for (auto s : p.rhs)
        if (!s.is_terminal() && !productive[s.id]) {
          all = false;
          break;
        }
      if (all) {
        productive[p.lhs] = true;
        changed = true;
      }
    }
  }
  if (!productive[g.start()])
    throw GrammarError(GrammarError::Code::empty_language,
                       "start symbol '" + g.name(g.start()) + "' derives no string (empty language)");

  std::vector<bool> keep_production(g.production_count(), false);
  for (std::uint32_t p = 0; p < g.production_count(); ++p) {
    const auto& prod = g.production(p);
    bool ok = productive[prod.lhs];
    for (auto s : prod.rhs)
      if (!s.is_terminal() && !productive[s.id]) ok = false;
    keep_production[p] = ok;
  }

  std::vector<bool> reachable(n, false);
  std::vector<std::uint32_t> stack{g.start()};
  reachable[g.start()] = true;
  while (!stack.empty()) {
    auto nt = stack.back();
    stack.pop_back();
    for (auto p : g.productions_of(nt)) {
      if (!keep_production[p]) continue;
      for (auto s : g.production(p).rhs)
        if (!s.is_terminal() && !reachable[s.id]) {
          reachable[s.id] = true;
          stack.push_back(s.id);
        }
    }
  }
  for (std::uint32_t p = 0; p < g.production_count(); ++p)
    if (!reachable[g.production(p).lhs]) keep_production[p] = false;
  return restrict(g, reachable, keep_production);
}

Grammar eliminate_nullables(const Grammar& g) {
  const auto nullable = nullable_nonterminals(g);
  std::vector<std::string> names = g.nonterminal_names();
  std::vector<Production> productions;
  std::set<std::pair<std::uint32_t, std::vector<Symbol>>> seen;

  auto emit = [&](std::uint32_t lhs, std::vector<Symbol> rhs) {
    if (rhs.empty()) return;
    if (rhs.size() == 1 && !rhs[0].is_terminal() && rhs[0].id == lhs) return;  // A -> A
    if (seen.emplace(lhs, rhs).second) productions.push_back(Production{lhs, std::move(rhs)});
  };

  for (const auto& p : g.productions()) {
    // Each nullable occurrence is kept first, then dropped.
    std::vector<Symbol> current;
    auto expand = [&](auto&& self, std::size_t i) -> void {
      if (i == p.rhs.size()) {
        emit(p.lhs, current);
        return;
      }
      Symbol s = p.rhs[i];
      current.push_back(s);
      self(self, i + 1);
      current.pop_back();
      if (!s.is_terminal() && nullable[s.id]) self(self, i + 1);
    };
    expand(expand, 0);
  }

  std::uint32_t start = g.start();
  if (nullable[start]) {
    bool used_on_rhs = false;
    for (const auto& p : productions)
      for (auto s : p.rhs)
        if (!s.is_terminal() && s.id == start) used_on_rhs = true;
    if (used_on_rhs) {
      std::string fresh = g.name(start) + "'";
      while (g.find_nonterminal(fresh)) fresh += "'";
      auto new_start = static_cast<std::uint32_t>(names.size());
      names.push_back(fresh);
      productions.push_back(Production{new_start, {Symbol::nonterminal(start)}});
      start = new_start;
    }
    productions.push_back(Production{start, {}});
  }
  return Grammar(std::move(names), g.terminals(), std::move(productions), start);
}

Grammar prepare_grammar(const Grammar& g) {
  return remove_useless_rules(eliminate_nullables(remove_useless_rules(g)));
}

std::string_view to_string(HrrForm form) {
  switch (form) {
    case HrrForm::terminal: return "A->c";
    case HrrForm::nonterminal_terminal: return "A->Ba";
    case HrrForm::empty: return "A->eps";
  }
  return "?";
}

std::vector<HrrRule> detect_hrr_rules(const Grammar& g) {
  std::vector<HrrRule> out;
  for (std::uint32_t p = 0; p < g.production_count(); ++p) {
    const auto& rhs = g.production(p).rhs;
    if (rhs.empty()) {
      out.push_back({p, HrrForm::empty});
    } else if (rhs.size() == 1 && rhs[0].is_terminal()) {
      out.push_back({p, HrrForm::terminal});
    } else if (rhs.size() == 2 && !rhs[0].is_terminal() && rhs[1].is_terminal() &&
               g.productions_of(rhs[0].id).size() == 1) {
      out.push_back({p, HrrForm::nonterminal_terminal});
    }
  }
  return out;
}

}  // namespace cfgmask
