#include "cfgmask/automaton.hpp"

#include <algorithm>
#include <bitset>
#include <deque>
#include <map>
#include <optional>

namespace cfgmask {

namespace {

using ByteSet = std::bitset<256>;

constexpr int kMaxRepeat = 1000;

// ---------------------------------------------------------------- regex AST

struct RegexNode {
  enum class Kind { empty, bytes, concat, alternate, repeat };
  Kind kind = Kind::empty;
  ByteSet set;
  std::vector<RegexNode> children;
  int min = 0;
  int max = -1;  // -1: unbounded
};

class RegexParser {
 public:
  explicit RegexParser(std::string_view pattern) : text_(pattern) {}

  RegexNode parse() {
    RegexNode root = parse_alternation();
    if (pos_ != text_.size()) fail(text_[pos_] == ')' ? "unbalanced ')'" : "unexpected character");
    return root;
  }

 private:
  [[noreturn]] void fail(const std::string& message) const { throw RegexError(pos_, message); }

  bool at_end() const { return pos_ >= text_.size(); }
  char peek() const { return text_[pos_]; }

  RegexNode parse_alternation() {
    RegexNode first = parse_concat();
    if (at_end() || peek() != '|') return first;
    RegexNode alt;
    alt.kind = RegexNode::Kind::alternate;
    alt.children.push_back(std::move(first));
    while (!at_end() && peek() == '|') {
      ++pos_;
      alt.children.push_back(parse_concat());
    }
    return alt;
  }

  RegexNode parse_concat() {
    RegexNode seq;
    seq.kind = RegexNode::Kind::concat;
    while (!at_end() && peek() != '|' && peek() != ')') seq.children.push_back(parse_repeat());
    if (seq.children.empty()) return RegexNode{};
    if (seq.children.size() == 1) return std::move(seq.children.front());
    return seq;
  }

  RegexNode parse_repeat() {
    RegexNode atom = parse_atom();
    while (!at_end()) {
      int lo = 0;
      int hi = -1;
      char c = peek();
      if (c == '*') {
        ++pos_;
      } else if (c == '+') {
        lo = 1;
        ++pos_;
      } else if (c == '?') {
        hi = 1;
        ++pos_;
      } else if (c == '{' && parse_bounds(lo, hi)) {
      } else {
        break;
      }
      RegexNode rep;
      rep.kind = RegexNode::Kind::repeat;
      rep.min = lo;
      rep.max = hi;
      rep.children.push_back(std::move(atom));
      atom = std::move(rep);
    }
    return atom;
  }

  // `{` that does not start a well-formed bound is a literal brace.
  bool parse_bounds(int& lo, int& hi) {
    std::size_t save = pos_;
    ++pos_;
    auto number = [&]() -> std::optional<int> {
      std::size_t begin = pos_;
      long value = 0;
      while (!at_end() && peek() >= '0' && peek() <= '9') {
        value = value * 10 + (peek() - '0');
        if (value > kMaxRepeat) fail("repetition bound too large");
        ++pos_;
      }
      if (pos_ == begin) return std::nullopt;
      return static_cast<int>(value);
    };
    auto first = number();
    if (!first) {
      pos_ = save;
      return false;
    }
    lo = *first;
    hi = *first;
    if (!at_end() && peek() == ',') {
      ++pos_;
      auto second = number();
      hi = second ? *second : -1;
    }
    if (at_end() || peek() != '}') {
      pos_ = save;
      return false;
    }
    ++pos_;
    if (hi != -1 && hi < lo) fail("repetition bounds out of order");
    return true;
  }

  RegexNode make_set(const ByteSet& set) {
    RegexNode node;
    node.kind = RegexNode::Kind::bytes;
    node.set = set;
    return node;
  }

  RegexNode parse_atom() {
    char c = peek();
    switch (c) {
      case '(': {
        ++pos_;
        if (!at_end() && peek() == '?') {
          if (pos_ + 1 < text_.size() && text_[pos_ + 1] == ':') {
            pos_ += 2;
          } else {
            fail("lookaround and group flags are not supported");
          }
        }
        RegexNode inner = parse_alternation();
        if (at_end() || peek() != ')') fail("missing ')'");
        ++pos_;
        return inner;
      }
      case '[':
        return make_set(parse_class());
      case '.': {
        ++pos_;
        ByteSet any;
        any.set();
        any.reset('\n');
        return make_set(any);
      }
      case '\\':
        return make_set(parse_escape(false));
      case '*':
      case '+':
      case '?':
        fail("repetition operator without operand");
      case '^':
      case '$':
        fail("anchors are not supported");
      default: {
        ++pos_;
        ByteSet one;
        one.set(static_cast<unsigned char>(c));
        return make_set(one);
      }
    }
  }

  unsigned hex_digit() {
    if (at_end()) fail("truncated \\x escape");
    char c = peek();
    ++pos_;
    if (c >= '0' && c <= '9') return static_cast<unsigned>(c - '0');
    if (c >= 'a' && c <= 'f') return static_cast<unsigned>(c - 'a' + 10);
    if (c >= 'A' && c <= 'F') return static_cast<unsigned>(c - 'A' + 10);
    fail("invalid hex digit");
  }

  static ByteSet range(unsigned lo, unsigned hi) {
    ByteSet s;
    for (unsigned b = lo; b <= hi; ++b) s.set(b);
    return s;
  }

  // Returns the set for one escape; `in_class` only affects error wording.
  ByteSet parse_escape(bool in_class) {
    const std::size_t start = pos_;
    ++pos_;  // backslash
    if (at_end()) fail("trailing backslash");
    char c = peek();
    ++pos_;
    ByteSet s;
    switch (c) {
      case 'n': s.set('\n'); return s;
      case 't': s.set('\t'); return s;
      case 'r': s.set('\r'); return s;
      case 'f': s.set('\f'); return s;
      case 'v': s.set('\v'); return s;
      case '0': s.set(0); return s;
      case 'x': {
        unsigned hi = hex_digit();
        unsigned lo = hex_digit();
        s.set(hi << 4 | lo);
        return s;
      }
      case 'd': return range('0', '9');
      case 'D': return ~range('0', '9');
      case 'w': return word_set();
      case 'W': return ~word_set();
      case 's': return space_set();
      case 'S': return ~space_set();
      default:
        break;
    }
    if (c >= '1' && c <= '9')
      throw RegexError(start, in_class ? "invalid escape in class" : "backreferences are not supported");
    if ((c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z')) throw RegexError(start, std::string("unknown escape \\") + c);
    s.set(static_cast<unsigned char>(c));
    return s;
  }

  static ByteSet word_set() {
    return range('a', 'z') | range('A', 'Z') | range('0', '9') | range('_', '_');
  }
  static ByteSet space_set() {
    ByteSet s;
    for (char c : {' ', '\t', '\n', '\r', '\f', '\v'}) s.set(static_cast<unsigned char>(c));
    return s;
  }

  // A single class member byte, or nullopt for a multi-byte escape like \d.
  std::optional<unsigned> class_byte(ByteSet& out) {
    if (peek() == '\\') {
      ByteSet s = parse_escape(true);
      if (s.count() == 1) {
        for (unsigned b = 0; b < 256; ++b)
          if (s.test(b)) return b;
      }
      out |= s;
      return std::nullopt;
    }
    unsigned b = static_cast<unsigned char>(peek());
    ++pos_;
    return b;
  }

  ByteSet parse_class() {
    ++pos_;  // [
    bool negate = false;
    if (!at_end() && peek() == '^') {
      negate = true;
      ++pos_;
    }
    ByteSet set;
    bool first = true;
    while (true) {
      if (at_end()) fail("unterminated character class");
      if (peek() == ']' && !first) break;
      first = false;
      auto lo = class_byte(set);
      if (!lo) continue;
      if (pos_ + 1 < text_.size() && peek() == '-' && text_[pos_ + 1] != ']') {
        ++pos_;
        auto hi = class_byte(set);
        if (!hi) fail("class range endpoint must be a single byte");
        if (*hi < *lo) fail("class range out of order");
        set |= range(*lo, *hi);
      } else {
        set.set(*lo);
      }
    }
    ++pos_;  // ]
    return negate ? ~set : set;
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

// ---------------------------------------------------------------- Thompson NFA

struct Nfa {
  struct State {
    std::vector<std::uint32_t> epsilon;
    std::optional<std::pair<ByteSet, std::uint32_t>> edge;
  };
  std::vector<State> states;

  std::uint32_t add() {
    states.emplace_back();
    return static_cast<std::uint32_t>(states.size() - 1);
  }
};

struct Fragment {
  std::uint32_t start;
  std::uint32_t end;
};

Fragment emit(Nfa& nfa, const RegexNode& node);

Fragment emit_empty(Nfa& nfa) {
  auto s = nfa.add();
  auto e = nfa.add();
  nfa.states[s].epsilon.push_back(e);
  return {s, e};
}

Fragment emit_concat(Nfa& nfa, Fragment a, Fragment b) {
  nfa.states[a.end].epsilon.push_back(b.start);
  return {a.start, b.end};
}

Fragment emit_optional(Nfa& nfa, Fragment inner) {
  auto s = nfa.add();
  auto e = nfa.add();
  nfa.states[s].epsilon = {inner.start, e};
  nfa.states[inner.end].epsilon.push_back(e);
  return {s, e};
}

Fragment emit_star(Nfa& nfa, Fragment inner) {
  auto s = nfa.add();
  auto e = nfa.add();
  nfa.states[s].epsilon = {inner.start, e};
  nfa.states[inner.end].epsilon.push_back(inner.start);
  nfa.states[inner.end].epsilon.push_back(e);
  return {s, e};
}

Fragment emit(Nfa& nfa, const RegexNode& node) {
  using K = RegexNode::Kind;
  switch (node.kind) {
    case K::empty:
      return emit_empty(nfa);
    case K::bytes: {
      auto s = nfa.add();
      auto e = nfa.add();
      nfa.states[s].edge = std::make_pair(node.set, e);
      return {s, e};
    }
    case K::concat: {
      Fragment f = emit(nfa, node.children.front());
      for (std::size_t i = 1; i < node.children.size(); ++i) f = emit_concat(nfa, f, emit(nfa, node.children[i]));
      return f;
    }
    case K::alternate: {
      auto s = nfa.add();
      auto e = nfa.add();
      for (const auto& child : node.children) {
        Fragment f = emit(nfa, child);
        nfa.states[s].epsilon.push_back(f.start);
        nfa.states[f.end].epsilon.push_back(e);
      }
      return {s, e};
    }
    case K::repeat: {
      const RegexNode& child = node.children.front();
      Fragment f = emit_empty(nfa);
      for (int i = 0; i < node.min; ++i) f = emit_concat(nfa, f, emit(nfa, child));
      if (node.max == -1) {
        f = emit_concat(nfa, f, emit_star(nfa, emit(nfa, child)));
      } else {
        for (int i = node.min; i < node.max; ++i) f = emit_concat(nfa, f, emit_optional(nfa, emit(nfa, child)));
      }
      return f;
    }
  }
  return emit_empty(nfa);
}

// ---------------------------------------------------------------- DFA

struct RawDfa {
  std::vector<std::int32_t> transitions;  // state * 256 + byte
  std::vector<std::uint8_t> accepting;

  std::size_t size() const { return accepting.size(); }
};

RawDfa determinize(const Nfa& nfa, std::uint32_t start, std::uint32_t accept) {
  using StateSet = std::vector<std::uint32_t>;
  auto closure = [&](StateSet seeds) {
    std::vector<std::uint8_t> seen(nfa.states.size(), 0);
    StateSet out;
    while (!seeds.empty()) {
      auto s = seeds.back();
      seeds.pop_back();
      if (seen[s]) continue;
      seen[s] = 1;
      out.push_back(s);
      for (auto t : nfa.states[s].epsilon) seeds.push_back(t);
    }
    std::sort(out.begin(), out.end());
    return out;
  };

  RawDfa dfa;
  std::map<StateSet, std::int32_t> ids;
  std::deque<StateSet> work;
  auto intern = [&](StateSet set) -> std::int32_t {
    if (set.empty()) return TerminalAutomaton::kDead;
    auto it = ids.find(set);
    if (it != ids.end()) return it->second;
    auto id = static_cast<std::int32_t>(dfa.accepting.size());
    ids.emplace(set, id);
    dfa.accepting.push_back(std::binary_search(set.begin(), set.end(), accept) ? 1 : 0);
    dfa.transitions.resize(dfa.transitions.size() + 256, TerminalAutomaton::kDead);
    work.push_back(std::move(set));
    return id;
  };
  intern(closure({start}));
  while (!work.empty()) {
    StateSet current = std::move(work.front());
    work.pop_front();
    auto from = ids.at(current);
    for (unsigned b = 0; b < 256; ++b) {
      StateSet targets;
      for (auto s : current) {
        const auto& edge = nfa.states[s].edge;
        if (edge && edge->first.test(b)) targets.push_back(edge->second);
      }
      if (targets.empty()) continue;
      auto to = intern(closure(std::move(targets)));
      dfa.transitions[static_cast<std::size_t>(from) * 256 + b] = to;
    }
  }
  return dfa;
}

// Removes dead states, merges equivalent states (Moore refinement) and
// renumbers in BFS order from the start so the result is canonical.
std::optional<RawDfa> normalize(const RawDfa& in, std::uint32_t start) {
  const std::size_t n = in.size();
  std::vector<std::vector<std::uint32_t>> reverse(n);
  for (std::size_t s = 0; s < n; ++s)
    for (unsigned b = 0; b < 256; ++b) {
      auto t = in.transitions[s * 256 + b];
      if (t != TerminalAutomaton::kDead) reverse[static_cast<std::size_t>(t)].push_back(static_cast<std::uint32_t>(s));
    }
  std::vector<std::uint8_t> live(n, 0);
  std::vector<std::uint32_t> stack;
  for (std::size_t s = 0; s < n; ++s)
    if (in.accepting[s]) {
      live[s] = 1;
      stack.push_back(static_cast<std::uint32_t>(s));
    }
  while (!stack.empty()) {
    auto s = stack.back();
    stack.pop_back();
    for (auto p : reverse[s])
      if (!live[p]) {
        live[p] = 1;
        stack.push_back(p);
      }
  }
  if (!live[start]) return std::nullopt;

  auto target = [&](std::size_t s, unsigned b) -> std::int32_t {
    auto t = in.transitions[s * 256 + b];
    return (t != TerminalAutomaton::kDead && live[static_cast<std::size_t>(t)]) ? t : TerminalAutomaton::kDead;
  };

  // Partition refinement over live states; class -1 stands for DEAD.
  std::vector<std::int32_t> cls(n, -1);
  for (std::size_t s = 0; s < n; ++s)
    if (live[s]) cls[s] = in.accepting[s] ? 1 : 0;
  std::size_t class_count = 0;
  while (true) {
    std::map<std::vector<std::int32_t>, std::int32_t> signatures;
    std::vector<std::int32_t> next(n, -1);
    for (std::size_t s = 0; s < n; ++s) {
      if (!live[s]) continue;
      std::vector<std::int32_t> sig;
      sig.reserve(257);
      sig.push_back(cls[s]);
      for (unsigned b = 0; b < 256; ++b) {
        auto t = target(s, b);
        sig.push_back(t == TerminalAutomaton::kDead ? -1 : cls[static_cast<std::size_t>(t)]);
      }
      auto [it, inserted] = signatures.emplace(std::move(sig), static_cast<std::int32_t>(signatures.size()));
      next[s] = it->second;
    }
    bool stable = signatures.size() == class_count;
    class_count = signatures.size();
    cls = std::move(next);
    if (stable) break;
  }

  // BFS renumbering from the start class.
  std::vector<std::int32_t> representative(class_count, -1);
  for (std::size_t s = 0; s < n; ++s)
    if (live[s] && representative[static_cast<std::size_t>(cls[s])] == -1)
      representative[static_cast<std::size_t>(cls[s])] = static_cast<std::int32_t>(s);
  std::vector<std::int32_t> order(class_count, -1);
  std::vector<std::int32_t> queue{cls[start]};
  order[static_cast<std::size_t>(cls[start])] = 0;
  RawDfa out;
  for (std::size_t head = 0; head < queue.size(); ++head) {
    auto c = static_cast<std::size_t>(queue[head]);
    auto rep = static_cast<std::size_t>(representative[c]);
    out.accepting.push_back(in.accepting[rep]);
    for (unsigned b = 0; b < 256; ++b) {
      auto t = target(rep, b);
      std::int32_t mapped = TerminalAutomaton::kDead;
      if (t != TerminalAutomaton::kDead) {
        auto tc = static_cast<std::size_t>(cls[static_cast<std::size_t>(t)]);
        if (order[tc] == -1) {
          order[tc] = static_cast<std::int32_t>(queue.size());
          queue.push_back(static_cast<std::int32_t>(tc));
        }
        mapped = order[tc];
      }
      out.transitions.push_back(mapped);
    }
  }
  return out;
}

}  // namespace

RegexError::RegexError(std::size_t position, const std::string& message)
    : std::runtime_error("regex error at " + std::to_string(position) + ": " + message), position_(position) {}

TerminalAutomaton::TerminalAutomaton(std::vector<std::int32_t> transitions, std::vector<std::uint8_t> accepting)
    : transitions_(std::move(transitions)), accepting_(std::move(accepting)), extendable_(accepting_.size(), 0) {
  for (std::size_t s = 0; s < accepting_.size(); ++s)
    for (unsigned b = 0; b < 256; ++b)
      if (transitions_[s * 256 + b] != kDead) {
        extendable_[s] = 1;
        break;
      }
}

bool TerminalAutomaton::accepts(std::string_view bytes) const {
  std::int32_t state = static_cast<std::int32_t>(start());
  for (char c : bytes) {
    state = next(static_cast<std::uint32_t>(state), static_cast<std::uint8_t>(c));
    if (state == kDead) return false;
  }
  return is_accepting(static_cast<std::uint32_t>(state));
}

bool TerminalAutomaton::only_empty() const { return accepts_empty() && !can_extend(start()); }

TerminalAutomaton TerminalAutomaton::without_empty() const {
  RawDfa raw{transitions_, accepting_};
  auto fresh = raw.size();
  raw.accepting.push_back(0);
  for (unsigned b = 0; b < 256; ++b) raw.transitions.push_back(transitions_[start() * 256 + b]);
  auto result = normalize(raw, static_cast<std::uint32_t>(fresh));
  if (!result) throw std::logic_error("automaton accepts only the empty string");
  return TerminalAutomaton(std::move(result->transitions), std::move(result->accepting));
}

TerminalAutomaton compile_terminal(std::string_view pattern) {
  RegexNode ast = RegexParser(pattern).parse();
  Nfa nfa;
  Fragment f = emit(nfa, ast);
  RawDfa raw = determinize(nfa, f.start, f.end);
  auto result = normalize(raw, 0);
  if (!result) throw RegexError(0, "pattern denotes the empty language");
  return TerminalAutomaton(std::move(result->transitions), std::move(result->accepting));
}

TerminalAutomaton literal_automaton(std::string_view bytes) {
  const std::size_t n = bytes.size() + 1;
  std::vector<std::int32_t> transitions(n * 256, TerminalAutomaton::kDead);
  std::vector<std::uint8_t> accepting(n, 0);
  for (std::size_t i = 0; i < bytes.size(); ++i)
    transitions[i * 256 + static_cast<std::uint8_t>(bytes[i])] = static_cast<std::int32_t>(i + 1);
  accepting[n - 1] = 1;
  return TerminalAutomaton(std::move(transitions), std::move(accepting));
}

}  // namespace cfgmask
