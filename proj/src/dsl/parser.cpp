#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

#include "common/error.hpp"
#include "dsl/ruleset.hpp"

namespace turngov::dsl {

std::string_view to_string(DeonticType kind) {
  switch (kind) {
    case DeonticType::obligation: return "obligation";
    case DeonticType::permission: return "permission";
    case DeonticType::prohibition: return "prohibition";
  }
  return "?";
}

const NormSpec* RuleSet::find_norm(std::string_view id) const {
  for (const auto& n : norms) {
    if (n.id == id) return &n;
  }
  return nullptr;
}

bool RuleSet::has_state(std::string_view state) const {
  for (const auto& s : states) {
    if (s == state) return true;
  }
  return false;
}

namespace {

enum class Tok { ident, variable, punct, end };

struct Token {
  Tok kind = Tok::end;
  std::string text;
  std::size_t line = 1;
  std::size_t column = 1;
};

std::vector<Token> lex(std::string_view src) {
  std::vector<Token> out;
  std::size_t line = 1, col = 1, i = 0;
  auto advance = [&](std::size_t n) {
    for (std::size_t k = 0; k < n; ++k, ++i) {
      if (src[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
  };
  auto is_word = [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
  };
  while (i < src.size()) {
    const char c = src[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      advance(1);
    } else if (c == '#' || (c == '/' && i + 1 < src.size() && src[i + 1] == '/')) {
      while (i < src.size() && src[i] != '\n') advance(1);
    } else if (is_word(c) || c == '$') {
      Token t{c == '$' ? Tok::variable : Tok::ident, "", line, col};
      std::size_t j = i + (c == '$' ? 1 : 0);
      while (j < src.size() && is_word(src[j])) ++j;
      t.text = std::string(src.substr(i, j - i));
      if (t.kind == Tok::variable && t.text.size() == 1) {
        throw ParseError("expected a variable name after '$'", line, col);
      }
      advance(j - i);
      out.push_back(std::move(t));
    } else if (c == '-' && i + 1 < src.size() && src[i + 1] == '>') {
      out.push_back({Tok::punct, "->", line, col});
      advance(2);
    } else if (std::string_view("{}();,:=*.").find(c) != std::string_view::npos) {
      out.push_back({Tok::punct, std::string(1, c), line, col});
      advance(1);
    } else {
      throw ParseError(std::string("unexpected character '") + c + "'", line, col);
    }
  }
  out.push_back({Tok::end, "", line, col});
  return out;
}

class Parser {
 public:
  explicit Parser(std::vector<Token> tokens) : toks_(std::move(tokens)) {}

  RuleSet parse() {
    RuleSet rs;
    keyword("ruleset");
    rs.name = ident("ruleset name").text;
    punct("{");
    bool have_roles = false, have_states = false, have_initial = false;
    Token initial_tok;
    std::vector<Token> state_refs;  // (token, name) of every state use
    while (!at("}")) {
      const Token& t = peek();
      if (t.kind != Tok::ident) fail(t, "expected a declaration");
      if (t.text == "roles") {
        if (have_roles) fail(t, "roles declared twice");
        have_roles = true;
        next();
        for (const auto& r : ident_list("role name")) {
          if (r.text != "user" && r.text != "bot") fail(r, "unknown role '" + r.text + "'");
          rs.roles.push_back(r.text);
        }
        punct(";");
      } else if (t.text == "states") {
        if (have_states) fail(t, "states declared twice");
        have_states = true;
        next();
        for (const auto& s : ident_list("state name")) {
          if (rs.has_state(s.text)) fail(s, "duplicate state '" + s.text + "'");
          rs.states.push_back(s.text);
        }
        punct(";");
      } else if (t.text == "initial") {
        if (have_initial) fail(t, "initial state declared twice");
        have_initial = true;
        next();
        initial_tok = ident("initial state");
        rs.initial = initial_tok.text;
        punct(";");
      } else if (t.text == "total") {
        next();
        rs.total_transitions = true;
        punct(";");
      } else if (t.text == "norm") {
        rs.norms.push_back(norm(state_refs));
      } else if (t.text == "transition") {
        rs.transitions.push_back(transition(state_refs));
      } else {
        fail(t, "unknown declaration '" + t.text + "'");
      }
    }
    punct("}");
    if (peek().kind != Tok::end) fail(peek(), "unexpected input after the ruleset");

    const Token& end = toks_.back();
    if (!have_roles) fail(end, "missing roles declaration");
    for (const char* r : {"user", "bot"}) {
      if (std::find(rs.roles.begin(), rs.roles.end(), r) == rs.roles.end()) {
        fail(end, std::string("roles must include '") + r + "'");
      }
    }
    if (!have_states) fail(end, "missing states declaration");
    if (!have_initial) fail(end, "missing initial state");
    if (!rs.has_state(rs.initial)) fail(initial_tok, "undeclared state '" + rs.initial + "'");
    for (const auto& ref : state_refs) {
      if (!rs.has_state(ref.text)) fail(ref, "undeclared state '" + ref.text + "'");
    }
    check_ids(rs);
    check_exclusive(rs);
    return rs;
  }

 private:
  const Token& peek() const { return toks_[pos_]; }
  const Token& next() { return toks_[pos_ < toks_.size() - 1 ? pos_++ : pos_]; }
  bool at(std::string_view p) const {
    return peek().kind == Tok::punct && peek().text == p;
  }
  bool at_word(std::string_view w) const {
    return peek().kind == Tok::ident && peek().text == w;
  }
  [[noreturn]] static void fail(const Token& t, const std::string& what) {
    throw ParseError(what, t.line, t.column);
  }
  static std::string describe(const Token& t) {
    return t.kind == Tok::end ? "end of input" : "'" + t.text + "'";
  }
  void punct(std::string_view p) {
    if (!at(p)) fail(peek(), "expected '" + std::string(p) + "', found " + describe(peek()));
    next();
  }
  void keyword(std::string_view w) {
    if (!at_word(w)) fail(peek(), "expected '" + std::string(w) + "', found " + describe(peek()));
    next();
  }
  Token ident(std::string_view what) {
    if (peek().kind != Tok::ident) {
      fail(peek(), "expected " + std::string(what) + ", found " + describe(peek()));
    }
    return next();
  }
  std::vector<Token> ident_list(std::string_view what) {
    std::vector<Token> out{ident(what)};
    while (at(",")) {
      next();
      out.push_back(ident(what));
    }
    return out;
  }

  SenderPattern pattern() {
    keyword("message");
    punct("(");
    const Token t = ident("sender pattern");
    punct(")");
    if (t.text == "any") return SenderPattern::any;
    if (t.text == "user") return SenderPattern::user;
    if (t.text == "bot") return SenderPattern::bot;
    fail(t, "unknown sender pattern '" + t.text + "'");
  }

  std::string role_name() {
    const Token t = ident("role name");
    if (t.text != "user" && t.text != "bot") fail(t, "unknown role '" + t.text + "'");
    return t.text;
  }

  Atom atom(std::vector<Token>& state_refs) {
    const Token t = ident("condition");
    if (t.text == "role") {
      punct("(");
      const Token who = ident("'sender' or 'expected'");
      punct(")");
      punct("=");
      if (who.text == "sender") return {AtomKind::sender_role, role_name()};
      if (who.text == "expected") return {AtomKind::expected_role, role_name()};
      fail(who, "expected 'sender' or 'expected'");
    }
    if (t.text == "mentions") {
      punct(".");
      const Token m = ident("'empty', 'single' or 'contains'");
      if (m.text == "empty") return {AtomKind::mentions_empty, ""};
      if (m.text == "single") return {AtomKind::mentions_single, ""};
      if (m.text == "contains") {
        punct("(");
        const Token a = ident("agent name");
        punct(")");
        return {AtomKind::mentions_contains, a.text};
      }
      fail(m, "unknown mentions property '" + m.text + "'");
    }
    if (t.text == "replied") return {AtomKind::replied, ""};
    if (t.text == "expected") {
      if (at(".")) {
        next();
        const Token m = ident("'present'");
        if (m.text != "present") fail(m, "unknown expected property '" + m.text + "'");
        return {AtomKind::expected_present, ""};
      }
      punct("=");
      const Token a = ident("agent name or 'sender'");
      if (a.text == "sender") return {AtomKind::expected_is_sender, ""};
      return {AtomKind::expected_is, a.text};
    }
    if (t.text == "sender") {
      punct("=");
      return {AtomKind::sender_is, ident("agent name").text};
    }
    if (t.text == "state") {
      punct("=");
      const Token s = ident("state name");
      state_refs.push_back(s);
      return {AtomKind::state_is, s.text};
    }
    fail(t, "unknown condition '" + t.text + "'");
  }

  Condition condition(std::vector<Token>& state_refs) {
    Condition c;
    for (;;) {
      std::vector<Literal> conj;
      for (;;) {
        Literal lit;
        if (at_word("not")) {
          next();
          lit.negated = true;
        }
        lit.atom = atom(state_refs);
        conj.push_back(std::move(lit));
        if (!at_word("and")) break;
        next();
      }
      c.any_of.push_back(std::move(conj));
      if (!at_word("or")) break;
      next();
    }
    return c;
  }

  Trigger trigger(std::vector<Token>& state_refs) {
    keyword("on");
    Trigger t;
    t.sender = pattern();
    if (at_word("where")) {
      next();
      t.where = condition(state_refs);
    }
    return t;
  }

  Selector selector() {
    const Token t = peek();
    if (t.kind == Tok::variable) {
      next();
      if (t.text == "$sender") return {SelectorKind::sender, ""};
      if (t.text == "$last_sender") return {SelectorKind::last_sender, ""};
      if (t.text == "$receivers") return {SelectorKind::receivers, ""};
      fail(t, "unknown variable '" + t.text + "'");
    }
    const Token w = ident("selector");
    if (w.text == "role") {
      punct("(");
      const std::string r = role_name();
      punct(")");
      return {SelectorKind::role, r};
    }
    if (w.text == "expected_agent") return {SelectorKind::expected, ""};
    if (w.text == "others") return {SelectorKind::others, ""};
    static const std::set<std::string> reserved = {"until", "reply", "next", "oblige",
                                                   "permit", "prohibit", "not", "and",
                                                   "or", "where", "on"};
    if (reserved.count(w.text)) fail(w, "expected a selector, found '" + w.text + "'");
    return {SelectorKind::agent, w.text};
  }

  NormSpec norm(std::vector<Token>& state_refs) {
    const Token kw = next();
    NormSpec n;
    n.line = kw.line;
    const Token id = ident("norm id");
    n.id = id.text;
    ids_.push_back(id);
    n.trigger = trigger(state_refs);
    punct("{");
    while (!at("}")) {
      const Token k = ident("'oblige', 'permit' or 'prohibit'");
      Clause c;
      if (k.text == "oblige") {
        c.kind = DeonticType::obligation;
      } else if (k.text == "permit") {
        c.kind = DeonticType::permission;
      } else if (k.text == "prohibit") {
        c.kind = DeonticType::prohibition;
      } else {
        fail(k, "expected 'oblige', 'permit' or 'prohibit', found '" + k.text + "'");
      }
      c.target = selector();
      if (at_word("until")) {
        next();
        const Token e = ident("'reply' or 'next'");
        if (e.text == "reply") {
          c.expiry = Expiry::reply;
        } else if (e.text == "next") {
          c.expiry = Expiry::next;
        } else {
          fail(e, "expected 'reply' or 'next', found '" + e.text + "'");
        }
      }
      punct(";");
      n.clauses.push_back(std::move(c));
    }
    if (n.clauses.empty()) fail(peek(), "norm '" + n.id + "' has no clauses");
    punct("}");
    return n;
  }

  TransitionSpec transition(std::vector<Token>& state_refs) {
    const Token kw = next();
    TransitionSpec t;
    t.line = kw.line;
    const Token id = ident("transition id");
    t.id = id.text;
    transition_ids_.push_back(id);
    punct(":");
    if (at("*")) {
      next();
    } else {
      const Token from = ident("state name");
      state_refs.push_back(from);
      t.from = from.text;
    }
    punct("->");
    const Token to = ident("state name");
    state_refs.push_back(to);
    t.to = to.text;
    t.trigger = trigger(state_refs);
    punct(";");
    return t;
  }

  void check_ids(const RuleSet&) const {
    std::set<std::string> seen;
    for (const auto& t : ids_) {
      if (!seen.insert(t.text).second) fail(t, "duplicate norm id '" + t.text + "'");
    }
    seen.clear();
    for (const auto& t : transition_ids_) {
      if (!seen.insert(t.text).second) fail(t, "duplicate transition id '" + t.text + "'");
    }
  }

  void check_exclusive(const RuleSet& rs) const {
    for (std::size_t i = 0; i < rs.transitions.size(); ++i) {
      for (std::size_t j = i + 1; j < rs.transitions.size(); ++j) {
        const auto& a = rs.transitions[i];
        const auto& b = rs.transitions[j];
        if (!a.from.empty() && !b.from.empty() && a.from != b.from) continue;
        if (!mutually_exclusive(a.trigger, b.trigger)) {
          fail(transition_ids_[j], "transitions '" + a.id + "' and '" + b.id +
                                       "' can both match the same event");
        }
      }
    }
  }

  std::vector<Token> toks_;
  std::size_t pos_ = 0;
  std::vector<Token> ids_;
  std::vector<Token> transition_ids_;
};

// Literals that pin a single value of some attribute; two positive pins of
// the same attribute to different values contradict.
std::optional<std::pair<int, std::string>> pin(const Literal& l) {
  if (l.negated) return std::nullopt;
  switch (l.atom.kind) {
    case AtomKind::sender_role: return std::make_pair(0, l.atom.arg);
    case AtomKind::expected_role: return std::make_pair(1, l.atom.arg);
    case AtomKind::expected_is: return std::make_pair(2, l.atom.arg);
    case AtomKind::sender_is: return std::make_pair(3, l.atom.arg);
    case AtomKind::state_is: return std::make_pair(4, l.atom.arg);
    default: return std::nullopt;
  }
}

bool requires_expected(const Literal& l) {
  return !l.negated && (l.atom.kind == AtomKind::expected_role ||
                        l.atom.kind == AtomKind::expected_is ||
                        l.atom.kind == AtomKind::expected_is_sender ||
                        l.atom.kind == AtomKind::expected_present);
}

bool contradict(const Literal& a, const Literal& b) {
  if (a.atom == b.atom && a.negated != b.negated) return true;
  const auto pa = pin(a), pb = pin(b);
  if (pa && pb && pa->first == pb->first && pa->second != pb->second) return true;
  auto empty_vs_contains = [](const Literal& x, const Literal& y) {
    return !x.negated && x.atom.kind == AtomKind::mentions_empty && !y.negated &&
           y.atom.kind == AtomKind::mentions_contains;
  };
  if (empty_vs_contains(a, b) || empty_vs_contains(b, a)) return true;
  auto empty_vs_single = [](const Literal& x, const Literal& y) {
    return !x.negated && x.atom.kind == AtomKind::mentions_empty && !y.negated &&
           y.atom.kind == AtomKind::mentions_single;
  };
  if (empty_vs_single(a, b) || empty_vs_single(b, a)) return true;
  auto absent_vs_needed = [](const Literal& x, const Literal& y) {
    return x.negated && x.atom.kind == AtomKind::expected_present && requires_expected(y);
  };
  return absent_vs_needed(a, b) || absent_vs_needed(b, a);
}

std::vector<Literal> with_pattern(SenderPattern p, std::vector<Literal> conj) {
  if (p != SenderPattern::any) {
    conj.push_back({{AtomKind::sender_role, p == SenderPattern::user ? "user" : "bot"}, false});
  }
  return conj;
}

bool conj_exclusive(const std::vector<Literal>& a, const std::vector<Literal>& b) {
  std::vector<Literal> all = a;
  all.insert(all.end(), b.begin(), b.end());
  for (std::size_t i = 0; i < all.size(); ++i) {
    for (std::size_t j = i + 1; j < all.size(); ++j) {
      if (contradict(all[i], all[j])) return true;
    }
  }
  return false;
}

}  // namespace

bool mutually_exclusive(const Trigger& a, const Trigger& b) {
  const std::vector<std::vector<Literal>> always = {{}};
  const auto& da = a.where.always() ? always : a.where.any_of;
  const auto& db = b.where.always() ? always : b.where.any_of;
  for (const auto& ca : da) {
    for (const auto& cb : db) {
      if (!conj_exclusive(with_pattern(a.sender, ca), with_pattern(b.sender, cb))) return false;
    }
  }
  return true;
}

RuleSet parse_ruleset(std::string_view source) { return Parser(lex(source)).parse(); }

RuleSet load_ruleset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open rules file '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_ruleset(ss.str());
}

}  // namespace turngov::dsl
