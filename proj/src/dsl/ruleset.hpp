#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace turngov::dsl {

enum class DeonticType { obligation, permission, prohibition };

std::string_view to_string(DeonticType kind);

/// Which senders a `message(...)` pattern accepts.
enum class SenderPattern { any, user, bot };

enum class AtomKind {
  sender_role,       // role(sender) = <role>
  expected_role,     // role(expected) = <role>; false without an expected replier
  mentions_empty,    // mentions.empty
  mentions_single,   // mentions.single (exactly one agent mentioned)
  mentions_contains, // mentions.contains(<agent>)
  replied,           // a bot reply was already accepted for the current stimulus
  expected_present,  // expected.present
  expected_is_sender,// expected = sender
  expected_is,       // expected = <agent>
  sender_is,         // sender = <agent>
  state_is,          // state = <state>
};

struct Atom {
  AtomKind kind = AtomKind::mentions_empty;
  /// Role name, agent name or state name, depending on kind.
  std::string arg;

  bool operator==(const Atom&) const = default;
};

struct Literal {
  Atom atom;
  bool negated = false;

  bool operator==(const Literal&) const = default;
};

/// Disjunction of conjunctions of literals; empty means "always".
struct Condition {
  std::vector<std::vector<Literal>> any_of;

  bool always() const { return any_of.empty(); }
  bool operator==(const Condition&) const = default;
};

struct Trigger {
  SenderPattern sender = SenderPattern::any;
  Condition where;

  bool operator==(const Trigger&) const = default;
};

enum class SelectorKind {
  sender,        // $sender
  last_sender,   // $last_sender
  receivers,     // $receivers (mentioned agents)
  role,          // role(user) / role(bot)
  expected,      // expected_agent
  others,        // bots other than the sender and agents obliged by the same event
  agent,         // a literal agent name
};

struct Selector {
  SelectorKind kind = SelectorKind::sender;
  std::string arg;

  bool operator==(const Selector&) const = default;
};

enum class Expiry {
  /// Ends when the next message is accepted.
  next,
  /// Ends when a message from anyone other than the triggering sender is
  /// accepted.
  reply,
};

struct Clause {
  DeonticType kind = DeonticType::permission;
  Selector target;
  Expiry expiry = Expiry::next;

  bool operator==(const Clause&) const = default;
};

struct NormSpec {
  std::string id;
  Trigger trigger;
  std::vector<Clause> clauses;
  std::size_t line = 0;

  bool operator==(const NormSpec&) const = default;
};

struct TransitionSpec {
  std::string id;
  /// Empty means any state (`*`).
  std::string from;
  std::string to;
  Trigger trigger;
  std::size_t line = 0;

  bool operator==(const TransitionSpec&) const = default;
};

struct RuleSet {
  std::string name;
  std::vector<std::string> roles;
  std::vector<std::string> states;
  std::string initial;
  std::vector<NormSpec> norms;
  std::vector<TransitionSpec> transitions;
  /// Declared with `total;`: every accepted event must match a transition.
  bool total_transitions = false;

  const NormSpec* find_norm(std::string_view id) const;
  bool has_state(std::string_view state) const;
  bool operator==(const RuleSet&) const = default;
};

/// Parses, resolves and checks a rules file. Every failure is a ParseError
/// carrying the offending line and column: lexical and syntax errors,
/// undeclared states, unknown selectors or roles, duplicate ids, and pairs of
/// transitions out of the same state that are not mutually exclusive.
RuleSet parse_ruleset(std::string_view source);
RuleSet load_ruleset(const std::filesystem::path& path);

/// True when no event could satisfy both triggers, judged literal by literal.
bool mutually_exclusive(const Trigger& a, const Trigger& b);

}  // namespace turngov::dsl
