#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "corpus/corpus.hpp"
#include "dsl/ruleset.hpp"

namespace turngov::dsl {

/// An accepted message as the rule engine sees it.
struct Event {
  std::string sender;
  std::vector<std::string> mentions;
  /// Predicted replier, supplied by the caller (absent outside Scenario B).
  std::optional<std::string> expected;
};

/// A candidate message: only who is speaking and whom it addresses.
struct Attempt {
  std::string sender;
  std::vector<std::string> mentions;
};

struct ActiveNorm {
  std::string norm_id;
  std::size_t clause = 0;
  DeonticType kind = DeonticType::permission;
  /// Resolved agents, sorted.
  std::vector<std::string> targets;
  Expiry expiry = Expiry::next;
  std::string trigger_sender;

  bool operator==(const ActiveNorm&) const = default;
};

struct ConversationState {
  std::string fsa_state;
  std::optional<std::string> last_sender;
  std::optional<std::string> sender_before_last;
  /// A bot message was accepted since the last user message.
  bool replied = false;
  std::vector<ActiveNorm> active;
  std::size_t accepted = 0;

  bool operator==(const ConversationState&) const = default;
};

enum class Verdict { allow, deny };

std::string_view to_string(Verdict verdict);

struct GateDecision {
  Verdict verdict = Verdict::allow;
  /// Ids of the norms that decided the verdict (empty for the default allow).
  std::vector<std::string> justification;

  bool operator==(const GateDecision&) const = default;
};

/// Evaluates a rule set for conversations among a fixed set of agents.
/// Immutable and safe to share between threads; the per-conversation state
/// is a value owned by the caller.
class Engine {
 public:
  Engine(std::shared_ptr<const RuleSet> rules, corpus::AgentInventory agents);

  const RuleSet& rules() const { return *rules_; }
  const corpus::AgentInventory& agents() const { return agents_; }

  ConversationState reset() const;

  /// Expires norms ended by the event, activates norms it triggers, follows
  /// the matching transition and records the sender. Throws InvalidArgument
  /// for agents outside the inventory, StateError when a total rule set has
  /// no matching transition.
  ConversationState apply_event(const ConversationState& state, const Event& event) const;

  /// Obligation allows; otherwise prohibition denies; otherwise permission
  /// allows; otherwise allow.
  GateDecision gate(const ConversationState& state, const Attempt& attempt) const;

  /// Agents currently holding an obligation.
  std::vector<std::string> obliged(const ConversationState& state) const;

 private:
  struct Context;
  bool matches(const Trigger& trigger, const Context& ctx) const;
  bool holds(const Atom& atom, const Context& ctx) const;
  std::vector<std::string> resolve(const Selector& sel, const Context& ctx,
                                   const std::vector<std::string>& obliged) const;

  std::shared_ptr<const RuleSet> rules_;
  corpus::AgentInventory agents_;
};

}  // namespace turngov::dsl
