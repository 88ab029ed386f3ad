#include "dsl/engine.hpp"

#include <algorithm>

#include "common/error.hpp"

namespace turngov::dsl {

std::string_view to_string(Verdict verdict) {
  return verdict == Verdict::allow ? "allow" : "deny";
}

struct Engine::Context {
  const ConversationState& state;
  const std::string& sender;
  corpus::Role role;
  const std::vector<std::string>& mentions;
  const std::optional<std::string>& expected;
};

Engine::Engine(std::shared_ptr<const RuleSet> rules, corpus::AgentInventory agents)
    : rules_(std::move(rules)), agents_(std::move(agents)) {
  if (!rules_) throw InvalidArgument("engine needs a rule set");
  if (agents_.empty() || agents_.bots().empty()) {
    throw InvalidArgument("engine needs a user and at least one bot");
  }
}

ConversationState Engine::reset() const {
  ConversationState s;
  s.fsa_state = rules_->initial;
  return s;
}

bool Engine::holds(const Atom& atom, const Context& ctx) const {
  auto role_is = [](corpus::Role r, const std::string& name) {
    return corpus::to_string(r) == name;
  };
  switch (atom.kind) {
    case AtomKind::sender_role: return role_is(ctx.role, atom.arg);
    case AtomKind::expected_role:
      return ctx.expected && role_is(agents_.role_of(*ctx.expected), atom.arg);
    case AtomKind::mentions_empty: return ctx.mentions.empty();
    case AtomKind::mentions_single: return ctx.mentions.size() == 1;
    case AtomKind::mentions_contains:
      return std::find(ctx.mentions.begin(), ctx.mentions.end(), atom.arg) != ctx.mentions.end();
    case AtomKind::replied: return ctx.state.replied;
    case AtomKind::expected_present: return ctx.expected.has_value();
    case AtomKind::expected_is_sender: return ctx.expected && *ctx.expected == ctx.sender;
    case AtomKind::expected_is: return ctx.expected && *ctx.expected == atom.arg;
    case AtomKind::sender_is: return ctx.sender == atom.arg;
    case AtomKind::state_is: return ctx.state.fsa_state == atom.arg;
  }
  return false;
}

bool Engine::matches(const Trigger& trigger, const Context& ctx) const {
  if (trigger.sender == SenderPattern::user && ctx.role != corpus::Role::user) return false;
  if (trigger.sender == SenderPattern::bot && ctx.role != corpus::Role::bot) return false;
  if (trigger.where.always()) return true;
  for (const auto& conj : trigger.where.any_of) {
    bool all = true;
    for (const auto& lit : conj) {
      if (holds(lit.atom, ctx) == lit.negated) {
        all = false;
        break;
      }
    }
    if (all) return true;
  }
  return false;
}

std::vector<std::string> Engine::resolve(const Selector& sel, const Context& ctx,
                                         const std::vector<std::string>& obliged) const {
  std::vector<std::string> out;
  switch (sel.kind) {
    case SelectorKind::sender: out.push_back(ctx.sender); break;
    case SelectorKind::last_sender:
      if (ctx.state.last_sender) out.push_back(*ctx.state.last_sender);
      break;
    case SelectorKind::receivers: out = ctx.mentions; break;
    case SelectorKind::role:
      for (const auto& a : agents_.agents()) {
        if (corpus::to_string(a.role) == sel.arg) out.push_back(a.name);
      }
      break;
    case SelectorKind::expected:
      if (ctx.expected) out.push_back(*ctx.expected);
      break;
    case SelectorKind::others:
      for (const auto& a : agents_.agents()) {
        if (a.role == corpus::Role::bot && a.name != ctx.sender &&
            std::find(obliged.begin(), obliged.end(), a.name) == obliged.end()) {
          out.push_back(a.name);
        }
      }
      break;
    case SelectorKind::agent:
      if (agents_.contains(sel.arg)) out.push_back(sel.arg);
      break;
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

ConversationState Engine::apply_event(const ConversationState& state, const Event& event) const {
  const auto role = agents_.role_of(event.sender);
  for (const auto& m : event.mentions) agents_.index_of(m);
  if (event.expected) agents_.index_of(*event.expected);

  const Context ctx{state, event.sender, role, event.mentions, event.expected};
  ConversationState next = state;

  std::erase_if(next.active, [&](const ActiveNorm& n) {
    return n.expiry == Expiry::next || n.trigger_sender != event.sender;
  });

  std::vector<const NormSpec*> fired;
  for (const auto& norm : rules_->norms) {
    if (matches(norm.trigger, ctx)) fired.push_back(&norm);
  }
  std::vector<std::string> obliged;
  for (const auto* norm : fired) {
    for (const auto& c : norm->clauses) {
      if (c.kind != DeonticType::obligation || c.target.kind == SelectorKind::others) continue;
      for (auto& a : resolve(c.target, ctx, {})) obliged.push_back(std::move(a));
    }
  }
  for (const auto* norm : fired) {
    for (std::size_t k = 0; k < norm->clauses.size(); ++k) {
      const auto& c = norm->clauses[k];
      auto targets = resolve(c.target, ctx, obliged);
      if (targets.empty()) continue;
      next.active.push_back({norm->id, k, c.kind, std::move(targets), c.expiry, event.sender});
    }
  }

  const TransitionSpec* taken = nullptr;
  for (const auto& t : rules_->transitions) {
    if (!t.from.empty() && t.from != state.fsa_state) continue;
    if (!matches(t.trigger, ctx)) continue;
    if (taken) {
      throw StateError("transitions '" + taken->id + "' and '" + t.id + "' both match");
    }
    taken = &t;
  }
  if (taken) {
    next.fsa_state = taken->to;
  } else if (rules_->total_transitions) {
    throw StateError("no transition from state '" + state.fsa_state + "' matches a message from '" +
                     event.sender + "'");
  }

  next.sender_before_last = state.last_sender;
  next.last_sender = event.sender;
  next.replied = role == corpus::Role::bot;
  ++next.accepted;
  return next;
}

GateDecision Engine::gate(const ConversationState& state, const Attempt& attempt) const {
  agents_.index_of(attempt.sender);
  std::vector<std::string> by_kind[3];
  for (const auto& n : state.active) {
    if (!std::binary_search(n.targets.begin(), n.targets.end(), attempt.sender)) continue;
    auto& ids = by_kind[static_cast<int>(n.kind)];
    if (std::find(ids.begin(), ids.end(), n.norm_id) == ids.end()) ids.push_back(n.norm_id);
  }
  const auto& obligations = by_kind[static_cast<int>(DeonticType::obligation)];
  const auto& prohibitions = by_kind[static_cast<int>(DeonticType::prohibition)];
  const auto& permissions = by_kind[static_cast<int>(DeonticType::permission)];
  if (!obligations.empty()) return {Verdict::allow, obligations};
  if (!prohibitions.empty()) return {Verdict::deny, prohibitions};
  if (!permissions.empty()) return {Verdict::allow, permissions};
  return {Verdict::allow, {}};
}

std::vector<std::string> Engine::obliged(const ConversationState& state) const {
  std::vector<std::string> out;
  for (const auto& n : state.active) {
    if (n.kind != DeonticType::obligation) continue;
    out.insert(out.end(), n.targets.begin(), n.targets.end());
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

}  // namespace turngov::dsl
