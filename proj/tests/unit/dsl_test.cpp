#include <doctest.h>

#include <algorithm>
#include <set>

#include "common/error.hpp"
#include "common/rng.hpp"
#include "dsl/engine.hpp"
#include "dsl/ruleset.hpp"
#include "helpers.hpp"

using namespace turngov;
using namespace turngov::dsl;

namespace {

std::shared_ptr<const RuleSet> rules(const std::string& name) {
  return std::make_shared<RuleSet>(load_ruleset(std::string(TURNGOV_RULES_DIR) + "/" + name));
}

const Engine& engine_a() {
  static const Engine e(rules("scenario_a.cr"), testing::inventory());
  return e;
}

const Engine& engine_b() {
  static const Engine e(rules("scenario_b.cr"), testing::inventory());
  return e;
}

Event ev(const std::string& sender, std::vector<std::string> mentions = {},
         std::optional<std::string> expected = std::nullopt) {
  return {sender, std::move(mentions), std::move(expected)};
}

ConversationState run(const Engine& e, const std::vector<Event>& events) {
  auto s = e.reset();
  for (const auto& x : events) s = e.apply_event(s, x);
  return s;
}

Verdict verdict(const Engine& e, const ConversationState& s, const std::string& sender,
                std::vector<std::string> mentions = {}) {
  return e.gate(s, {sender, std::move(mentions)}).verdict;
}

bool justified_by(const GateDecision& d, const std::string& id) {
  return std::find(d.justification.begin(), d.justification.end(), id) != d.justification.end();
}

const ActiveNorm* find_active(const ConversationState& s, const std::string& id, DeonticType kind) {
  for (const auto& n : s.active) {
    if (n.norm_id == id && n.kind == kind) return &n;
  }
  return nullptr;
}

std::vector<std::string> bots_except(const std::string& who) {
  std::vector<std::string> out;
  for (const auto& b : testing::bot_names()) {
    if (b != who) out.push_back(b);
  }
  return out;
}

const char* kMinimal = R"(
ruleset tiny {
  roles user, bot;
  states s0, s1;
  initial s0;
  norm n1 on message(user) { permit role(user); }
  transition t1: s0 -> s1 on message(bot);
}
)";

}  // namespace

TEST_CASE("shipped rule sets") {
  const auto a = rules("scenario_a.cr");
  const auto b = rules("scenario_b.cr");
  CHECK(a->norms.size() == 6);
  CHECK(a->transitions.size() == 3);
  CHECK(b->norms.size() == 12);
  CHECK(b->transitions.size() == 9);
  for (const auto& n : a->norms) {
    INFO(n.id);
    REQUIRE(b->find_norm(n.id) != nullptr);
    CHECK(b->find_norm(n.id)->clauses == n.clauses);
  }
}

TEST_CASE("parse errors carry locations") {
  CHECK(parse_ruleset(kMinimal).norms.size() == 1);

  std::string undeclared = kMinimal;
  undeclared.replace(undeclared.find("s0 -> s1"), 8, "s0 -> s9");
  try {
    parse_ruleset(undeclared);
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("s9") != std::string::npos);
    CHECK(e.line() == 7);
  }

  std::string dup = kMinimal;
  dup.insert(dup.find("  transition"), "  norm n1 on message(bot) { prohibit $sender; }\n");
  CHECK_THROWS_AS(parse_ruleset(dup), ParseError);

  std::string bad_selector = kMinimal;
  bad_selector.replace(bad_selector.find("role(user)"), 10, "$nobody");
  CHECK_THROWS_AS(parse_ruleset(bad_selector), ParseError);

  std::string syntax = kMinimal;
  syntax.replace(syntax.find("initial s0;"), 11, "initial s0");
  try {
    parse_ruleset(syntax);
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.column() > 0);
  }

  std::string overlap = kMinimal;
  overlap.insert(overlap.rfind("}"), "  transition t2: s0 -> s0 on message(any);\n");
  CHECK_THROWS_AS(parse_ruleset(overlap), ParseError);

  CHECK_THROWS_AS(load_ruleset("/nonexistent/rules.cr"), IoError);
}

TEST_CASE("CR-A1: the user may always speak") {
  for (const Engine* e : {&engine_a(), &engine_b()}) {
    CHECK(verdict(*e, e->reset(), "user") == Verdict::allow);
    CHECK(verdict(*e, run(*e, {ev("user", {"hotel_bot"})}), "user") == Verdict::allow);
    CHECK(verdict(*e, run(*e, {ev("user"), ev("hotel_bot")}), "user") == Verdict::allow);
    CHECK(verdict(*e, run(*e, {ev("user"), ev("hotel_bot", {"taxi_bot"})}), "user") ==
          Verdict::allow);
  }
}

TEST_CASE("CR-A2: a mentioned participant must answer, the others wait") {
  const auto& e = engine_a();
  const auto s = run(e, {ev("user", {"hotel_bot"})});
  const auto* ob = find_active(s, "a2_mention_obligation", DeonticType::obligation);
  REQUIRE(ob != nullptr);
  CHECK(ob->targets == std::vector<std::string>{"hotel_bot"});
  const auto* pr = find_active(s, "a2_mention_exclusion", DeonticType::prohibition);
  REQUIRE(pr != nullptr);
  CHECK(pr->targets == bots_except("hotel_bot"));

  const auto allow = e.gate(s, {"hotel_bot", {}});
  CHECK(allow.verdict == Verdict::allow);
  CHECK(justified_by(allow, "a2_mention_obligation"));
  const auto deny = e.gate(s, {"taxi_bot", {}});
  CHECK(deny.verdict == Verdict::deny);
  CHECK(justified_by(deny, "a2_mention_exclusion"));

  CHECK(e.obliged(e.apply_event(s, ev("hotel_bot"))).empty());
}

TEST_CASE("CR-A3: a bot reply silences the sender and every bot") {
  const auto& e = engine_a();
  const auto s = run(e, {ev("user"), ev("hotel_bot")});
  const auto* self = find_active(s, "a3_sender_silenced", DeonticType::prohibition);
  REQUIRE(self != nullptr);
  CHECK(self->targets == std::vector<std::string>{"hotel_bot"});
  const auto* all = find_active(s, "a3_bots_silenced", DeonticType::prohibition);
  REQUIRE(all != nullptr);
  CHECK(all->targets == testing::bot_names());

  CHECK(verdict(e, s, "hotel_bot") == Verdict::deny);
  CHECK(verdict(e, e.apply_event(s, ev("user")), "taxi_bot") == Verdict::allow);
}

TEST_CASE("CR-A4: bots are denied once the slot has its reply") {
  const auto& e = engine_a();
  const auto s = run(e, {ev("user"), ev("hotel_bot")});
  CHECK(s.replied);
  CHECK_FALSE(e.apply_event(s, ev("user")).replied);
  CHECK(verdict(e, s, "train_bot") == Verdict::deny);

  const auto late = e.apply_event(s, ev("taxi_bot"));
  const auto d = e.gate(late, {"train_bot", {}});
  CHECK(d.verdict == Verdict::deny);
  CHECK(justified_by(d, "a4_late_reply"));
}

TEST_CASE("CR-B1: only the expected bot may reply") {
  const auto& e = engine_b();
  const auto s = run(e, {ev("user", {}, "train_bot")});
  CHECK(verdict(e, s, "train_bot") == Verdict::allow);
  CHECK(verdict(e, s, "taxi_bot") == Verdict::deny);
  CHECK(verdict(e, s, "travel_bot") == Verdict::deny);
}

TEST_CASE("CR-B2: the user holds the turn after the expected reply") {
  const auto& e = engine_b();
  const auto s = run(e, {ev("user", {}, "train_bot"), ev("train_bot", {}, "user")});
  CHECK(e.obliged(s) == std::vector<std::string>{"user"});
  CHECK(verdict(e, s, "taxi_bot") == Verdict::deny);
  const auto d = e.gate(s, {"user", {}});
  CHECK(d.verdict == Verdict::allow);
  CHECK(justified_by(d, "b3_train_bot"));
}

TEST_CASE("CR-B3: a plain user message obliges the expected bot") {
  const auto& e = engine_b();
  const auto s = run(e, {ev("user", {}, "train_bot")});
  const auto* ob = find_active(s, "b3_train_bot", DeonticType::obligation);
  REQUIRE(ob != nullptr);
  CHECK(ob->targets == std::vector<std::string>{"train_bot"});
  const auto* pr = find_active(s, "b3_train_bot", DeonticType::prohibition);
  REQUIRE(pr != nullptr);
  CHECK(pr->targets == bots_except("train_bot"));
  CHECK(s.fsa_state == "awaiting_train_bot");
  CHECK(e.obliged(run(e, {ev("user", {}, "user")})).empty());
}

TEST_CASE("reset") {
  const auto& e = engine_a();
  CHECK(e.reset() == e.reset());
  CHECK(e.reset().fsa_state == "idle");
  CHECK(verdict(e, e.reset(), "user") == Verdict::allow);
  CHECK(verdict(e, e.reset(), "hotel_bot") == Verdict::allow);
}

TEST_CASE("unknown agents are rejected") {
  const auto& e = engine_a();
  CHECK_THROWS_AS(e.apply_event(e.reset(), ev("ghost_bot")), InvalidArgument);
  CHECK_THROWS_AS(e.gate(e.reset(), {"ghost_bot", {}}), InvalidArgument);
}

TEST_CASE("random event sequences") {
  const auto agents = testing::inventory();
  const auto names = agents.names();
  Rng rng(2024);
  for (const Engine* e : {&engine_a(), &engine_b()}) {
    for (int seq = 0; seq < 1000; ++seq) {
      std::vector<Event> events;
      const std::size_t len = 1 + rng.uniform_index(20);
      for (std::size_t i = 0; i < len; ++i) {
        Event x{names[rng.uniform_index(names.size())], {}, std::nullopt};
        const std::size_t m = rng.uniform_index(4) == 0 ? 1 + rng.uniform_index(2) : 0;
        for (std::size_t k = 0; k < m; ++k) {
          const auto& who = names[rng.uniform_index(names.size())];
          if (std::find(x.mentions.begin(), x.mentions.end(), who) == x.mentions.end()) {
            x.mentions.push_back(who);
          }
        }
        if (rng.bernoulli(0.8)) x.expected = names[rng.uniform_index(names.size())];
        events.push_back(std::move(x));
      }
      auto s = e->reset();
      for (const auto& x : events) {
        s = e->apply_event(s, x);
        REQUIRE(e->obliged(s).size() <= 1);
        const auto before = s;
        for (const auto& who : names) {
          const auto d1 = e->gate(s, {who, {}});
          CHECK(e->gate(s, {who, {}}) == d1);
          if (d1.verdict == Verdict::deny) CHECK_FALSE(d1.justification.empty());
        }
        REQUIRE(s == before);
        CHECK(e->gate(s, {"user", {}}).verdict == Verdict::allow);
      }
      REQUIRE(run(*e, events) == s);
    }
  }
}
