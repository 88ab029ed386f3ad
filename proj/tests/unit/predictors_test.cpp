#include <doctest.h>

#include <numeric>

#include "common/error.hpp"
#include "common/rng.hpp"
#include "encoding/encoding.hpp"
#include "helpers.hpp"
#include "predictors/predictors.hpp"

using namespace turngov;
using namespace turngov::encoding;
using namespace turngov::predictors;
using corpus::Agent;
using corpus::AgentInventory;
using corpus::Role;

namespace {

AgentInventory three() {
  return AgentInventory({{"a1", Role::user}, {"a2", Role::bot}, {"a3", Role::bot}});
}

std::vector<std::uint8_t> concat(std::vector<std::uint8_t> a, const std::vector<std::uint8_t>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

}  // namespace

TEST_CASE("one_hot") {
  const auto agents = three();
  CHECK(one_hot("a2", agents).bits == std::vector<std::uint8_t>{0, 1, 0});
  CHECK(one_hot("a2", agents).argmax() == 1);
  CHECK(one_hot("user", testing::inventory()).bits.size() == 7);
  CHECK_THROWS_AS(one_hot("ghost_bot", testing::inventory()), InvalidArgument);
}

TEST_CASE("window_state puts the most recent sender first and zero-pads") {
  const auto agents = testing::inventory();
  const auto u = one_hot("user", agents).bits;
  const auto b1 = one_hot("hotel_bot", agents).bits;
  const auto b2 = one_hot("taxi_bot", agents).bits;
  const std::vector<std::uint8_t> zero(7, 0);

  std::vector<std::string> h1 = {"user", "hotel_bot"};
  CHECK(window_state(h1, 2, agents).bits == concat(b1, u));
  std::vector<std::string> h2 = {"user"};
  CHECK(window_state(h2, 2, agents).bits == concat(u, zero));
  std::vector<std::string> h3 = {"user", "hotel_bot", "user", "taxi_bot"};
  CHECK(window_state(h3, 2, agents).bits == concat(b2, u));

  const auto s = window_state(h3, 2, agents);
  CHECK(WindowedState::from_key(s.key(), 2, 7) == s);
}

TEST_CASE("transitions_from_dialogue") {
  const auto agents = testing::inventory();
  const auto d = testing::dialogue("d", {{"user", "x"}, {"hotel_bot", "y"}, {"user", "z"}});
  const auto events = transitions_from_dialogue(d, 2, agents);
  REQUIRE(events.size() == 2);
  std::vector<std::string> h1 = {"user"}, h2 = {"user", "hotel_bot"};
  CHECK(events[0].from_state == window_state(h1, 2, agents));
  CHECK(events[0].to_sender == "hotel_bot");
  CHECK(events[1].from_state == window_state(h2, 2, agents));
  CHECK(events[1].to_sender == "user");

  CHECK(transitions_from_dialogue(testing::dialogue("s", {{"user", "x"}}), 2, agents).empty());

  // Distractors are invisible to the encoder.
  auto augmented = d;
  auto fake = testing::turn("taxi_bot", "noise");
  fake.is_distractor = true;
  fake.slot = 0;
  augmented.turns.insert(augmented.turns.begin() + 1, fake);
  CHECK(transitions_from_dialogue(augmented, 2, agents) == events);
}

TEST_CASE("repeat_last") {
  CHECK(repeat_last(std::vector<std::string>{"user", "hotel_bot"}) == "user");
  CHECK(repeat_last(std::vector<std::string>{"user", "hotel_bot", "user"}) == "hotel_bot");
  CHECK(repeat_last(std::vector<std::string>{"user"}) == "user");
}

TEST_CASE("mle counts and smoothing") {
  const auto agents = testing::inventory();
  std::vector<std::string> h = {"user", "hotel_bot"};
  const auto s1 = window_state(h, 2, agents);
  std::vector<TransitionEvent> events = {{s1, "user"}, {s1, "user"}, {s1, "hotel_bot"}};
  const auto table = mle_train(events, 2, agents);
  const auto* counts = table.counts(s1.key());
  REQUIRE(counts != nullptr);
  CHECK((*counts)[agents.index_of("user")] == 2);
  CHECK((*counts)[agents.index_of("hotel_bot")] == 1);
  CHECK(table.state_total(s1.key()) == 3);

  const auto empty = mle_train(std::vector<TransitionEvent>{}, 2, agents);
  CHECK(empty.state_count() == 0);
  CHECK(empty.total_count() == 0);
}

TEST_CASE("mle_predict arithmetic") {
  const auto agents = testing::inventory();
  std::vector<std::string> h = {"user", "train_bot"};
  const auto s = window_state(h, 2, agents);

  SUBCASE("unseen state is uniform") {
    const auto out = mle_predict(mle_train(std::vector<TransitionEvent>{}, 2, agents), s);
    for (double p : out.distribution) CHECK(p == doctest::Approx(1.0 / 7));
    CHECK(out.confidence == doctest::Approx(1.0 / 7));
  }
  SUBCASE("3 user, 1 hotel_bot") {
    std::vector<TransitionEvent> ev(3, {s, "user"});
    ev.push_back({s, "hotel_bot"});
    const auto out = mle_predict(mle_train(ev, 2, agents), s);
    CHECK(out.label == "user");
    CHECK(out.confidence == doctest::Approx(4.0 / 11));
  }
  SUBCASE("100 user") {
    std::vector<TransitionEvent> ev(100, {s, "user"});
    const auto out = mle_predict(mle_train(ev, 2, agents), s);
    CHECK(out.confidence == doctest::Approx(101.0 / 107));
  }
}

TEST_CASE("mle distributions are normalized and floored at 1/(total+n)") {
  const auto agents = testing::inventory();
  Rng rng(5);
  std::vector<TransitionEvent> events;
  for (int i = 0; i < 500; ++i) {
    std::vector<std::string> h = {agents.name(rng.uniform_index(7)), agents.name(rng.uniform_index(7))};
    events.push_back({window_state(h, 2, agents), agents.name(rng.uniform_index(7))});
  }
  const auto table = mle_train(events, 2, agents);
  for (auto mode : {Smoothing::normalized, Smoothing::literal}) {
    for (int i = 0; i < 300; ++i) {
      std::vector<std::string> h = {agents.name(rng.uniform_index(7)), agents.name(rng.uniform_index(7))};
      const auto s = window_state(h, 2, agents);
      const auto out = mle_predict(table, s, mode);
      const double sum = std::accumulate(out.distribution.begin(), out.distribution.end(), 0.0);
      CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
      if (mode == Smoothing::normalized) {
        const double floor = 1.0 / static_cast<double>(table.state_total(s.key()) + 7);
        for (double p : out.distribution) CHECK(p >= floor - 1e-15);
      }
    }
  }
}

TEST_CASE("mle total count equals the sum of T_d - 1") {
  std::vector<corpus::Dialogue> ds = {
      testing::dialogue("a", {{"user", "x"}, {"hotel_bot", "y"}, {"user", "z"}}),
      testing::dialogue("b", {{"user", "x"}, {"taxi_bot", "y"}})};
  const auto c = testing::corpus(ds);
  CHECK(mle_train(c, 2).total_count() == 2 + 1);
}

TEST_CASE("transition table JSON round trip") {
  const auto agents = testing::inventory();
  std::vector<std::string> h = {"user"};
  std::vector<TransitionEvent> ev = {{window_state(h, 2, agents), "hotel_bot"}};
  const auto table = mle_train(ev, 2, agents);
  CHECK(TransitionTable::from_json(table.to_json()) == table);
}
