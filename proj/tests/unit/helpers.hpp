#pragma once

#include <string>
#include <utility>
#include <vector>

#include "corpus/corpus.hpp"

namespace testing {

inline const std::vector<std::string>& bot_names() {
  static const std::vector<std::string> names = {"attraction_bot", "hotel_bot", "restaurant_bot",
                                                 "taxi_bot",       "train_bot", "travel_bot"};
  return names;
}

inline std::vector<turngov::corpus::Agent> all_agents() {
  std::vector<turngov::corpus::Agent> agents{{"user", turngov::corpus::Role::user}};
  for (const auto& b : bot_names()) agents.push_back({b, turngov::corpus::Role::bot});
  return agents;
}

inline turngov::corpus::AgentInventory inventory() {
  return turngov::corpus::AgentInventory(all_agents());
}

inline turngov::corpus::Utterance turn(const std::string& sender, const std::string& text) {
  turngov::corpus::Utterance u;
  u.sender = sender;
  u.role = sender == "user" ? turngov::corpus::Role::user : turngov::corpus::Role::bot;
  u.text = text;
  return u;
}

/// Dialogue from (sender, text) pairs.
inline turngov::corpus::Dialogue dialogue(
    const std::string& id, const std::vector<std::pair<std::string, std::string>>& turns) {
  turngov::corpus::Dialogue d;
  d.id = id;
  for (const auto& [s, t] : turns) d.turns.push_back(turn(s, t));
  return d;
}

/// Corpus over the full seven-agent inventory.
inline turngov::corpus::Corpus corpus(std::vector<turngov::corpus::Dialogue> dialogues) {
  return turngov::corpus::make_corpus(std::move(dialogues), all_agents());
}

}  // namespace testing
