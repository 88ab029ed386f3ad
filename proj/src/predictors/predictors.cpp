#include "predictors/predictors.hpp"

#include <algorithm>
#include <fstream>

#include "common/error.hpp"

namespace turngov::predictors {

using nlohmann::json;
using nlohmann::ordered_json;

PredictorOutput make_output(std::vector<double> distribution,
                            const corpus::AgentInventory& agents) {
  if (distribution.size() != agents.size() || distribution.empty()) {
    throw InvalidArgument("distribution size does not match the agent inventory");
  }
  PredictorOutput out;
  out.label_index = 0;
  for (std::size_t i = 1; i < distribution.size(); ++i) {
    if (distribution[i] > distribution[out.label_index]) out.label_index = i;
  }
  out.confidence = distribution[out.label_index];
  out.label = agents.name(out.label_index);
  out.distribution = std::move(distribution);
  return out;
}

std::string repeat_last(std::span<const std::string> history) {
  if (history.empty()) throw InvalidArgument("repeat_last needs a non-empty history");
  return history.size() == 1 ? history.back() : history[history.size() - 2];
}

TransitionTable::TransitionTable(std::size_t window, corpus::AgentInventory agents)
    : window_(window), agents_(std::move(agents)) {
  if (window_ < 1) throw InvalidArgument("window size must be at least 1");
}

void TransitionTable::add(const encoding::TransitionEvent& event) {
  if (event.from_state.window != window_ || event.from_state.agents != agents_.size() ||
      event.from_state.bits.size() != window_ * agents_.size()) {
    throw InvalidArgument("transition event dimensions do not match the table");
  }
  const std::string key = event.from_state.key();
  auto& row = counts_[key];
  if (row.empty()) row.assign(agents_.size(), 0);
  ++row[agents_.index_of(event.to_sender)];
  ++totals_[key];
  ++total_;
}

const std::vector<std::uint64_t>* TransitionTable::counts(const std::string& key) const {
  auto it = counts_.find(key);
  return it == counts_.end() ? nullptr : &it->second;
}

std::uint64_t TransitionTable::state_total(const std::string& key) const {
  auto it = totals_.find(key);
  return it == totals_.end() ? 0 : it->second;
}

PredictorOutput TransitionTable::predict(const encoding::WindowedState& state,
                                         Smoothing mode) const {
  if (state.window != window_ || state.agents != agents_.size() ||
      state.bits.size() != window_ * agents_.size()) {
    throw InvalidArgument("state dimensions do not match the transition table");
  }
  const std::size_t n = agents_.size();
  const auto key = state.key();
  const auto* row = counts(key);
  std::vector<double> dist(n);
  if (mode == Smoothing::normalized) {
    const double denom = static_cast<double>(state_total(key) + n);
    for (std::size_t a = 0; a < n; ++a) {
      const double c = row ? static_cast<double>((*row)[a]) : 0.0;
      dist[a] = (c + 1.0) / denom;
    }
  } else {
    const double states = static_cast<double>(std::max<std::size_t>(counts_.size(), 1));
    double sum = 0.0;
    for (std::size_t a = 0; a < n; ++a) {
      const double c = row ? static_cast<double>((*row)[a]) : 0.0;
      dist[a] = (c + 1.0) / (c + states);
      sum += dist[a];
    }
    for (auto& p : dist) p /= sum;
  }
  return make_output(std::move(dist), agents_);
}

ordered_json TransitionTable::to_json() const {
  ordered_json j;
  j["format"] = "turngov-mle";
  j["version"] = kFormatVersion;
  j["window"] = window_;
  j["agents"] = ordered_json::array();
  for (const auto& a : agents_.agents()) {
    j["agents"].push_back({{"name", a.name}, {"role", corpus::to_string(a.role)}});
  }
  ordered_json states = ordered_json::object();
  for (const auto& [key, row] : counts_) {
    ordered_json r = ordered_json::object();
    for (std::size_t a = 0; a < row.size(); ++a) {
      if (row[a] > 0) r[agents_.name(a)] = row[a];
    }
    states[key] = std::move(r);
  }
  j["states"] = std::move(states);
  return j;
}

TransitionTable TransitionTable::from_json(const json& j) {
  try {
    if (j.at("format").get<std::string>() != "turngov-mle") {
      throw CorruptError("not a transition table file");
    }
    const int version = j.at("version").get<int>();
    if (version != kFormatVersion) {
      throw VersionError("unsupported transition table version " + std::to_string(version));
    }
    std::vector<corpus::Agent> agents;
    for (const auto& a : j.at("agents")) {
      agents.push_back({a.at("name").get<std::string>(),
                        corpus::parse_role(a.at("role").get<std::string>())});
    }
    TransitionTable table(j.at("window").get<std::size_t>(),
                          corpus::AgentInventory(std::move(agents)));
    for (const auto& [key, row] : j.at("states").items()) {
      // Validates the key shape.
      encoding::WindowedState::from_key(key, table.window_, table.agents_.size());
      auto& counts = table.counts_[key];
      counts.assign(table.agents_.size(), 0);
      for (const auto& [agent, count] : row.items()) {
        const auto c = count.get<std::uint64_t>();
        counts[table.agents_.index_of(agent)] = c;
        table.totals_[key] += c;
        table.total_ += c;
      }
    }
    return table;
  } catch (const json::exception& e) {
    throw CorruptError(std::string("malformed transition table: ") + e.what());
  }
}

void TransitionTable::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << to_json().dump(1) << '\n';
}

TransitionTable TransitionTable::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw CorruptError(std::string("transition table is not valid JSON: ") + e.what());
  }
  return from_json(j);
}

TransitionTable mle_train(std::span<const encoding::TransitionEvent> events, std::size_t window,
                          const corpus::AgentInventory& agents) {
  TransitionTable table(window, agents);
  for (const auto& e : events) table.add(e);
  return table;
}

TransitionTable mle_train(const corpus::Corpus& corpus, std::size_t window) {
  TransitionTable table(window, corpus.agents);
  for (const auto& d : corpus.dialogues) {
    for (const auto& e : encoding::transitions_from_dialogue(d, window, corpus.agents)) {
      table.add(e);
    }
  }
  return table;
}

PredictorOutput mle_predict(const TransitionTable& table, const encoding::WindowedState& state,
                            Smoothing mode) {
  return table.predict(state, mode);
}

PredictorOutput RepeatLastPredictor::predict(std::span<const corpus::Utterance> history) const {
  if (history.empty()) throw InvalidArgument("repeat_last needs a non-empty history");
  const auto& speaker =
      history.size() == 1 ? history.back().sender : history[history.size() - 2].sender;
  std::vector<double> dist(agents_.size(), 0.0);
  dist[agents_.index_of(speaker)] = 1.0;
  return make_output(std::move(dist), agents_);
}

PredictorOutput MlePredictor::predict(std::span<const corpus::Utterance> history) const {
  std::vector<std::string> senders;
  const std::size_t w = table_->window();
  const std::size_t start = history.size() > w ? history.size() - w : 0;
  for (std::size_t i = start; i < history.size(); ++i) senders.push_back(history[i].sender);
  return table_->predict(encoding::window_state(senders, w, table_->agents()), mode_);
}

}  // namespace turngov::predictors
