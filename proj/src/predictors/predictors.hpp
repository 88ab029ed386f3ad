#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "corpus/corpus.hpp"
#include "encoding/encoding.hpp"

namespace turngov::predictors {

/// A next-speaker distribution over the inventory, its argmax label (ties go
/// to the lowest inventory index) and the label's probability.
struct PredictorOutput {
  std::vector<double> distribution;
  std::size_t label_index = 0;
  std::string label;
  double confidence = 0.0;
};

/// Normalizes nothing; `distribution` must already sum to one.
PredictorOutput make_output(std::vector<double> distribution,
                            const corpus::AgentInventory& agents);

/// Predicts the sender of the turn following `history` (genuine turns only,
/// oldest first, non-empty).
class NextSpeakerPredictor {
 public:
  virtual ~NextSpeakerPredictor() = default;
  virtual std::string name() const = 0;
  virtual PredictorOutput predict(std::span<const corpus::Utterance> history) const = 0;
};

/// s_{t+1} = s_{t-1}; a single-element history predicts its own speaker.
std::string repeat_last(std::span<const std::string> history);

enum class Smoothing {
  /// P(a | s) = (count(s, a) + 1) / (total(s) + n).
  normalized,
  /// Score (count(s, a) + 1) / (count(s, a) + |states|) per next sender,
  /// rescaled to sum to one.
  literal,
};

/// Smoothed transition counts over (windowed sender state -> next sender).
/// Immutable once training finishes.
class TransitionTable {
 public:
  static constexpr int kFormatVersion = 1;

  TransitionTable(std::size_t window, corpus::AgentInventory agents);

  void add(const encoding::TransitionEvent& event);

  std::size_t window() const { return window_; }
  const corpus::AgentInventory& agents() const { return agents_; }
  std::size_t n_next() const { return agents_.size(); }
  std::size_t state_count() const { return counts_.size(); }
  std::uint64_t total_count() const { return total_; }
  /// Count vector for a state key, or nullptr for unseen states.
  const std::vector<std::uint64_t>* counts(const std::string& key) const;
  std::uint64_t state_total(const std::string& key) const;
  const std::map<std::string, std::vector<std::uint64_t>>& table() const { return counts_; }

  PredictorOutput predict(const encoding::WindowedState& state,
                          Smoothing mode = Smoothing::normalized) const;

  nlohmann::ordered_json to_json() const;
  static TransitionTable from_json(const nlohmann::json& j);
  void save(const std::filesystem::path& path) const;
  static TransitionTable load(const std::filesystem::path& path);

  bool operator==(const TransitionTable&) const = default;

 private:
  std::size_t window_;
  corpus::AgentInventory agents_;
  std::map<std::string, std::vector<std::uint64_t>> counts_;
  std::map<std::string, std::uint64_t> totals_;
  std::uint64_t total_ = 0;
};

/// Throws InvalidArgument when an event's window or width disagrees with
/// (window, agents).
TransitionTable mle_train(std::span<const encoding::TransitionEvent> events,
                          std::size_t window, const corpus::AgentInventory& agents);

/// Trains on every genuine transition of every dialogue in `corpus`.
TransitionTable mle_train(const corpus::Corpus& corpus, std::size_t window);

PredictorOutput mle_predict(const TransitionTable& table, const encoding::WindowedState& state,
                            Smoothing mode = Smoothing::normalized);

class RepeatLastPredictor : public NextSpeakerPredictor {
 public:
  explicit RepeatLastPredictor(corpus::AgentInventory agents) : agents_(std::move(agents)) {}
  std::string name() const override { return "Baseline"; }
  PredictorOutput predict(std::span<const corpus::Utterance> history) const override;

 private:
  corpus::AgentInventory agents_;
};

class MlePredictor : public NextSpeakerPredictor {
 public:
  explicit MlePredictor(std::shared_ptr<const TransitionTable> table,
                        Smoothing mode = Smoothing::normalized)
      : table_(std::move(table)), mode_(mode) {}
  std::string name() const override { return "A-MLE"; }
  PredictorOutput predict(std::span<const corpus::Utterance> history) const override;
  const TransitionTable& table() const { return *table_; }

 private:
  std::shared_ptr<const TransitionTable> table_;
  Smoothing mode_;
};

}  // namespace turngov::predictors
