#pragma once

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "corpus/corpus.hpp"
#include "dsl/engine.hpp"
#include "predictors/predictors.hpp"

namespace turngov::hybrid {

struct CascadeConfig {
  double k1 = 0.8;
  double k2 = 0.8;
  std::string default_agent = "travel_bot";
  /// Guard the second case with C2 < k1 instead of C1 < k1.
  bool literal_guard = false;

  /// Throws InvalidArgument for thresholds outside [0, 1] or a default agent
  /// outside the inventory.
  void validate(const corpus::AgentInventory& agents) const;
};

enum class CascadeSource { cnn, mle, fallback };

std::string_view to_string(CascadeSource source);

struct CascadeResult {
  std::string agent;
  CascadeSource source = CascadeSource::fallback;

  bool operator==(const CascadeResult&) const = default;
};

/// CNN label when C1 >= k1, else MLE label when C2 >= k2, else the default
/// agent. Throws InvalidArgument when the two outputs disagree in width.
CascadeResult cascade_predict(const predictors::PredictorOutput& cnn,
                              const predictors::PredictorOutput& mle,
                              const CascadeConfig& config);

/// Names the participant expected to speak after `history`.
class Expecter {
 public:
  virtual ~Expecter() = default;
  virtual std::optional<std::string> expected(
      std::span<const corpus::Utterance> history) const = 0;
};

class CascadeExpecter : public Expecter {
 public:
  CascadeExpecter(std::shared_ptr<const predictors::NextSpeakerPredictor> cnn,
                  std::shared_ptr<const predictors::NextSpeakerPredictor> mle,
                  CascadeConfig config);
  std::optional<std::string> expected(
      std::span<const corpus::Utterance> history) const override;
  CascadeResult predict(std::span<const corpus::Utterance> history) const;
  const CascadeConfig& config() const { return config_; }

 private:
  std::shared_ptr<const predictors::NextSpeakerPredictor> cnn_, mle_;
  CascadeConfig config_;
};

/// Uses one predictor's label as the expectation.
class PredictorExpecter : public Expecter {
 public:
  explicit PredictorExpecter(std::shared_ptr<const predictors::NextSpeakerPredictor> predictor)
      : predictor_(std::move(predictor)) {}
  std::optional<std::string> expected(
      std::span<const corpus::Utterance> history) const override {
    return predictor_->predict(history).label;
  }

 private:
  std::shared_ptr<const predictors::NextSpeakerPredictor> predictor_;
};

/// Builds the engine event for an accepted message; `context` ends with the
/// message itself and feeds the expecter when one is given.
dsl::Event make_event(const corpus::Utterance& message,
                      std::span<const corpus::Utterance> context, const Expecter* expecter);

struct Submission {
  dsl::GateDecision decision;
  /// Expected next speaker recorded with the accepted message.
  std::optional<std::string> expected;
  std::size_t seq = 0;
};

/// One governed conversation: gates every attempt and, when it is allowed,
/// applies it with the expectation computed over the accepted history.
/// Not thread-safe; callers serialize access per conversation.
class Session {
 public:
  Session(std::shared_ptr<const dsl::Engine> engine, std::shared_ptr<const Expecter> expecter);

  Submission submit(const std::string& sender, const std::string& text);
  dsl::GateDecision check(const std::string& sender, const std::string& text) const;
  void reset();

  const dsl::ConversationState& state() const { return state_; }
  const std::vector<corpus::Utterance>& history() const { return history_; }
  std::size_t attempts() const { return attempts_; }

 private:
  corpus::Utterance message(const std::string& sender, const std::string& text) const;

  std::shared_ptr<const dsl::Engine> engine_;
  std::shared_ptr<const Expecter> expecter_;
  dsl::ConversationState state_;
  std::vector<corpus::Utterance> history_;
  std::size_t attempts_ = 0;
};

}  // namespace turngov::hybrid
