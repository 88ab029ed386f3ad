#include "hybrid/hybrid.hpp"

#include "common/error.hpp"

namespace turngov::hybrid {

void CascadeConfig::validate(const corpus::AgentInventory& agents) const {
  if (!(k1 >= 0.0 && k1 <= 1.0) || !(k2 >= 0.0 && k2 <= 1.0)) {
    throw InvalidArgument("cascade thresholds must lie in [0, 1]");
  }
  if (!agents.contains(default_agent)) {
    throw InvalidArgument("default agent '" + default_agent + "' is not a participant");
  }
}

std::string_view to_string(CascadeSource source) {
  switch (source) {
    case CascadeSource::cnn: return "cnn";
    case CascadeSource::mle: return "mle";
    case CascadeSource::fallback: return "default";
  }
  return "?";
}

CascadeResult cascade_predict(const predictors::PredictorOutput& cnn,
                              const predictors::PredictorOutput& mle,
                              const CascadeConfig& config) {
  if (cnn.distribution.size() != mle.distribution.size()) {
    throw InvalidArgument("cascade inputs cover different agent inventories");
  }
  if (cnn.confidence >= config.k1) return {cnn.label, CascadeSource::cnn};
  const bool guard = config.literal_guard ? mle.confidence < config.k1 : true;
  if (guard && mle.confidence >= config.k2) return {mle.label, CascadeSource::mle};
  return {config.default_agent, CascadeSource::fallback};
}

CascadeExpecter::CascadeExpecter(std::shared_ptr<const predictors::NextSpeakerPredictor> cnn,
                                 std::shared_ptr<const predictors::NextSpeakerPredictor> mle,
                                 CascadeConfig config)
    : cnn_(std::move(cnn)), mle_(std::move(mle)), config_(std::move(config)) {
  if (!cnn_ || !mle_) throw InvalidArgument("cascade needs both predictors");
}

CascadeResult CascadeExpecter::predict(std::span<const corpus::Utterance> history) const {
  const auto c = cnn_->predict(history);
  if (c.confidence >= config_.k1) return {c.label, CascadeSource::cnn};
  return cascade_predict(c, mle_->predict(history), config_);
}

std::optional<std::string> CascadeExpecter::expected(
    std::span<const corpus::Utterance> history) const {
  return predict(history).agent;
}

dsl::Event make_event(const corpus::Utterance& message,
                      std::span<const corpus::Utterance> context, const Expecter* expecter) {
  dsl::Event e{message.sender, message.mentions, std::nullopt};
  if (expecter) e.expected = expecter->expected(context);
  return e;
}

Session::Session(std::shared_ptr<const dsl::Engine> engine,
                 std::shared_ptr<const Expecter> expecter)
    : engine_(std::move(engine)), expecter_(std::move(expecter)) {
  if (!engine_) throw InvalidArgument("session needs an engine");
  state_ = engine_->reset();
}

corpus::Utterance Session::message(const std::string& sender, const std::string& text) const {
  corpus::Utterance u;
  u.sender = sender;
  u.role = engine_->agents().role_of(sender);
  u.text = text;
  u.mentions = corpus::extract_mentions(text, engine_->agents());
  return u;
}

dsl::GateDecision Session::check(const std::string& sender, const std::string& text) const {
  const auto u = message(sender, text);
  return engine_->gate(state_, {u.sender, u.mentions});
}

Submission Session::submit(const std::string& sender, const std::string& text) {
  auto u = message(sender, text);
  Submission out;
  out.decision = engine_->gate(state_, {u.sender, u.mentions});
  out.seq = ++attempts_;
  if (out.decision.verdict == dsl::Verdict::allow) {
    history_.push_back(std::move(u));
    try {
      auto event = make_event(history_.back(), history_, expecter_.get());
      state_ = engine_->apply_event(state_, event);
      out.expected = event.expected;
    } catch (...) {
      history_.pop_back();
      throw;
    }
  }
  return out;
}

void Session::reset() {
  state_ = engine_->reset();
  history_.clear();
  attempts_ = 0;
}

}  // namespace turngov::hybrid
