#include <doctest.h>

#include "cnn/classifier.hpp"
#include "common/error.hpp"
#include "common/rng.hpp"
#include "dsl/engine.hpp"
#include "helpers.hpp"
#include "hybrid/hybrid.hpp"

using namespace turngov;
using namespace turngov::hybrid;
using predictors::PredictorOutput;

namespace {

/// Distribution with `p` on `label` and the rest spread evenly.
PredictorOutput peaked(const std::string& label, double p) {
  const auto agents = testing::inventory();
  std::vector<double> d(agents.size(), (1.0 - p) / static_cast<double>(agents.size() - 1));
  d[agents.index_of(label)] = p;
  return predictors::make_output(d, agents);
}

class FixedPredictor : public predictors::NextSpeakerPredictor {
 public:
  FixedPredictor(std::string label, double p) : label_(std::move(label)), p_(p) {}
  std::string name() const override { return "fixed"; }
  PredictorOutput predict(std::span<const corpus::Utterance>) const override {
    return peaked(label_, p_);
  }

 private:
  std::string label_;
  double p_;
};

std::shared_ptr<const dsl::Engine> engine_b() {
  return std::make_shared<dsl::Engine>(
      std::make_shared<dsl::RuleSet>(
          dsl::load_ruleset(std::string(TURNGOV_RULES_DIR) + "/scenario_b.cr")),
      testing::inventory());
}

}  // namespace

TEST_CASE("cascade truth table") {
  CascadeConfig cfg;
  const auto r1 = cascade_predict(peaked("train_bot", 0.95), peaked("hotel_bot", 0.99), cfg);
  CHECK(r1 == CascadeResult{"train_bot", CascadeSource::cnn});
  const auto r2 = cascade_predict(peaked("train_bot", 0.50), peaked("hotel_bot", 0.85), cfg);
  CHECK(r2 == CascadeResult{"hotel_bot", CascadeSource::mle});
  const auto r3 = cascade_predict(peaked("train_bot", 0.50), peaked("hotel_bot", 0.50), cfg);
  CHECK(r3 == CascadeResult{"travel_bot", CascadeSource::fallback});
  const auto edge = cascade_predict(peaked("train_bot", 0.8), peaked("hotel_bot", 0.9), cfg);
  CHECK(edge.source == CascadeSource::cnn);
}

TEST_CASE("literal guard tests C2 < k1 in the second case") {
  CascadeConfig cfg;
  cfg.k1 = 0.6;
  cfg.k2 = 0.7;
  cfg.literal_guard = true;
  // C1 < k1, C2 >= k2 but C2 >= k1: the literal guard skips the MLE.
  CHECK(cascade_predict(peaked("train_bot", 0.5), peaked("hotel_bot", 0.75), cfg).source ==
        CascadeSource::fallback);
  cfg.literal_guard = false;
  CHECK(cascade_predict(peaked("train_bot", 0.5), peaked("hotel_bot", 0.75), cfg).source ==
        CascadeSource::mle);
  // With k1 = k2 the literal second case (k2 <= C2 < k1) is empty.
  cfg.k1 = cfg.k2 = 0.8;
  CHECK(cascade_predict(peaked("train_bot", 0.5), peaked("hotel_bot", 0.85), cfg).source ==
        CascadeSource::mle);
  cfg.literal_guard = true;
  CHECK(cascade_predict(peaked("train_bot", 0.5), peaked("hotel_bot", 0.85), cfg).source ==
        CascadeSource::fallback);
}

TEST_CASE("cascade properties") {
  Rng rng(17);
  for (int i = 0; i < 2000; ++i) {
    const auto cnn = peaked(testing::bot_names()[rng.uniform_index(6)], rng.uniform(0.2, 0.99));
    const auto mle = peaked(testing::bot_names()[rng.uniform_index(6)], rng.uniform(0.2, 0.99));
    CascadeConfig zero;
    zero.k1 = zero.k2 = 0.0;
    CHECK(cascade_predict(cnn, mle, zero).agent == cnn.label);
    CascadeConfig one;
    one.k1 = one.k2 = 1.0;
    CHECK(cascade_predict(cnn, mle, one).agent == "travel_bot");

    CascadeConfig lo, hi;
    lo.k2 = hi.k2 = rng.uniform();
    lo.k1 = rng.uniform();
    hi.k1 = lo.k1 + rng.uniform() * (1.0 - lo.k1);
    const auto a = cascade_predict(cnn, mle, lo);
    const auto b = cascade_predict(cnn, mle, hi);
    if (a.source != CascadeSource::cnn) CHECK(b.source != CascadeSource::cnn);
    CHECK(cascade_predict(cnn, mle, lo) == a);
  }
}

TEST_CASE("cascade input checks") {
  const auto agents = testing::inventory();
  CascadeConfig cfg;
  auto narrow = peaked("train_bot", 0.9);
  narrow.distribution.pop_back();
  CHECK_THROWS_AS(cascade_predict(narrow, peaked("train_bot", 0.9), cfg), InvalidArgument);
  cfg.k1 = 1.5;
  CHECK_THROWS_AS(cfg.validate(agents), InvalidArgument);
  cfg.k1 = 0.8;
  cfg.default_agent = "ghost_bot";
  CHECK_THROWS_AS(cfg.validate(agents), InvalidArgument);
}

TEST_CASE("session gates with the cascade expectation") {
  auto expecter = std::make_shared<CascadeExpecter>(
      std::make_shared<FixedPredictor>("train_bot", 0.95),
      std::make_shared<FixedPredictor>("hotel_bot", 0.9), CascadeConfig{});
  Session s(engine_b(), expecter);
  const auto first = s.submit("user", "i need a train to cambridge");
  CHECK(first.decision.verdict == dsl::Verdict::allow);
  CHECK(first.expected == std::optional<std::string>("train_bot"));
  CHECK(s.check("taxi_bot", "i can book a taxi").verdict == dsl::Verdict::deny);
  const auto denied = s.submit("taxi_bot", "i can book a taxi");
  CHECK(denied.decision.verdict == dsl::Verdict::deny);
  CHECK(s.history().size() == 1);
  CHECK(s.submit("train_bot", "when would you like to leave ?").decision.verdict ==
        dsl::Verdict::allow);
  CHECK(s.history().size() == 2);
  CHECK(s.attempts() == 3);
  s.reset();
  CHECK(s.history().empty());
}

TEST_CASE("low confidences fall back to the default agent") {
  auto expecter = std::make_shared<CascadeExpecter>(
      std::make_shared<FixedPredictor>("train_bot", 0.5),
      std::make_shared<FixedPredictor>("hotel_bot", 0.5), CascadeConfig{});
  Session s(engine_b(), expecter);
  s.submit("user", "hello");
  CHECK(s.check("travel_bot", "hi").verdict == dsl::Verdict::allow);
  CHECK(s.check("train_bot", "hi").verdict == dsl::Verdict::deny);
  CHECK(s.check("user", "hi again").verdict == dsl::Verdict::allow);
}

TEST_CASE("a confident trained model drives the gate") {
  const std::vector<std::pair<std::string, std::string>> requests = {
      {"train_bot", "i need a train to cambridge on friday"},
      {"taxi_bot", "please book a taxi to the station"},
      {"hotel_bot", "i need a hotel room with free parking"}};
  std::vector<corpus::Dialogue> ds;
  for (int i = 0; i < 60; ++i) {
    const auto& [bot, text] = requests[i % 3];
    ds.push_back(testing::dialogue("d" + std::to_string(i),
                                   {{"user", text}, {bot, "sure , let me check"}, {"user", "thanks"}}));
  }
  const auto train = testing::corpus(ds);
  cnn::ClassifierOptions opts;
  opts.embed = 16;
  opts.filters = 16;
  opts.hidden = 32;
  opts.max_len = 24;
  opts.train.epochs = 15;
  auto clf = std::make_shared<cnn::CnnClassifier>(cnn::train_classifier(train, train, opts));
  auto model = std::make_shared<cnn::CnnPredictor>(clf);

  const std::vector<corpus::Utterance> history = {testing::turn("user", requests[0].second)};
  const auto out = model->predict(history);
  REQUIRE(out.label == "train_bot");
  REQUIRE(out.confidence >= 0.8);

  auto expecter = std::make_shared<CascadeExpecter>(
      model, std::make_shared<FixedPredictor>("hotel_bot", 0.99), CascadeConfig{});
  Session s(engine_b(), expecter);
  s.submit("user", requests[0].second);
  CHECK(s.check("train_bot", "sure").verdict == dsl::Verdict::allow);
  CHECK(s.check("taxi_bot", "sure").verdict == dsl::Verdict::deny);
}
