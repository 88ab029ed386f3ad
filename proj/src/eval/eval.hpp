#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "corpus/corpus.hpp"
#include "dsl/engine.hpp"
#include "hybrid/hybrid.hpp"
#include "predictors/predictors.hpp"

namespace turngov::eval {

/// Allow is the positive class: tp = allowed genuine, fp = allowed
/// distractor, fn = denied genuine, tn = denied distractor.
struct BinaryCounts {
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;

  double f1_positive() const;
  double f1_negative() const;
  double f1_macro() const { return (f1_positive() + f1_negative()) / 2.0; }
};

struct EvalReport {
  std::string name;
  std::size_t total = 0;
  std::size_t correct = 0;
  /// Instance ids ("<dialogue id>:<turn index>") and per-instance
  /// correctness, in evaluation order.
  std::vector<std::string> instances;
  std::vector<bool> correct_flags;
  /// truth -> prediction -> count (agent names, or allow/deny).
  std::map<std::string, std::map<std::string, std::size_t>> confusion;
  /// Scenario runs only.
  std::optional<BinaryCounts> gating;
  std::map<std::string, std::uint64_t> seeds;
  nlohmann::ordered_json config = nlohmann::ordered_json::object();

  double accuracy() const { return total == 0 ? 0.0 : static_cast<double>(correct) / total; }
  /// Binary F1 with allow as positive (scenario runs).
  std::optional<double> f1_binary_allow() const;
  double f1_macro() const;
  std::set<std::string> error_ids() const;
};

/// FNV-1a 64 of the compact JSON dump.
std::uint64_t config_hash(const nlohmann::ordered_json& config);

nlohmann::ordered_json to_json(const EvalReport& report);
EvalReport report_from_json(const nlohmann::json& j);

/// Next-speaker accuracy over every genuine position t >= 1 of every test
/// dialogue, predicting turn t from turns [0, t). Throws InvalidArgument for
/// empty or augmented corpora.
EvalReport eval_next_speaker(const predictors::NextSpeakerPredictor& predictor,
                             const corpus::Corpus& test);

struct ErrorOverlap {
  double intersection_over_union = 0.0;
  /// |e1 \ e2| / |e1| and |e2 \ e1| / |e2|.
  double first_only = 0.0;
  double second_only = 0.0;
  std::size_t first_size = 0, second_size = 0, intersection = 0, union_size = 0;
};

/// Empty sets give zero ratios; the union of two empty sets counts as a full
/// overlap.
ErrorOverlap error_analysis(const std::set<std::string>& e1, const std::set<std::string>& e2);

enum class Protocol {
  /// Every slot candidate is presented, in seeded random order; allowed
  /// messages are applied to the conversation. User turns are scored too.
  all_candidates,
  /// One uniformly drawn candidate per slot is scored; the genuine reply is
  /// then applied whatever the verdict. Only bot slots are scored.
  single_draw,
};

std::string_view to_string(Protocol protocol);
Protocol parse_protocol(std::string_view text);

struct ScenarioOptions {
  std::uint64_t seed = 1;
  Protocol protocol = Protocol::all_candidates;
  std::string name = "scenario";
};

/// Replays augmented dialogues through the gate. `expecter` may be null
/// (no expected-replier attribute). Throws InvalidArgument for unaugmented
/// input.
EvalReport eval_scenario(const dsl::Engine& engine, const hybrid::Expecter* expecter,
                         const corpus::Corpus& test, const ScenarioOptions& options);

struct McNemarResult {
  std::size_t only_first = 0;   // b
  std::size_t only_second = 0;  // c
  double p_value = 1.0;
};

/// Exact two-sided binomial test on discordant pairs. Throws InvalidArgument
/// when the vectors differ in length.
McNemarResult mcnemar(const std::vector<bool>& first, const std::vector<bool>& second);

}  // namespace turngov::eval
