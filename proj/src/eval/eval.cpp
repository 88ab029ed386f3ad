#include "eval/eval.hpp"

#include <algorithm>
#include <cmath>

#include "common/error.hpp"
#include "common/rng.hpp"

namespace turngov::eval {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

double f1(std::size_t tp, std::size_t fp, std::size_t fn) {
  const std::size_t denom = 2 * tp + fp + fn;
  return denom == 0 ? 0.0 : 2.0 * static_cast<double>(tp) / static_cast<double>(denom);
}

std::string instance_id(const std::string& dialogue, std::size_t turn) {
  return dialogue + ":" + std::to_string(turn);
}

void record(EvalReport& r, std::string id, bool ok, const std::string& truth,
            const std::string& predicted) {
  r.instances.push_back(std::move(id));
  r.correct_flags.push_back(ok);
  ++r.total;
  if (ok) ++r.correct;
  ++r.confusion[truth][predicted];
}

}  // namespace

double BinaryCounts::f1_positive() const { return f1(tp, fp, fn); }
double BinaryCounts::f1_negative() const { return f1(tn, fn, fp); }

std::optional<double> EvalReport::f1_binary_allow() const {
  if (!gating) return std::nullopt;
  return gating->f1_positive();
}

double EvalReport::f1_macro() const {
  if (gating) return gating->f1_macro();
  std::set<std::string> labels;
  for (const auto& [truth, row] : confusion) {
    labels.insert(truth);
    for (const auto& [pred, n] : row) labels.insert(pred);
  }
  if (labels.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& label : labels) {
    std::size_t tp = 0, fp = 0, fn = 0;
    for (const auto& [truth, row] : confusion) {
      for (const auto& [pred, n] : row) {
        if (truth == label && pred == label) tp += n;
        else if (pred == label) fp += n;
        else if (truth == label) fn += n;
      }
    }
    sum += f1(tp, fp, fn);
  }
  return sum / static_cast<double>(labels.size());
}

std::set<std::string> EvalReport::error_ids() const {
  std::set<std::string> out;
  for (std::size_t i = 0; i < instances.size(); ++i) {
    if (!correct_flags[i]) out.insert(instances[i]);
  }
  return out;
}

std::uint64_t config_hash(const ordered_json& config) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : config.dump()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

ordered_json to_json(const EvalReport& r) {
  ordered_json j;
  j["name"] = r.name;
  ordered_json m;
  m["accuracy"] = r.accuracy();
  m["total"] = r.total;
  m["correct"] = r.correct;
  if (auto f = r.f1_binary_allow()) m["f1_binary_allow"] = *f;
  m["f1_macro"] = r.f1_macro();
  j["metrics"] = m;
  if (r.gating) {
    j["gating"] = {{"tp", r.gating->tp}, {"fp", r.gating->fp}, {"tn", r.gating->tn},
                   {"fn", r.gating->fn}};
  }
  j["confusion"] = r.confusion;
  j["seeds"] = r.seeds;
  j["config"] = r.config;
  char hash[17];
  std::snprintf(hash, sizeof(hash), "%016llx",
                static_cast<unsigned long long>(config_hash(r.config)));
  j["config_hash"] = hash;
  j["instances"] = r.instances;
  std::string flags(r.correct_flags.size(), '0');
  for (std::size_t i = 0; i < flags.size(); ++i) flags[i] = r.correct_flags[i] ? '1' : '0';
  j["correct"] = flags;
  return j;
}

EvalReport report_from_json(const json& j) {
  EvalReport r;
  try {
    r.name = j.at("name").get<std::string>();
    r.instances = j.at("instances").get<std::vector<std::string>>();
    const auto flags = j.at("correct").get<std::string>();
    if (flags.size() != r.instances.size()) {
      throw ValidationError("report has " + std::to_string(r.instances.size()) +
                            " instances but " + std::to_string(flags.size()) + " flags");
    }
    for (char c : flags) {
      if (c != '0' && c != '1') throw ValidationError("report correctness flags must be 0/1");
      r.correct_flags.push_back(c == '1');
      ++r.total;
      if (c == '1') ++r.correct;
    }
    if (j.contains("confusion")) {
      r.confusion = j.at("confusion").get<std::map<std::string, std::map<std::string, std::size_t>>>();
    }
    if (j.contains("gating")) {
      const auto& g = j.at("gating");
      r.gating = BinaryCounts{g.at("tp").get<std::size_t>(), g.at("fp").get<std::size_t>(),
                              g.at("tn").get<std::size_t>(), g.at("fn").get<std::size_t>()};
    }
    if (j.contains("seeds")) r.seeds = j.at("seeds").get<std::map<std::string, std::uint64_t>>();
    if (j.contains("config")) r.config = j.at("config");
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed report: ") + e.what());
  }
  return r;
}

EvalReport eval_next_speaker(const predictors::NextSpeakerPredictor& predictor,
                             const corpus::Corpus& test) {
  if (test.dialogues.empty()) throw InvalidArgument("test set is empty");
  if (test.is_augmented()) throw InvalidArgument("next-speaker evaluation expects a clean corpus");
  EvalReport r;
  r.name = predictor.name();
  for (const auto& d : test.dialogues) {
    const std::span<const corpus::Utterance> turns(d.turns);
    for (std::size_t t = 1; t < turns.size(); ++t) {
      const auto out = predictor.predict(turns.first(t));
      record(r, instance_id(d.id, t), out.label == turns[t].sender, turns[t].sender, out.label);
    }
  }
  if (r.total == 0) throw InvalidArgument("test set has no dialogue with two or more turns");
  return r;
}

ErrorOverlap error_analysis(const std::set<std::string>& e1, const std::set<std::string>& e2) {
  ErrorOverlap o;
  o.first_size = e1.size();
  o.second_size = e2.size();
  for (const auto& id : e1) o.intersection += e2.count(id);
  o.union_size = e1.size() + e2.size() - o.intersection;
  o.intersection_over_union =
      o.union_size == 0 ? 1.0 : static_cast<double>(o.intersection) / o.union_size;
  o.first_only = e1.empty() ? 0.0 : static_cast<double>(e1.size() - o.intersection) / e1.size();
  o.second_only = e2.empty() ? 0.0 : static_cast<double>(e2.size() - o.intersection) / e2.size();
  return o;
}

std::string_view to_string(Protocol protocol) {
  return protocol == Protocol::all_candidates ? "all-candidates" : "single-draw";
}

Protocol parse_protocol(std::string_view text) {
  if (text == "all-candidates") return Protocol::all_candidates;
  if (text == "single-draw") return Protocol::single_draw;
  throw InvalidArgument("unknown protocol '" + std::string(text) + "'");
}

EvalReport eval_scenario(const dsl::Engine& engine, const hybrid::Expecter* expecter,
                         const corpus::Corpus& test, const ScenarioOptions& options) {
  if (test.dialogues.empty()) throw InvalidArgument("test set is empty");
  if (!test.is_augmented()) throw InvalidArgument("scenario evaluation expects an augmented corpus");
  EvalReport r;
  r.name = options.name;
  r.gating = BinaryCounts{};
  r.seeds["scenario"] = options.seed;
  r.config["protocol"] = to_string(options.protocol);
  r.config["ruleset"] = engine.rules().name;
  r.config["expecter"] = expecter != nullptr;

  auto score = [&](const std::string& id, const corpus::Utterance& u, dsl::Verdict v) {
    const bool allow = v == dsl::Verdict::allow;
    const bool genuine = !u.is_distractor;
    auto& g = *r.gating;
    if (allow && genuine) ++g.tp;
    else if (allow) ++g.fp;
    else if (genuine) ++g.fn;
    else ++g.tn;
    record(r, id, allow == genuine, genuine ? "allow" : "deny", std::string(dsl::to_string(v)));
  };

  for (std::size_t di = 0; di < test.dialogues.size(); ++di) {
    const auto& d = test.dialogues[di];
    Rng rng(derive_seed(options.seed, di));
    auto state = engine.reset();
    std::vector<corpus::Utterance> genuine;  // teacher-forced history
    std::vector<corpus::Utterance> context;

    auto accept = [&](const corpus::Utterance& u) {
      context = genuine;
      context.push_back(u);
      state = engine.apply_event(state, hybrid::make_event(u, context, expecter));
    };

    std::size_t i = 0;
    while (i < d.turns.size()) {
      const auto& u = d.turns[i];
      if (!u.slot) {
        const auto decision = engine.gate(state, {u.sender, u.mentions});
        if (options.protocol == Protocol::all_candidates) {
          score(instance_id(d.id, i), u, decision.verdict);
          if (decision.verdict == dsl::Verdict::allow) accept(u);
        } else {
          accept(u);
        }
        genuine.push_back(u);
        ++i;
        continue;
      }
      std::vector<std::size_t> group;
      const int slot = *u.slot;
      while (i < d.turns.size() && d.turns[i].slot == slot) group.push_back(i++);
      const auto reply = std::find_if(group.begin(), group.end(),
                                      [&](std::size_t k) { return !d.turns[k].is_distractor; });
      if (reply == group.end()) throw ValidationError("slot without a genuine reply in " + d.id);
      const auto& real = d.turns[*reply];

      if (options.protocol == Protocol::all_candidates) {
        rng.shuffle(group);
        for (std::size_t k : group) {
          const auto& c = d.turns[k];
          const auto decision = engine.gate(state, {c.sender, c.mentions});
          score(instance_id(d.id, k), c, decision.verdict);
          if (decision.verdict == dsl::Verdict::allow) accept(c);
        }
      } else {
        const std::size_t k = group[rng.uniform_index(group.size())];
        const auto& c = d.turns[k];
        score(instance_id(d.id, k), c, engine.gate(state, {c.sender, c.mentions}).verdict);
        accept(real);
      }
      genuine.push_back(real);
    }
  }
  return r;
}

McNemarResult mcnemar(const std::vector<bool>& first, const std::vector<bool>& second) {
  if (first.size() != second.size()) {
    throw InvalidArgument("McNemar needs paired vectors of equal length");
  }
  McNemarResult m;
  for (std::size_t i = 0; i < first.size(); ++i) {
    if (first[i] && !second[i]) ++m.only_first;
    if (!first[i] && second[i]) ++m.only_second;
  }
  const std::size_t n = m.only_first + m.only_second;
  if (n == 0) return m;
  const std::size_t k = std::min(m.only_first, m.only_second);
  // P(X <= k) for X ~ Binomial(n, 1/2), summed in log space.
  const double log_half_n = -static_cast<double>(n) * std::log(2.0);
  const double lgn = std::lgamma(static_cast<double>(n) + 1.0);
  double tail = 0.0;
  for (std::size_t i = 0; i <= k; ++i) {
    const double log_c = lgn - std::lgamma(static_cast<double>(i) + 1.0) -
                         std::lgamma(static_cast<double>(n - i) + 1.0);
    tail += std::exp(log_c + log_half_n);
  }
  m.p_value = std::min(1.0, 2.0 * tail);
  return m;
}

}  // namespace turngov::eval
