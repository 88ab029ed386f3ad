#include "turngov/turngov.h"

#include <cstring>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>

#include <json.hpp>

#include "cnn/classifier.hpp"
#include "common/error.hpp"
#include "corpus/synth.hpp"
#include "dsl/engine.hpp"
#include "eval/eval.hpp"
#include "hub/hub.hpp"
#include "hybrid/hybrid.hpp"
#include "predictors/predictors.hpp"

using namespace turngov;

struct tg_corpus {
  corpus::Corpus value;
};
struct tg_mle {
  std::shared_ptr<const predictors::TransitionTable> table;
  predictors::Smoothing smoothing = predictors::Smoothing::normalized;
};
struct tg_cnn {
  std::shared_ptr<const cnn::CnnClassifier> classifier;
};
struct tg_ruleset {
  std::shared_ptr<const dsl::RuleSet> rules;
};
struct tg_governor {
  hub::Governor value;
};
struct tg_session {
  hybrid::Session value;
};
struct tg_report {
  eval::EvalReport value;
};

namespace {

thread_local std::string last_error;

tg_status status_of(ErrorCode code) { return static_cast<tg_status>(static_cast<int>(code)); }

template <typename F>
tg_status guarded(F&& f) {
  try {
    f();
    last_error.clear();
    return TG_OK;
  } catch (const Error& e) {
    last_error = e.what();
    return status_of(e.code());
  } catch (const nlohmann::json::exception& e) {
    last_error = e.what();
    return TG_ERR_VALIDATION;
  } catch (const std::bad_alloc&) {
    last_error = "out of memory";
    return TG_ERR_RUNTIME;
  } catch (const std::exception& e) {
    last_error = e.what();
    return TG_ERR_RUNTIME;
  } catch (...) {
    last_error = "unknown error";
    return TG_ERR_RUNTIME;
  }
}

template <typename T>
const T& need(const T* p, const char* what) {
  if (!p) throw InvalidArgument(std::string(what) + " is NULL");
  return *p;
}
template <typename T>
T& need(T* p, const char* what) {
  if (!p) throw InvalidArgument(std::string(what) + " is NULL");
  return *p;
}
template <typename T>
void need_out(T** out, const char* what = "output pointer") {
  if (!out) throw InvalidArgument(std::string(what) + " is NULL");
  *out = nullptr;
}

const char* need_str(const char* s, const char* what) {
  if (!s) throw InvalidArgument(std::string(what) + " is NULL");
  return s;
}

char* dup(const std::string& s) {
  char* p = static_cast<char*>(std::malloc(s.size() + 1));
  if (!p) throw std::bad_alloc();
  std::memcpy(p, s.c_str(), s.size() + 1);
  return p;
}

hybrid::CascadeConfig cascade_from(const tg_cascade_config* c) {
  hybrid::CascadeConfig out;
  if (c) {
    out.k1 = c->k1;
    out.k2 = c->k2;
    if (c->default_agent) out.default_agent = c->default_agent;
    out.literal_guard = c->literal_guard != 0;
  }
  return out;
}

std::shared_ptr<const predictors::MlePredictor> mle_predictor(const tg_mle& m) {
  return std::make_shared<const predictors::MlePredictor>(m.table, m.smoothing);
}
std::shared_ptr<const cnn::CnnPredictor> cnn_predictor(const tg_cnn& c) {
  return std::make_shared<const cnn::CnnPredictor>(c.classifier);
}

void require_inventory(const corpus::AgentInventory& model, const corpus::AgentInventory& data,
                       const char* what) {
  if (!(model == data)) {
    throw ValidationError(std::string(what) + " was trained for different participants");
  }
}

}  // namespace

extern "C" {

const char* tg_version(void) { return "0.1.0"; }
const char* tg_last_error(void) { return last_error.c_str(); }
void tg_string_free(char* s) { std::free(s); }

const char* tg_status_name(tg_status status) {
  switch (status) {
    case TG_OK: return "ok";
    case TG_ERR_INVALID_ARGUMENT: return "invalid argument";
    case TG_ERR_PARSE: return "parse error";
    case TG_ERR_VALIDATION: return "validation error";
    case TG_ERR_IO: return "i/o error";
    case TG_ERR_VERSION: return "version error";
    case TG_ERR_CORRUPT: return "corrupt data";
    case TG_ERR_STATE: return "state error";
    case TG_ERR_RUNTIME: return "runtime error";
  }
  return "unknown status";
}

tg_status tg_corpus_load(const char* path, tg_corpus** out) {
  return guarded([&] {
    need_out(out);
    *out = new tg_corpus{corpus::load_corpus(need_str(path, "path"))};
  });
}

tg_status tg_corpus_save(const tg_corpus* c, const char* path) {
  return guarded([&] { corpus::save_corpus(need(c, "corpus").value, need_str(path, "path")); });
}

tg_status tg_corpus_synthesize(uint64_t seed, size_t dialogues, tg_corpus** out) {
  return guarded([&] {
    need_out(out);
    corpus::SynthConfig cfg;
    cfg.seed = seed;
    if (dialogues > 0) cfg.dialogues = dialogues;
    *out = new tg_corpus{corpus::synthesize_corpus(cfg)};
  });
}

tg_status tg_corpus_split(const tg_corpus* c, double ratio, tg_corpus** train, tg_corpus** test) {
  return guarded([&] {
    need_out(train, "train");
    need_out(test, "test");
    auto [a, b] = corpus::split_train_test(need(c, "corpus").value, ratio);
    auto ta = std::make_unique<tg_corpus>(tg_corpus{std::move(a)});
    auto tb = std::make_unique<tg_corpus>(tg_corpus{std::move(b)});
    *train = ta.release();
    *test = tb.release();
  });
}

tg_status tg_corpus_augment(const tg_corpus* c, const tg_corpus* pool_source, uint64_t seed,
                            tg_corpus** out) {
  return guarded([&] {
    need_out(out);
    const auto pools = corpus::ReplyPools::from(need(pool_source, "pool source").value);
    *out = new tg_corpus{corpus::augment_with_errors(need(c, "corpus").value, seed, pools)};
  });
}

tg_status tg_corpus_stats_json(const tg_corpus* c, char** json) {
  return guarded([&] {
    need_out(json, "json");
    *json = dup(corpus::to_json(corpus::corpus_stats(need(c, "corpus").value)).dump(2));
  });
}

size_t tg_corpus_dialogue_count(const tg_corpus* c) { return c ? c->value.dialogues.size() : 0; }
size_t tg_corpus_utterance_count(const tg_corpus* c) { return c ? c->value.utterance_count() : 0; }
void tg_corpus_free(tg_corpus* c) { delete c; }

tg_status tg_mle_train(const tg_corpus* c, size_t window, tg_mle** out) {
  return guarded([&] {
    need_out(out);
    auto table = std::make_shared<const predictors::TransitionTable>(
        predictors::mle_train(need(c, "corpus").value, window));
    *out = new tg_mle{std::move(table)};
  });
}

tg_status tg_mle_save(const tg_mle* m, const char* path) {
  return guarded([&] { need(m, "model").table->save(need_str(path, "path")); });
}

tg_status tg_mle_load(const char* path, tg_mle** out) {
  return guarded([&] {
    need_out(out);
    *out = new tg_mle{std::make_shared<const predictors::TransitionTable>(
        predictors::TransitionTable::load(need_str(path, "path")))};
  });
}

tg_status tg_mle_set_smoothing(tg_mle* m, tg_smoothing smoothing) {
  return guarded([&] {
    auto& model = need(m, "model");
    if (smoothing == TG_SMOOTHING_NORMALIZED) {
      model.smoothing = predictors::Smoothing::normalized;
    } else if (smoothing == TG_SMOOTHING_LITERAL) {
      model.smoothing = predictors::Smoothing::literal;
    } else {
      throw InvalidArgument("unknown smoothing mode");
    }
  });
}

void tg_mle_free(tg_mle* m) { delete m; }

void tg_cnn_options_default(tg_cnn_options* o) {
  if (!o) return;
  const cnn::ClassifierOptions d;
  o->epochs = d.train.epochs;
  o->batch_size = d.train.batch_size;
  o->learning_rate = d.train.learning_rate;
  o->seed = d.train.seed;
  o->embed = d.embed;
  o->filters = d.filters;
  o->kernel = d.kernel;
  o->hidden = d.hidden;
  o->dropout = d.dropout;
  o->max_len = d.max_len;
}

tg_status tg_cnn_train(const tg_corpus* train, const tg_corpus* vocab_source,
                       const tg_cnn_options* options, tg_progress_fn progress, void* user,
                       tg_cnn** out) {
  return guarded([&] {
    need_out(out);
    cnn::ClassifierOptions o;
    if (options) {
      o.train.epochs = options->epochs;
      o.train.batch_size = options->batch_size;
      o.train.learning_rate = options->learning_rate;
      o.train.seed = options->seed;
      o.embed = options->embed;
      o.filters = options->filters;
      o.kernel = options->kernel;
      o.hidden = options->hidden;
      o.dropout = options->dropout;
      o.max_len = options->max_len;
    }
    if (!(o.dropout >= 0.0 && o.dropout < 1.0)) throw InvalidArgument("dropout must lie in [0, 1)");
    if (o.embed == 0 || o.filters == 0 || o.kernel == 0 || o.hidden == 0) {
      throw InvalidArgument("layer sizes must be positive");
    }
    cnn::TrainProgress cb;
    if (progress) cb = [&](std::size_t e, std::size_t b, double l) { progress(e, b, l, user); };
    auto cl = cnn::train_classifier(need(train, "train").value,
                                    vocab_source ? vocab_source->value : train->value, o, cb);
    *out = new tg_cnn{std::make_shared<const cnn::CnnClassifier>(std::move(cl))};
  });
}

tg_status tg_cnn_save(const tg_cnn* m, const char* path) {
  return guarded([&] { cnn::save_model(*need(m, "model").classifier, need_str(path, "path")); });
}

tg_status tg_cnn_load(const char* path, tg_cnn** out) {
  return guarded([&] {
    need_out(out);
    *out = new tg_cnn{std::make_shared<const cnn::CnnClassifier>(
        cnn::load_model(need_str(path, "path")))};
  });
}

void tg_cnn_free(tg_cnn* m) { delete m; }

tg_status tg_ruleset_load(const char* path, tg_ruleset** out) {
  return guarded([&] {
    need_out(out);
    *out = new tg_ruleset{
        std::make_shared<const dsl::RuleSet>(dsl::load_ruleset(need_str(path, "path")))};
  });
}

tg_status tg_ruleset_parse(const char* source, tg_ruleset** out) {
  return guarded([&] {
    need_out(out);
    *out = new tg_ruleset{
        std::make_shared<const dsl::RuleSet>(dsl::parse_ruleset(need_str(source, "source")))};
  });
}

tg_status tg_ruleset_counts(const tg_ruleset* r, size_t* norms, size_t* transitions) {
  return guarded([&] {
    const auto& rules = *need(r, "rules").rules;
    if (norms) *norms = rules.norms.size();
    if (transitions) *transitions = rules.transitions.size();
  });
}

const char* tg_ruleset_name(const tg_ruleset* r) { return r ? r->rules->name.c_str() : ""; }
void tg_ruleset_free(tg_ruleset* r) { delete r; }

void tg_cascade_config_default(tg_cascade_config* c) {
  if (!c) return;
  const hybrid::CascadeConfig d;
  c->k1 = d.k1;
  c->k2 = d.k2;
  c->default_agent = nullptr;
  c->literal_guard = 0;
}

void tg_scenario_options_default(tg_scenario_options* o) {
  if (!o) return;
  o->seed = 1;
  o->protocol = TG_PROTOCOL_ALL_CANDIDATES;
  o->expect = TG_EXPECT_NONE;
  o->name = nullptr;
}

tg_status tg_eval_baseline(const tg_corpus* test, tg_report** out) {
  return guarded([&] {
    need_out(out);
    const auto& t = need(test, "test").value;
    *out = new tg_report{eval::eval_next_speaker(predictors::RepeatLastPredictor(t.agents), t)};
  });
}

tg_status tg_eval_mle(const tg_mle* m, const tg_corpus* test, tg_report** out) {
  return guarded([&] {
    need_out(out);
    const auto& model = need(m, "model");
    const auto& t = need(test, "test").value;
    require_inventory(model.table->agents(), t.agents, "MLE model");
    auto r = eval::eval_next_speaker(*mle_predictor(model), t);
    r.config["window"] = model.table->window();
    r.config["smoothing"] =
        model.smoothing == predictors::Smoothing::literal ? "literal" : "normalized";
    *out = new tg_report{std::move(r)};
  });
}

tg_status tg_eval_cnn(const tg_cnn* m, const tg_corpus* test, tg_report** out) {
  return guarded([&] {
    need_out(out);
    const auto& model = need(m, "model");
    const auto& t = need(test, "test").value;
    require_inventory(model.classifier->agents, t.agents, "CNN model");
    auto r = eval::eval_next_speaker(*cnn_predictor(model), t);
    r.config["max_len"] = model.classifier->max_len;
    r.config["vocab"] = model.classifier->vocab.size();
    *out = new tg_report{std::move(r)};
  });
}

tg_status tg_eval_scenario(const tg_ruleset* rules, const tg_corpus* augmented_test,
                           const tg_cnn* cnn_model, const tg_mle* mle_model,
                           const tg_cascade_config* cascade, const tg_scenario_options* options,
                           tg_report** out) {
  return guarded([&] {
    need_out(out);
    const auto& test = need(augmented_test, "test").value;
    tg_scenario_options o;
    tg_scenario_options_default(&o);
    if (options) o = *options;
    dsl::Engine engine(need(rules, "rules").rules, test.agents);
    std::shared_ptr<const hybrid::Expecter> expecter;
    nlohmann::ordered_json cfg;
    switch (o.expect) {
      case TG_EXPECT_NONE: cfg["expect"] = "none"; break;
      case TG_EXPECT_CASCADE: {
        const auto& c = need(cnn_model, "cnn");
        const auto& m = need(mle_model, "mle");
        require_inventory(c.classifier->agents, test.agents, "CNN model");
        require_inventory(m.table->agents(), test.agents, "MLE model");
        auto cc = cascade_from(cascade);
        cc.validate(test.agents);
        expecter = std::make_shared<const hybrid::CascadeExpecter>(cnn_predictor(c),
                                                                   mle_predictor(m), cc);
        cfg["expect"] = "cascade";
        cfg["k1"] = cc.k1;
        cfg["k2"] = cc.k2;
        cfg["default_agent"] = cc.default_agent;
        cfg["literal_guard"] = cc.literal_guard;
        break;
      }
      case TG_EXPECT_BASELINE:
        expecter = std::make_shared<const hybrid::PredictorExpecter>(
            std::make_shared<const predictors::RepeatLastPredictor>(test.agents));
        cfg["expect"] = "baseline";
        break;
      case TG_EXPECT_MLE: {
        const auto& m = need(mle_model, "mle");
        require_inventory(m.table->agents(), test.agents, "MLE model");
        expecter = std::make_shared<const hybrid::PredictorExpecter>(mle_predictor(m));
        cfg["expect"] = "mle";
        break;
      }
      case TG_EXPECT_CNN: {
        const auto& c = need(cnn_model, "cnn");
        require_inventory(c.classifier->agents, test.agents, "CNN model");
        expecter = std::make_shared<const hybrid::PredictorExpecter>(cnn_predictor(c));
        cfg["expect"] = "cnn";
        break;
      }
      default: throw InvalidArgument("unknown expectation mode");
    }
    eval::ScenarioOptions so;
    so.seed = o.seed;
    if (o.protocol == TG_PROTOCOL_ALL_CANDIDATES) {
      so.protocol = eval::Protocol::all_candidates;
    } else if (o.protocol == TG_PROTOCOL_SINGLE_DRAW) {
      so.protocol = eval::Protocol::single_draw;
    } else {
      throw InvalidArgument("unknown protocol");
    }
    if (o.name) so.name = o.name;
    auto r = eval::eval_scenario(engine, expecter.get(), test, so);
    for (auto& [k, v] : cfg.items()) r.config[k] = v;
    *out = new tg_report{std::move(r)};
  });
}

tg_status tg_report_set_seed(tg_report* r, const char* key, uint64_t seed) {
  return guarded([&] { need(r, "report").value.seeds[need_str(key, "key")] = seed; });
}

tg_status tg_report_json(const tg_report* r, char** json) {
  return guarded([&] {
    need_out(json, "json");
    *json = dup(eval::to_json(need(r, "report").value).dump());
  });
}

tg_status tg_report_save(const tg_report* r, const char* path) {
  return guarded([&] {
    const auto text = eval::to_json(need(r, "report").value).dump(1);
    std::ofstream f(need_str(path, "path"));
    if (!f) throw IoError(std::string("cannot write report '") + path + "'");
    f << text << "\n";
    if (!f) throw IoError(std::string("write failed for '") + path + "'");
  });
}

tg_status tg_report_load(const char* path, tg_report** out) {
  return guarded([&] {
    need_out(out);
    std::ifstream f(need_str(path, "path"));
    if (!f) throw IoError(std::string("cannot open report '") + path + "'");
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(f);
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError(std::string("report is not valid JSON: ") + e.what());
    }
    *out = new tg_report{eval::report_from_json(j)};
  });
}

tg_status tg_report_metrics(const tg_report* r, double* accuracy, size_t* total,
                            double* f1_binary_allow, double* f1_macro) {
  return guarded([&] {
    const auto& rep = need(r, "report").value;
    if (accuracy) *accuracy = rep.accuracy();
    if (total) *total = rep.total;
    if (f1_binary_allow) {
      const auto f = rep.f1_binary_allow();
      *f1_binary_allow = f ? *f : -1.0;
    }
    if (f1_macro) *f1_macro = rep.f1_macro();
  });
}

const char* tg_report_name(const tg_report* r) { return r ? r->value.name.c_str() : ""; }
void tg_report_free(tg_report* r) { delete r; }

tg_status tg_error_analysis(const tg_report* first, const tg_report* second, double ratios[3]) {
  return guarded([&] {
    if (!ratios) throw InvalidArgument("ratios is NULL");
    const auto o = eval::error_analysis(need(first, "first").value.error_ids(),
                                        need(second, "second").value.error_ids());
    ratios[0] = o.intersection_over_union;
    ratios[1] = o.first_only;
    ratios[2] = o.second_only;
  });
}

tg_status tg_mcnemar(const tg_report* first, const tg_report* second, size_t* only_first,
                     size_t* only_second, double* p_value) {
  return guarded([&] {
    const auto& a = need(first, "first").value;
    const auto& b = need(second, "second").value;
    if (a.instances != b.instances) {
      throw InvalidArgument("reports are not paired: their instance lists differ");
    }
    const auto m = eval::mcnemar(a.correct_flags, b.correct_flags);
    if (only_first) *only_first = m.only_first;
    if (only_second) *only_second = m.only_second;
    if (p_value) *p_value = m.p_value;
  });
}

tg_status tg_governor_from_config(const char* config_path, tg_governor** out, char** listen) {
  return guarded([&] {
    need_out(out);
    if (listen) *listen = nullptr;
    const auto cfg = hub::HubConfig::load(need_str(config_path, "config path"));
    auto g = std::make_unique<tg_governor>(tg_governor{hub::Governor::from_config(cfg)});
    if (listen) *listen = dup(cfg.listen);
    *out = g.release();
  });
}

tg_status tg_governor_create(const tg_ruleset* rules, const char* agents_json, const tg_cnn* c,
                             const tg_mle* m, const tg_cascade_config* cascade,
                             tg_governor** out) {
  return guarded([&] {
    need_out(out);
    const auto& rs = need(rules, "rules");
    std::optional<corpus::AgentInventory> agents;
    if (agents_json) {
      hub::HubConfig tmp = hub::HubConfig::from_json(
          {{"ruleset_path", "-"}, {"agents", nlohmann::json::parse(agents_json)}});
      agents = corpus::AgentInventory(tmp.agents);
    }
    auto adopt = [&](const corpus::AgentInventory& inv, const char* what) {
      if (!agents) agents = inv;
      else require_inventory(inv, *agents, what);
    };
    if (m) adopt(m->table->agents(), "MLE model");
    if (c) adopt(c->classifier->agents, "CNN model");
    if (!agents) throw InvalidArgument("no agents given and no models to take them from");
    if (static_cast<bool>(c) != static_cast<bool>(m)) {
      throw InvalidArgument("the cascade needs both an MLE and a CNN model");
    }
    hub::Governor g;
    g.engine = std::make_shared<const dsl::Engine>(rs.rules, *agents);
    if (c && m) {
      auto cc = cascade_from(cascade);
      cc.validate(*agents);
      g.expecter = std::make_shared<const hybrid::CascadeExpecter>(cnn_predictor(*c),
                                                                   mle_predictor(*m), cc);
    }
    *out = new tg_governor{std::move(g)};
  });
}

void tg_governor_free(tg_governor* g) { delete g; }

tg_status tg_session_create(const tg_governor* g, tg_session** out) {
  return guarded([&] {
    need_out(out);
    const auto& gov = need(g, "governor").value;
    *out = new tg_session{hybrid::Session(gov.engine, gov.expecter)};
  });
}

tg_status tg_session_submit(tg_session* s, const char* sender, const char* text,
                            char** verdict_json) {
  return guarded([&] {
    need_out(verdict_json, "verdict_json");
    auto& session = need(s, "session").value;
    const std::string who = need_str(sender, "sender");
    const auto sub = session.submit(who, need_str(text, "text"));
    *verdict_json = dup(hub::verdict_frame("default", who, sub).dump());
  });
}

void tg_session_free(tg_session* s) { delete s; }

tg_status tg_gate_transcript(const tg_governor* g, const char* transcript, char** verdicts) {
  return guarded([&] {
    need_out(verdicts, "verdicts");
    std::istringstream in(need_str(transcript, "transcript"));
    std::string out;
    for (const auto& f : hub::replay_transcript(need(g, "governor").value, in)) {
      out += f.dump();
      out += '\n';
    }
    *verdicts = dup(out);
  });
}

tg_status tg_hub_serve(const tg_governor* g, const char* listen, tg_ready_fn ready, void* user) {
  return guarded([&] {
    hub::Server server(need(g, "governor").value);
    const auto port = server.bind(need_str(listen, "listen"));
    if (ready) ready(port, user);
    server.run();
  });
}

}  // extern "C"
