// Command-line front end; talks to the engine only through the C API.

#include <cstdio>
#include <iostream>
#include <fstream>
#include <iterator>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "turngov/turngov.h"

namespace {

struct Failure {
  tg_status status;
  std::string message;
};

void check(tg_status s) {
  if (s != TG_OK) throw Failure{s, tg_last_error()};
}

template <typename T, void (*Free)(T*)>
struct Handle {
  T* p = nullptr;
  Handle() = default;
  Handle(const Handle&) = delete;
  Handle& operator=(const Handle&) = delete;
  ~Handle() { Free(p); }
  T** out() { return &p; }
  T* get() const { return p; }
};

using Corpus = Handle<tg_corpus, tg_corpus_free>;
using Mle = Handle<tg_mle, tg_mle_free>;
using Cnn = Handle<tg_cnn, tg_cnn_free>;
using Rules = Handle<tg_ruleset, tg_ruleset_free>;
using Report = Handle<tg_report, tg_report_free>;
using Governor = Handle<tg_governor, tg_governor_free>;

std::string take(char* s) {
  std::string out = s ? s : "";
  tg_string_free(s);
  return out;
}

void print_metrics(const std::string& row, const tg_report* r, bool with_f1) {
  double acc = 0, f1 = 0, macro = 0;
  size_t total = 0;
  check(tg_report_metrics(r, &acc, &total, &f1, &macro));
  std::printf("%-14s accuracy %.4f", row.c_str(), acc);
  if (with_f1 && f1 >= 0) std::printf("  f1(allow) %.4f  f1(macro) %.4f", f1, macro);
  std::printf("  n=%zu\n", total);
}

void save_report(tg_report* r, const std::string& path, uint64_t seed) {
  check(tg_report_set_seed(r, "cli", seed));
  if (!path.empty()) check(tg_report_save(r, path.c_str()));
}

std::string read_all(std::istream& in) {
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"turngov: next-speaker prediction and turn gating for multi-bot chats"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(tg_version()));

  uint64_t seed = 1;
  uint64_t synth_seed = 2019;
  auto add_seed = [&](CLI::App* c) {
    c->add_option("--seed", seed, "random seed")->capture_default_str();
  };

  std::string in, out, train, test, pool, model, report, rules_path, config, listen;
  std::string cnn_path, mle_path, expect = "auto", protocol = "all-candidates", name;
  std::string smoothing = "normalized", default_agent = "travel_bot", vocab;
  double ratio = 0.7, k1 = 0.8, k2 = 0.8, lr = 0.001, dropout = 0.2;
  size_t dialogues = 0, window = 2, epochs = 3, batch = 5, max_len = 96;
  bool literal_guard = false, quiet = false;
  std::vector<std::string> pair;

  auto* synth = app.add_subcommand("synth", "generate the synthetic corpus");
  synth->add_option("--out", out, "output JSONL")->required();
  synth->add_option("--dialogues", dialogues, "number of dialogues (0 = default)");
  synth->add_option("--seed", synth_seed, "random seed")->capture_default_str();

  auto* stats = app.add_subcommand("stats", "corpus statistics as JSON");
  stats->add_option("--in", in, "corpus JSONL")->required();
  add_seed(stats);

  auto* split = app.add_subcommand("split", "positional train/test split");
  split->add_option("--in", in, "corpus JSONL")->required();
  split->add_option("--train", train, "train output")->required();
  split->add_option("--test", test, "test output")->required();
  split->add_option("--ratio", ratio, "train fraction")->default_val(0.7);
  add_seed(split);

  auto* augment = app.add_subcommand("augment", "add distractor replies");
  augment->add_option("--in", in, "clean corpus JSONL")->required();
  augment->add_option("--pool", pool, "corpus supplying distractor texts (default --in)");
  augment->add_option("--out", out, "augmented output")->required();
  add_seed(augment);

  auto* train_mle = app.add_subcommand("train-mle", "train the transition model");
  train_mle->add_option("--in", in, "training corpus")->required();
  train_mle->add_option("--window", window, "lookback window")->default_val(2);
  train_mle->add_option("--out", out, "model JSON")->required();
  add_seed(train_mle);

  auto* train_cnn = app.add_subcommand("train-cnn", "train the text classifier");
  train_cnn->add_option("--train", train, "training corpus")->required();
  train_cnn->add_option("--vocab", vocab, "extra corpus for the vocabulary (e.g. the test split)");
  train_cnn->add_option("--out", out, "model file")->required();
  train_cnn->add_option("--epochs", epochs)->default_val(3);
  train_cnn->add_option("--batch", batch)->default_val(5);
  train_cnn->add_option("--lr", lr)->default_val(0.001);
  train_cnn->add_option("--dropout", dropout)->default_val(0.2);
  train_cnn->add_option("--max-len", max_len)->default_val(96);
  train_cnn->add_flag("--quiet", quiet, "no progress output");
  add_seed(train_cnn);

  auto* eval_baseline = app.add_subcommand("eval-baseline", "repeat-last accuracy");
  eval_baseline->add_option("--test", test, "clean test corpus")->required();
  eval_baseline->add_option("--report", report, "report JSON");
  add_seed(eval_baseline);

  auto* eval_mle = app.add_subcommand("eval-mle", "transition model accuracy");
  eval_mle->add_option("--model", model)->required();
  eval_mle->add_option("--test", test, "clean test corpus")->required();
  eval_mle->add_option("--smoothing", smoothing)
      ->check(CLI::IsMember({"normalized", "literal"}))
      ->default_val("normalized");
  eval_mle->add_option("--report", report, "report JSON");
  add_seed(eval_mle);

  auto* eval_cnn = app.add_subcommand("eval-cnn", "text classifier accuracy");
  eval_cnn->add_option("--model", model)->required();
  eval_cnn->add_option("--test", test, "clean test corpus")->required();
  eval_cnn->add_option("--report", report, "report JSON");
  add_seed(eval_cnn);

  auto* eval_scenario = app.add_subcommand("eval-scenario", "gate accuracy on augmented dialogues");
  eval_scenario->add_option("--rules", rules_path)->required();
  eval_scenario->add_option("--test", test, "augmented test corpus")->required();
  eval_scenario->add_option("--cnn", cnn_path, "CNN model");
  eval_scenario->add_option("--mle", mle_path, "MLE model");
  eval_scenario->add_option("--k1", k1)->default_val(0.8);
  eval_scenario->add_option("--k2", k2)->default_val(0.8);
  eval_scenario->add_option("--default-agent", default_agent)->default_val("travel_bot");
  eval_scenario->add_flag("--literal-guard", literal_guard, "second cascade case tests C2 < k1");
  eval_scenario->add_option("--expect", expect, "expected replier source")
      ->check(CLI::IsMember({"auto", "none", "cascade", "baseline", "mle", "cnn"}))
      ->default_val("auto");
  eval_scenario->add_option("--protocol", protocol)
      ->check(CLI::IsMember({"all-candidates", "single-draw"}))
      ->default_val("all-candidates");
  eval_scenario->add_option("--name", name, "row name in the report");
  eval_scenario->add_option("--report", report, "report JSON");
  add_seed(eval_scenario);

  auto* mcnemar = app.add_subcommand("mcnemar", "paired significance test of two reports");
  mcnemar->add_option("reports", pair, "two report JSON files")->required()->expected(2);
  add_seed(mcnemar);

  auto* errors = app.add_subcommand("errors", "error-set overlap of two reports");
  errors->add_option("reports", pair, "two report JSON files")->required()->expected(2);
  add_seed(errors);

  auto* serve = app.add_subcommand("serve", "run the NDJSON governance service");
  serve->add_option("--config", config)->required();
  serve->add_option("--listen", listen, "host:port (overrides config and TURNGOV_LISTEN)");
  add_seed(serve);

  auto* gate = app.add_subcommand("gate", "verdicts for a transcript on stdin");
  gate->add_option("--config", config)->required();
  gate->add_option("--in", in, "transcript file (default stdin)");
  add_seed(gate);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*synth) {
      Corpus c;
      check(tg_corpus_synthesize(synth_seed, dialogues, c.out()));
      check(tg_corpus_save(c.get(), out.c_str()));
      std::printf("wrote %zu dialogues, %zu utterances to %s\n", tg_corpus_dialogue_count(c.get()),
                  tg_corpus_utterance_count(c.get()), out.c_str());
    } else if (*stats) {
      Corpus c;
      check(tg_corpus_load(in.c_str(), c.out()));
      char* json = nullptr;
      check(tg_corpus_stats_json(c.get(), &json));
      std::printf("%s\n", take(json).c_str());
    } else if (*split) {
      Corpus c, a, b;
      check(tg_corpus_load(in.c_str(), c.out()));
      check(tg_corpus_split(c.get(), ratio, a.out(), b.out()));
      check(tg_corpus_save(a.get(), train.c_str()));
      check(tg_corpus_save(b.get(), test.c_str()));
      std::printf("train %zu dialogues, test %zu dialogues\n", tg_corpus_dialogue_count(a.get()),
                  tg_corpus_dialogue_count(b.get()));
    } else if (*augment) {
      Corpus c, p, a;
      check(tg_corpus_load(in.c_str(), c.out()));
      if (!pool.empty()) check(tg_corpus_load(pool.c_str(), p.out()));
      check(tg_corpus_augment(c.get(), pool.empty() ? c.get() : p.get(), seed, a.out()));
      check(tg_corpus_save(a.get(), out.c_str()));
      std::printf("%zu utterances in %zu dialogues\n", tg_corpus_utterance_count(a.get()),
                  tg_corpus_dialogue_count(a.get()));
    } else if (*train_mle) {
      Corpus c;
      Mle m;
      check(tg_corpus_load(in.c_str(), c.out()));
      check(tg_mle_train(c.get(), window, m.out()));
      check(tg_mle_save(m.get(), out.c_str()));
      std::printf("wrote %s\n", out.c_str());
    } else if (*train_cnn) {
      Corpus tr, vo;
      Cnn m;
      check(tg_corpus_load(train.c_str(), tr.out()));
      if (!vocab.empty()) check(tg_corpus_load(vocab.c_str(), vo.out()));
      tg_cnn_options o;
      tg_cnn_options_default(&o);
      o.epochs = epochs;
      o.batch_size = batch;
      o.learning_rate = lr;
      o.dropout = dropout;
      o.max_len = max_len;
      o.seed = seed;
      struct Progress {
        double sum = 0;
        size_t n = 0;
      } progress;
      auto cb = [](size_t epoch, size_t b, double loss, void* user) {
        auto* p = static_cast<Progress*>(user);
        p->sum += loss;
        if (++p->n == 2000) {
          std::fprintf(stderr, "epoch %zu batch %zu loss %.4f\n", epoch + 1, b + 1, p->sum / p->n);
          p->sum = 0;
          p->n = 0;
        }
      };
      check(tg_cnn_train(tr.get(), vocab.empty() ? nullptr : vo.get(), &o, quiet ? nullptr : +cb,
                         &progress, m.out()));
      check(tg_cnn_save(m.get(), out.c_str()));
      std::printf("wrote %s\n", out.c_str());
    } else if (*eval_baseline || *eval_mle || *eval_cnn) {
      Corpus t;
      Report r;
      check(tg_corpus_load(test.c_str(), t.out()));
      if (*eval_baseline) {
        check(tg_eval_baseline(t.get(), r.out()));
      } else if (*eval_mle) {
        Mle m;
        check(tg_mle_load(model.c_str(), m.out()));
        check(tg_mle_set_smoothing(m.get(), smoothing == "literal" ? TG_SMOOTHING_LITERAL
                                                                   : TG_SMOOTHING_NORMALIZED));
        check(tg_eval_mle(m.get(), t.get(), r.out()));
      } else {
        Cnn m;
        check(tg_cnn_load(model.c_str(), m.out()));
        check(tg_eval_cnn(m.get(), t.get(), r.out()));
      }
      save_report(r.get(), report, seed);
      print_metrics(tg_report_name(r.get()), r.get(), false);
    } else if (*eval_scenario) {
      Rules rs;
      Corpus t;
      Cnn c;
      Mle m;
      Report r;
      check(tg_ruleset_load(rules_path.c_str(), rs.out()));
      check(tg_corpus_load(test.c_str(), t.out()));
      if (!cnn_path.empty()) check(tg_cnn_load(cnn_path.c_str(), c.out()));
      if (!mle_path.empty()) check(tg_mle_load(mle_path.c_str(), m.out()));
      tg_cascade_config cc;
      tg_cascade_config_default(&cc);
      cc.k1 = k1;
      cc.k2 = k2;
      cc.default_agent = default_agent.c_str();
      cc.literal_guard = literal_guard ? 1 : 0;
      tg_scenario_options so;
      tg_scenario_options_default(&so);
      so.seed = seed;
      so.protocol = protocol == "single-draw" ? TG_PROTOCOL_SINGLE_DRAW : TG_PROTOCOL_ALL_CANDIDATES;
      if (expect == "auto") {
        so.expect = c.get() && m.get() ? TG_EXPECT_CASCADE : TG_EXPECT_NONE;
      } else if (expect == "none") {
        so.expect = TG_EXPECT_NONE;
      } else if (expect == "cascade") {
        so.expect = TG_EXPECT_CASCADE;
      } else if (expect == "baseline") {
        so.expect = TG_EXPECT_BASELINE;
      } else if (expect == "mle") {
        so.expect = TG_EXPECT_MLE;
      } else {
        so.expect = TG_EXPECT_CNN;
      }
      if (name.empty()) {
        name = tg_ruleset_name(rs.get());
        if (so.expect == TG_EXPECT_CASCADE) name += "@" + std::to_string(static_cast<int>(k1 * 100 + 0.5));
      }
      so.name = name.c_str();
      check(tg_eval_scenario(rs.get(), t.get(), c.get(), m.get(), &cc, &so, r.out()));
      save_report(r.get(), report, seed);
      print_metrics(name, r.get(), true);
    } else if (*mcnemar || *errors) {
      Report a, b;
      check(tg_report_load(pair[0].c_str(), a.out()));
      check(tg_report_load(pair[1].c_str(), b.out()));
      if (*mcnemar) {
        size_t only_a = 0, only_b = 0;
        double p = 1;
        check(tg_mcnemar(a.get(), b.get(), &only_a, &only_b, &p));
        std::printf("%s vs %s: only-first %zu, only-second %zu, p = %.6g\n", tg_report_name(a.get()),
                    tg_report_name(b.get()), only_a, only_b, p);
      } else {
        double ratios[3];
        check(tg_error_analysis(a.get(), b.get(), ratios));
        std::printf("intersection/union %.2f%%  first-only %.2f%%  second-only %.2f%%\n",
                    100 * ratios[0], 100 * ratios[1], 100 * ratios[2]);
      }
    } else if (*serve) {
      Governor g;
      char* configured = nullptr;
      check(tg_governor_from_config(config.c_str(), g.out(), &configured));
      const std::string address = listen.empty() ? take(configured) : (take(configured), listen);
      auto ready = [](int port, void*) {
        std::fprintf(stderr, "listening on port %d\n", port);
        std::fflush(stderr);
      };
      check(tg_hub_serve(g.get(), address.c_str(), +ready, nullptr));
    } else if (*gate) {
      Governor g;
      check(tg_governor_from_config(config.c_str(), g.out(), nullptr));
      std::string transcript;
      if (in.empty()) {
        transcript = read_all(std::cin);
      } else {
        std::ifstream f(in);
        if (!f) throw Failure{TG_ERR_IO, "cannot open '" + in + "'"};
        transcript = read_all(f);
      }
      char* verdicts = nullptr;
      check(tg_gate_transcript(g.get(), transcript.c_str(), &verdicts));
      std::fputs(take(verdicts).c_str(), stdout);
    }
  } catch (const Failure& f) {
    std::fprintf(stderr, "error: %s: %s\n", tg_status_name(f.status), f.message.c_str());
    return 1;
  }
  return 0;
}
