/* Exercises the public C interface from a C translation unit. */

#include <math.h>
#include <stdio.h>
#include <stdlib.h>
#include <string.h>

#include "turngov/turngov.h"

static int failures = 0;

#define CHECK(cond)                                                 \
  do {                                                              \
    if (!(cond)) {                                                  \
      fprintf(stderr, "%s:%d: check failed: %s\n", __FILE__, __LINE__, #cond); \
      ++failures;                                                   \
    }                                                               \
  } while (0)

#define CHECK_OK(call)                                                    \
  do {                                                                    \
    tg_status s_ = (call);                                                \
    if (s_ != TG_OK) {                                                    \
      fprintf(stderr, "%s:%d: %s -> %s: %s\n", __FILE__, __LINE__, #call, \
              tg_status_name(s_), tg_last_error());                       \
      ++failures;                                                         \
    }                                                                     \
  } while (0)

static const char* rules_path(const char* file) {
  static char buf[1024];
  snprintf(buf, sizeof buf, "%s/%s", TURNGOV_RULES_DIR, file);
  return buf;
}

int main(void) {
  tg_corpus *all = NULL, *train = NULL, *test = NULL, *aug = NULL, *missing = NULL;
  tg_mle* mle = NULL;
  tg_ruleset* rules = NULL;
  tg_report *base = NULL, *mle_report = NULL, *scenario = NULL, *again = NULL;
  tg_governor* gov = NULL;
  tg_session* session = NULL;
  char* text = NULL;
  const char* tmp = "capi_test_corpus.jsonl";
  size_t norms = 0, transitions = 0, total = 0, b = 0, c = 0;
  double acc = 0, f1 = 0, macro = 0, p = 0, ratios[3];

  CHECK(strlen(tg_version()) > 0);
  CHECK(strcmp(tg_status_name(TG_ERR_IO), "i/o error") == 0);

  CHECK(tg_corpus_load("/nonexistent/corpus.jsonl", &missing) == TG_ERR_IO);
  CHECK(missing == NULL);
  CHECK(strstr(tg_last_error(), "nonexistent") != NULL);
  CHECK(tg_corpus_load(NULL, &missing) == TG_ERR_INVALID_ARGUMENT);

  CHECK_OK(tg_corpus_synthesize(4, 50, &all));
  CHECK(tg_corpus_dialogue_count(all) == 50);
  CHECK_OK(tg_corpus_save(all, tmp));
  tg_corpus_free(all);
  all = NULL;
  CHECK_OK(tg_corpus_load(tmp, &all));
  remove(tmp);
  CHECK(tg_corpus_split(all, 1.0, &train, &test) == TG_ERR_INVALID_ARGUMENT);
  CHECK_OK(tg_corpus_split(all, 0.7, &train, &test));
  CHECK(tg_corpus_dialogue_count(train) == 35);
  CHECK(tg_corpus_dialogue_count(test) == 15);
  CHECK_OK(tg_corpus_augment(test, train, 1, &aug));
  CHECK(tg_corpus_utterance_count(aug) > tg_corpus_utterance_count(test));
  CHECK_OK(tg_corpus_stats_json(aug, &text));
  CHECK(text && strstr(text, "\"utterances\"") != NULL);
  tg_string_free(text);

  CHECK_OK(tg_mle_train(train, 2, &mle));
  CHECK_OK(tg_eval_baseline(test, &base));
  CHECK_OK(tg_eval_mle(mle, test, &mle_report));
  CHECK(strcmp(tg_report_name(base), "Baseline") == 0);
  CHECK(strcmp(tg_report_name(mle_report), "A-MLE") == 0);
  CHECK_OK(tg_report_metrics(base, &acc, &total, &f1, &macro));
  CHECK(acc > 0.5 && acc <= 1.0);
  CHECK(total > 0);
  CHECK(tg_eval_baseline(aug, &again) == TG_ERR_INVALID_ARGUMENT);

  CHECK_OK(tg_mcnemar(base, mle_report, &b, &c, &p));
  CHECK(p >= 0.0 && p <= 1.0);
  CHECK_OK(tg_error_analysis(base, mle_report, ratios));
  CHECK(ratios[0] >= 0.0 && ratios[0] <= 1.0);

  CHECK_OK(tg_report_set_seed(base, "split", 7));
  CHECK_OK(tg_report_save(base, "capi_test_report.json"));
  CHECK_OK(tg_report_load("capi_test_report.json", &again));
  remove("capi_test_report.json");
  CHECK_OK(tg_mcnemar(base, again, &b, &c, &p));
  CHECK(b == 0 && c == 0 && p == 1.0);
  tg_report_free(again);

  CHECK(tg_ruleset_parse("ruleset broken {", &rules) == TG_ERR_PARSE);
  CHECK_OK(tg_ruleset_load(rules_path("scenario_a.cr"), &rules));
  CHECK_OK(tg_ruleset_counts(rules, &norms, &transitions));
  CHECK(norms == 6 && transitions == 3);
  CHECK(strcmp(tg_ruleset_name(rules), "scenario_a") == 0);

  {
    tg_scenario_options so;
    tg_scenario_options_default(&so);
    so.name = "Scenario A";
    CHECK_OK(tg_eval_scenario(rules, aug, NULL, NULL, NULL, &so, &scenario));
    CHECK_OK(tg_report_metrics(scenario, &acc, &total, &f1, &macro));
    CHECK(total == tg_corpus_utterance_count(aug));
    CHECK(f1 >= 0.0 && f1 <= 1.0);
    so.expect = TG_EXPECT_CASCADE;
    CHECK(tg_eval_scenario(rules, aug, NULL, mle, NULL, &so, &again) == TG_ERR_INVALID_ARGUMENT);
  }

  CHECK(tg_governor_create(rules, "[\"user\", \"hotel_bot\"", NULL, NULL, NULL, &gov) != TG_OK);
  CHECK_OK(tg_governor_create(rules, "[\"user\", \"hotel_bot\", \"taxi_bot\"]", NULL, NULL, NULL,
                              &gov));
  CHECK_OK(tg_session_create(gov, &session));
  CHECK_OK(tg_session_submit(session, "user", "a room please", &text));
  CHECK(text && strstr(text, "\"allow\"") != NULL);
  tg_string_free(text);
  CHECK_OK(tg_session_submit(session, "hotel_bot", "which area ?", &text));
  tg_string_free(text);
  CHECK_OK(tg_session_submit(session, "taxi_bot", "taxi ?", &text));
  CHECK(text && strstr(text, "\"deny\"") != NULL);
  tg_string_free(text);
  CHECK(tg_session_submit(session, "ghost_bot", "boo", &text) == TG_ERR_INVALID_ARGUMENT);

  CHECK_OK(tg_gate_transcript(gov,
                              "{\"sender\":\"user\",\"text\":\"hi\"}\n"
                              "\n"
                              "{\"sender\":\"hotel_bot\",\"text\":\"hello\"}\n",
                              &text));
  CHECK(text && strstr(text, "\"seq\":2") != NULL);
  tg_string_free(text);
  CHECK(tg_gate_transcript(gov, "{not json}\n", &text) == TG_ERR_PARSE);

  tg_session_free(session);
  tg_governor_free(gov);
  tg_report_free(scenario);
  tg_report_free(mle_report);
  tg_report_free(base);
  tg_ruleset_free(rules);
  tg_mle_free(mle);
  tg_corpus_free(aug);
  tg_corpus_free(test);
  tg_corpus_free(train);
  tg_corpus_free(all);
  tg_corpus_free(NULL);

  if (failures) fprintf(stderr, "%d check(s) failed\n", failures);
  return failures ? 1 : 0;
}
