/* turngov: multi-party turn-taking governance.
 *
 * Every function returns a tg_status. On failure the message of the last
 * error raised on the calling thread is available from tg_last_error().
 * Objects are opaque and owned by the caller; release them with the matching
 * *_free function (NULL is accepted). Strings returned through char** out
 * parameters are heap-allocated and released with tg_string_free.
 */
#ifndef TURNGOV_TURNGOV_H
#define TURNGOV_TURNGOV_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(__GNUC__)
#define TG_API __attribute__((visibility("default")))
#else
#define TG_API
#endif

typedef enum tg_status {
  TG_OK = 0,
  TG_ERR_INVALID_ARGUMENT = 1,
  TG_ERR_PARSE = 2,
  TG_ERR_VALIDATION = 3,
  TG_ERR_IO = 4,
  TG_ERR_VERSION = 5,
  TG_ERR_CORRUPT = 6,
  TG_ERR_STATE = 7,
  TG_ERR_RUNTIME = 8
} tg_status;

typedef struct tg_corpus tg_corpus;
typedef struct tg_mle tg_mle;
typedef struct tg_cnn tg_cnn;
typedef struct tg_ruleset tg_ruleset;
typedef struct tg_governor tg_governor;
typedef struct tg_session tg_session;
typedef struct tg_report tg_report;

TG_API const char* tg_version(void);
TG_API const char* tg_last_error(void);
TG_API const char* tg_status_name(tg_status status);
TG_API void tg_string_free(char* s);

/* ---- corpus ---------------------------------------------------------- */

TG_API tg_status tg_corpus_load(const char* path, tg_corpus** out);
TG_API tg_status tg_corpus_save(const tg_corpus* corpus, const char* path);
/* Seeded synthetic corpus; dialogues = 0 selects the default size. */
TG_API tg_status tg_corpus_synthesize(uint64_t seed, size_t dialogues, tg_corpus** out);
/* Positional split: the first floor(ratio * D) dialogues train. */
TG_API tg_status tg_corpus_split(const tg_corpus* corpus, double ratio, tg_corpus** train,
                                 tg_corpus** test);
/* Distractor augmentation; reply texts are drawn from pool_source. */
TG_API tg_status tg_corpus_augment(const tg_corpus* corpus, const tg_corpus* pool_source,
                                   uint64_t seed, tg_corpus** out);
TG_API tg_status tg_corpus_stats_json(const tg_corpus* corpus, char** json);
TG_API size_t tg_corpus_dialogue_count(const tg_corpus* corpus);
TG_API size_t tg_corpus_utterance_count(const tg_corpus* corpus);
TG_API void tg_corpus_free(tg_corpus* corpus);

/* ---- A-MLE ----------------------------------------------------------- */

typedef enum tg_smoothing { TG_SMOOTHING_NORMALIZED = 0, TG_SMOOTHING_LITERAL = 1 } tg_smoothing;

TG_API tg_status tg_mle_train(const tg_corpus* corpus, size_t window, tg_mle** out);
TG_API tg_status tg_mle_save(const tg_mle* model, const char* path);
TG_API tg_status tg_mle_load(const char* path, tg_mle** out);
TG_API tg_status tg_mle_set_smoothing(tg_mle* model, tg_smoothing smoothing);
TG_API void tg_mle_free(tg_mle* model);

/* ---- AC-CNN ---------------------------------------------------------- */

typedef struct tg_cnn_options {
  size_t epochs;
  size_t batch_size;
  double learning_rate;
  uint64_t seed;
  size_t embed;
  size_t filters;
  size_t kernel;
  size_t hidden;
  double dropout;
  size_t max_len;
} tg_cnn_options;

/* Called after every minibatch with (epoch, batch, loss, user). */
typedef void (*tg_progress_fn)(size_t epoch, size_t batch, double loss, void* user);

TG_API void tg_cnn_options_default(tg_cnn_options* options);
/* vocab_source contributes tokens only (typically the test split). */
TG_API tg_status tg_cnn_train(const tg_corpus* train, const tg_corpus* vocab_source,
                              const tg_cnn_options* options, tg_progress_fn progress,
                              void* user, tg_cnn** out);
TG_API tg_status tg_cnn_save(const tg_cnn* model, const char* path);
TG_API tg_status tg_cnn_load(const char* path, tg_cnn** out);
TG_API void tg_cnn_free(tg_cnn* model);

/* ---- rules ----------------------------------------------------------- */

TG_API tg_status tg_ruleset_load(const char* path, tg_ruleset** out);
TG_API tg_status tg_ruleset_parse(const char* source, tg_ruleset** out);
TG_API tg_status tg_ruleset_counts(const tg_ruleset* rules, size_t* norms, size_t* transitions);
TG_API const char* tg_ruleset_name(const tg_ruleset* rules);
TG_API void tg_ruleset_free(tg_ruleset* rules);

/* ---- evaluation ------------------------------------------------------ */

typedef struct tg_cascade_config {
  double k1;
  double k2;
  const char* default_agent; /* NULL selects travel_bot */
  int literal_guard;         /* non-zero: second case tests C2 < k1 */
} tg_cascade_config;

TG_API void tg_cascade_config_default(tg_cascade_config* config);

typedef enum tg_expect {
  TG_EXPECT_NONE = 0,     /* no expected replier */
  TG_EXPECT_CASCADE = 1,  /* CNN / MLE / default cascade */
  TG_EXPECT_BASELINE = 2, /* repeat-last */
  TG_EXPECT_MLE = 3,
  TG_EXPECT_CNN = 4
} tg_expect;

typedef enum tg_protocol { TG_PROTOCOL_ALL_CANDIDATES = 0, TG_PROTOCOL_SINGLE_DRAW = 1 } tg_protocol;

typedef struct tg_scenario_options {
  uint64_t seed;
  tg_protocol protocol;
  tg_expect expect;
  const char* name; /* report name; NULL selects "scenario" */
} tg_scenario_options;

TG_API void tg_scenario_options_default(tg_scenario_options* options);

TG_API tg_status tg_eval_baseline(const tg_corpus* test, tg_report** out);
TG_API tg_status tg_eval_mle(const tg_mle* model, const tg_corpus* test, tg_report** out);
TG_API tg_status tg_eval_cnn(const tg_cnn* model, const tg_corpus* test, tg_report** out);
/* cnn, mle and cascade may be NULL when options->expect does not need them. */
TG_API tg_status tg_eval_scenario(const tg_ruleset* rules, const tg_corpus* augmented_test,
                                  const tg_cnn* cnn, const tg_mle* mle,
                                  const tg_cascade_config* cascade,
                                  const tg_scenario_options* options, tg_report** out);

TG_API tg_status tg_report_set_seed(tg_report* report, const char* key, uint64_t seed);
TG_API tg_status tg_report_json(const tg_report* report, char** json);
TG_API tg_status tg_report_save(const tg_report* report, const char* path);
TG_API tg_status tg_report_load(const char* path, tg_report** out);
TG_API tg_status tg_report_metrics(const tg_report* report, double* accuracy, size_t* total,
                                   double* f1_binary_allow, double* f1_macro);
TG_API const char* tg_report_name(const tg_report* report);
TG_API void tg_report_free(tg_report* report);

/* ratios[0] = |E1 & E2| / |E1 | E2|, ratios[1] = |E1 \ E2| / |E1|,
 * ratios[2] = |E2 \ E1| / |E2|. */
TG_API tg_status tg_error_analysis(const tg_report* first, const tg_report* second,
                                   double ratios[3]);
TG_API tg_status tg_mcnemar(const tg_report* first, const tg_report* second,
                            size_t* only_first, size_t* only_second, double* p_value);

/* ---- governance ------------------------------------------------------ */

/* Reads a service config (rules, models, thresholds, listen address).
 * listen may be NULL; otherwise receives the effective address after the
 * TURNGOV_LISTEN override. */
TG_API tg_status tg_governor_from_config(const char* config_path, tg_governor** out,
                                         char** listen);
/* cnn and mle may both be NULL (no expected replier) or both set (cascade).
 * agents_json lists participants (["user", "hotel_bot", ...] or objects with
 * name/role); NULL takes them from the models. */
TG_API tg_status tg_governor_create(const tg_ruleset* rules, const char* agents_json,
                                    const tg_cnn* cnn, const tg_mle* mle,
                                    const tg_cascade_config* cascade, tg_governor** out);
TG_API void tg_governor_free(tg_governor* governor);

TG_API tg_status tg_session_create(const tg_governor* governor, tg_session** out);
/* Gates one attempt and applies it when allowed; *verdict_json receives the
 * verdict frame. */
TG_API tg_status tg_session_submit(tg_session* session, const char* sender, const char* text,
                                   char** verdict_json);
TG_API void tg_session_free(tg_session* session);

/* Verdict frames (one JSON object per line) for a transcript of
 * {"sender", "text"[, "conv"]} lines. */
TG_API tg_status tg_gate_transcript(const tg_governor* governor, const char* transcript,
                                    char** verdicts);

/* Runs the NDJSON service until the process is stopped. ready (may be NULL)
 * is called once with the bound port. */
typedef void (*tg_ready_fn)(int port, void* user);
TG_API tg_status tg_hub_serve(const tg_governor* governor, const char* listen,
                              tg_ready_fn ready, void* user);

#ifdef __cplusplus
}
#endif

#endif
