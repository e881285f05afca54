#ifndef PERSONA_DIALOGUE_H
#define PERSONA_DIALOGUE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

enum PdStatus
#ifdef __cplusplus
  : int32_t
#endif // __cplusplus
 {
  PD_STATUS_OK = 0,
  PD_STATUS_NULL_ARGUMENT = 1,
  PD_STATUS_INVALID_UTF8 = 2,
  // A file could not be read or parsed.
  PD_STATUS_LOAD = 3,
  // An argument was well formed but not acceptable (unknown category,
  // wrong buffer length, bad persona JSON, unknown variant).
  PD_STATUS_INVALID_ARGUMENT = 4,
  // A metric is undefined for the inputs (zero reference, no samples).
  PD_STATUS_UNDEFINED = 5,
  PD_STATUS_PANIC = 6,
};
#ifndef __cplusplus
typedef int32_t PdStatus;
#endif // __cplusplus

// Category dictionary in LIWC `.dic` format.
typedef struct PdDictionary PdDictionary;

// Prompt axes and their variants.
typedef struct PdPromptRegistry PdPromptRegistry;

// Topic lexicon (term, topic, weight).
typedef struct PdTopicLexicon PdTopicLexicon;

// Weighted lexicon (term to weight plus intercept).
typedef struct PdWeightedLexicon PdWeightedLexicon;

// The three human-vs-generated gap metrics.
typedef struct PdErrors {
  double average_error;
  double error_of_average;
  double error_of_dispersion;
  // Pairs left out of `average_error` because the human value was zero.
  size_t excluded_zero_reference;
} PdErrors;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failed call on this thread, or NULL. The pointer is
// valid until the next failing call on the same thread.
const char *pd_last_error(void);

// Releases a string returned by this library. NULL is ignored.
//
// # Safety
// `s` must come from this library and not have been freed already.
void pd_string_free(char *s);

// Loads a weighted lexicon CSV.
//
// # Safety
// `path` must be a NUL-terminated string; `out` must be writable.
PdStatus pd_weighted_lexicon_load(const char *path, struct PdWeightedLexicon **out);

// # Safety
// `lex` must come from `pd_weighted_lexicon_load` or be NULL.
void pd_weighted_lexicon_free(struct PdWeightedLexicon *lex);

// Intercept plus the relative-frequency-weighted sum of term weights.
//
// # Safety
// `lex` must be a live handle, `text` NUL-terminated, `out` writable.
PdStatus pd_weighted_lexicon_score(const struct PdWeightedLexicon *lex,
                                   const char *text_in,
                                   double *out);

// Loads a `.dic` category dictionary.
//
// # Safety
// `path` must be NUL-terminated; `out` must be writable.
PdStatus pd_dictionary_load(const char *path, struct PdDictionary **out);

// # Safety
// `dict` must come from `pd_dictionary_load` or be NULL.
void pd_dictionary_free(struct PdDictionary *dict);

// Share of tokens in `category`; 0 for a text without tokens.
//
// # Safety
// `dict` must be a live handle, strings NUL-terminated, `out` writable.
PdStatus pd_dictionary_score(const struct PdDictionary *dict,
                             const char *text_in,
                             const char *category,
                             double *out);

// Loads a topic lexicon CSV. `topic_count` of 0 infers it from the file.
//
// # Safety
// `path` must be NUL-terminated; `out` must be writable.
PdStatus pd_topic_lexicon_load(const char *path, size_t topic_count, struct PdTopicLexicon **out);

// # Safety
// `lex` must come from `pd_topic_lexicon_load` or be NULL.
void pd_topic_lexicon_free(struct PdTopicLexicon *lex);

// Number of topics, or 0 for a NULL handle.
//
// # Safety
// `lex` must be a live handle or NULL.
size_t pd_topic_lexicon_topic_count(const struct PdTopicLexicon *lex);

// Writes the topic distribution of `text` into `out`, which must hold
// exactly `pd_topic_lexicon_topic_count` doubles.
//
// # Safety
// `lex` must be a live handle, `text` NUL-terminated, `out` writable for
// `len` doubles.
PdStatus pd_topic_distribution(const struct PdTopicLexicon *lex,
                               const char *text_in,
                               double *out,
                               size_t len);

// Token count of one turn.
//
// # Safety
// `text` must be NUL-terminated; `out` must be writable.
PdStatus pd_turn_length(const char *text_in, size_t *out);

// Gap metrics for `n` paired scalar values.
//
// # Safety
// `human` and `generated` must each hold `n` doubles; `out` must be
// writable.
PdStatus pd_scalar_errors(const double *human,
                          const double *generated,
                          size_t n,
                          struct PdErrors *out);

// Error of average and error of dispersion from summary statistics alone
// (population standard deviations).
//
// # Safety
// Both out-pointers must be writable.
PdStatus pd_errors_from_stats(double human_mean,
                              double generated_mean,
                              double human_std,
                              double generated_std,
                              double *error_of_average,
                              double *error_of_dispersion);

// Gap metrics for `n` paired vectors of dimension `dim`, stored row-major.
//
// # Safety
// `human` and `generated` must each hold `n * dim` doubles; `out` must be
// writable.
PdStatus pd_vector_errors(const double *human,
                          const double *generated,
                          size_t n,
                          size_t dim,
                          struct PdErrors *out);

// The shipped registry.
//
// # Safety
// `out` must be writable.
PdStatus pd_prompt_registry_default(struct PdPromptRegistry **out);

// Loads a prompt config (TOML or JSON).
//
// # Safety
// `path` must be NUL-terminated; `out` must be writable.
PdStatus pd_prompt_registry_load(const char *path, struct PdPromptRegistry **out);

// # Safety
// `reg` must come from a `pd_prompt_registry_*` constructor or be NULL.
void pd_prompt_registry_free(struct PdPromptRegistry *reg);

// Renders the system prompt and opening message for one persona.
// `persona_json` is an object with `speaker_id`, `age`, `gender`
// (`"male"`/`"female"`), `affect_phrase`, `topic_phrase` and
// `source_conversation_id`. `variants` is `best`, `baseline` or
// `axis=id;...` applied to the baseline.
//
// # Safety
// `reg` must be a live handle, strings NUL-terminated and both out-pointers
// writable. The returned strings must be released with `pd_string_free`.
PdStatus pd_prompt_render(const struct PdPromptRegistry *reg,
                          const char *persona_json,
                          const char *variants,
                          char **system_out,
                          char **opening_out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PERSONA_DIALOGUE_H */
