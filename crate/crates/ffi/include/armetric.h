#ifndef ARMETRIC_H
#define ARMETRIC_H

/* Generated by cbindgen from the armetric-ffi crate; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Explanation quality metric selector for `armetric_explanation_metric`.
typedef enum ArmetricExplanationMetric {
  ArmetricPctImportant = 0,
  ArmetricPctNoneImportant = 1,
  ArmetricPctWrong = 2,
  ArmetricPctNoneWrong = 3,
} ArmetricExplanationMetric;

// Result of every call in this interface.
typedef enum ArmetricStatus {
  ArmetricOk = 0,
  ArmetricNullArgument = 1,
  ArmetricInvalidUtf8 = 2,
  ArmetricIoError = 3,
  ArmetricParseError = 4,
  ArmetricValidationError = 5,
  ArmetricComputeError = 6,
} ArmetricStatus;

// Opaque corpus handle.
typedef struct ArmetricCorpus ArmetricCorpus;

// Opaque list of sentences from `armetric_segment`.
typedef struct ArmetricSegments ArmetricSegments;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the most recent failure on this thread. The pointer
// stays valid until the next failing call on the same thread.
const char *armetric_last_error(void);

// Library version as a static string; do not free.
const char *armetric_version(void);

// Releases a string returned through an out-parameter.
void armetric_string_free(char *s);

// Writes the normalized token form of `text` (tokens joined by single
// spaces) to `out`.
enum ArmetricStatus armetric_normalize(const char *text, char **out);

// Word-level edit distance between the normalized forms of two texts.
enum ArmetricStatus armetric_word_edit_distance(const char *a, const char *b, size_t *out);

// Edit distance normalized by the longer token sequence, in [0, 1].
enum ArmetricStatus armetric_normalized_edit_distance(const char *a, const char *b, double *out);

// Whether a rewrite differs from the original claim. `raw_compare`
// nonzero compares trimmed raw text instead of normalized tokens.
// `out` is 1 when the claim was rewritten, 0 when it was kept.
enum ArmetricStatus armetric_is_rewritten(const char *original,
                                          const char *rewrite,
                                          int raw_compare,
                                          int *out);

// Loads a corpus file. `schema` 0 is the native layout, 1 is the
// storysumm layout. The handle must be released with
// `armetric_corpus_free`. Validation problems fail the load.
enum ArmetricStatus armetric_corpus_load(const char *path, int schema, struct ArmetricCorpus **out);

void armetric_corpus_free(struct ArmetricCorpus *corpus);

enum ArmetricStatus armetric_corpus_story_count(const struct ArmetricCorpus *corpus, size_t *out);

enum ArmetricStatus armetric_corpus_summary_count(const struct ArmetricCorpus *corpus, size_t *out);

enum ArmetricStatus armetric_corpus_claim_count(const struct ArmetricCorpus *corpus, size_t *out);

// Balanced accuracy in percent from confusion counts. Fails when a
// gold class is empty.
enum ArmetricStatus armetric_balanced_accuracy(uint64_t true_positive,
                                               uint64_t false_positive,
                                               uint64_t false_negative,
                                               uint64_t true_negative,
                                               double *out);

// Macro-averaged F1 in [0, 1] from confusion counts.
enum ArmetricStatus armetric_f1_macro(uint64_t true_positive,
                                      uint64_t false_positive,
                                      uint64_t false_negative,
                                      uint64_t true_negative,
                                      double *out);

// Computes one explanation quality metric. `labels` holds the point
// labels of every explanation back to back (0 important, 1 neutral,
// 2 wrong) and `lengths[i]` is the number of points in explanation
// `i`.
enum ArmetricStatus armetric_explanation_metric(enum ArmetricExplanationMetric metric,
                                                const uint8_t *labels,
                                                const size_t *lengths,
                                                size_t explanation_count,
                                                double *out);

// Two-sided bootstrap p-value for the difference in positive rate
// between two binary outcome groups. Elements are 0 or 1.
enum ArmetricStatus armetric_bootstrap_pvalue(const uint8_t *group_a,
                                              size_t group_a_len,
                                              const uint8_t *group_b,
                                              size_t group_b_len,
                                              uint32_t trials,
                                              uint64_t seed,
                                              double *out);

// Splits text into sentences. The handle must be released with
// `armetric_segments_free`.
enum ArmetricStatus armetric_segment(const char *text, struct ArmetricSegments **out);

enum ArmetricStatus armetric_segments_len(const struct ArmetricSegments *segments, size_t *out);

// Borrowed pointer to sentence `index`; valid while the handle lives.
// Returns null when the index is out of range.
const char *armetric_segments_get(const struct ArmetricSegments *segments, size_t index);

void armetric_segments_free(struct ArmetricSegments *segments);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* ARMETRIC_H */
