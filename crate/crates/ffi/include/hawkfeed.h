#ifndef HAWKFEED_H
#define HAWKFEED_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum {
  HF_STATUS_OK = 0,
  HF_STATUS_NULL_POINTER = 1,
  HF_STATUS_INVALID_STRING = 2,
  HF_STATUS_IO = 3,
  HF_STATUS_PARSE = 4,
  HF_STATUS_CONFIG = 5,
  HF_STATUS_PRECONDITION = 6,
  HF_STATUS_ESTIMATION = 7,
  HF_STATUS_USAGE = 8,
  HF_STATUS_BUFFER_TOO_SMALL = 9,
  HF_STATUS_PANIC = 10,
} HfStatus;

/**
 * A loaded or simulated set of cascades.
 */
typedef struct HfCorpus HfCorpus;

typedef struct HfFeatures HfFeatures;

typedef struct HfModel HfModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or null. The pointer
 * stays valid until the next hawkfeed call on the same thread.
 */
const char *hf_last_error(void);

/**
 * # Safety
 * `path` must be a NUL-terminated string and `out` a writable pointer.
 */
HfStatus hf_corpus_load(const char *path, HfCorpus **out);

/**
 * # Safety
 * `corpus` must come from this library; `path` must be NUL-terminated.
 */
HfStatus hf_corpus_save(const HfCorpus *corpus, const char *path);

/**
 * Number of cascades, or 0 for a null handle.
 *
 * # Safety
 * `corpus` must be null or come from this library.
 */
uintptr_t hf_corpus_len(const HfCorpus *corpus);

/**
 * # Safety
 * `corpus` must be null or come from this library and not be used afterwards.
 */
void hf_corpus_free(HfCorpus *corpus);

/**
 * # Safety
 * `path` must be NUL-terminated and `out` writable.
 */
HfStatus hf_features_load(const char *path, HfFeatures **out);

/**
 * Fills empty content vectors from event text using the store's lexicon.
 *
 * # Safety
 * Both handles must come from this library.
 */
HfStatus hf_features_annotate(const HfFeatures *features, HfCorpus *corpus);

/**
 * # Safety
 * `features` must be null or come from this library and not be used afterwards.
 */
void hf_features_free(HfFeatures *features);

/**
 * # Safety
 * `path` must be NUL-terminated and `out` writable.
 */
HfStatus hf_model_load(const char *path, HfModel **out);

/**
 * # Safety
 * `model` must come from this library; `path` must be NUL-terminated.
 */
HfStatus hf_model_save(const HfModel *model, const char *path);

/**
 * # Safety
 * `model` must be null or come from this library and not be used afterwards.
 */
void hf_model_free(HfModel *model);

/**
 * Fits a model with default settings and a uniform L1 penalty `zeta`.
 *
 * # Safety
 * Handles must come from this library; `out` must be writable.
 */
HfStatus hf_fit(const HfCorpus *corpus, const HfFeatures *features, double zeta, HfModel **out);

/**
 * Intensity of `user` on cascade `index` at global time `t`.
 *
 * # Safety
 * Handles must come from this library; `user` must be NUL-terminated and `out` writable.
 */
HfStatus hf_intensity(const HfModel *model,
                      const HfFeatures *features,
                      const HfCorpus *corpus,
                      uintptr_t index,
                      const char *user,
                      double t,
                      double *out);

/**
 * Orders the cascades open at global time `t` for `user`, most intense first.
 *
 * Writes up to `capacity` cascade indices to `order` and the full count to
 * `len`. When `capacity` is too small nothing is written except `len` and
 * the call returns `BufferTooSmall`.
 *
 * # Safety
 * Handles must come from this library; `order` must hold `capacity` entries.
 */
HfStatus hf_prioritize(const HfModel *model,
                       const HfFeatures *features,
                       const HfCorpus *corpus,
                       const char *user,
                       double t,
                       uintptr_t *order,
                       uintptr_t capacity,
                       uintptr_t *len);

/**
 * Simulates `n` cascades over the store's population, one every `horizon`
 * minutes, each observed for `horizon` minutes.
 *
 * # Safety
 * Handles must come from this library; `out` must be writable.
 */
HfStatus hf_simulate(const HfModel *model,
                     const HfFeatures *features,
                     uintptr_t n,
                     double horizon,
                     uint64_t seed,
                     HfCorpus **out);

/**
 * Library version as a static NUL-terminated string.
 */
const char *hf_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* HAWKFEED_H */
