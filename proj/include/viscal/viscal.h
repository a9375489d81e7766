#ifndef VISCAL_VISCAL_H
#define VISCAL_VISCAL_H

#include <stddef.h>

#if defined(_WIN32)
#if defined(VISCAL_BUILD)
#define VISCAL_API __declspec(dllexport)
#else
#define VISCAL_API __declspec(dllimport)
#endif
#else
#define VISCAL_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Status codes shared by every entry point and by the CLI exit codes. */
#define VISCAL_OK 0
#define VISCAL_E_VALIDATION 1
#define VISCAL_E_PARTIAL 2
#define VISCAL_E_IO 3

#define VISCAL_NUM_CLASSES 84

typedef struct viscal_session viscal_session;
typedef struct viscal_model viscal_model;

/* Library version as a static string, e.g. "1.0.0". */
VISCAL_API const char* viscal_version(void);

/* Sessions own the last-error message of every call made through them.
 * They are not thread safe; use one session per thread. */
VISCAL_API viscal_session* viscal_session_create(void);
VISCAL_API void viscal_session_destroy(viscal_session* s);

/* Message describing the most recent failure on this session, or ""
 * if the last call succeeded.  The pointer stays valid until the next
 * call on the same session. */
VISCAL_API const char* viscal_last_error(const viscal_session* s);

/* Pipeline stages.  config_path names a JSON run configuration.
 * overrides_json may be NULL or a JSON object with any of the keys
 * "out" (string), "seed" (integer), "jobs" (integer), "model" (string),
 * "scheme" (string); unknown keys are rejected.  Returns a status code. */
VISCAL_API int viscal_simulate(viscal_session* s, const char* config_path,
                               const char* overrides_json);
VISCAL_API int viscal_train(viscal_session* s, const char* config_path,
                            const char* overrides_json);
VISCAL_API int viscal_predict(viscal_session* s, const char* config_path,
                              const char* overrides_json);
VISCAL_API int viscal_verify(viscal_session* s, const char* config_path,
                             const char* overrides_json);
VISCAL_API int viscal_report(viscal_session* s, const char* config_path,
                             const char* overrides_json);

/* Loads a fitted model from a parameter file written by viscal_train.
 * Returns NULL on failure with the reason on the session. */
VISCAL_API viscal_model* viscal_model_load(viscal_session* s,
                                           const char* path);
VISCAL_API void viscal_model_destroy(viscal_model* m);

/* Number of predictor values the model expects, or -1 if m is NULL. */
VISCAL_API int viscal_model_input_dim(const viscal_model* m);

/* Evaluates the model on one feature vector of length n and writes the
 * probabilities of the 84 reportable visibility values to out84.
 * Returns a status code; on failure the reason is on the session. */
VISCAL_API int viscal_model_pmf(viscal_session* s, const viscal_model* m,
                                const double* features, size_t n,
                                double* out84);

#ifdef __cplusplus
}
#endif

#endif /* VISCAL_VISCAL_H */
