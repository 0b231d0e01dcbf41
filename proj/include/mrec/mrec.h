#ifndef MREC_MREC_H
#define MREC_MREC_H

#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(_WIN32)
#define MREC_API __declspec(dllexport)
#else
#define MREC_API __attribute__((visibility("default")))
#endif

/* Status codes; the CLI uses the same values as exit codes. */
typedef enum mrec_status {
  MREC_OK = 0,
  MREC_ERR_GENERIC = 1,
  MREC_ERR_CONFIG = 2,
  MREC_ERR_INTEGRITY = 3,
  MREC_ERR_GATEWAY = 4,
  MREC_ERR_EXTRACTION = 5,
  MREC_ERR_FINGERPRINT = 6,
  MREC_ERR_IO = 7,
  MREC_ERR_ARGUMENT = 8
} mrec_status;

typedef struct mrec_session mrec_session;

MREC_API const char* mrec_version(void);
MREC_API const char* mrec_status_name(mrec_status status);

/* Message of the last failure on this thread, or "" when none. */
MREC_API const char* mrec_last_error(void);

/* overrides_json: optional JSON object merged over the config file
   (RFC 7396 merge patch); NULL for none. */
MREC_API mrec_status mrec_session_open(const char* config_path, const char* overrides_json, mrec_session** out);
MREC_API void mrec_session_close(mrec_session* session);

/* Writes corpus_stats.json; *stats_json (optional) receives the stats. */
MREC_API mrec_status mrec_session_ingest(mrec_session* session, char** stats_json);

/* until, force: stage names or NULL. *summary_json (optional) receives
   per-stage outcomes and gateway call counts. */
MREC_API mrec_status mrec_session_run(mrec_session* session, const char* until, const char* force,
                                      char** summary_json);

MREC_API const char* mrec_session_fingerprint(const mrec_session* session);

/* {"fingerprint", "seed", "dataset", "output_dir", "provider"} */
MREC_API mrec_status mrec_session_info(const mrec_session* session, char** info_json);

/* Mean-of-runs tables over finished run directories. out_dir may be NULL. */
MREC_API mrec_status mrec_report(const char* const* run_dirs, size_t n_dirs, const char* out_dir, char** out_text);

/* ranking: n ids; positive must be one of them. */
MREC_API mrec_status mrec_hit_rate_at_k(const char* const* ranking, size_t n, const char* positive, size_t k,
                                        int* out);
MREC_API mrec_status mrec_ndcg_at_k(const char* const* ranking, size_t n, const char* positive, size_t k,
                                    double* out);

/* profiles_json: array of {dimension: descriptor} objects. */
MREC_API mrec_status mrec_consistency_score(const char* profiles_json, double* out);

/* Frees strings returned through char** out-parameters. */
MREC_API void mrec_string_free(char* s);

#ifdef __cplusplus
}
#endif

#endif
