#ifndef CONSERV_STAT_H
#define CONSERV_STAT_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes mirroring the CLI exit codes.
 */
#define CS_STATUS_OK 0

#define CS_STATUS_NO_CONVERGENCE 2

#define CS_STATUS_OBSTRUCTION 3

#define CS_STATUS_CONFIG 4

#define CS_STATUS_IO 5

#define CS_STATUS_INTERNAL 6

/**
 * Job kinds accepted by [`cs_job_run`].
 */
#define CS_JOB_SOLVE 0

#define CS_JOB_VERIFY 1

#define CS_JOB_ROUNDTRIP 2

/**
 * Opaque job handle: owns the parsed configuration and, after a run, the
 * diagnostics report.
 */
typedef struct CsJob CsJob;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Parse a JSON job configuration into a fresh handle.
 *
 * Returns null if `config_json` is null, not UTF-8, or not a valid
 * configuration. A non-null handle must be released with [`cs_job_free`].
 * # Safety
 * `config_json` must be null or a valid NUL-terminated string.
 */
struct CsJob *cs_job_new(const char *config_json);

/**
 * Run a job on the handle. `kind` is one of the `CS_JOB_*` constants.
 *
 * Returns a `CS_STATUS_*` code. On any return value except
 * `CS_STATUS_INTERNAL` with a poisoned handle, the handle stays valid; a
 * report is available via [`cs_job_report_json`] whenever the run reached a
 * terminal state (including non-convergence and obstruction).
 * # Safety
 * `job` must be null or a live handle from [`cs_job_new`], not used
 * concurrently from another thread.
 */
int32_t cs_job_run(struct CsJob *job, int32_t kind);

/**
 * Diagnostics report of the last run as a JSON string, or null if no report
 * is available. The caller owns the returned string and must release it with
 * [`cs_string_free`].
 * # Safety
 * `job` must be null or a live handle from [`cs_job_new`].
 */
char *cs_job_report_json(const struct CsJob *job);

/**
 * Human-readable message for the last error on the handle, or null. Same
 * ownership rules as [`cs_job_report_json`].
 * # Safety
 * `job` must be null or a live handle from [`cs_job_new`].
 */
char *cs_job_error_message(const struct CsJob *job);

/**
 * Release a handle created by [`cs_job_new`]. Null is a no-op.
 * # Safety
 * `job` must be null or a handle from [`cs_job_new`] not yet freed;
 * the handle is invalid afterwards.
 */
void cs_job_free(struct CsJob *job);

/**
 * Release a string returned by this library. Null is a no-op.
 * # Safety
 * `text` must be null or a string returned by this library not yet
 * freed.
 */
void cs_string_free(char *text);

/**
 * Library version as a static string; do not free.
 */
const char *cs_version(void);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* CONSERV_STAT_H */
