#ifndef DQTRACK_H
#define DQTRACK_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Which feedback law a controller evaluates.
 */
typedef enum DqLaw {
  DQ_LAW_PROPOSED = 0,
  DQ_LAW_BASELINE = 1,
} DqLaw;

typedef enum DqStatus {
  DQ_STATUS_OK = 0,
  DQ_STATUS_NULL_POINTER = 1,
  DQ_STATUS_NOT_UNIT = 2,
  DQ_STATUS_DEGENERATE_POSE = 3,
  DQ_STATUS_CONTRACT_VIOLATION = 4,
  DQ_STATUS_PRECONDITION = 5,
  DQ_STATUS_DOMAIN = 6,
  DQ_STATUS_INFEASIBLE = 7,
  DQ_STATUS_DIVERGED = 8,
  DQ_STATUS_CONFIG = 9,
  DQ_STATUS_PARSE = 10,
  DQ_STATUS_IO = 11,
  DQ_STATUS_INVALID_UTF8 = 12,
  DQ_STATUS_PANIC = 13,
} DqStatus;

/**
 * Opaque controller: dual inertia, gains and law.
 */
typedef struct DqController DqController;

/**
 * Opaque stability envelope for one ball radius.
 */
typedef struct DqEnvelope DqEnvelope;

typedef struct DqEnvelopeConstants {
  double r;
  double c;
  double k0;
  double beta;
  double alpha;
  double k1;
  double ln_m_env;
  double j_max;
  double j_min;
} DqEnvelopeConstants;

typedef struct DqVerdict {
  bool pass;
  double margin;
  /**
   * Index of the first failing sample, or -1.
   */
  int64_t first_violation;
} DqVerdict;

/**
 * One half-space `g·u ≥ rhs` for [`dq_filter_qp`].
 */
typedef struct DqCbfRow {
  double g[3];
  double rhs;
} DqCbfRow;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *dq_version(void);

/**
 * Copies the calling thread's last error message into `buf` (NUL-terminated,
 * truncated to `len`). Returns the full message length without the NUL, or 0
 * if the last call succeeded.
 *
 * # Safety
 * `buf` must be null or point to `len` writable bytes.
 */
size_t dq_last_error_message(char *buf, size_t len);

/**
 * Creates a controller. `inertia` is 9 doubles, row-major, kg m².
 *
 * # Safety
 * `inertia` must point to 9 doubles; `out` must be writable.
 */
enum DqStatus dq_controller_new(double mass,
                                const double *inertia,
                                double kp,
                                double kd,
                                enum DqLaw law,
                                struct DqController **out_handle);

/**
 * # Safety
 * `handle` must come from [`dq_controller_new`] and not be used afterwards.
 */
void dq_controller_free(struct DqController *handle);

/**
 * Control wrench `(force, torque)` for error pose `q` (8) and error twist
 * `w` (6). `ref_twist_body` and `ref_accel` (6 each) may be null for a
 * fixed reference.
 *
 * # Safety
 * Pointers must reference arrays of the stated lengths.
 */
enum DqStatus dq_controller_wrench(const struct DqController *handle,
                                   const double *q,
                                   const double *w,
                                   const double *ref_twist_body,
                                   const double *ref_accel,
                                   double *wrench_out);

/**
 * Error-state derivative under `wrench` (6). `d1`, `d2` (6 each) are the
 * optional kinematic and dynamic disturbances. Writes `q_dot` (8) and the
 * unswapped `w_dot` (6).
 *
 * # Safety
 * Pointers must reference arrays of the stated lengths.
 */
enum DqStatus dq_controller_error_rate(const struct DqController *handle,
                                       const double *q,
                                       const double *w,
                                       const double *wrench,
                                       const double *ref_twist_body,
                                       const double *ref_accel,
                                       const double *d1,
                                       const double *d2,
                                       double *q_dot_out,
                                       double *w_dot_out);

/**
 * `V₀` and the cross-term Lyapunov function `V` with constant `c`.
 *
 * # Safety
 * `q` (8) and `w` (6) must be readable; outputs writable.
 */
enum DqStatus dq_controller_lyapunov(const struct DqController *handle,
                                     const double *q,
                                     const double *w,
                                     double c,
                                     double *v0_out,
                                     double *v_out);

/**
 * Envelope constants for initial conditions in the ball of radius `r`,
 * with reference twist-rate bound `delta`.
 *
 * # Safety
 * `controller` must be a live handle; `out_handle` writable.
 */
enum DqStatus dq_envelope_new(const struct DqController *controller,
                              double r,
                              double delta,
                              struct DqEnvelope **out_handle);

/**
 * # Safety
 * `handle` must come from [`dq_envelope_new`] and not be used afterwards.
 */
void dq_envelope_free(struct DqEnvelope *handle);

/**
 * # Safety
 * `handle` must be live; `out_constants` writable.
 */
enum DqStatus dq_envelope_constants(const struct DqEnvelope *handle,
                                    struct DqEnvelopeConstants *out_constants);

/**
 * Checks a sampled norm series against the envelope.
 *
 * # Safety
 * `times` and `norms` must each hold `n` doubles.
 */
enum DqStatus dq_envelope_check(const struct DqEnvelope *handle,
                                const double *times,
                                const double *norms,
                                size_t n,
                                struct DqVerdict *out_verdict);

/**
 * Minimum-norm correction of `u0` (3) subject to `rows` and, if both
 * `lower` and `upper` (3 each) are non-null, a force box. On
 * `DQ_STATUS_INFEASIBLE`, `u_out` holds the box point that best serves the
 * worst row.
 *
 * # Safety
 * `rows` must hold `n_rows` entries; vectors hold 3 doubles.
 */
enum DqStatus dq_filter_qp(const double *u0,
                           const struct DqCbfRow *rows,
                           size_t n_rows,
                           const double *lower,
                           const double *upper,
                           double *u_out,
                           double *kkt_residual_out);

/**
 * Runs a scenario and writes its CSV and JSON files into `out_dir`.
 * `config_path` (TOML) takes precedence over `scenario` when non-null.
 * `all_pass_out` receives whether every verdict passed.
 *
 * # Safety
 * Strings must be NUL-terminated; `all_pass_out` may be null.
 */
enum DqStatus dq_run_scenario(const char *scenario,
                              const char *config_path,
                              uint64_t seed,
                              const char *out_dir,
                              bool *all_pass_out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DQTRACK_H */
