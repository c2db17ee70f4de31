#ifndef SWIPT_MAC_H
#define SWIPT_MAC_H

#pragma once

/* Generated by cbindgen; do not edit. */

#include <stddef.h>
#include <stdint.h>

typedef enum SwiptStatus {
  SWIPT_STATUS_OK = 0,
  SWIPT_STATUS_INVALID_ARGUMENT = 1,
  SWIPT_STATUS_DIMENSION_MISMATCH = 2,
  SWIPT_STATUS_INFEASIBLE_ENERGY = 3,
  SWIPT_STATUS_INFEASIBLE_SCENARIO = 4,
  SWIPT_STATUS_INFEASIBLE_MIN_RATE = 5,
  SWIPT_STATUS_UNBOUNDED = 6,
  SWIPT_STATUS_NO_FIXED_POINT = 7,
  SWIPT_STATUS_NO_CONVERGENCE = 8,
  SWIPT_STATUS_CONFIG_ERROR = 9,
  SWIPT_STATUS_NULL_POINTER = 10,
  SWIPT_STATUS_BUFFER_TOO_SMALL = 11,
  SWIPT_STATUS_PANIC = 12,
} SwiptStatus;

/**
 * Receiver model codes accepted by the `model` arguments.
 */
typedef enum SwiptModel {
  SWIPT_MODEL_IDEAL = 0,
  SWIPT_MODEL_TIME_SWITCHING = 1,
  SWIPT_MODEL_POWER_SPLITTING = 2,
} SwiptModel;

/**
 * One solved boundary point.
 */
typedef struct SwiptPoint SwiptPoint;

/**
 * Scenario loaded from a configuration file.
 */
typedef struct SwiptScenario SwiptScenario;

/**
 * Result of a buffer simulation.
 */
typedef struct SwiptSimStats SwiptSimStats;

/**
 * Boundary points over the reward simplex.
 */
typedef struct SwiptTrace SwiptTrace;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *swipt_version(void);

/**
 * Message of the last failure on this thread, or null. The pointer stays
 * valid until the next failing call on the same thread.
 */
const char *swipt_last_error_message(void);

/**
 * Short constant name of a status code.
 */
const char *swipt_status_name(int32_t status);

/**
 * The bundled reference scenario.
 *
 * # Safety
 * `out` must be valid for a pointer write.
 */
enum SwiptStatus swipt_scenario_reference(struct SwiptScenario **out);

/**
 * Parse a scenario from TOML text.
 *
 * # Safety
 * `text` must be a NUL-terminated string; `out` must be valid for a write.
 */
enum SwiptStatus swipt_scenario_from_toml(const char *text, struct SwiptScenario **out);

/**
 * # Safety
 * `scenario` must be null or a handle not yet freed.
 */
void swipt_scenario_free(struct SwiptScenario *scenario);

/**
 * # Safety
 * Handle and out pointer must be valid.
 */
enum SwiptStatus swipt_scenario_num_users(const struct SwiptScenario *scenario, size_t *out);

/**
 * Number of joint fading states.
 *
 * # Safety
 * Handle and out pointer must be valid.
 */
enum SwiptStatus swipt_scenario_num_states(const struct SwiptScenario *scenario, size_t *out);

/**
 * Receiver energy deficit in joules per slot.
 *
 * # Safety
 * Handle and out pointer must be valid.
 */
enum SwiptStatus swipt_scenario_deficit(const struct SwiptScenario *scenario, double *out);

/**
 * Move the receiver consumption so the deficit equals `delta` (J/slot).
 *
 * # Safety
 * `scenario` must be a valid handle.
 */
enum SwiptStatus swipt_scenario_set_deficit(struct SwiptScenario *scenario, double delta);

/**
 * Maximum sum rate in bits per channel use.
 *
 * # Safety
 * Handle and out pointer must be valid.
 */
enum SwiptStatus swipt_sum_rate(const struct SwiptScenario *scenario, int32_t model, double *out);

/**
 * Boundary point maximizing `sum mu(i) R_i`.
 *
 * # Safety
 * `mu` must point to `mu_len` doubles; handle and out pointer must be valid.
 */
enum SwiptStatus swipt_dual_solve(const struct SwiptScenario *scenario,
                                  int32_t model,
                                  const double *mu,
                                  size_t mu_len,
                                  struct SwiptPoint **out);

/**
 * # Safety
 * `point` must be null or a handle not yet freed.
 */
void swipt_point_free(struct SwiptPoint *point);

/**
 * Average rate per user.
 *
 * # Safety
 * See the module notes on array getters.
 */
enum SwiptStatus swipt_point_rates(const struct SwiptPoint *point,
                                   double *buf,
                                   size_t len,
                                   size_t *out_len);

/**
 * Average transmit power per user, J/slot.
 *
 * # Safety
 * See the module notes on array getters.
 */
enum SwiptStatus swipt_point_powers(const struct SwiptPoint *point,
                                    double *buf,
                                    size_t len,
                                    size_t *out_len);

/**
 * Transmitter multipliers followed by the receiver multiplier.
 *
 * # Safety
 * See the module notes on array getters.
 */
enum SwiptStatus swipt_point_multipliers(const struct SwiptPoint *point,
                                         double *buf,
                                         size_t len,
                                         size_t *out_len);

/**
 * Erasure (or split) fraction of the point; 0 for the ideal receiver.
 *
 * # Safety
 * Handle and out pointer must be valid.
 */
enum SwiptStatus swipt_point_pi_e(const struct SwiptPoint *point, double *out);

/**
 * RF energy reaching the receiver, J/slot.
 *
 * # Safety
 * Handle and out pointer must be valid.
 */
enum SwiptStatus swipt_point_delivered(const struct SwiptPoint *point, double *out);

/**
 * Boundary over `mu_grid` reward vectors per simplex edge. Individual points
 * may fail; see [`swipt_trace_point_status`].
 *
 * # Safety
 * Handle and out pointer must be valid.
 */
enum SwiptStatus swipt_trace(const struct SwiptScenario *scenario,
                             int32_t model,
                             size_t mu_grid,
                             struct SwiptTrace **out);

/**
 * # Safety
 * `trace` must be null or a handle not yet freed.
 */
void swipt_trace_free(struct SwiptTrace *trace);

/**
 * # Safety
 * Handle and out pointer must be valid.
 */
enum SwiptStatus swipt_trace_len(const struct SwiptTrace *trace, size_t *out);

/**
 * Solver status of point `k`.
 *
 * # Safety
 * Handle and out pointer must be valid.
 */
enum SwiptStatus swipt_trace_point_status(const struct SwiptTrace *trace,
                                          size_t k,
                                          enum SwiptStatus *out);

/**
 * Reward vector of point `k`.
 *
 * # Safety
 * See the module notes on array getters.
 */
enum SwiptStatus swipt_trace_mu(const struct SwiptTrace *trace,
                                size_t k,
                                double *buf,
                                size_t len,
                                size_t *out_len);

/**
 * Rates of point `k`; fails with the point's own status if it was not solved.
 *
 * # Safety
 * See the module notes on array getters.
 */
enum SwiptStatus swipt_trace_rates(const struct SwiptTrace *trace,
                                   size_t k,
                                   double *buf,
                                   size_t len,
                                   size_t *out_len);

/**
 * Solve the uniform-reward point with the simulation backoff and run the
 * buffer simulation. `horizon` 0 keeps the configured horizon.
 *
 * # Safety
 * Handle and out pointer must be valid.
 */
enum SwiptStatus swipt_simulate(const struct SwiptScenario *scenario,
                                int32_t model,
                                uint64_t horizon,
                                uint64_t seed,
                                struct SwiptSimStats **out);

/**
 * # Safety
 * `stats` must be null or a handle not yet freed.
 */
void swipt_sim_free(struct SwiptSimStats *stats);

/**
 * Fraction of measured slots used for harvesting only.
 *
 * # Safety
 * Handle and out pointer must be valid.
 */
enum SwiptStatus swipt_sim_erasure_fraction(const struct SwiptSimStats *stats, double *out);

/**
 * Erasure fraction the simulated policy was designed for.
 *
 * # Safety
 * Handle and out pointer must be valid.
 */
enum SwiptStatus swipt_sim_analytic_pi_e(const struct SwiptSimStats *stats, double *out);

/**
 * RF energy banked at the receiver per slot.
 *
 * # Safety
 * Handle and out pointer must be valid.
 */
enum SwiptStatus swipt_sim_avg_delivered(const struct SwiptSimStats *stats, double *out);

/**
 * Average transmit energy per slot and user.
 *
 * # Safety
 * See the module notes on array getters.
 */
enum SwiptStatus swipt_sim_avg_tx_power(const struct SwiptSimStats *stats,
                                        double *buf,
                                        size_t len,
                                        size_t *out_len);

/**
 * Empirical rate per user.
 *
 * # Safety
 * See the module notes on array getters.
 */
enum SwiptStatus swipt_sim_rates(const struct SwiptSimStats *stats,
                                 double *buf,
                                 size_t len,
                                 size_t *out_len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SWIPT_MAC_H */
