#ifndef PFLAME_H
#define PFLAME_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum PflameStatus {
  PFLAME_STATUS_OK = 0,
  PFLAME_STATUS_NULL_POINTER = 1,
  PFLAME_STATUS_INVALID_ARGUMENT = 2,
  PFLAME_STATUS_CONFIG = 3,
  PFLAME_STATUS_IO = 4,
  PFLAME_STATUS_NUMERICAL = 5,
  PFLAME_STATUS_BUFFER_TOO_SMALL = 6,
  PFLAME_STATUS_PANIC = 7,
} PflameStatus;

// A validated scenario configuration.
typedef struct PflameScenario PflameScenario;

// A finished continuation sweep with its per-stage diagnostics.
typedef struct PflameSweep PflameSweep;

// Per-stage numbers; missing diagnostics are NaN.
typedef struct PflameStageSummary {
  double eps;
  double h;
  double residual_norm;
  size_t iterations;
  bool converged;
  double max_grad_interior;
  size_t fb_points;
  double fb_mean_slope;
  double fb_max_rel_err;
  double reaction_concentration;
} PflameStageSummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Copies the last error message of this thread into `buf` (NUL-terminated)
// and returns the buffer size it needs, or 0 when there is no error. Nothing
// is written when `buf` is null or `len` is too small.
//
// # Safety
// `buf` must be null or valid for `len` bytes.
size_t pflame_last_error(char *buf, size_t len);

// Loads and validates a scenario from a JSON file.
//
// # Safety
// `path` must be a NUL-terminated string and `out` a valid pointer.
enum PflameStatus pflame_scenario_load(const char *path, struct PflameScenario **out);

// Parses and validates a scenario from a JSON string.
//
// # Safety
// `json` must be a NUL-terminated string and `out` a valid pointer.
enum PflameStatus pflame_scenario_from_json(const char *json, struct PflameScenario **out);

// A copy of `scenario` with every grid spacing divided by `factor`.
//
// # Safety
// `scenario` must come from this library and `out` must be valid.
enum PflameStatus pflame_scenario_refined(const struct PflameScenario *scenario,
                                          size_t factor,
                                          struct PflameScenario **out);

// # Safety
// `scenario` must be null or come from this library, and not be used after.
void pflame_scenario_free(struct PflameScenario *scenario);

// Runs the continuation sweep. With `final_only`, earlier schedule entries
// only warm-start the solve and a single stage is reported.
//
// # Safety
// `scenario` must come from this library and `out` must be valid.
enum PflameStatus pflame_sweep_run(const struct PflameScenario *scenario,
                                   bool final_only,
                                   struct PflameSweep **out);

// # Safety
// `sweep` must be null or come from this library, and not be used after.
void pflame_sweep_free(struct PflameSweep *sweep);

// # Safety
// Pointers must be valid; `sweep` must come from this library.
enum PflameStatus pflame_sweep_stage_count(const struct PflameSweep *sweep, size_t *out);

// Number of grid nodes, i.e. the length of every solution vector.
//
// # Safety
// Pointers must be valid; `sweep` must come from this library.
enum PflameStatus pflame_sweep_node_count(const struct PflameSweep *sweep, size_t *out);

// # Safety
// Pointers must be valid; `sweep` must come from this library.
enum PflameStatus pflame_sweep_stage_summary(const struct PflameSweep *sweep,
                                             size_t stage,
                                             struct PflameStageSummary *out);

// Copies the nodal solution of `stage` (x-fastest ordering) into `buf`.
//
// # Safety
// `buf` must be valid for `len` doubles; `sweep` must come from this library.
enum PflameStatus pflame_sweep_solution(const struct PflameSweep *sweep,
                                        size_t stage,
                                        double *buf,
                                        size_t len);

// Runs the checks enabled in the scenario and reports how many passed and
// failed.
//
// # Safety
// Pointers must be valid; `sweep` must come from this library.
enum PflameStatus pflame_sweep_verify(const struct PflameSweep *sweep,
                                      size_t *passed,
                                      size_t *failed);

// Writes the CSV tables, plots and the scenario copy into `dir`.
//
// # Safety
// `dir` must be a NUL-terminated string; `sweep` must come from this library.
enum PflameStatus pflame_sweep_write_outputs(const struct PflameSweep *sweep, const char *dir);

// `((p / (p - 1)) mass)^(1/p)`.
//
// # Safety
// `out` must be valid.
enum PflameStatus pflame_lambda_star(double p, double mass, double *out);

// Reaction mass across the one-dimensional traveling layer for the
// quadratic profile of the given mass.
//
// # Safety
// `out` must be valid.
enum PflameStatus pflame_oracle_reaction_integral(double p, double mass, double eps, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PFLAME_H */
