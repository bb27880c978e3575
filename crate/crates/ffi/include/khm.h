#ifndef KHM_H
#define KHM_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum KhmCommand {
  KHM_COMMAND_SIMULATE = 0,
  KHM_COMMAND_STATS = 1,
  KHM_COMMAND_BUDGET = 2,
  KHM_COMMAND_VERIFY = 3,
  KHM_COMMAND_OU_BENCH = 4,
} KhmCommand;

typedef enum KhmStatus {
  KHM_STATUS_OK = 0,
  KHM_STATUS_NULL_POINTER = 1,
  /**
   * Bad configuration, argument or input file contents.
   */
  KHM_STATUS_INVALID = 2,
  /**
   * Blow-up or another numerical failure.
   */
  KHM_STATUS_NUMERICAL = 3,
  KHM_STATUS_IO = 4,
  /**
   * A command ran but one of its checks failed.
   */
  KHM_STATUS_CHECK_FAILED = 5,
  KHM_STATUS_PANIC = 6,
} KhmStatus;

/**
 * Parsed run configuration.
 */
typedef struct KhmConfig KhmConfig;

/**
 * Velocity field in spectral form.
 */
typedef struct KhmField KhmField;

/**
 * In-memory ensemble run: final states and the energy report.
 */
typedef struct KhmRun KhmRun;

typedef struct KhmEnergyReport {
  double epsilon;
  double nu;
  /**
   * nu <||grad u||^2> and its standard error
   */
  double dissipation;
  double dissipation_stderr;
  /**
   * <||u||^2>
   */
  double energy;
  double energy_stderr;
  /**
   * (nu <||grad u||^2> - epsilon) / epsilon
   */
  double balance_residual;
  double balance_residual_stderr;
  uint64_t samples;
} KhmEnergyReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or NULL after a
 * successful one. Valid until the next call into the library on this thread.
 */
const char *khm_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *khm_version(void);

/**
 * Parse configuration text. `source` names it in error messages and may be NULL.
 *
 * # Safety
 * `text` and a non-NULL `source` must be NUL-terminated strings; `out` must be writable.
 */
enum KhmStatus khm_config_parse(const char *text, const char *source, struct KhmConfig **out);

/**
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum KhmStatus khm_config_load(const char *path, struct KhmConfig **out);

/**
 * # Safety
 * `cfg` must be NULL or a handle from `khm_config_parse`/`khm_config_load` not yet freed.
 */
void khm_config_free(struct KhmConfig *cfg);

/**
 * Grid points per axis.
 *
 * # Safety
 * `cfg` must be a live config handle; `n` must be writable.
 */
enum KhmStatus khm_config_grid_n(const struct KhmConfig *cfg, uint32_t *n);

/**
 * Run one CLI command into `out_dir` with `threads` workers (0 = all cores).
 * Summary lines are discarded; a failed check gives `CheckFailed`.
 *
 * # Safety
 * `cfg` must be a live config handle and `out_dir` a NUL-terminated path.
 */
enum KhmStatus khm_run_command(const struct KhmConfig *cfg,
                               enum KhmCommand command,
                               const char *out_dir,
                               uint32_t threads);

/**
 * Integrate the configured ensemble in memory, without writing files.
 *
 * # Safety
 * `cfg` must be a live config handle; `out` must be writable.
 */
enum KhmStatus khm_simulate(const struct KhmConfig *cfg, uint32_t threads, struct KhmRun **out);

/**
 * # Safety
 * `run` must be NULL or a handle from `khm_simulate` not yet freed.
 */
void khm_run_free(struct KhmRun *run);

/**
 * # Safety
 * `run` must be a live run handle; `out` must be writable.
 */
enum KhmStatus khm_run_energy_report(const struct KhmRun *run, struct KhmEnergyReport *out);

/**
 * Copy of the final state of ensemble member `member`.
 *
 * # Safety
 * `run` must be a live run handle; `out` must be writable.
 */
enum KhmStatus khm_run_final_field(const struct KhmRun *run,
                                   uint32_t member,
                                   struct KhmField **out);

/**
 * Random solenoidal field on an n^3 grid with spectrum ~ |k|^-slope.
 *
 * # Safety
 * `out` must be writable.
 */
enum KhmStatus khm_field_random(uint32_t n, uint64_t seed, double slope, struct KhmField **out);

/**
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum KhmStatus khm_field_read_checkpoint(const char *path, struct KhmField **out);

/**
 * # Safety
 * `field` must be NULL or a field handle not yet freed.
 */
void khm_field_free(struct KhmField *field);

/**
 * Grid points per axis.
 *
 * # Safety
 * `field` must be a live field handle; `n` must be writable.
 */
enum KhmStatus khm_field_grid_n(const struct KhmField *field, uint32_t *n);

/**
 * ||u||^2 over the box.
 *
 * # Safety
 * `field` must be a live field handle; `out` must be writable.
 */
enum KhmStatus khm_field_energy(const struct KhmField *field, double *out);

/**
 * Largest relative mismatch of the mixed-correlation identity on the
 * lattice drawn from `lattice_seed`.
 *
 * # Safety
 * `field` must be a live field handle; `out` must be writable.
 */
enum KhmStatus khm_monin_residual(const struct KhmField *field, uint64_t lattice_seed, double *out);

/**
 * Normalized pressure pairing with the test tensor of scale `scale`.
 *
 * # Safety
 * `field` must be a live field handle; `out` must be writable.
 */
enum KhmStatus khm_pressure_residual(const struct KhmField *field, double scale, double *out);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* KHM_H */
