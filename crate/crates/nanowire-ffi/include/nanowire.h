#ifndef NANOWIRE_H
#define NANOWIRE_H

/* Generated by cbindgen; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Output-selection flags for `nw_simulate`, OR-able.
 */
#define NW_OUTPUT_ALPHA 1

#define NW_OUTPUT_ETA 2

#define NW_OUTPUT_ENHANCEMENT 4

/**
 * Mode family discriminant mirrored into C.
 */
typedef enum NwModeFamily {
  NwModeFamily_He = 0,
  NwModeFamily_Eh = 1,
  NwModeFamily_Te = 2,
  NwModeFamily_Tm = 3,
} NwModeFamily;

/**
 * Status code returned by every fallible call.
 */
typedef enum NwStatus {
  NwStatus_Ok = 0,
  /**
   * Bad argument or unparsable input.
   */
  NwStatus_InvalidArgument = 1,
  /**
   * Numerical failure (instability, unconverged run, solver failure).
   */
  NwStatus_Numerical = 2,
  /**
   * Null pointer where a value was required.
   */
  NwStatus_NullPointer = 3,
  /**
   * Index past the end of a collection.
   */
  NwStatus_OutOfRange = 4,
  /**
   * Panic trapped at the ABI boundary.
   */
  NwStatus_Internal = 5,
} NwStatus;

/**
 * Opaque, validated simulation description.
 */
typedef struct NwConfig NwConfig;

/**
 * Opaque set of solved guided modes.
 */
typedef struct NwModeSet NwModeSet;

/**
 * Opaque emission-pipeline result (one entry per record wavelength).
 */
typedef struct NwReportSet NwReportSet;

/**
 * Scalar summary of one guided mode.
 */
typedef struct NwModeInfo {
  enum NwModeFamily family;
  uint32_t azimuthal_order;
  uint32_t radial_index;
  double n_eff;
} NwModeInfo;

/**
 * One reduced emission record, mirrored into C.
 */
typedef struct NwEmissionRecord {
  double wavelength_nm;
  /**
   * Polarization angle sigma: 0 for s, pi/2 for p.
   */
  double sigma_rad;
  double alpha;
  double eta;
  double enhancement;
  double total_power_w;
  /**
   * Closed-box flux over total power; 1 when energy balances.
   */
  double audit_ratio;
  /**
   * 1 when the run rang down below the convergence threshold.
   */
  int32_t converged;
} NwEmissionRecord;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the last error message of this thread into `buf` (NUL-terminated,
 * truncated to `cap`). Returns the full message length in bytes.
 */
uintptr_t nw_last_error(char *buf, uintptr_t cap);

/**
 * V parameter of a circular step-index waveguide.
 */
enum NwStatus nw_v_parameter(double diameter_nm,
                             double wavelength_nm,
                             double core_index,
                             double clad_index,
                             double *out);

/**
 * Solves the guided modes up to `max_order`; the handle must be released
 * with `nw_mode_set_free`.
 */
enum NwStatus nw_modes_solve(double diameter_nm,
                             double wavelength_nm,
                             double core_index,
                             double clad_index,
                             uint32_t max_order,
                             struct NwModeSet **out);

/**
 * Number of modes in the set; 0 for a null handle.
 */
uintptr_t nw_mode_set_len(const struct NwModeSet *set);

/**
 * Scalar info of mode `index`.
 */
enum NwStatus nw_mode_set_get(const struct NwModeSet *set, uintptr_t index, struct NwModeInfo *out);

/**
 * Releases a mode set. Null is a no-op.
 */
void nw_mode_set_free(struct NwModeSet *set);

/**
 * Parses and validates a JSON scene description; release with
 * `nw_config_free`.
 */
enum NwStatus nw_config_parse(const char *json, struct NwConfig **out);

/**
 * Releases a config. Null is a no-op.
 */
void nw_config_free(struct NwConfig *config);

/**
 * Runs the FDTD emission pipeline on the scene; `output_flags` is an OR of
 * `NW_OUTPUT_*`. Release the handle with `nw_report_set_free`. Blocks for
 * the full simulation.
 */
enum NwStatus nw_simulate(const struct NwConfig *config,
                          uint32_t output_flags,
                          struct NwReportSet **out);

/**
 * Number of record wavelengths in the result; 0 for a null handle.
 */
uintptr_t nw_report_set_len(const struct NwReportSet *set);

/**
 * Reduced record at `index`.
 */
enum NwStatus nw_report_set_get(const struct NwReportSet *set,
                                uintptr_t index,
                                struct NwEmissionRecord *out);

/**
 * Releases a report set. Null is a no-op.
 */
void nw_report_set_free(struct NwReportSet *set);

/**
 * Sidewall taper angle in degrees from the etch profile; `undercut` is set
 * to 1 when the waist is narrower than the bottom.
 */
enum NwStatus nw_taper_angle(double height_nm,
                             double bottom_nm,
                             double top_nm,
                             double waist_nm,
                             double *out_degrees,
                             int32_t *out_undercut);

/**
 * Etch rate in nm/min.
 */
enum NwStatus nw_etch_rate(double height_nm, double duration_min, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* NANOWIRE_H */
