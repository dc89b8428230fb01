#ifndef QLMI_QLMI_H
#define QLMI_QLMI_H

/* Stable C interface. Every call returns a qlmi_status; on failure
 * qlmi_last_error() describes it (thread-local, valid until the next call on
 * the same thread). Handles are opaque and owned by the caller. Quadratures
 * are interleaved (x1, p1, x2, p2, ...), vacuum covariance I/2. */

#include <stddef.h>
#include <stdint.h>

#if defined(QLMI_BUILDING_LIBRARY)
#define QLMI_API __attribute__((visibility("default")))
#else
#define QLMI_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum qlmi_status {
  QLMI_OK = 0,
  QLMI_INVALID_ARGUMENT = 1,
  QLMI_MODE_MISMATCH = 2,
  QLMI_NOT_SYMPLECTIC = 3,
  QLMI_UNPHYSICAL = 4,
  QLMI_SINGULAR_CONDITIONING = 5,
  QLMI_NO_UNIQUE_STEADY_STATE = 6,
  QLMI_STEP_FAILURE = 7,
  QLMI_PARSE_ERROR = 8,
  QLMI_VALIDATION_ERROR = 9,
  QLMI_IO_ERROR = 10,
  QLMI_INTERNAL_ERROR = 99
} qlmi_status;

typedef enum qlmi_quadrature { QLMI_X = 0, QLMI_P = 1 } qlmi_quadrature;

typedef struct qlmi_state qlmi_state;
typedef struct qlmi_map qlmi_map;

QLMI_API const char* qlmi_version(void);
QLMI_API const char* qlmi_last_error(void);
QLMI_API const char* qlmi_status_name(qlmi_status status);

/* Strings returned through char** are released with qlmi_string_free. */
QLMI_API void qlmi_string_free(char* s);

/* ---- Gaussian states ---------------------------------------------------- */

/* `labels` holds n mode labels. */
QLMI_API qlmi_status qlmi_state_vacuum(const char* const* labels, size_t n, qlmi_state** out);
QLMI_API qlmi_status qlmi_state_thermal(const char* const* labels, size_t n, double mean_occupation,
                                        qlmi_state** out);
/* mean has 2n entries, cov is 2n×2n row-major. */
QLMI_API qlmi_status qlmi_state_create(const char* const* labels, size_t n, const double* mean,
                                       const double* cov, qlmi_state** out);
QLMI_API void qlmi_state_free(qlmi_state* state);

QLMI_API qlmi_status qlmi_state_num_modes(const qlmi_state* state, size_t* n);
/* Copies moments into caller buffers of 2n and 4n² doubles; either may be NULL. */
QLMI_API qlmi_status qlmi_state_moments(const qlmi_state* state, double* mean, double* cov);
QLMI_API qlmi_status qlmi_state_epr_variance(const qlmi_state* state, const char* a, const char* b,
                                             double* out);
QLMI_API qlmi_status qlmi_state_fidelity(const qlmi_state* a, const qlmi_state* b, double* out);
/* physical = 1 when cov + iΩ/2 ≥ 0 within tolerance. */
QLMI_API qlmi_status qlmi_state_check_physical(const qlmi_state* state, int* physical,
                                               double* min_symplectic_eigenvalue);
/* Conditions on outcome of one quadrature; the measured mode is removed. */
QLMI_API qlmi_status qlmi_state_homodyne(const qlmi_state* state, const char* label, qlmi_quadrature quadrature,
                                         double outcome, qlmi_state** out);
QLMI_API qlmi_status qlmi_state_tensor(const qlmi_state* a, const qlmi_state* b, qlmi_state** out);

/* ---- Symplectic maps ---------------------------------------------------- */

/* Mode order A_cos, L_cos, A_sin, L_sin. */
QLMI_API qlmi_status qlmi_map_qnd_two_cell(double kappa, qlmi_map** out);
/* (atom, light) single pass. */
QLMI_API qlmi_status qlmi_map_qnd_single_pass(double kappa, const char* atom, const char* light, qlmi_map** out);
/* Modes A_cos, A_sin, R+_cos, R+_sin in; R+ renamed to R- out. */
QLMI_API qlmi_status qlmi_map_nonqnd_two_cell(double z, double gamma_s, double duration, qlmi_map** out);
QLMI_API qlmi_status qlmi_map_long_time_limit(double z, qlmi_map** out);
QLMI_API void qlmi_map_free(qlmi_map* map);

QLMI_API qlmi_status qlmi_map_dimension(const qlmi_map* map, size_t* rows);
/* rows×rows row-major. */
QLMI_API qlmi_status qlmi_map_matrix(const qlmi_map* map, double* out);
QLMI_API qlmi_status qlmi_map_symplectic_defect(const qlmi_map* map, double* out);
QLMI_API qlmi_status qlmi_map_apply(const qlmi_map* map, const qlmi_state* state, qlmi_state** out);

/* ---- Physics ------------------------------------------------------------ */

/* polarization 'x' or 'y'; branch receives 0 passive, 1 active, 2 degenerate. */
QLMI_API qlmi_status qlmi_z_cs_d2(double detuning_mhz, char polarization, double* z, double* r, int* branch);
/* Ideal two-ensemble dissipative model at optical depth d, rate gamma. */
QLMI_API qlmi_status qlmi_steady_state_epr(double z, double d, double gamma, double* epr_variance);
QLMI_API qlmi_status qlmi_hybrid_epr(double n_bar, double kappa, double* per_sector, double* closed_form);
QLMI_API qlmi_status qlmi_optimize_eta(double d, double a, double* eta_star, double* xi_min);

/* ---- Scenarios ---------------------------------------------------------- */

/* violations receives newline-separated "field: message" lines ("" if valid). */
QLMI_API qlmi_status qlmi_scenario_validate(const char* path, char** violations);

typedef struct qlmi_run_options {
  const char* out_dir;
  int has_seed;
  uint64_t seed;
  unsigned jobs;
  const char* format; /* NULL, "csv" or "json" */
} qlmi_run_options;

/* physical receives 0 when any cell produced an unphysical state; summary
 * receives one line per cell. Files are written before returning. */
QLMI_API qlmi_status qlmi_scenario_run(const char* path, const qlmi_run_options* options, int* physical,
                                       char** summary);
/* One line per scenario: "id<TAB>kind<TAB>anchor". dir NULL uses the default. */
QLMI_API qlmi_status qlmi_scenario_list(const char* dir, char** listing);

#ifdef __cplusplus
}
#endif

#endif
