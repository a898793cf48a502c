#ifndef NLOP_H
#define NLOP_H

/* C interface to the nonlocal operator library. Objects are opaque handles
 * released with the matching *_free call. Every function returns an
 * nlop_status; on failure nlop_last_error() describes the error of the
 * calling thread. Strings returned through char** are released with
 * nlop_string_free. */

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  define NLOP_API __declspec(dllexport)
#else
#  define NLOP_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum nlop_status {
    NLOP_OK = 0,
    NLOP_ERR_CONFIG = 1,      /* invalid spec or config */
    NLOP_ERR_DOMAIN = 2,      /* call outside the mathematical domain */
    NLOP_ERR_CONVERGENCE = 3, /* refinement or iteration failed */
    NLOP_ERR_IO = 4,
    NLOP_ERR_NULL = 5,        /* null handle or output pointer */
    NLOP_ERR_INTERNAL = 6
} nlop_status;

typedef struct nlop_kernel nlop_kernel;
typedef struct nlop_field nlop_field;
typedef struct nlop_experiment nlop_experiment;

NLOP_API const char* nlop_version(void);
NLOP_API const char* nlop_last_error(void);
NLOP_API void nlop_string_free(char* s);

/* Kernels: JSON object with kind, dim, alpha and kind-specific keys. */
NLOP_API nlop_status nlop_kernel_from_json(const char* json, nlop_kernel** out);
NLOP_API void nlop_kernel_free(nlop_kernel* k);
NLOP_API nlop_status nlop_kernel_eval(const nlop_kernel* k, const double* y, double* out);

/* Fields: amplitude * exp(-|x - center|^2 / width^2); center has dim entries. */
NLOP_API nlop_status nlop_field_gaussian(int dim, const double* center, double amplitude, double width,
                                         nlop_field** out);
NLOP_API void nlop_field_free(nlop_field* f);

/* L_K u(x) with eps_inner and rel_tol (non-positive values take defaults). */
NLOP_API nlop_status nlop_eval_LK(const nlop_field* u, const nlop_kernel* k, const double* x, double eps_inner,
                                  double rel_tol, double* value, double* err_estimate);

/* Experiments. */
NLOP_API nlop_status nlop_experiment_from_json(const char* json, nlop_experiment** out);
NLOP_API nlop_status nlop_experiment_from_file(const char* path, nlop_experiment** out);
NLOP_API void nlop_experiment_free(nlop_experiment* e);
NLOP_API nlop_status nlop_experiment_set_output_dir(nlop_experiment* e, const char* dir);
NLOP_API nlop_status nlop_experiment_set_seed(nlop_experiment* e, uint64_t seed);
NLOP_API nlop_status nlop_experiment_set_task(nlop_experiment* e, const char* task);
/* Runs the task. exit_code follows the CLI convention (0 ok, 1 validation,
 * 2 numeric); *summary_json (optional) receives the outcome record. The
 * return status is NLOP_OK whenever the run itself completed. */
NLOP_API nlop_status nlop_experiment_run(nlop_experiment* e, int* exit_code, int* passed, char** summary_json);

/* Runs every config in config_dir; *matrix receives the pass/fail table. */
NLOP_API nlop_status nlop_verify_suite(const char* config_dir, const char* output_dir, int jobs, int64_t seed,
                                       int* exit_code, char** matrix);

#ifdef __cplusplus
}
#endif

#endif
