/* Stochastic line search: C interface. */
#ifndef STOCHLS_STOCHLS_H
#define STOCHLS_STOCHLS_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define STOCHLS_API __declspec(dllexport)
#else
#define STOCHLS_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum stochls_status {
  STOCHLS_OK = 0,
  STOCHLS_INVALID_ARGUMENT = 1, /* null pointer, bad size, bad value */
  STOCHLS_CONFIG = 2,           /* configuration rejected */
  STOCHLS_RUNTIME = 3,          /* numerical abort or failed check */
  STOCHLS_DOMAIN = 4,           /* non-finite input */
  STOCHLS_IO = 5
} stochls_status;

typedef enum stochls_outcome {
  STOCHLS_STEP_RELIABLE = 0,
  STOCHLS_STEP_UNRELIABLE = 1,
  STOCHLS_STEP_UNSUCCESSFUL = 2
} stochls_outcome;

typedef struct stochls_problem stochls_problem;
typedef struct stochls_optimizer stochls_optimizer;

typedef struct stochls_step_info {
  int64_t k;
  int outcome; /* stochls_outcome */
  double alpha;
  double delta;
  double g_norm;
  double f0;
  double fs;
  int64_t grad_batch;
  int64_t f0_batch;
  int64_t fs_batch;
  int has_exact; /* 1 when the fields below are filled */
  double f_exact;
  double gradnorm_exact;
  int i_k;
  int j_k;
} stochls_step_info;

/* Message for the last failing call on this thread; empty if none. */
STOCHLS_API const char* stochls_last_error(void);
STOCHLS_API const char* stochls_version(void);
STOCHLS_API void stochls_string_free(char* s);

/* Problems. config_json is a run configuration; only its problem block is used. */
STOCHLS_API stochls_status stochls_problem_create(const char* kind, int64_t n, int64_t N, uint64_t seed,
                                                  stochls_problem** out);
STOCHLS_API stochls_status stochls_problem_create_json(const char* config_json, stochls_problem** out);
STOCHLS_API void stochls_problem_destroy(stochls_problem* p);
STOCHLS_API stochls_status stochls_problem_dimension(const stochls_problem* p, int64_t* n, int64_t* N);
STOCHLS_API stochls_status stochls_problem_x0(const stochls_problem* p, double* x0);
STOCHLS_API stochls_status stochls_problem_value(const stochls_problem* p, const double* x, double* out);
STOCHLS_API stochls_status stochls_problem_gradient(const stochls_problem* p, const double* x, double* grad);
/* JSON object with L, f_min, variance bounds, convexity and optional constants. */
STOCHLS_API stochls_status stochls_problem_metadata_json(const stochls_problem* p, char** out);

/* Optimizer over a problem; config_json supplies linesearch/accuracy blocks (may be NULL for defaults). */
STOCHLS_API stochls_status stochls_optimizer_create(const stochls_problem* p, const char* config_json, uint64_t seed,
                                                    int exact_diagnostics, stochls_optimizer** out);
STOCHLS_API void stochls_optimizer_destroy(stochls_optimizer* o);
STOCHLS_API stochls_status stochls_optimizer_step(stochls_optimizer* o, stochls_step_info* info);
/* x has n entries; any of the outputs may be NULL. */
STOCHLS_API stochls_status stochls_optimizer_state(const stochls_optimizer* o, double* x, double* alpha,
                                                   double* delta, int64_t* k);

/* Sample sizes for one estimate, before the batch cap. */
STOCHLS_API stochls_status stochls_gradient_sample_size(double variance_grad, double kappa_g, double p_g,
                                                        double alpha, double g_norm, int64_t* out);
STOCHLS_API stochls_status stochls_function_sample_size(double variance_fun, double kappa_f, double kappa_f_bar,
                                                        double p_f, double theta, double alpha, double g_norm,
                                                        double delta, int64_t* out);

/* Monte Carlo estimate of the expected stopping time for the first cell of an rrprocess block (JSON). */
STOCHLS_API stochls_status stochls_rr_estimate(const char* rrprocess_json, uint64_t seed, int workers, double* mean,
                                               double* ci_lo, double* ci_hi, double* bound);

/* Whole runs. overrides_json may hold "seeds" (string), "output_dir", "workers", "exact_diagnostics". */
STOCHLS_API stochls_status stochls_run_config_file(const char* path, const char* overrides_json, char** report);
STOCHLS_API stochls_status stochls_run_config_json(const char* config_json, const char* overrides_json,
                                                   char** report);
STOCHLS_API stochls_status stochls_lemma_suite(int instances, uint64_t seed, char** report, int* all_passed);
STOCHLS_API stochls_status stochls_report_directory(const char* dir, char** report);

#ifdef __cplusplus
}
#endif

#endif
