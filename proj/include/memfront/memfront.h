/* C interface to the memory-front solvers: bistable reaction-diffusion
 * equations whose reaction feeds back through a temporal convolution kernel.
 * All functions return a status code; on failure the handle/output arguments
 * are left untouched and memfront_last_error() carries a message for the
 * calling thread. Handles are freed with the matching *_free call.
 */
#ifndef MEMFRONT_H
#define MEMFRONT_H

#include <stddef.h>

#if defined(_WIN32)
#define MEMFRONT_API __declspec(dllexport)
#else
#define MEMFRONT_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum memfront_status {
  MEMFRONT_OK = 0,
  MEMFRONT_ERR_INVALID_ARGUMENT,
  MEMFRONT_ERR_ZERO_WEIGHT,
  MEMFRONT_ERR_NEGATIVE_KERNEL,
  MEMFRONT_ERR_DIVERGENT_MOMENT,
  MEMFRONT_ERR_INSUFFICIENT_HISTORY,
  MEMFRONT_ERR_NOT_BISTABLE,
  MEMFRONT_ERR_OUT_OF_REGIME,
  MEMFRONT_ERR_NO_CONVERGENCE,
  MEMFRONT_ERR_DOMAIN_TOO_SMALL,
  MEMFRONT_ERR_MONOTONICITY,
  MEMFRONT_ERR_BRACKET_FAILURE,
  MEMFRONT_ERR_STABILITY,
  MEMFRONT_ERR_NAN,
  MEMFRONT_ERR_FRONT_EXITED,
  MEMFRONT_ERR_NO_CROSSING,
  MEMFRONT_ERR_NOT_POSITIVE,
  MEMFRONT_ERR_RESOLUTION,
  MEMFRONT_ERR_CONFIG,
  MEMFRONT_ERR_IO,
  MEMFRONT_ERR_UNKNOWN
} memfront_status;

MEMFRONT_API const char* memfront_status_name(memfront_status s);

/* message from the most recent failing call on this thread; never NULL */
MEMFRONT_API const char* memfront_last_error(void);

MEMFRONT_API const char* memfront_version(void);

typedef struct memfront_kernel memfront_kernel;
typedef struct memfront_problem memfront_problem;
typedef struct memfront_front memfront_front;

/* ---- memory kernels -------------------------------------------------- */

/* sum of exponentials sum_i coeffs[i] * exp(-rates[i] * tau), normalized to
 * unit mass; gamma is the signed total weight multiplying the convolution */
MEMFRONT_API memfront_status memfront_kernel_exp_sum(const double* coeffs, const double* rates,
                                                     size_t n, double gamma,
                                                     memfront_kernel** out);

/* discrete delays: gamma = sum of weights, shape normalized */
MEMFRONT_API memfront_status memfront_kernel_delay_comb(const double* weights,
                                                        const double* delays, size_t n,
                                                        memfront_kernel** out);

/* linear-channel reduction: each channel relaxes at rates[i] and is read out
 * with weight a[i] after being driven by b[i]; gamma = sum a*b/rate */
MEMFRONT_API memfront_status memfront_kernel_pde_ode(const double* a, const double* b,
                                                     const double* rates, size_t n,
                                                     memfront_kernel** out);

/* piecewise-linear table on [tau[0], tau[n-1]] with an exponential tail */
MEMFRONT_API memfront_status memfront_kernel_tabulated(const double* tau, const double* values,
                                                       size_t n, double tail_rate, double gamma,
                                                       memfront_kernel** out);

MEMFRONT_API void memfront_kernel_free(memfront_kernel* k);
MEMFRONT_API memfront_status memfront_kernel_gamma(const memfront_kernel* k, double* out);
MEMFRONT_API memfront_status memfront_kernel_moments(const memfront_kernel* k, double* mass,
                                                     double* mean_delay);

/* ---- bistable reactions ---------------------------------------------- */

/* F(u) = -u (u - a) (u - 1) with 0 < a < 1, diffusion D, tilt weight gamma */
MEMFRONT_API memfront_status memfront_problem_cubic(double a, double D, double gamma,
                                                    memfront_problem** out);

/* ascending coefficients of F; the tilted reaction F + gamma*u must have
 * exactly three simple zeros in the scan window for solves to proceed */
MEMFRONT_API memfront_status memfront_problem_polynomial(const double* coeffs, size_t n, double D,
                                                         double gamma, double scan_lo,
                                                         double scan_hi, memfront_problem** out);

MEMFRONT_API void memfront_problem_free(memfront_problem* p);

/* zeros of the tilted reaction, ordered */
MEMFRONT_API memfront_status memfront_problem_equilibria(const memfront_problem* p, double* lower,
                                                         double* middle, double* upper);

/* closed-form front speed of the untilted-by-memory cubic equation where the
 * weight beta enters the reaction directly */
MEMFRONT_API memfront_status memfront_local_speed(double a, double beta, double* out);

/* coupling weight at which the cubic front speed changes sign (a >= 1/2) */
MEMFRONT_API memfront_status memfront_beta_zero(double a, double* out);

/* a-priori interval for the auxiliary speed map at shift speed v */
MEMFRONT_API memfront_status memfront_speed_bounds(const memfront_problem* p,
                                                   const memfront_kernel* k, double v, double* lo,
                                                   double* hi);

/* ---- traveling-front boundary-value solves ---------------------------- */

typedef struct memfront_front_options {
  double L;          /* half-width of the co-moving window */
  double h;          /* grid spacing */
  double newton_tol; /* residual norm target */
  double fp_tol;     /* fixed-point gap target */
  int max_newton_iter;
} memfront_front_options;

MEMFRONT_API void memfront_front_options_init(memfront_front_options* o);

/* profile and speed at a fixed shift speed v */
MEMFRONT_API memfront_status memfront_solve_profile(const memfront_problem* p,
                                                    const memfront_kernel* k, double v,
                                                    const memfront_front_options* o,
                                                    memfront_front** out);

/* self-consistent speed: the shift speed equals the resulting front speed */
MEMFRONT_API memfront_status memfront_solve_fixed_point(const memfront_problem* p,
                                                        const memfront_kernel* k,
                                                        const memfront_front_options* o,
                                                        memfront_front** out);

MEMFRONT_API memfront_status memfront_front_speed(const memfront_front* f, double* out);
MEMFRONT_API memfront_status memfront_front_fixed_point_gap(const memfront_front* f, double* out);
MEMFRONT_API memfront_status memfront_front_size(const memfront_front* f, size_t* out);

/* copies up to cap points of the profile into xi/u (either may be NULL) */
MEMFRONT_API memfront_status memfront_front_profile(const memfront_front* f, double* xi, double* u,
                                                    size_t cap);
MEMFRONT_API void memfront_front_free(memfront_front* f);

/* ---- time-domain measurement ------------------------------------------ */

typedef struct memfront_evolve_options {
  double X;            /* domain length */
  double dx;
  double dt;
  double t_end;
  double output_every; /* tracker cadence */
  double front_offset; /* initial interface position as a fraction of X */
} memfront_evolve_options;

MEMFRONT_API void memfront_evolve_options_init(memfront_evolve_options* o);

/* evolves a step initial datum and fits the tracked level-crossing path */
MEMFRONT_API memfront_status memfront_measure_speed(const memfront_problem* p,
                                                    const memfront_kernel* k,
                                                    const memfront_evolve_options* o,
                                                    double* speed, double* fit_residual);

/* ---- config-driven experiments ---------------------------------------- */

/* verbs: "sweep", "front", "twoscale", "kernel-check". out_dir may be NULL to
 * use the config's out_dir. exit_code receives the CLI convention (0 ok,
 * 2 config error, 3 solver failure); summary_json (optional) receives a
 * malloc'd JSON report to release with memfront_string_free. */
MEMFRONT_API memfront_status memfront_run_experiment(const char* verb, const char* config_path,
                                                     const char* out_dir,
                                                     const char* const* overrides,
                                                     size_t n_overrides, int* exit_code,
                                                     char** summary_json);

MEMFRONT_API void memfront_string_free(char* s);

#ifdef __cplusplus
}
#endif

#endif /* MEMFRONT_H */
