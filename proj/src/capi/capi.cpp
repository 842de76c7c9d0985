#include "memfront/memfront.h"

#include <cstdlib>
#include <cstring>
#include <string>
#include <vector>

#include "core/bistable.hpp"
#include "core/errors.hpp"
#include "core/evolve.hpp"
#include "core/experiment.hpp"
#include "core/kernels.hpp"
#include "core/twfront.hpp"

struct memfront_kernel {
  memfront::MemoryKernel k;
};
struct memfront_problem {
  memfront::BistableProblem p;
};
struct memfront_front {
  memfront::FrontSolution s;
};

namespace {

thread_local std::string g_last_error;

memfront_status map_code(memfront::ErrorCode c) {
  using EC = memfront::ErrorCode;
  switch (c) {
    case EC::InvalidArgument: return MEMFRONT_ERR_INVALID_ARGUMENT;
    case EC::ZeroWeight: return MEMFRONT_ERR_ZERO_WEIGHT;
    case EC::NegativeKernel: return MEMFRONT_ERR_NEGATIVE_KERNEL;
    case EC::DivergentMoment: return MEMFRONT_ERR_DIVERGENT_MOMENT;
    case EC::InsufficientHistory: return MEMFRONT_ERR_INSUFFICIENT_HISTORY;
    case EC::NotBistable: return MEMFRONT_ERR_NOT_BISTABLE;
    case EC::OutOfRegime: return MEMFRONT_ERR_OUT_OF_REGIME;
    case EC::NoConvergence: return MEMFRONT_ERR_NO_CONVERGENCE;
    case EC::DomainTooSmall: return MEMFRONT_ERR_DOMAIN_TOO_SMALL;
    case EC::MonotonicityViolation: return MEMFRONT_ERR_MONOTONICITY;
    case EC::BracketFailure: return MEMFRONT_ERR_BRACKET_FAILURE;
    case EC::StabilityViolation: return MEMFRONT_ERR_STABILITY;
    case EC::NaNDetected: return MEMFRONT_ERR_NAN;
    case EC::FrontExited: return MEMFRONT_ERR_FRONT_EXITED;
    case EC::NoCrossing: return MEMFRONT_ERR_NO_CROSSING;
    case EC::NotPositive: return MEMFRONT_ERR_NOT_POSITIVE;
    case EC::ResolutionError: return MEMFRONT_ERR_RESOLUTION;
    case EC::ConfigError: return MEMFRONT_ERR_CONFIG;
    case EC::IoError: return MEMFRONT_ERR_IO;
  }
  return MEMFRONT_ERR_UNKNOWN;
}

template <typename Fn>
memfront_status guarded(Fn&& fn) {
  try {
    fn();
    return MEMFRONT_OK;
  } catch (const memfront::Error& e) {
    g_last_error = e.what();
    return map_code(e.code());
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return MEMFRONT_ERR_UNKNOWN;
  } catch (...) {
    g_last_error = "unknown failure";
    return MEMFRONT_ERR_UNKNOWN;
  }
}

memfront_status require(bool ok, const char* what) {
  if (ok) return MEMFRONT_OK;
  g_last_error = what;
  return MEMFRONT_ERR_INVALID_ARGUMENT;
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out) std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

memfront::FrontOptions to_front_options(const memfront_front_options* o) {
  memfront::FrontOptions f;
  if (o) {
    f.L = o->L;
    f.h = o->h;
    f.newton_tol = o->newton_tol;
    f.fp_tol = o->fp_tol;
    f.max_newton_iter = o->max_newton_iter;
  }
  return f;
}

}  // namespace

extern "C" {

const char* memfront_status_name(memfront_status s) {
  switch (s) {
    case MEMFRONT_OK: return "ok";
    case MEMFRONT_ERR_INVALID_ARGUMENT: return "invalid_argument";
    case MEMFRONT_ERR_ZERO_WEIGHT: return "zero_weight";
    case MEMFRONT_ERR_NEGATIVE_KERNEL: return "negative_kernel";
    case MEMFRONT_ERR_DIVERGENT_MOMENT: return "divergent_moment";
    case MEMFRONT_ERR_INSUFFICIENT_HISTORY: return "insufficient_history";
    case MEMFRONT_ERR_NOT_BISTABLE: return "not_bistable";
    case MEMFRONT_ERR_OUT_OF_REGIME: return "out_of_regime";
    case MEMFRONT_ERR_NO_CONVERGENCE: return "no_convergence";
    case MEMFRONT_ERR_DOMAIN_TOO_SMALL: return "domain_too_small";
    case MEMFRONT_ERR_MONOTONICITY: return "monotonicity_violation";
    case MEMFRONT_ERR_BRACKET_FAILURE: return "bracket_failure";
    case MEMFRONT_ERR_STABILITY: return "stability_violation";
    case MEMFRONT_ERR_NAN: return "nan_detected";
    case MEMFRONT_ERR_FRONT_EXITED: return "front_exited";
    case MEMFRONT_ERR_NO_CROSSING: return "no_crossing";
    case MEMFRONT_ERR_NOT_POSITIVE: return "not_positive";
    case MEMFRONT_ERR_RESOLUTION: return "resolution_error";
    case MEMFRONT_ERR_CONFIG: return "config_error";
    case MEMFRONT_ERR_IO: return "io_error";
    case MEMFRONT_ERR_UNKNOWN: break;
  }
  return "unknown";
}

const char* memfront_last_error(void) { return g_last_error.c_str(); }

const char* memfront_version(void) { return "0.1.0"; }

memfront_status memfront_kernel_exp_sum(const double* coeffs, const double* rates, size_t n,
                                        double gamma, memfront_kernel** out) {
  if (auto s = require(coeffs && rates && out && n > 0, "null argument"); s != MEMFRONT_OK) return s;
  return guarded([&] {
    std::vector<memfront::ExpTerm> terms(n);
    for (size_t i = 0; i < n; ++i) terms[i] = {coeffs[i], rates[i]};
    *out = new memfront_kernel{memfront::MemoryKernel::exp_sum(terms, gamma)};
  });
}

memfront_status memfront_kernel_delay_comb(const double* weights, const double* delays, size_t n,
                                           memfront_kernel** out) {
  if (auto s = require(weights && delays && out && n > 0, "null argument"); s != MEMFRONT_OK) return s;
  return guarded([&] {
    std::vector<memfront::DelayTap> taps(n);
    for (size_t i = 0; i < n; ++i) taps[i] = {weights[i], delays[i]};
    *out = new memfront_kernel{memfront::MemoryKernel::delay_comb(taps)};
  });
}

memfront_status memfront_kernel_pde_ode(const double* a, const double* b, const double* rates,
                                        size_t n, memfront_kernel** out) {
  if (auto s = require(a && b && rates && out && n > 0, "null argument"); s != MEMFRONT_OK) return s;
  return guarded([&] {
    std::vector<memfront::Coupling> ch(n);
    for (size_t i = 0; i < n; ++i) ch[i] = {a[i], b[i], rates[i]};
    *out = new memfront_kernel{memfront::MemoryKernel::from_pde_ode(ch)};
  });
}

memfront_status memfront_kernel_tabulated(const double* tau, const double* values, size_t n,
                                          double tail_rate, double gamma, memfront_kernel** out) {
  if (auto s = require(tau && values && out && n >= 2, "need at least two table points");
      s != MEMFRONT_OK)
    return s;
  return guarded([&] {
    std::vector<double> t(tau, tau + n), v(values, values + n);
    *out = new memfront_kernel{memfront::MemoryKernel::tabulated(t, v, tail_rate, gamma)};
  });
}

void memfront_kernel_free(memfront_kernel* k) { delete k; }

memfront_status memfront_kernel_gamma(const memfront_kernel* k, double* out) {
  if (auto s = require(k && out, "null argument"); s != MEMFRONT_OK) return s;
  *out = k->k.gamma();
  return MEMFRONT_OK;
}

memfront_status memfront_kernel_moments(const memfront_kernel* k, double* mass,
                                        double* mean_delay) {
  if (auto s = require(k != nullptr, "null kernel"); s != MEMFRONT_OK) return s;
  return guarded([&] {
    const memfront::KernelMoments m = k->k.moments();
    if (mass) *mass = m.total;
    if (mean_delay) *mean_delay = m.mean_delay;
  });
}

memfront_status memfront_problem_cubic(double a, double D, double gamma, memfront_problem** out) {
  if (auto s = require(out != nullptr, "null output"); s != MEMFRONT_OK) return s;
  return guarded([&] { *out = new memfront_problem{memfront::BistableProblem::cubic(a, D, gamma)}; });
}

memfront_status memfront_problem_polynomial(const double* coeffs, size_t n, double D, double gamma,
                                            double scan_lo, double scan_hi,
                                            memfront_problem** out) {
  if (auto s = require(coeffs && out && n >= 2, "need at least two coefficients");
      s != MEMFRONT_OK)
    return s;
  return guarded([&] {
    std::vector<double> c(coeffs, coeffs + n);
    auto p = memfront::BistableProblem::polynomial(c, D, gamma);
    p.scan_lo = scan_lo;
    p.scan_hi = scan_hi;
    *out = new memfront_problem{std::move(p)};
  });
}

void memfront_problem_free(memfront_problem* p) { delete p; }

memfront_status memfront_problem_equilibria(const memfront_problem* p, double* lower,
                                            double* middle, double* upper) {
  if (auto s = require(p != nullptr, "null problem"); s != MEMFRONT_OK) return s;
  return guarded([&] {
    const memfront::Roots r = memfront::tilted_roots(p->p);
    if (lower) *lower = r.lower;
    if (middle) *middle = r.middle;
    if (upper) *upper = r.upper;
  });
}

memfront_status memfront_local_speed(double a, double beta, double* out) {
  if (auto s = require(out != nullptr, "null output"); s != MEMFRONT_OK) return s;
  return guarded([&] { *out = memfront::mckean_speed(a, beta); });
}

memfront_status memfront_beta_zero(double a, double* out) {
  if (auto s = require(out != nullptr, "null output"); s != MEMFRONT_OK) return s;
  return guarded([&] { *out = memfront::beta_zero(a); });
}

memfront_status memfront_speed_bounds(const memfront_problem* p, const memfront_kernel* k,
                                      double v, double* lo, double* hi) {
  if (auto s = require(p && k && lo && hi, "null argument"); s != MEMFRONT_OK) return s;
  return guarded([&] {
    const memfront::EstimateParams est = memfront::estimate_params(p->p);
    const auto b = memfront::speed_bounds(p->p, est, k->k, v);
    *lo = b.first;
    *hi = b.second;
  });
}

void memfront_front_options_init(memfront_front_options* o) {
  if (!o) return;
  const memfront::FrontOptions d;
  o->L = d.L;
  o->h = d.h;
  o->newton_tol = d.newton_tol;
  o->fp_tol = d.fp_tol;
  o->max_newton_iter = d.max_newton_iter;
}

memfront_status memfront_solve_profile(const memfront_problem* p, const memfront_kernel* k,
                                       double v, const memfront_front_options* o,
                                       memfront_front** out) {
  if (auto s = require(p && k && out, "null argument"); s != MEMFRONT_OK) return s;
  return guarded([&] {
    *out = new memfront_front{memfront::solve_profile(p->p, k->k, v, to_front_options(o))};
  });
}

memfront_status memfront_solve_fixed_point(const memfront_problem* p, const memfront_kernel* k,
                                           const memfront_front_options* o, memfront_front** out) {
  if (auto s = require(p && k && out, "null argument"); s != MEMFRONT_OK) return s;
  return guarded([&] {
    *out = new memfront_front{memfront::solve_fixed_point(p->p, k->k, to_front_options(o))};
  });
}

memfront_status memfront_front_speed(const memfront_front* f, double* out) {
  if (auto s = require(f && out, "null argument"); s != MEMFRONT_OK) return s;
  *out = f->s.speed;
  return MEMFRONT_OK;
}

memfront_status memfront_front_fixed_point_gap(const memfront_front* f, double* out) {
  if (auto s = require(f && out, "null argument"); s != MEMFRONT_OK) return s;
  *out = f->s.fixed_point_gap;
  return MEMFRONT_OK;
}

memfront_status memfront_front_size(const memfront_front* f, size_t* out) {
  if (auto s = require(f && out, "null argument"); s != MEMFRONT_OK) return s;
  *out = f->s.xi_grid.size();
  return MEMFRONT_OK;
}

memfront_status memfront_front_profile(const memfront_front* f, double* xi, double* u,
                                       size_t cap) {
  if (auto s = require(f != nullptr, "null front"); s != MEMFRONT_OK) return s;
  const size_t n = std::min(cap, f->s.xi_grid.size());
  for (size_t i = 0; i < n; ++i) {
    if (xi) xi[i] = f->s.xi_grid[i];
    if (u) u[i] = f->s.profile[i];
  }
  return MEMFRONT_OK;
}

void memfront_front_free(memfront_front* f) { delete f; }

void memfront_evolve_options_init(memfront_evolve_options* o) {
  if (!o) return;
  const memfront::EvolveOptions d;
  o->X = d.X;
  o->dx = d.dx;
  o->dt = d.dt;
  o->t_end = d.t_end;
  o->output_every = d.output_every;
  o->front_offset = d.front_offset;
}

memfront_status memfront_measure_speed(const memfront_problem* p, const memfront_kernel* k,
                                       const memfront_evolve_options* o, double* speed,
                                       double* fit_residual) {
  if (auto s = require(p && k && speed, "null argument"); s != MEMFRONT_OK) return s;
  return guarded([&] {
    memfront::EvolveOptions e;
    if (o) {
      e.X = o->X;
      e.dx = o->dx;
      e.dt = o->dt;
      e.t_end = o->t_end;
      e.output_every = o->output_every;
      e.front_offset = o->front_offset;
    }
    memfront::Evolver ev(p->p, k->k, e);
    memfront::FieldState fs = ev.make_front_state();
    const memfront::RunResult rr = ev.run_to_front(fs);
    *speed = rr.speed;
    if (fit_residual) *fit_residual = rr.fit_residual;
  });
}

memfront_status memfront_run_experiment(const char* verb, const char* config_path,
                                        const char* out_dir, const char* const* overrides,
                                        size_t n_overrides, int* exit_code, char** summary_json) {
  if (auto s = require(verb && config_path && exit_code, "null argument"); s != MEMFRONT_OK)
    return s;
  return guarded([&] {
    std::vector<std::string> ov;
    for (size_t i = 0; i < n_overrides; ++i)
      if (overrides && overrides[i]) ov.emplace_back(overrides[i]);
    std::string summary;
    *exit_code = memfront::run_experiment(verb, config_path, out_dir ? out_dir : "", ov, summary);
    if (*exit_code != 0) g_last_error = summary;
    if (summary_json) *summary_json = dup_string(summary);
  });
}

void memfront_string_free(char* s) { std::free(s); }

}  // extern "C"
