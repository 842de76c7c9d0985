#pragma once

#include <functional>
#include <utility>
#include <vector>

#include "core/errors.hpp"
#include "core/evolve.hpp"
#include "core/kernels.hpp"

namespace memfront {

// Eigen-decomposition of the micro operator w |-> -(D_w w_y)_y + b w on the
// unit torus, discretized with a symmetric flux-form second-order stencil.
// psi are L2(0,1)-orthonormal w.r.t. the rectangle rule (exact trapezoid on
// the torus), lambda ascending.
struct SturmBasis {
  std::vector<double> y;
  double h = 0.0;
  std::vector<double> lambda;
  std::vector<std::vector<double>> psi;

  // coefficients h * sum_j f(y_j) psi_n(y_j), one per mode
  std::vector<double> project(const std::function<double(double)>& f) const;
};

SturmBasis sturm_solve(const std::function<double(double)>& D_w,
                       const std::function<double(double)>& b, std::size_t n_y,
                       std::size_t n_modes = 64);

// Collapses the linear micro coupling (alpha, beta) into a sum-of-exponentials
// kernel: one channel per mode with weight <alpha,psi_n><beta,psi_n> and rate
// lambda_n. Requires both expansions to capture their functions to trunc_tol
// (relative Parseval defect), else ResolutionError.
MemoryKernel kernel_from_coupling(const SturmBasis& basis,
                                  const std::function<double(double)>& alpha,
                                  const std::function<double(double)>& beta,
                                  double trunc_tol = 1e-8);

// Macroscopic field V(t,x) coupled to a micro field W(t,x,y):
//   dV/dt = D_v_eff V_xx + F_mean(V) + int alpha(y) W(.,y) dy
//   dW/dt = (D_w(y) W_y)_y - b(y) W + beta(y) V        (periodic in y)
// F_mean is the y-averaged reaction v -> int Phi(y,v) dy, supplied already
// averaged because V carries no y-dependence.
struct TwoScaleSystem {
  double D_v_eff = 1.0;
  std::function<double(double)> F_mean;
  std::function<double(double)> dF_mean;
  std::function<double(double)> alpha;
  std::function<double(double)> beta;
  std::function<double(double)> D_w;
  std::function<double(double)> b;
};

struct TwoScaleOptions {
  double X = 240.0;
  double dx = 0.1;
  std::size_t n_y = 64;
  double dt = 0.005;
  double t_end = 100.0;
  double output_every = 0.5;
  double front_offset = 0.65;
  double v_minus = 0.0;   // left plateau of the initial step
  double v_plus = 1.0;    // right plateau
  double track_level = 0.5;
  std::vector<double> snapshot_times;
};

struct TwoScaleSnapshot {
  double t = 0.0;
  std::vector<double> V;
  std::vector<double> w_mean;           // int W dy per x node
  std::vector<std::vector<double>> W;   // W[i][j] on x * y
};

struct TwoScaleResult {
  std::vector<double> x;
  std::vector<double> y;
  std::vector<double> V;
  std::vector<std::vector<double>> W;
  double t = 0.0;
  double speed = 0.0;
  double fit_residual = 0.0;
  std::vector<TrackSample> track;
  double max_mean_w = 0.0;  // max over time of max_x |int W dy|
  std::vector<TwoScaleSnapshot> snapshots;
};

TwoScaleResult simulate_two_scale(const TwoScaleSystem& sys, const TwoScaleOptions& opts);

// Same physics before averaging: every coefficient oscillates with x through
// y = x/eps, w is a scalar field whose diffusion carries the eps^2 scaling:
//   dv/dt = (D_v(x/e) v_x)_x + Phi(x/e, v) + alpha(x/e) w
//   dw/dt = e^2 (D_w(x/e) w_x)_x - b(x/e) w + beta(x/e) v
struct EpsSystem {
  std::function<double(double)> D_v;
  std::function<double(double, double)> Phi;  // (y, v)
  std::function<double(double)> alpha;
  std::function<double(double)> beta;
  std::function<double(double)> D_w;
  std::function<double(double)> b;
};

struct EpsOptions {
  double X = 240.0;
  double dx = 0.015625;
  double dt = 0.005;
  double t_end = 50.0;
  double output_every = 0.5;
  double front_offset = 0.65;
  double v_minus = 0.0;
  double v_plus = 1.0;
  double track_level = 0.5;
};

struct EpsResult {
  std::vector<double> x;
  std::vector<double> v;
  std::vector<double> w;
  double t = 0.0;
  double speed = 0.0;
  double fit_residual = 0.0;
  std::vector<TrackSample> track;
};

EpsResult simulate_eps(const EpsSystem& sys, double eps, const EpsOptions& opts);

// int rho |f - g|^2 dx with rho(x) = 1/cosh((x - center)/R); f, g on the same grid
double weighted_distance(const std::vector<double>& x, const std::vector<double>& f,
                         const std::vector<double>& g, double center, double R = 100.0);

// peak deviation of f from its centered one-period moving average inside
// [window_lo, window_hi]; isolates grid-scale oscillation from the smooth profile
double oscillation_amplitude(const std::vector<double>& x, const std::vector<double>& f,
                             double period, double window_lo, double window_hi);

}  // namespace memfront
