#pragma once

#include <limits>
#include <utility>
#include <vector>

#include "core/bistable.hpp"
#include "core/kernels.hpp"

namespace memfront {

struct FrontOptions {
  double L = 60.0;    // half-width of the profile domain
  double h = 0.05;    // grid spacing (L is snapped to a multiple of h)
  double newton_tol = 1e-10;
  double fp_tol = 1e-6;
  double bc_tol = 1e-6;
  double mono_tol = 1e-4;
  double layer_tol = 1e-5;  // max |U'| allowed at the domain ends
  double tail_tol = 1e-8;   // kernel truncation for the shifted integral
  int max_newton_iter = 50;
  int max_expand = 40;
  int max_bisect = 200;
};

struct FrontSolution {
  std::vector<double> xi_grid;
  std::vector<double> profile;
  double speed = 0.0;  // c such that the profile travels as U(x - c t)
  double v = 0.0;      // imposed shift parameter of the nonlocal term
  std::pair<double, double> connects{0.0, 0.0};
  double residual_norm = 0.0;
  int newton_iterations = 0;

  // set by solve_fixed_point only
  double fixed_point_gap = std::numeric_limits<double>::quiet_NaN();
  double c_at_zero = std::numeric_limits<double>::quiet_NaN();
  bool sandwich_checked = false;  // sign/magnitude sandwich vs the v=0 speed
  bool sandwich_ok = false;
};

// Solves the profile equation
//   0 = D U'' + c U' + F(U) + gamma * int Gamma(tau) U(xi + v tau) dtau
// for (U, c) by damped Newton on [-L, L], Dirichlet ends at the outer
// equilibria, phase condition U(0) = middle equilibrium. The shifted integral
// uses kernel-exact quadrature weights against a piecewise-linear U, so any
// constant profile reproduces the tilt gamma*U exactly (v = 0 included).
FrontSolution solve_profile(const BistableProblem& p, const MemoryKernel& k, double v,
                            const FrontOptions& opts = {});

// Speed c = C(gamma, v) sampled over v_list in order, warm-starting each solve
// from the previous one. Verifies the curve is non-increasing in v within
// mono_tol (sorted by v) and throws MonotonicityViolation otherwise.
std::vector<std::pair<double, double>> speed_curve(const BistableProblem& p,
                                                   const MemoryKernel& k,
                                                   const std::vector<double>& v_list,
                                                   const FrontOptions& opts = {});

// Finds the self-consistent speed c with C(gamma, c) = c by bisection on
// g(v) = C(gamma, v) - v (continuous and strictly decreasing), expanding the
// bracket directionally from v = 0 along the sign of g. The returned front
// satisfies |C(gamma,c) - c| < fp_tol (field fixed_point_gap) and records the
// sign/magnitude sandwich of the speed against the v=0 speed when gamma >= 0.
FrontSolution solve_fixed_point(const BistableProblem& p, const MemoryKernel& k,
                                const FrontOptions& opts = {});

}  // namespace memfront
