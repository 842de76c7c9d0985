#pragma once

#include <functional>
#include <vector>

#include "core/errors.hpp"
#include "core/kernels.hpp"

namespace memfront {

// Reaction-diffusion data: diffusion constant D, reaction F, and the tilt
// gamma coming from the total memory weight. The effective local reaction is
// always the tilted one, f_gamma(u) = F(u) + gamma*u.
struct BistableProblem {
  double D = 1.0;
  double gamma = 0.0;
  std::function<double(double)> F;
  std::function<double(double)> dF;
  std::vector<double> poly;  // ascending coefficients when F is polynomial
  bool is_cubic = false;
  double cubic_a = 0.0;
  double scan_lo = -1.0;  // root-scan window for non-polynomial F
  double scan_hi = 2.0;

  // F(u) = -u(u-a)(u-1). The classical cubic; with a delay-type kernel of
  // strength -beta this is the tilted family studied by the sweep tools
  // (gamma = -beta).
  static BistableProblem cubic(double a, double D = 1.0, double gamma = 0.0);

  // F given by ascending polynomial coefficients.
  static BistableProblem polynomial(std::vector<double> coeffs, double D = 1.0,
                                    double gamma = 0.0);

  // Arbitrary callback reaction with derivative; roots are sought in
  // [scan_lo, scan_hi].
  static BistableProblem general(std::function<double(double)> F,
                                 std::function<double(double)> dF, double D = 1.0,
                                 double gamma = 0.0, double scan_lo = -1.0,
                                 double scan_hi = 2.0);

  double f_gamma(double u) const { return F(u) + gamma * u; }
  double df_gamma(double u) const { return dF(u) + gamma; }
  // Cubic convention: the kernel is -beta * exp(-tau), so beta = -gamma.
  double beta() const { return -gamma; }
};

struct Roots {
  double lower = 0.0;
  double middle = 0.0;
  double upper = 0.0;
};

// Chord and level data bounding the tilted reaction, used by speed_bounds:
//   f_gamma >= -phi_star on [lower, middle],  f_gamma <= phi_sup on [middle, upper],
//   f_gamma(u) >= alpha_star*(u - a_star) on [a_star, b_star] in [middle, upper],
//   f_gamma(u) <= alpha_sup *(u - a_sup ) on [b_sup , a_sup ] in [lower, middle].
struct EstimateParams {
  double phi_star = 0.0;
  double phi_sup = 0.0;
  double a_star = 0.0, b_star = 0.0, alpha_star = 0.0;
  double a_sup = 0.0, b_sup = 0.0, alpha_sup = 0.0;
};

// The three equilibria of the tilted reaction, sorted, with the stability
// pattern stable/unstable/stable verified. Throws NotBistable otherwise.
Roots tilted_roots(const BistableProblem& p);

// Integral of f_gamma between the outer equilibria. Its sign is opposite to
// the front-speed sign of the local equation; zero means a standing wave.
double area_functional(const BistableProblem& p);

// Explicit front speed of the local cubic equation with reaction
// -u(u-a)(u-1) - beta*u and unit diffusion:
//   (1 + a - 3*sqrt((1-a)^2 - 4*beta)) / (2*sqrt(2)).
double mckean_speed(double a, double beta);

// Coupling value where the cubic front speed changes sign:
// beta0(a) = (2a^2 - 5a + 2)/9, for a in [1/2, 1].
double beta_zero(double a);

// Derives level bounds and chords for speed_bounds by grid search, then
// validates them by dense sampling. Deterministic for a fixed resolution.
EstimateParams estimate_params(const BistableProblem& p);

// Re-checks every EstimateParams inequality on a dense grid; throws
// InvalidArgument naming the first violated clause.
void validate_estimates(const BistableProblem& p, const EstimateParams& e);

// Largest tilt (scanned, with a safety margin) for which the problem at that
// gamma still has the three-root structure.
double gamma_star(const BistableProblem& p);

// Closed-form bracket for the front speed of the shifted nonlocal equation
// at shift v. Requires gamma >= 0 (OutOfRegime otherwise). At v = 0 the two
// one-sided estimates both apply and are intersected.
std::pair<double, double> speed_bounds(const BistableProblem& p, const EstimateParams& e,
                                       const MemoryKernel& k, double v);

}  // namespace memfront
