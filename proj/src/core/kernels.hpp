#pragma once

#include <span>
#include <vector>

#include "core/errors.hpp"

namespace memfront {

// One exponential mode: coeff * exp(-rate * tau).
struct ExpTerm {
  double coeff = 0.0;
  double rate = 1.0;
};

// Point mass: weight * delta(tau - delay).
struct DelayTap {
  double weight = 0.0;
  double delay = 0.0;
};

// Linear relaxation channel  w' = b*u - rate*w  feeding back  a*w  into the
// field equation. A set of channels is equivalent to an exponential-sum
// memory kernel with strength gamma = sum a*b/rate.
struct Coupling {
  double a = 0.0;
  double b = 0.0;
  double rate = 1.0;
};

struct KernelMoments {
  double total = 0.0;       // integral of the normalized density (== 1)
  double mean_delay = 0.0;  // first moment of the normalized density
};

// Normalized memory weight Gamma(tau) on [0, inf) together with the coupling
// strength gamma that multiplies the history integral. The density always
// integrates to one; gamma carries the sign and magnitude of the feedback.
class MemoryKernel {
 public:
  enum class Form { ExpSum, DelayComb, Tabulated };

  // Normalizes the given exponential shape to unit mass and attaches gamma.
  // Mixed-sign coefficients are allowed as long as the resulting density is
  // nonnegative.
  static MemoryKernel exp_sum(std::vector<ExpTerm> terms, double gamma);

  // Builds the kernel realized by a bank of relaxation channels. gamma is
  // derived from the couplings: gamma = sum a_i*b_i/rate_i.
  static MemoryKernel from_pde_ode(std::span<const Coupling> channels);

  // Point masses at positive delays; gamma = sum of the raw weights.
  static MemoryKernel delay_comb(std::vector<DelayTap> taps);
  // Same, but weights are renormalized and gamma is prescribed.
  static MemoryKernel delay_comb(std::vector<DelayTap> taps, double gamma);

  // Piecewise-linear density on a strictly increasing grid, continued past
  // the last node by values.back()*exp(-tail_rate*(tau - tau.back())).
  static MemoryKernel tabulated(std::vector<double> tau, std::vector<double> values,
                                double tail_rate, double gamma);

  Form form() const { return form_; }
  double gamma() const { return gamma_; }
  bool atomic() const { return form_ == Form::DelayComb; }

  // Density of the normalized kernel. Throws for atomic kernels.
  double density(double tau) const;

  // Recomputes {total, mean_delay} from the stored representation. total is
  // one up to roundoff; mean_delay is the g1 moment used in speed estimates.
  KernelMoments moments() const;
  double mean_delay() const { return moments().mean_delay; }

  // Mass of the normalized kernel beyond tau.
  double tail_mass(double tau) const;

  // Smallest horizon whose tail mass is below tail_tol (default 1e-8 at the
  // call sites). Finite by construction for every admissible kernel.
  double support_bound(double tail_tol) const;

  // Trapezoid approximation of  int_0^{tau_max} Gamma(tau) u(t - tau) dtau
  // with tail correction, for equispaced history samples
  // history[i] = u(t - i*dt). Atomic kernels interpolate the taps instead.
  double convolve_history(std::span<const double> history, double dt, double tau_max) const;

  const std::vector<ExpTerm>& exp_terms() const { return terms_; }
  const std::vector<DelayTap>& taps() const { return taps_; }
  const std::vector<Coupling>& channels() const { return channels_; }
  const std::vector<double>& grid() const { return grid_; }
  const std::vector<double>& values() const { return values_; }
  double tail_rate() const { return tail_rate_; }

 private:
  MemoryKernel() = default;
  void validate_nonnegative() const;
  void check_unit_mass() const;

  Form form_ = Form::ExpSum;
  double gamma_ = 0.0;
  std::vector<ExpTerm> terms_;      // ExpSum, normalized
  std::vector<DelayTap> taps_;      // DelayComb, weights sum to 1
  std::vector<Coupling> channels_;  // kept when built via from_pde_ode
  std::vector<double> grid_, values_;  // Tabulated, normalized
  double tail_rate_ = 1.0;
};

}  // namespace memfront
