#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "core/bistable.hpp"
#include "core/kernels.hpp"
#include "core/tridiag.hpp"

namespace memfront {

// How the history integral is realized during time stepping.
enum class MemoryRep {
  Auto,        // Channels for exponential kernels, DelayTaps for combs, HistoryRing otherwise
  Channels,    // one linear ODE field per exponential mode (exact integrator)
  HistoryRing, // ring buffer of past fields, trapezoid convolution
  DelayTaps,   // ring buffer sized to the largest delay, tap interpolation
};

struct EvolveOptions {
  double X = 400.0;
  double dx = 0.1;
  double dt = 0.01;
  double t_end = 300.0;
  double output_every = 0.5;
  double tail_tol = 1e-8;       // history horizon for the ring representation
  MemoryRep rep = MemoryRep::Auto;
  double front_offset = 0.5;    // initial interface position, fraction of X
};

struct FieldState {
  std::vector<double> x;
  std::vector<double> u;
  double t = 0.0;

  // channels: w[m][i] tracks int_0^inf e^{-rate_m tau} b_m u(t - tau, x_i) dtau
  std::vector<std::vector<double>> w;
  // ring: past fields, ring[0] = u(t), ring[j] = u(t - j dt)
  std::vector<std::vector<double>> ring;
  std::size_t ring_head = 0;
};

struct TrackSample {
  double t = 0.0;
  double x = 0.0;
};

struct RunResult {
  double speed = 0.0;
  double fit_residual = 0.0;  // rms of the linear fit on the tail window
  std::vector<TrackSample> track;
};

// Position of the upward level crossing, linearly interpolated; when several
// crossings exist the one nearest `hint` wins. Empty if the level is never
// crossed upward.
std::optional<double> track_level_crossing(const std::vector<double>& x,
                                           const std::vector<double>& u, double level,
                                           std::optional<double> hint = std::nullopt);

// Least-squares line through the samples with t >= window start; returns
// {slope, rms residual}. The window is the final `window_fraction` of the
// sampled time range.
std::pair<double, double> fit_front_speed(const std::vector<TrackSample>& samples,
                                          double window_fraction = 0.5);

// IMEX integrator for the memory reaction-diffusion equation on [0, X] with
// zero-flux ends: diffusion implicit (prefactored tridiagonal solve), reaction
// and memory feedback explicit. The memory term is gamma * (unit-mass history
// average), realized per EvolveOptions::rep.
class Evolver {
 public:
  Evolver(BistableProblem p, MemoryKernel k, EvolveOptions opts);

  const EvolveOptions& options() const { return opts_; }
  const Roots& roots() const { return roots_; }

  // monotone front-like data between the outer equilibria, consistent memory
  FieldState make_front_state() const;
  // same memory backfill (constant history equal to u0) for caller data
  FieldState make_state(std::vector<double> u0) const;

  void step(FieldState& s) const;

  // Evolves until t_end, tracking the middle-equilibrium crossing at output
  // times and fitting the speed on the trailing half of the samples.
  RunResult run_to_front(FieldState& s, double t_end) const;
  RunResult run_to_front(FieldState& s) const { return run_to_front(s, opts_.t_end); }

  // explicit part diagnostics
  double stability_limit() const { return dt_limit_; }
  std::vector<double> memory_term(const FieldState& s) const;

 private:
  void check_state(const FieldState& s) const;

  BistableProblem p_;
  MemoryKernel k_;
  EvolveOptions opts_;
  Roots roots_;
  MemoryRep rep_;
  std::size_t nx_ = 0;
  double dt_limit_ = 0.0;
  TridiagFactor diffusion_;
  std::vector<Coupling> channels_;
  std::vector<double> decay_, gain_;   // per-channel exact step factors
  std::vector<double> ring_weights_;   // trapezoid weights incl. tail, ring path
  double u_lo_bound_ = 0.0, u_hi_bound_ = 0.0;
};

}  // namespace memfront
