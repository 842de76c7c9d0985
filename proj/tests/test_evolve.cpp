#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "core/bistable.hpp"
#include "core/evolve.hpp"
#include "core/kernels.hpp"
#include "core/twfront.hpp"

using namespace memfront;

namespace {

template <typename F>
std::optional<ErrorCode> thrown_code(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return std::nullopt;
}

EvolveOptions short_run() {
  EvolveOptions o;
  o.X = 200.0;
  o.dx = 0.1;
  o.dt = 0.01;
  o.t_end = 40.0;
  return o;
}

}  // namespace

TEST_CASE("level crossing tracking picks the upward crossing nearest the hint") {
  const std::vector<double> x{0.0, 1.0, 2.0, 3.0};
  const std::vector<double> u{0.0, 1.0, 0.0, 1.0};
  CHECK(*track_level_crossing(x, u, 0.5) == doctest::Approx(0.5));
  CHECK(*track_level_crossing(x, u, 0.5, 3.0) == doctest::Approx(2.5));
  CHECK(*track_level_crossing(x, u, 0.5, 0.0) == doctest::Approx(0.5));
  CHECK_FALSE(track_level_crossing(x, {0.0, 0.1, 0.2, 0.3}, 0.5).has_value());
}

TEST_CASE("speed fit recovers an exact line on the trailing window") {
  std::vector<TrackSample> samples;
  for (int i = 0; i <= 20; ++i)
    samples.push_back({0.5 * i, 3.0 - 0.25 * (0.5 * i)});
  const auto [slope, rms] = fit_front_speed(samples, 0.5);
  CHECK(slope == doctest::Approx(-0.25).epsilon(1e-12));
  CHECK(rms < 1e-12);
  CHECK(thrown_code([] { fit_front_speed({{0.0, 1.0}, {1.0, 2.0}}, 0.5); }) ==
        ErrorCode::InvalidArgument);
}

TEST_CASE("zero-weight front travels at the closed-form cubic speed") {
  const BistableProblem p = BistableProblem::cubic(0.6, 1.0, 0.0);
  const MemoryKernel k = MemoryKernel::exp_sum({{1.0, 1.0}}, 0.0);
  EvolveOptions o;
  o.X = 400.0;
  o.dx = 0.1;
  o.dt = 0.01;
  o.t_end = 200.0;
  o.front_offset = 0.35;
  Evolver ev(p, k, o);
  FieldState s = ev.make_front_state();
  const RunResult r = ev.run_to_front(s);
  CHECK(r.speed == doctest::Approx(0.2 / std::sqrt(2.0)).epsilon(2e-3));
  CHECK(r.fit_residual < 1e-3);
}

TEST_CASE("ordered initial data stay ordered under evolution") {
  // the memory feedback is nonnegative here, so the flow preserves order;
  // any crossing would be a discretization artifact
  const BistableProblem p = BistableProblem::cubic(0.6, 1.0, 0.05);
  const MemoryKernel k = MemoryKernel::exp_sum({{1.0, 1.0}}, 0.05);
  EvolveOptions o = short_run();
  o.t_end = 50.0;
  Evolver ev(p, k, o);

  FieldState lo_state = ev.make_front_state();
  std::vector<double> upper_data = lo_state.u;
  const double up = ev.roots().upper;
  for (double& v : upper_data) v += 0.05 * (up - v);
  FieldState hi_state = ev.make_state(upper_data);

  const auto steps = static_cast<std::size_t>(std::lround(o.t_end / o.dt));
  for (std::size_t n = 0; n < steps; ++n) {
    ev.step(lo_state);
    ev.step(hi_state);
  }
  double worst = -1e300;
  for (std::size_t i = 0; i < lo_state.u.size(); ++i)
    worst = std::max(worst, lo_state.u[i] - hi_state.u[i]);
  CHECK(worst <= 1e-8);
}

TEST_CASE("constant data reproduce the tilt exactly for every representation") {
  const BistableProblem p = BistableProblem::cubic(0.6, 1.0, 0.05);
  const MemoryKernel k = MemoryKernel::exp_sum({{1.0, 1.0}}, 0.05);
  for (MemoryRep rep : {MemoryRep::Channels, MemoryRep::HistoryRing}) {
    EvolveOptions o = short_run();
    o.rep = rep;
    Evolver ev(p, k, o);
    FieldState s = ev.make_state(std::vector<double>(2001, 0.7));
    const auto m = ev.memory_term(s);
    double err = 0.0;
    for (double v : m) err = std::max(err, std::abs(v - 0.05 * 0.7));
    if (rep == MemoryRep::Channels)
      CHECK(err < 1e-14);
    else
      CHECK(err < 1e-6);  // trapezoid bias of the ring path
  }
  // atomic kernel, tap interpolation
  const MemoryKernel kd = MemoryKernel::delay_comb({{0.03, 0.6}, {0.02, 1.4}});
  EvolveOptions o = short_run();
  Evolver ev(p, kd, o);
  FieldState s = ev.make_state(std::vector<double>(2001, 0.7));
  const auto m = ev.memory_term(s);
  double err = 0.0;
  for (double v : m) err = std::max(err, std::abs(v - 0.05 * 0.7));
  CHECK(err < 1e-14);
}

TEST_CASE("channel and ring representations agree on the same kernel") {
  const BistableProblem p = BistableProblem::cubic(0.6, 1.0, 0.05);
  const MemoryKernel k = MemoryKernel::exp_sum({{1.0, 1.0}}, 0.05);
  EvolveOptions o = short_run();

  o.rep = MemoryRep::Channels;
  Evolver ec(p, k, o);
  FieldState sc = ec.make_front_state();
  const RunResult rc = ec.run_to_front(sc);

  o.rep = MemoryRep::HistoryRing;
  Evolver er(p, k, o);
  FieldState sr = er.make_front_state();
  const RunResult rr = er.run_to_front(sr);

  double dmax = 0.0;
  for (std::size_t i = 0; i < sc.u.size(); ++i)
    dmax = std::max(dmax, std::abs(sc.u[i] - sr.u[i]));
  CHECK(dmax < 1e-3);
  CHECK(std::abs(rc.speed - rr.speed) < 1e-4);
}

TEST_CASE("delayed feedback agrees between evolution and the self-consistent profile") {
  const MemoryKernel kd = MemoryKernel::delay_comb({{0.03, 0.6}, {0.02, 1.4}});
  const BistableProblem p = BistableProblem::cubic(0.6, 1.0, kd.gamma());
  const FrontSolution fp = solve_fixed_point(p, kd);

  EvolveOptions o = short_run();
  o.t_end = 150.0;
  Evolver ev(p, kd, o);
  FieldState s = ev.make_front_state();
  const RunResult r = ev.run_to_front(s);
  CHECK(std::abs(r.speed - fp.speed) < 2e-3);
}

TEST_CASE("identical runs are bitwise deterministic") {
  const BistableProblem p = BistableProblem::cubic(0.6, 1.0, 0.05);
  const MemoryKernel k = MemoryKernel::exp_sum({{1.0, 1.0}}, 0.05);
  EvolveOptions o = short_run();
  o.t_end = 10.0;
  Evolver a(p, k, o), b(p, k, o);
  FieldState sa = a.make_front_state(), sb = b.make_front_state();
  const auto steps = static_cast<std::size_t>(std::lround(o.t_end / o.dt));
  for (std::size_t n = 0; n < steps; ++n) {
    a.step(sa);
    b.step(sb);
  }
  CHECK(std::equal(sa.u.begin(), sa.u.end(), sb.u.begin()));
}

TEST_CASE("guard rails: stability limit, escaping fields, bad initial data") {
  const BistableProblem p = BistableProblem::cubic(0.6, 1.0, 0.05);
  const MemoryKernel k = MemoryKernel::exp_sum({{1.0, 1.0}}, 0.05);

  EvolveOptions o = short_run();
  o.dt = 1.0;  // far above 0.25 / Lipschitz
  CHECK(thrown_code([&] { Evolver ev(p, k, o); }) == ErrorCode::StabilityViolation);

  o = short_run();
  Evolver ev(p, k, o);
  FieldState s = ev.make_front_state();
  s.u[5] = std::numeric_limits<double>::quiet_NaN();
  CHECK(thrown_code([&] { ev.step(s); }) == ErrorCode::NaNDetected);

  // constant data never straddle the unstable equilibrium
  FieldState flat = ev.make_state(std::vector<double>(2001, 0.9));
  CHECK(thrown_code([&] { ev.run_to_front(flat); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("front reaching the boundary aborts the run") {
  const BistableProblem p = BistableProblem::cubic(0.75, 1.0, 0.0);
  const MemoryKernel k = MemoryKernel::exp_sum({{1.0, 1.0}}, 0.0);
  EvolveOptions o;
  o.X = 30.0;
  o.dx = 0.1;
  o.dt = 0.01;
  o.t_end = 80.0;
  o.front_offset = 0.6;
  Evolver ev(p, k, o);
  FieldState s = ev.make_front_state();
  CHECK(thrown_code([&] { ev.run_to_front(s); }) == ErrorCode::FrontExited);
}
