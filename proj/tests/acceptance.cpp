// End-to-end checks for the shipped behaviors, one printed line each. Every
// tolerance is written out literally next to the measurement it guards.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "core/bistable.hpp"
#include "core/errors.hpp"
#include "core/evolve.hpp"
#include "core/experiment.hpp"
#include "core/kernels.hpp"
#include "core/twfront.hpp"
#include "core/twoscale.hpp"

using namespace memfront;

namespace {

constexpr double kPi = 3.14159265358979323846;

int g_failures = 0;

double now() {
  using namespace std::chrono;
  return duration<double>(steady_clock::now().time_since_epoch()).count();
}

void report(int id, const char* name, bool ok, const std::string& detail) {
  std::printf("%s  %2d %s  [%s]\n", ok ? "PASS" : "FAIL", id, name, detail.c_str());
  std::fflush(stdout);
  if (!ok) ++g_failures;
}

std::string fmt(const char* f, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

// runs body under a timer; any solver error fails the criterion with its message
void criterion(int id, const char* name,
               const std::function<std::pair<bool, std::string>()>& body) {
  try {
    const double t0 = now();
    auto [ok, detail] = body();
    detail += fmt(" | %.1fs", now() - t0);
    report(id, name, ok, detail);
  } catch (const Error& e) {
    report(id, name, false, std::string(error_code_name(e.code())) + ": " + e.what());
  } catch (const std::exception& e) {
    report(id, name, false, std::string("unexpected: ") + e.what());
  }
}

// interpolated zero crossings of col over consecutive clean sweep rows
std::vector<double> crossings(const std::vector<SweepRow>& rows,
                              const std::function<double(const SweepRow&)>& col) {
  std::vector<double> out;
  for (std::size_t i = 0; i + 1 < rows.size(); ++i) {
    if (rows[i].status != "ok" || rows[i + 1].status != "ok") continue;
    const double f0 = col(rows[i]), f1 = col(rows[i + 1]);
    if (std::isnan(f0) || std::isnan(f1) || f0 * f1 > 0.0) continue;
    out.push_back(rows[i].beta - f0 * (rows[i + 1].beta - rows[i].beta) / (f1 - f0));
  }
  return out;
}

bool any_near(const std::vector<double>& xs, double target, double tol) {
  for (double x : xs)
    if (std::abs(x - target) <= tol) return true;
  return false;
}

// coupling pair of the averaging demo, also hardcoded in the experiment driver
double alpha_fn(double y) {
  return std::sqrt(2.0) * (std::sin(2 * kPi * y) + std::sin(4 * kPi * y));
}
double beta_fn(double y) {
  return std::sqrt(2.0) *
         (std::sin(2 * kPi * y) + 10.0 * std::sin(4 * kPi * y) - std::sin(6 * kPi * y));
}

}  // namespace

int main() {
  const double c_cubic = 0.2 / std::sqrt(2.0);  // closed-form speed at a=0.6, no tilt

  criterion(1, "closed-form cubic speed, both routes", [&] {
    const BistableProblem p = BistableProblem::cubic(0.6, 1.0, 0.0);
    const MemoryKernel k = MemoryKernel::exp_sum({{1.0, 1.0}}, 0.0);

    double t0 = now();
    const FrontSolution s = solve_fixed_point(p, k);
    const double fp_time = now() - t0;

    t0 = now();
    EvolveOptions eo;
    eo.front_offset = 0.35;
    Evolver ev(p, k, eo);
    FieldState fs = ev.make_front_state();
    const RunResult rr = ev.run_to_front(fs);
    const double ev_time = now() - t0;

    const double e_fp = std::abs(s.speed - c_cubic);
    const double e_ev = std::abs(rr.speed - c_cubic);
    const bool ok = e_fp < 1e-2 && e_ev < 1e-2 && fp_time < 30.0 && ev_time < 30.0;
    return std::make_pair(
        ok, fmt("fp %.6f (err %.1e, %.1fs), evolve %.6f (err %.1e, %.1fs), tol 1e-2, 30s each",
                s.speed, e_fp, fp_time, rr.speed, e_ev, ev_time));
  });

  // one sweep feeds the next five criteria
  std::optional<SweepOutcome> sweep;
  double sweep_time = 0.0;
  double b0 = 0.0;

  criterion(2, "speed sign changes at the predicted couplings", [&] {
    b0 = beta_zero(0.6);
    const nlohmann::json cfg = {
        {"nonlinearity", {{"type", "cubic"}, {"a", 0.6}}},
        {"kernel", {{"form", "exp_sum"}, {"terms", {{1.0, 1.0}}}}},
        {"evolve", {{"X", 400.0}, {"t_end", 200.0}}},
    };
    const double t0 = now();
    sweep = run_speed_sweep(cfg);
    sweep_time = now() - t0;

    const double step = 0.005;
    const auto cross_fp = crossings(sweep->rows, [](const SweepRow& r) { return r.c_fp; });
    const auto cross_ev = crossings(sweep->rows, [](const SweepRow& r) { return r.c_evolve; });
    const auto cross_diff =
        crossings(sweep->rows, [](const SweepRow& r) { return r.c_fp - r.mckean; });

    const bool ok = any_near(cross_fp, b0, step) && any_near(cross_ev, b0, step) &&
                    any_near(cross_diff, b0, step) && any_near(cross_diff, 0.0, step) &&
                    sweep_time < 900.0;
    std::string where = "fp:";
    for (double x : cross_fp) where += fmt(" %.4f", x);
    where += " evolve:";
    for (double x : cross_ev) where += fmt(" %.4f", x);
    where += " gap-to-local:";
    for (double x : cross_diff) where += fmt(" %.4f", x);
    return std::make_pair(ok, where + fmt(" vs %.4f and 0, one step = %.3f", b0, step));
  });

  criterion(3, "fixed-point speed stays between zero and the local speed", [&] {
    if (!sweep) return std::make_pair(false, std::string("sweep unavailable"));
    int checked = 0, inside = 0;
    for (const auto& r : sweep->rows) {
      if (r.status != "ok" || !r.in_regime) continue;
      ++checked;
      inside += r.bracket_ok == 1;
    }
    return std::make_pair(checked > 0 && inside == checked,
                          fmt("%d/%d rows inside [min(0,local), max(0,local)] +- 5e-3", inside,
                              checked));
  });

  criterion(4, "auxiliary speed map is non-increasing in the shift", [&] {
    const BistableProblem p = BistableProblem::cubic(0.6, 1.0, 0.05);
    const MemoryKernel k = MemoryKernel::exp_sum({{1.0, 1.0}}, 0.05);
    const auto curve = speed_curve(p, k, {-0.5, -0.25, 0.0, 0.25, 0.5});
    double worst_rise = 0.0;
    for (std::size_t i = 1; i < curve.size(); ++i)
      worst_rise = std::max(worst_rise, curve[i].second - curve[i - 1].second);
    std::string vals;
    for (const auto& [v, c] : curve) vals += fmt(" %.5f", c);
    return std::make_pair(worst_rise <= 1e-4,
                          fmt("C over shifts:%s, worst rise %.1e, tol 1e-4", vals.c_str(),
                              worst_rise));
  });

  criterion(5, "front speeds respect the a-priori intervals", [&] {
    int inside = 0, total = 0;
    double worst_violation = 0.0;
    for (double beta : {-0.05, -0.02, -0.01}) {
      const double gamma = -beta;
      const BistableProblem p = BistableProblem::cubic(0.6, 1.0, gamma);
      const MemoryKernel k = MemoryKernel::exp_sum({{1.0, 1.0}}, gamma);
      const EstimateParams est = estimate_params(p);
      for (double v : {-0.3, 0.0, 0.3}) {
        const auto [lo, hi] = speed_bounds(p, est, k, v);
        const double c = solve_profile(p, k, v).speed;
        ++total;
        if (c >= lo - 1e-9 && c <= hi + 1e-9) ++inside;
        worst_violation = std::max({worst_violation, lo - c, c - hi});
      }
    }
    return std::make_pair(inside == total,
                          fmt("%d/%d speeds inside their interval, worst overshoot %.1e",
                              inside, total, std::max(0.0, worst_violation)));
  });

  criterion(6, "fixed-point self-consistency gap", [&] {
    if (!sweep) return std::make_pair(false, std::string("sweep unavailable"));
    double worst = 0.0;
    int checked = 0;
    for (const auto& r : sweep->rows) {
      if (r.status != "ok" || std::isnan(r.fp_gap)) continue;
      ++checked;
      worst = std::max(worst, std::abs(r.fp_gap));
    }
    return std::make_pair(checked > 0 && worst < 1e-6,
                          fmt("worst |C(gamma,c)-c| = %.2e over %d solves, tol 1e-6", worst,
                              checked));
  });

  criterion(7, "standing front at the sign-change coupling", [&] {
    const MemoryKernel k = MemoryKernel::exp_sum({{1.0, 1.0}}, -b0);
    const BistableProblem p = BistableProblem::cubic(0.6, 1.0, -b0);
    const FrontSolution s = solve_fixed_point(p, k);
    return std::make_pair(std::abs(s.speed) < 1e-4,
                          fmt("|c| = %.2e at coupling %.6f, tol 1e-4", std::abs(s.speed), b0));
  });

  criterion(8, "micro eigenvalues and collapsed weight match closed forms", [&] {
    const double t0 = now();
    const auto one = [](double) { return 1.0; };
    const SturmBasis basis = sturm_solve(one, one, 256, 16);
    const double lam2_exact = 1.0 + 4.0 * kPi * kPi;
    const double rel = std::abs(basis.lambda[1] - lam2_exact) / lam2_exact;

    const MemoryKernel k = kernel_from_coupling(basis, alpha_fn, beta_fn);
    const double gamma_exact = 1.0 / (1.0 + 4.0 * kPi * kPi) + 10.0 / (1.0 + 16.0 * kPi * kPi);
    const double dg = std::abs(k.gamma() - gamma_exact);
    const double dt = now() - t0;
    return std::make_pair(rel < 1e-4 && dg < 1e-4 && dt < 5.0,
                          fmt("lambda_2 rel err %.1e (tol 1e-4), gamma err %.1e vs %.6f "
                              "(tol 1e-4)",
                              rel, dg, gamma_exact));
  });

  criterion(9, "resolved two-scale run agrees with its collapsed kernel", [&] {
    const double t0 = now();
    const TwoScaleOutcome out = run_two_scale_demo(nlohmann::json::object());
    const double dt = now() - t0;
    const double diff = std::abs(out.sim.speed - out.scalar_speed);
    const bool ok = diff < 5e-3 && out.sim.max_mean_w < 1e-6 && dt < 300.0;
    return std::make_pair(ok, fmt("two-scale %.6f vs scalar %.6f (diff %.1e, tol 5e-3), "
                                  "max |int W dy| = %.1e (tol 1e-6)",
                                  out.sim.speed, out.scalar_speed, diff, out.sim.max_mean_w));
  });

  criterion(10, "ordered initial data stay ordered", [&] {
    const double gamma = 0.05;
    const BistableProblem p = BistableProblem::cubic(0.6, 1.0, gamma);
    const MemoryKernel k = MemoryKernel::exp_sum({{1.0, 1.0}}, gamma);
    const Roots roots = tilted_roots(p);

    EvolveOptions eo;
    eo.X = 200.0;
    eo.t_end = 50.0;
    Evolver ev(p, k, eo);
    FieldState lo_state = ev.make_front_state();
    std::vector<double> upper = lo_state.u;
    for (double& u : upper) u += 0.05 * (roots.upper - u);
    FieldState hi_state = ev.make_state(upper);

    double undershoot = 0.0;
    while (lo_state.t < eo.t_end - 0.5 * eo.dt) {
      ev.step(lo_state);
      ev.step(hi_state);
      for (std::size_t i = 0; i < lo_state.u.size(); ++i)
        undershoot = std::max(undershoot, lo_state.u[i] - hi_state.u[i]);
    }
    return std::make_pair(undershoot < 1e-8,
                          fmt("worst undershoot %.2e over T=50, tol 1e-8", undershoot));
  });

  criterion(11, "finer microstructure tracks the averaged front closer", [&] {
    const auto one = [](double) { return 1.0; };
    const SturmBasis basis = sturm_solve(one, one, 64, 16);
    const MemoryKernel k = kernel_from_coupling(basis, alpha_fn, beta_fn);
    const BistableProblem p = BistableProblem::cubic(0.25, 1.0, k.gamma());
    const Roots roots = tilted_roots(p);

    TwoScaleSystem tsys;
    tsys.D_v_eff = 1.0;  // harmonic mean of the oscillating diffusion below
    tsys.F_mean = p.F;
    tsys.dF_mean = p.dF;
    tsys.alpha = alpha_fn;
    tsys.beta = beta_fn;
    tsys.D_w = one;
    tsys.b = one;
    TwoScaleOptions topts;
    topts.t_end = 50.0;
    topts.v_minus = roots.lower;
    topts.v_plus = roots.upper;
    topts.track_level = roots.middle;
    const TwoScaleResult ref = simulate_two_scale(tsys, topts);

    EpsSystem sys;
    sys.D_v = [](double y) { return 1.0 / (1.0 + 0.5 * std::cos(2 * kPi * y)); };
    sys.Phi = [&p](double, double v) { return p.F(v); };
    sys.alpha = alpha_fn;
    sys.beta = beta_fn;
    sys.D_w = one;
    sys.b = one;
    EpsOptions opts;
    opts.t_end = 50.0;
    opts.v_minus = roots.lower;
    opts.v_plus = roots.upper;
    opts.track_level = roots.middle;

    double dist[2] = {0, 0}, v_amp[2] = {0, 0}, w_amp[2] = {0, 0};
    const double eps_vals[2] = {2.5, 0.25};
    for (int j = 0; j < 2; ++j) {
      const EpsResult r = simulate_eps(sys, eps_vals[j], opts);
      std::vector<double> vref(r.x.size());
      for (std::size_t i = 0; i < r.x.size(); ++i) {
        const double s = r.x[i] / topts.dx;
        const auto cell = std::min<std::size_t>(static_cast<std::size_t>(s), ref.x.size() - 2);
        const double w = s - static_cast<double>(cell);
        vref[i] = (1.0 - w) * ref.V[cell] + w * ref.V[cell + 1];
      }
      const double xf = r.track.back().x;
      dist[j] = weighted_distance(r.x, r.v, vref, xf);
      v_amp[j] = oscillation_amplitude(r.x, r.v, eps_vals[j], xf - 20.0, xf + 20.0);
      w_amp[j] = oscillation_amplitude(r.x, r.w, eps_vals[j], xf - 20.0, xf + 20.0);
    }

    const bool ok = dist[1] < 0.3 * dist[0] && v_amp[1] < 0.3 * v_amp[0] &&
                    w_amp[0] > 0.06 && w_amp[0] < 0.3 && w_amp[1] > 0.06 && w_amp[1] < 0.3;
    return std::make_pair(
        ok, fmt("dist %.4g -> %.4g (need < 0.3x), v osc %.3g -> %.3g (need < 0.3x), "
                "w osc %.3g / %.3g (need within [0.06, 0.3])",
                dist[0], dist[1], v_amp[0], v_amp[1], w_amp[0], w_amp[1]));
  });

  std::printf("%d of 11 criteria failed\n", g_failures);
  return g_failures;
}
