#include "core/experiment.hpp"

#include <atomic>
#include <functional>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <thread>

#include "core/config.hpp"
#include "core/evolve.hpp"

namespace memfront {
namespace {

using nlohmann::json;

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

std::ofstream open_out(const std::string& out_dir, const std::string& name) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw Error(ErrorCode::IoError, "cannot create output directory " + out_dir);
  std::ofstream f(fs::path(out_dir) / name);
  if (!f) throw Error(ErrorCode::IoError, "cannot open " + name + " under " + out_dir);
  return f;
}

std::size_t worker_count(std::size_t jobs) {
  std::size_t n = std::thread::hardware_concurrency();
  if (const char* env = std::getenv("MEMFRONT_THREADS")) {
    const long parsed = std::strtol(env, nullptr, 10);
    if (parsed > 0) n = static_cast<std::size_t>(parsed);
  }
  return std::max<std::size_t>(1, std::min(n, jobs));
}

// linear-interpolated zero crossings of column(i) over consecutive clean rows
json sign_changes(const std::vector<SweepRow>& rows,
                  const std::function<double(const SweepRow&)>& column) {
  json where = json::array();
  for (std::size_t i = 0; i + 1 < rows.size(); ++i) {
    if (rows[i].status != "ok" || rows[i + 1].status != "ok") continue;
    const double f0 = column(rows[i]), f1 = column(rows[i + 1]);
    if (std::isnan(f0) || std::isnan(f1)) continue;
    if (f0 == 0.0) {
      where.push_back(rows[i].beta);
    } else if (f0 * f1 < 0.0) {
      where.push_back(rows[i].beta - f0 * (rows[i + 1].beta - rows[i].beta) / (f1 - f0));
    }
  }
  if (!rows.empty() && rows.back().status == "ok" && column(rows.back()) == 0.0)
    where.push_back(rows.back().beta);
  return where;
}

double cubic_param(const json& cfg) {
  if (!cfg.contains("nonlinearity") || !cfg["nonlinearity"].contains("type") ||
      cfg["nonlinearity"]["type"] != "cubic" || !cfg["nonlinearity"].contains("a"))
    throw Error(ErrorCode::ConfigError, "this experiment needs the cubic nonlinearity with \"a\"");
  return cfg["nonlinearity"]["a"].get<double>();
}

double beta_zero_or_nan(double a) {
  try {
    return beta_zero(a);
  } catch (const Error&) {
    return std::numeric_limits<double>::quiet_NaN();
  }
}

}  // namespace

SweepOutcome run_speed_sweep(const nlohmann::json& cfg) {
  const double a = cubic_param(cfg);
  const json sweep = cfg.value("sweep", json::object());
  const double from = sweep.value("beta_from", -0.06);
  const double to = sweep.value("beta_to", 0.03);
  const double step = sweep.value("beta_step", 0.005);
  if (!(step > 0.0) || to < from)
    throw Error(ErrorCode::ConfigError, "sweep needs beta_from <= beta_to and beta_step > 0");

  const auto n_rows = static_cast<std::size_t>(std::lround((to - from) / step)) + 1;
  const EvolveOptions eopts = evolve_options_from_config(cfg);
  const FrontOptions fopts = front_options_from_config(cfg);
  kernel_from_config(cfg, 0.0);  // schema problems fail the sweep, not every row

  SweepOutcome out;
  out.rows.resize(n_rows);

  std::atomic<std::size_t> next{0};
  auto work = [&]() {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n_rows) return;
      SweepRow& row = out.rows[i];
      row.beta = from + step * static_cast<double>(i);
      row.gamma = -row.beta;
      try {
        row.mckean = mckean_speed(a, row.beta);
        row.beta0 = beta_zero_or_nan(a);
        const BistableProblem p = BistableProblem::cubic(a, 1.0, row.gamma);
        tilted_roots(p);  // bistability gate before any solve
        row.in_regime = row.gamma >= 0.0;
        const MemoryKernel k = kernel_from_config(cfg, row.gamma);

        Evolver ev(p, k, eopts);
        FieldState fs = ev.make_front_state();
        const RunResult rr = ev.run_to_front(fs);
        row.c_evolve = rr.speed;
        row.evolve_residual = rr.fit_residual;

        const FrontSolution sol = solve_fixed_point(p, k, fopts);
        row.c_fp = sol.speed;
        row.fp_gap = sol.fixed_point_gap;
        row.c_at_zero = sol.c_at_zero;

        if (row.in_regime) {
          const double lo = std::min(0.0, row.mckean) - 5e-3;
          const double hi = std::max(0.0, row.mckean) + 5e-3;
          row.bracket_ok = (row.c_fp >= lo && row.c_fp <= hi) ? 1 : 0;
        }
      } catch (const Error& e) {
        row.status = error_code_name(e.code());
      } catch (const std::exception&) {
        row.status = "error";
      }
    }
  };

  const std::size_t n_workers = worker_count(n_rows);
  if (n_workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < n_workers; ++t) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }

  for (const auto& row : out.rows)
    if (row.status != "ok") ++out.failures;

  out.summary = {
      {"experiment", "speed_sweep"},
      {"a", a},
      {"beta_from", from},
      {"beta_to", to},
      {"beta_step", step},
      {"rows", n_rows},
      {"failures", out.failures},
      {"beta_zero", beta_zero_or_nan(a)},
      {"evolve", {{"X", eopts.X}, {"dx", eopts.dx}, {"dt", eopts.dt}, {"t_end", eopts.t_end}}},
      {"front", {{"L", fopts.L}, {"h", fopts.h}, {"fp_tol", fopts.fp_tol}}},
      {"sign_changes",
       {{"c_fp", sign_changes(out.rows, [](const SweepRow& r) { return r.c_fp; })},
        {"c_evolve", sign_changes(out.rows, [](const SweepRow& r) { return r.c_evolve; })},
        {"c_fp_minus_local",
         sign_changes(out.rows, [](const SweepRow& r) { return r.c_fp - r.mckean; })}}},
  };
  return out;
}

void write_sweep_outputs(const SweepOutcome& out, const std::string& out_dir) {
  auto csv = open_out(out_dir, "sweep.csv");
  csv << "beta,gamma,in_regime,a,beta_zero,c_local,c_evolve,evolve_residual,"
         "c_fp,fp_gap,c_at_zero,bracket_ok,status\n";
  const double a = out.summary.at("a").get<double>();
  for (const auto& r : out.rows) {
    csv << fmt(r.beta) << ',' << fmt(r.gamma) << ',' << (r.in_regime ? 1 : 0) << ',' << fmt(a)
        << ',' << fmt(r.beta0) << ',' << fmt(r.mckean) << ',' << fmt(r.c_evolve) << ','
        << fmt(r.evolve_residual) << ',' << fmt(r.c_fp) << ',' << fmt(r.fp_gap) << ','
        << fmt(r.c_at_zero) << ',' << r.bracket_ok << ',' << r.status << '\n';
  }
  auto js = open_out(out_dir, "sweep_summary.json");
  js << out.summary.dump(2) << '\n';
}

FrontOutcome run_front(const nlohmann::json& cfg) {
  const MemoryKernel k = kernel_from_config(cfg);
  const BistableProblem p = problem_from_config(cfg, k.gamma());
  const FrontOptions fopts = front_options_from_config(cfg);

  FrontOutcome out;
  bool fixed_point = true;
  if (cfg.contains("front") && cfg.at("front").contains("v")) {
    out.sol = solve_profile(p, k, cfg.at("front").at("v").get<double>(), fopts);
    fixed_point = false;
  } else {
    out.sol = solve_fixed_point(p, k, fopts);
  }

  const Roots roots = tilted_roots(p);
  out.summary = {
      {"experiment", "front"},
      {"fixed_point", fixed_point},
      {"gamma", p.gamma},
      {"speed", out.sol.speed},
      {"v", out.sol.v},
      {"newton_iterations", out.sol.newton_iterations},
      {"residual_norm", out.sol.residual_norm},
      {"equilibria", {roots.lower, roots.middle, roots.upper}},
  };
  if (fixed_point) {
    out.summary["fixed_point_gap"] = out.sol.fixed_point_gap;
    out.summary["speed_at_v_zero"] = out.sol.c_at_zero;
    if (out.sol.sandwich_checked) out.summary["zero_tilt_ordering_ok"] = out.sol.sandwich_ok;
  }
  try {
    const EstimateParams est = estimate_params(p);
    const auto [lo, hi] = speed_bounds(p, est, k, out.sol.v);
    out.summary["speed_bounds"] = json::array({lo, hi});
  } catch (const Error&) {
    // bounds need the one-sided chord estimates; absence is not a solve failure
  }
  return out;
}

void write_front_outputs(const FrontOutcome& out, const std::string& out_dir) {
  auto csv = open_out(out_dir, "profile.csv");
  csv << "xi,u\n";
  for (std::size_t i = 0; i < out.sol.xi_grid.size(); ++i)
    csv << fmt(out.sol.xi_grid[i]) << ',' << fmt(out.sol.profile[i]) << '\n';
  auto js = open_out(out_dir, "front_summary.json");
  js << out.summary.dump(2) << '\n';
}

TwoScaleOutcome run_two_scale_demo(const nlohmann::json& cfg) {
  const json ts = cfg.value("two_scale", json::object());
  const double a = ts.value("a", 0.25);
  const double D_v_eff = ts.value("D_v_eff", 1.0);
  const auto n_y = static_cast<std::size_t>(ts.value("n_y", 64));
  const auto n_y_eigen = static_cast<std::size_t>(ts.value("n_y_eigen", 256));
  const auto n_modes = static_cast<std::size_t>(ts.value("n_modes", 16));

  // sinusoidal couplings driving the second and fourth micro modes, with a
  // sixth-mode read-out that the forcing never excites
  const double r2 = std::sqrt(2.0);
  auto alpha = [r2](double y) { return r2 * std::sin(2.0 * M_PI * y) + r2 * std::sin(4.0 * M_PI * y); };
  auto beta = [r2](double y) {
    return r2 * std::sin(2.0 * M_PI * y) + 10.0 * r2 * std::sin(4.0 * M_PI * y) -
           r2 * std::sin(6.0 * M_PI * y);
  };
  auto one = [](double) { return 1.0; };

  TwoScaleOutcome out;
  out.basis = sturm_solve(one, one, n_y_eigen, n_modes);
  out.coeff_a = out.basis.project(alpha);
  out.coeff_b = out.basis.project(beta);
  const MemoryKernel k_eigen = kernel_from_coupling(out.basis, alpha, beta);
  out.gamma = k_eigen.gamma();

  // the simulation sees the micro operator at its own resolution; the scalar
  // route must collapse that same operator or the comparison mixes errors
  const SturmBasis basis_sim = sturm_solve(one, one, n_y, std::min(n_modes, n_y));
  const MemoryKernel k_sim = kernel_from_coupling(basis_sim, alpha, beta);
  out.gamma_sim = k_sim.gamma();

  const BistableProblem p = BistableProblem::cubic(a, D_v_eff, k_sim.gamma());
  const Roots roots = tilted_roots(p);

  TwoScaleOptions topts;
  topts.X = ts.value("X", 240.0);
  topts.dx = ts.value("dx", 0.1);
  topts.n_y = n_y;
  topts.dt = ts.value("dt", 0.005);
  topts.t_end = ts.value("t_end", 100.0);
  topts.output_every = ts.value("output_every", 0.5);
  topts.front_offset = ts.value("front_offset", 0.65);
  topts.v_minus = roots.lower;
  topts.v_plus = roots.upper;
  topts.track_level = roots.middle;
  if (ts.contains("snapshot_times"))
    topts.snapshot_times = ts.at("snapshot_times").get<std::vector<double>>();
  else
    topts.snapshot_times = {0.0, 0.5 * topts.t_end, topts.t_end};

  TwoScaleSystem sys;
  sys.D_v_eff = D_v_eff;
  sys.F_mean = [p](double v) { return p.F(v); };
  sys.dF_mean = [p](double v) { return p.dF(v); };
  sys.alpha = alpha;
  sys.beta = beta;
  sys.D_w = one;
  sys.b = one;
  out.sim = simulate_two_scale(sys, topts);

  EvolveOptions eopts;
  eopts.X = topts.X;
  eopts.dx = topts.dx;
  eopts.dt = topts.dt;
  eopts.t_end = topts.t_end;
  eopts.output_every = topts.output_every;
  eopts.front_offset = topts.front_offset;
  Evolver ev(p, k_sim, eopts);
  FieldState fs = ev.make_front_state();
  out.scalar = ev.run_to_front(fs);
  out.scalar_speed = out.scalar.speed;

  out.summary = {
      {"experiment", "two_scale_demo"},
      {"a", a},
      {"D_v_eff", D_v_eff},
      {"gamma", out.gamma},
      {"gamma_sim", out.gamma_sim},
      {"equilibria", {roots.lower, roots.middle, roots.upper}},
      {"speed_two_scale", out.sim.speed},
      {"speed_scalar", out.scalar_speed},
      {"speed_difference", out.sim.speed - out.scalar_speed},
      {"fit_residual_two_scale", out.sim.fit_residual},
      {"fit_residual_scalar", out.scalar.fit_residual},
      {"max_mean_w", out.sim.max_mean_w},
      {"front_moves_left", out.sim.speed < 0.0},
      {"grid", {{"X", topts.X}, {"dx", topts.dx}, {"n_y", n_y}, {"dt", topts.dt}, {"t_end", topts.t_end}}},
  };
  return out;
}

void write_two_scale_outputs(const TwoScaleOutcome& out, const std::string& out_dir) {
  {
    auto csv = open_out(out_dir, "eigen.csv");
    csv << "n,lambda,a_n,b_n\n";
    for (std::size_t n = 0; n < out.basis.lambda.size(); ++n)
      csv << (n + 1) << ',' << fmt(out.basis.lambda[n]) << ',' << fmt(out.coeff_a[n]) << ','
          << fmt(out.coeff_b[n]) << '\n';
  }
  {
    auto csv = open_out(out_dir, "track.csv");
    csv << "t,x_front_two_scale\n";
    for (const auto& s : out.sim.track) csv << fmt(s.t) << ',' << fmt(s.x) << '\n';
  }
  {
    auto csv = open_out(out_dir, "track_scalar.csv");
    csv << "t,x_front_scalar\n";
    for (const auto& s : out.scalar.track) csv << fmt(s.t) << ',' << fmt(s.x) << '\n';
  }
  {
    auto csv = open_out(out_dir, "macro_field.csv");
    csv << "x";
    for (const auto& snap : out.sim.snapshots) csv << ",V_t" << fmt(snap.t);
    csv << '\n';
    for (std::size_t i = 0; i < out.sim.x.size(); ++i) {
      csv << fmt(out.sim.x[i]);
      for (const auto& snap : out.sim.snapshots) csv << ',' << fmt(snap.V[i]);
      csv << '\n';
    }
  }
  {
    auto csv = open_out(out_dir, "micro_mean.csv");
    csv << "x";
    for (const auto& snap : out.sim.snapshots) csv << ",w_mean_t" << fmt(snap.t);
    csv << '\n';
    for (std::size_t i = 0; i < out.sim.x.size(); ++i) {
      csv << fmt(out.sim.x[i]);
      for (const auto& snap : out.sim.snapshots) csv << ',' << fmt(snap.w_mean[i]);
      csv << '\n';
    }
  }
  if (!out.sim.snapshots.empty()) {
    const auto& snap = out.sim.snapshots.back();
    auto csv = open_out(out_dir, "micro_sheet.csv");
    csv << "x,y,w\n";
    for (std::size_t i = 0; i < out.sim.x.size(); i += 4)
      for (std::size_t j = 0; j < out.sim.y.size(); ++j)
        csv << fmt(out.sim.x[i]) << ',' << fmt(out.sim.y[j]) << ',' << fmt(snap.W[i][j]) << '\n';
  }
  auto js = open_out(out_dir, "two_scale_summary.json");
  js << out.summary.dump(2) << '\n';
}

KernelOutcome run_kernel_check(const nlohmann::json& cfg) {
  const MemoryKernel k = kernel_from_config(cfg);
  KernelOutcome out;
  const KernelMoments mom = k.moments();
  const double support = k.support_bound(1e-8);
  if (!k.atomic()) {
    const std::size_t n = 512;
    for (std::size_t i = 0; i <= n; ++i) {
      const double tau = support * static_cast<double>(i) / static_cast<double>(n);
      out.samples.emplace_back(tau, k.density(tau));
    }
  }
  out.summary = {
      {"experiment", "kernel_check"},
      {"gamma", k.gamma()},
      {"mass", mom.total},
      {"mean_delay", mom.mean_delay},
      {"support_99999999", support},
      {"atomic", k.atomic()},
  };
  return out;
}

void write_kernel_outputs(const KernelOutcome& out, const std::string& out_dir) {
  if (!out.samples.empty()) {
    auto csv = open_out(out_dir, "kernel.csv");
    csv << "tau,density\n";
    for (const auto& [tau, g] : out.samples) csv << fmt(tau) << ',' << fmt(g) << '\n';
  }
  auto js = open_out(out_dir, "kernel_summary.json");
  js << out.summary.dump(2) << '\n';
}

int run_experiment(const std::string& verb, const std::string& config_path,
                   const std::string& out_dir, const std::vector<std::string>& overrides,
                   std::string& summary_out) {
  try {
    json cfg = load_config(config_path);
    apply_overrides(cfg, overrides);
    const std::string dir = out_dir.empty() ? cfg.value("out_dir", std::string("out")) : out_dir;

    if (verb == "sweep") {
      SweepOutcome out = run_speed_sweep(cfg);
      write_sweep_outputs(out, dir);
      summary_out = out.summary.dump(2);
      return out.rows.empty() || out.failures * 10 > out.rows.size() ? 3 : 0;
    }
    if (verb == "front") {
      FrontOutcome out = run_front(cfg);
      write_front_outputs(out, dir);
      summary_out = out.summary.dump(2);
      return 0;
    }
    if (verb == "twoscale") {
      TwoScaleOutcome out = run_two_scale_demo(cfg);
      write_two_scale_outputs(out, dir);
      summary_out = out.summary.dump(2);
      return 0;
    }
    if (verb == "kernel-check") {
      KernelOutcome out = run_kernel_check(cfg);
      write_kernel_outputs(out, dir);
      summary_out = out.summary.dump(2);
      return 0;
    }
    throw Error(ErrorCode::ConfigError, "unknown verb \"" + verb + "\"");
  } catch (const Error& e) {
    summary_out = json{{"error", error_code_name(e.code())}, {"message", e.what()}}.dump(2);
    return e.code() == ErrorCode::ConfigError ? 2 : 3;
  } catch (const json::exception& e) {
    summary_out = json{{"error", "config"}, {"message", e.what()}}.dump(2);
    return 2;
  } catch (const std::exception& e) {
    summary_out = json{{"error", "unexpected"}, {"message", e.what()}}.dump(2);
    return 3;
  }
}

}  // namespace memfront
