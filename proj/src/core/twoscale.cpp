#include "core/twoscale.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "core/tridiag.hpp"

namespace memfront {
namespace {

constexpr double kStabilityFactor = 0.25;

struct MicroGrid {
  std::size_t ny;
  double h;
  std::vector<double> y;
  std::vector<double> d_half;  // D_w at faces (j+1/2)h, face ny-1 wraps to 0
  std::vector<double> damp;    // b at nodes
};

MicroGrid sample_micro(const std::function<double(double)>& D_w,
                       const std::function<double(double)>& b, std::size_t ny) {
  if (ny < 8) throw Error(ErrorCode::InvalidArgument, "micro grid needs at least 8 nodes");
  MicroGrid g;
  g.ny = ny;
  g.h = 1.0 / static_cast<double>(ny);
  g.y.resize(ny);
  g.d_half.resize(ny);
  g.damp.resize(ny);
  for (std::size_t j = 0; j < ny; ++j) {
    g.y[j] = g.h * static_cast<double>(j);
    g.d_half[j] = D_w(g.h * (static_cast<double>(j) + 0.5));
    g.damp[j] = b(g.y[j]);
    if (!(g.d_half[j] > 0.0))
      throw Error(ErrorCode::NotPositive, "micro diffusion coefficient must be strictly positive");
    if (!(g.damp[j] > 0.0))
      throw Error(ErrorCode::NotPositive, "micro damping coefficient must be strictly positive");
  }
  return g;
}

}  // namespace

std::vector<double> SturmBasis::project(const std::function<double(double)>& f) const {
  std::vector<double> coeff(psi.size(), 0.0);
  std::vector<double> fv(y.size());
  for (std::size_t j = 0; j < y.size(); ++j) fv[j] = f(y[j]);
  for (std::size_t n = 0; n < psi.size(); ++n) {
    double s = 0.0;
    for (std::size_t j = 0; j < y.size(); ++j) s += fv[j] * psi[n][j];
    coeff[n] = h * s;
  }
  return coeff;
}

SturmBasis sturm_solve(const std::function<double(double)>& D_w,
                       const std::function<double(double)>& b, std::size_t n_y,
                       std::size_t n_modes) {
  const MicroGrid g = sample_micro(D_w, b, n_y);
  const double inv_h2 = 1.0 / (g.h * g.h);

  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n_y),
                                            static_cast<Eigen::Index>(n_y));
  for (std::size_t j = 0; j < n_y; ++j) {
    const auto jj = static_cast<Eigen::Index>(j);
    const std::size_t prev = (j + n_y - 1) % n_y;
    const std::size_t next = (j + 1) % n_y;
    A(jj, jj) = (g.d_half[prev] + g.d_half[j]) * inv_h2 + g.damp[j];
    A(jj, static_cast<Eigen::Index>(next)) -= g.d_half[j] * inv_h2;
    A(jj, static_cast<Eigen::Index>(prev)) -= g.d_half[prev] * inv_h2;
  }

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A);
  if (es.info() != Eigen::Success)
    throw Error(ErrorCode::NoConvergence, "micro operator eigensolve failed");

  SturmBasis basis;
  basis.y = g.y;
  basis.h = g.h;
  const std::size_t m = std::min(n_modes, n_y);
  basis.lambda.resize(m);
  basis.psi.resize(m);
  const double scale = 1.0 / std::sqrt(g.h);
  for (std::size_t n = 0; n < m; ++n) {
    basis.lambda[n] = es.eigenvalues()(static_cast<Eigen::Index>(n));
    auto v = es.eigenvectors().col(static_cast<Eigen::Index>(n));
    std::size_t peak = 0;
    for (std::size_t j = 1; j < n_y; ++j)
      if (std::abs(v(static_cast<Eigen::Index>(j))) > std::abs(v(static_cast<Eigen::Index>(peak))))
        peak = j;
    const double sign = v(static_cast<Eigen::Index>(peak)) < 0.0 ? -1.0 : 1.0;
    basis.psi[n].resize(n_y);
    for (std::size_t j = 0; j < n_y; ++j)
      basis.psi[n][j] = sign * scale * v(static_cast<Eigen::Index>(j));
  }
  return basis;
}

MemoryKernel kernel_from_coupling(const SturmBasis& basis,
                                  const std::function<double(double)>& alpha,
                                  const std::function<double(double)>& beta,
                                  double trunc_tol) {
  const std::vector<double> a = basis.project(alpha);
  const std::vector<double> b = basis.project(beta);

  auto parseval_check = [&](const std::function<double(double)>& f,
                            const std::vector<double>& coeff, const char* name) {
    double norm2 = 0.0;
    for (double yj : basis.y) {
      const double v = f(yj);
      norm2 += basis.h * v * v;
    }
    double captured = 0.0;
    for (double c : coeff) captured += c * c;
    if (norm2 - captured > trunc_tol * std::max(norm2, 1e-30)) {
      std::ostringstream os;
      os << "mode expansion of " << name << " loses relative mass "
         << (norm2 - captured) / std::max(norm2, 1e-30) << "; raise n_modes";
      throw Error(ErrorCode::ResolutionError, os.str());
    }
  };
  parseval_check(alpha, a, "the read-out coupling");
  parseval_check(beta, b, "the forcing coupling");

  // judge products against the coupling norms, not against the largest product,
  // so orthogonal pairs collapse to nothing instead of keeping roundoff channels;
  // the eigenvectors are only orthogonal to ~n*eps, hence the generous floor
  double na2 = 0.0, nb2 = 0.0;
  for (std::size_t n = 0; n < a.size(); ++n) {
    na2 += a[n] * a[n];
    nb2 += b[n] * b[n];
  }
  const double scale = std::sqrt(na2 * nb2);
  std::vector<Coupling> channels;
  for (std::size_t n = 0; n < a.size(); ++n)
    if (std::abs(a[n] * b[n]) > 1e-12 * scale)
      channels.push_back({a[n], b[n], basis.lambda[n]});
  if (channels.empty())
    throw Error(ErrorCode::ZeroWeight, "couplings are orthogonal; the memory kernel vanishes");
  return MemoryKernel::from_pde_ode(channels);
}

TwoScaleResult simulate_two_scale(const TwoScaleSystem& sys, const TwoScaleOptions& opts) {
  if (!(opts.dx > 0.0 && opts.dt > 0.0 && opts.X > opts.dx && opts.t_end > opts.dt))
    throw Error(ErrorCode::InvalidArgument, "invalid two-scale grid parameters");
  if (!(opts.v_minus < opts.track_level && opts.track_level < opts.v_plus))
    throw Error(ErrorCode::InvalidArgument, "track level must sit between the plateaus");
  if (!sys.F_mean) throw Error(ErrorCode::InvalidArgument, "missing averaged reaction");

  const auto nx = static_cast<std::size_t>(std::lround(opts.X / opts.dx)) + 1;
  const MicroGrid g = sample_micro(sys.D_w, sys.b, opts.n_y);
  const std::size_t ny = g.ny;

  std::vector<double> alpha_j(ny), beta_j(ny);
  double max_alpha = 0.0, max_beta = 0.0, min_damp = g.damp[0];
  for (std::size_t j = 0; j < ny; ++j) {
    alpha_j[j] = sys.alpha(g.y[j]);
    beta_j[j] = sys.beta(g.y[j]);
    max_alpha = std::max(max_alpha, std::abs(alpha_j[j]));
    max_beta = std::max(max_beta, std::abs(beta_j[j]));
    min_damp = std::min(min_damp, g.damp[j]);
  }

  const double span = opts.v_plus - opts.v_minus;
  const double v_lo = opts.v_minus - 0.5 * span, v_hi = opts.v_plus + 0.5 * span;
  double lip = 0.0;
  for (int i = 0; i <= 400; ++i) {
    const double v = v_lo + (v_hi - v_lo) * i / 400.0;
    const double d = sys.dF_mean ? sys.dF_mean(v)
                                 : (sys.F_mean(v + 1e-5) - sys.F_mean(v - 1e-5)) / 2e-5;
    lip = std::max(lip, std::abs(d));
  }
  lip += std::sqrt(max_alpha * max_beta);
  if (opts.dt > kStabilityFactor / lip) {
    std::ostringstream os;
    os << "dt = " << opts.dt << " exceeds the explicit stability limit " << kStabilityFactor / lip;
    throw Error(ErrorCode::StabilityViolation, os.str());
  }
  const double w_bound = 10.0 * max_beta * std::max(std::abs(v_lo), std::abs(v_hi)) / min_damp;

  // macro diffusion, backward Euler with mirrored ends
  TridiagFactor macro;
  {
    const double r = opts.dt * sys.D_v_eff / (opts.dx * opts.dx);
    std::vector<double> lo(nx, -r), di(nx, 1.0 + 2.0 * r), up(nx, -r);
    up[0] = -2.0 * r;
    lo[nx - 1] = -2.0 * r;
    macro.factorize(lo, di, up);
  }

  // micro update (I + dt A_y), one factorization shared by every x node
  CyclicTridiagFactor micro;
  {
    const double inv_h2 = 1.0 / (g.h * g.h);
    std::vector<double> lo(ny), di(ny), up(ny);
    for (std::size_t j = 0; j < ny; ++j) {
      const double left = g.d_half[(j + ny - 1) % ny] * inv_h2;
      const double right = g.d_half[j] * inv_h2;
      di[j] = 1.0 + opts.dt * (left + right + g.damp[j]);
      lo[j] = -opts.dt * left;
      up[j] = -opts.dt * right;
    }
    micro.factorize(lo, di, up);
  }

  TwoScaleResult res;
  res.x.resize(nx);
  for (std::size_t i = 0; i < nx; ++i) res.x[i] = opts.dx * static_cast<double>(i);
  res.y = g.y;
  res.V.resize(nx);
  const double kw = span / (2.0 * std::sqrt(2.0 * sys.D_v_eff));
  const double x0 = opts.front_offset * opts.X;
  for (std::size_t i = 0; i < nx; ++i)
    res.V[i] = opts.v_minus + span * 0.5 * (1.0 + std::tanh(kw * (res.x[i] - x0)));
  res.W.assign(nx, std::vector<double>(ny, 0.0));

  const std::size_t edge = std::max<std::size_t>(3, nx / 20);
  auto edge_mean = [&](std::size_t b0, std::size_t e0) {
    double s = 0.0;
    for (std::size_t i = b0; i < e0; ++i) s += res.V[i];
    return s / static_cast<double>(e0 - b0);
  };
  if (!(edge_mean(0, edge) < opts.track_level && edge_mean(nx - edge, nx) > opts.track_level))
    throw Error(ErrorCode::InvalidArgument, "initial data is not front-admissible");

  const auto steps_per_out =
      std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(opts.output_every / opts.dt)));
  const auto total = static_cast<std::size_t>(std::lround(opts.t_end / opts.dt));
  std::vector<double> snap_times = opts.snapshot_times;
  std::sort(snap_times.begin(), snap_times.end());
  std::size_t next_snap = 0;

  const double margin = 10.0 * opts.dx;
  std::optional<double> hint;
  auto mean_w_of = [&](std::size_t i) {
    double s = 0.0;
    for (std::size_t j = 0; j < ny; ++j) s += res.W[i][j];
    return g.h * s;
  };
  auto inspect = [&]() {
    for (double v : res.V)
      if (!std::isfinite(v)) throw Error(ErrorCode::NaNDetected, "macro field became non-finite");
    double worst = 0.0;
    for (std::size_t i = 0; i < nx; ++i) {
      if (res.V[i] < v_lo || res.V[i] > v_hi)
        throw Error(ErrorCode::StabilityViolation, "macro field left the invariant region");
      worst = std::max(worst, std::abs(mean_w_of(i)));
      for (double w : res.W[i])
        if (!std::isfinite(w) || std::abs(w) > w_bound)
          throw Error(ErrorCode::StabilityViolation, "micro field left its a priori bound");
    }
    res.max_mean_w = std::max(res.max_mean_w, worst);
    const auto pos = track_level_crossing(res.x, res.V, opts.track_level, hint);
    if (!pos) throw Error(ErrorCode::NoCrossing, "front level set vanished during the run");
    if (*pos < margin || *pos > opts.X - margin)
      throw Error(ErrorCode::FrontExited, "front reached the domain boundary");
    hint = *pos;
    res.track.push_back({res.t, *pos});
  };
  auto maybe_snapshot = [&]() {
    while (next_snap < snap_times.size() && res.t >= snap_times[next_snap] - 0.5 * opts.dt) {
      TwoScaleSnapshot s;
      s.t = res.t;
      s.V = res.V;
      s.W = res.W;
      s.w_mean.resize(nx);
      for (std::size_t i = 0; i < nx; ++i) s.w_mean[i] = mean_w_of(i);
      res.snapshots.push_back(std::move(s));
      ++next_snap;
    }
  };

  inspect();
  maybe_snapshot();
  std::vector<double> mem(nx), rhs(nx);
  for (std::size_t n = 0; n < total; ++n) {
    for (std::size_t i = 0; i < nx; ++i) {
      auto& w = res.W[i];
      double s = 0.0;
      for (std::size_t j = 0; j < ny; ++j) s += alpha_j[j] * w[j];
      mem[i] = g.h * s;
      const double vi = res.V[i];
      for (std::size_t j = 0; j < ny; ++j) w[j] += opts.dt * beta_j[j] * vi;
      micro.solve(w);
    }
    for (std::size_t i = 0; i < nx; ++i)
      rhs[i] = res.V[i] + opts.dt * (sys.F_mean(res.V[i]) + mem[i]);
    macro.solve(rhs);
    res.V.swap(rhs);
    res.t += opts.dt;
    if ((n + 1) % steps_per_out == 0 || n + 1 == total) {
      inspect();
      maybe_snapshot();
    }
  }

  const auto [speed, rms] = fit_front_speed(res.track, 0.5);
  res.speed = speed;
  res.fit_residual = rms;
  return res;
}

EpsResult simulate_eps(const EpsSystem& sys, double eps, const EpsOptions& opts) {
  if (!(eps > 0.0)) throw Error(ErrorCode::InvalidArgument, "eps must be positive");
  if (opts.dx > eps / 16.0 + 1e-15) {
    std::ostringstream os;
    os << "dx = " << opts.dx << " cannot resolve the eps = " << eps
       << " oscillation (need dx <= eps/16)";
    throw Error(ErrorCode::ResolutionError, os.str());
  }
  if (!(opts.dx > 0.0 && opts.dt > 0.0 && opts.X > opts.dx && opts.t_end > opts.dt))
    throw Error(ErrorCode::InvalidArgument, "invalid eps-run grid parameters");
  if (!(opts.v_minus < opts.track_level && opts.track_level < opts.v_plus))
    throw Error(ErrorCode::InvalidArgument, "track level must sit between the plateaus");

  const auto nx = static_cast<std::size_t>(std::lround(opts.X / opts.dx)) + 1;
  EpsResult res;
  res.x.resize(nx);
  std::vector<double> alpha_i(nx), beta_i(nx), damp_i(nx);
  double max_alpha = 0.0, max_beta = 0.0;
  for (std::size_t i = 0; i < nx; ++i) {
    res.x[i] = opts.dx * static_cast<double>(i);
    const double yi = res.x[i] / eps;
    alpha_i[i] = sys.alpha(yi);
    beta_i[i] = sys.beta(yi);
    damp_i[i] = sys.b(yi);
    if (!(damp_i[i] > 0.0))
      throw Error(ErrorCode::NotPositive, "damping coefficient must be strictly positive");
    max_alpha = std::max(max_alpha, std::abs(alpha_i[i]));
    max_beta = std::max(max_beta, std::abs(beta_i[i]));
  }

  // Zero-flux ends reflect the microstructure instead of continuing it, so the
  // oscillation cancellation fails in an O(eps) collar and the fields settle on
  // localized wall layers well outside [v_minus, v_plus]. The escape bounds are
  // therefore generous; they exist to catch blowup, not wall layers.
  const double span = opts.v_plus - opts.v_minus;
  const double v_lo = opts.v_minus - 2.0 * span, v_hi = opts.v_plus + 2.0 * span;
  double lip = 0.0;
  for (int iy = 0; iy < 17; ++iy) {
    const double yy = iy / 17.0;
    for (int iv = 0; iv <= 200; ++iv) {
      const double v = v_lo + (v_hi - v_lo) * iv / 200.0;
      const double d = (sys.Phi(yy, v + 1e-5) - sys.Phi(yy, v - 1e-5)) / 2e-5;
      lip = std::max(lip, std::abs(d));
    }
  }
  lip += std::sqrt(max_alpha * max_beta);
  if (opts.dt > kStabilityFactor / lip) {
    std::ostringstream os;
    os << "dt = " << opts.dt << " exceeds the explicit stability limit " << kStabilityFactor / lip;
    throw Error(ErrorCode::StabilityViolation, os.str());
  }

  // conservative-flux backward Euler factorizations for v and w (coefficients
  // are time-independent, so both are prefactored once)
  TridiagFactor v_fac, w_fac;
  {
    std::vector<double> lo(nx, 0.0), di(nx, 0.0), up(nx, 0.0);
    const double r = opts.dt / (opts.dx * opts.dx);
    std::vector<double> dv_face(nx - 1);
    for (std::size_t i = 0; i + 1 < nx; ++i) {
      dv_face[i] = sys.D_v((res.x[i] + 0.5 * opts.dx) / eps);
      if (!(dv_face[i] > 0.0))
        throw Error(ErrorCode::NotPositive, "diffusion coefficient must be strictly positive");
    }
    for (std::size_t i = 0; i < nx; ++i) {
      const double fl = i > 0 ? dv_face[i - 1] : 0.0;
      const double fr = i + 1 < nx ? dv_face[i] : 0.0;
      di[i] = 1.0 + r * (fl + fr);
      if (i > 0) lo[i] = -r * fl;
      if (i + 1 < nx) up[i] = -r * fr;
    }
    v_fac.factorize(lo, di, up);

    const double re = opts.dt * eps * eps / (opts.dx * opts.dx);
    std::vector<double> dw_face(nx - 1);
    for (std::size_t i = 0; i + 1 < nx; ++i) {
      dw_face[i] = sys.D_w((res.x[i] + 0.5 * opts.dx) / eps);
      if (!(dw_face[i] > 0.0))
        throw Error(ErrorCode::NotPositive, "diffusion coefficient must be strictly positive");
    }
    for (std::size_t i = 0; i < nx; ++i) {
      const double fl = i > 0 ? dw_face[i - 1] : 0.0;
      const double fr = i + 1 < nx ? dw_face[i] : 0.0;
      di[i] = 1.0 + re * (fl + fr) + opts.dt * damp_i[i];
      lo[i] = i > 0 ? -re * fl : 0.0;
      up[i] = i + 1 < nx ? -re * fr : 0.0;
    }
    w_fac.factorize(lo, di, up);
  }

  res.v.resize(nx);
  res.w.assign(nx, 0.0);
  const double kw = span / (2.0 * std::sqrt(2.0));
  const double x0 = opts.front_offset * opts.X;
  for (std::size_t i = 0; i < nx; ++i)
    res.v[i] = opts.v_minus + span * 0.5 * (1.0 + std::tanh(kw * (res.x[i] - x0)));

  const std::size_t edge = std::max<std::size_t>(3, nx / 20);
  auto edge_mean = [&](std::size_t b0, std::size_t e0) {
    double s = 0.0;
    for (std::size_t i = b0; i < e0; ++i) s += res.v[i];
    return s / static_cast<double>(e0 - b0);
  };
  if (!(edge_mean(0, edge) < opts.track_level && edge_mean(nx - edge, nx) > opts.track_level))
    throw Error(ErrorCode::InvalidArgument, "initial data is not front-admissible");

  const double w_bound = 10.0 * max_beta * std::max(std::abs(v_lo), std::abs(v_hi)) /
                         *std::min_element(damp_i.begin(), damp_i.end());
  const double margin = 10.0 * opts.dx;
  std::optional<double> hint;
  auto inspect = [&]() {
    for (std::size_t i = 0; i < nx; ++i) {
      if (!std::isfinite(res.v[i]) || !std::isfinite(res.w[i]))
        throw Error(ErrorCode::NaNDetected, "field became non-finite");
      if (res.v[i] < v_lo || res.v[i] > v_hi || std::abs(res.w[i]) > w_bound)
        throw Error(ErrorCode::StabilityViolation, "field left the invariant region");
    }
    const auto pos = track_level_crossing(res.x, res.v, opts.track_level, hint);
    if (!pos) throw Error(ErrorCode::NoCrossing, "front level set vanished during the run");
    if (*pos < margin || *pos > opts.X - margin)
      throw Error(ErrorCode::FrontExited, "front reached the domain boundary");
    hint = *pos;
    res.track.push_back({res.t, *pos});
  };

  const auto steps_per_out =
      std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(opts.output_every / opts.dt)));
  const auto total = static_cast<std::size_t>(std::lround(opts.t_end / opts.dt));

  inspect();
  std::vector<double> v_rhs(nx), w_rhs(nx);
  for (std::size_t n = 0; n < total; ++n) {
    for (std::size_t i = 0; i < nx; ++i) {
      const double yi = res.x[i] / eps;
      v_rhs[i] = res.v[i] + opts.dt * (sys.Phi(yi, res.v[i]) + alpha_i[i] * res.w[i]);
      w_rhs[i] = res.w[i] + opts.dt * beta_i[i] * res.v[i];
    }
    v_fac.solve(v_rhs);
    w_fac.solve(w_rhs);
    res.v.swap(v_rhs);
    res.w.swap(w_rhs);
    res.t += opts.dt;
    if ((n + 1) % steps_per_out == 0 || n + 1 == total) inspect();
  }

  const auto [speed, rms] = fit_front_speed(res.track, 0.5);
  res.speed = speed;
  res.fit_residual = rms;
  return res;
}

double weighted_distance(const std::vector<double>& x, const std::vector<double>& f,
                         const std::vector<double>& g, double center, double R) {
  if (x.size() != f.size() || x.size() != g.size() || x.size() < 2)
    throw Error(ErrorCode::InvalidArgument, "weighted distance needs matching grids");
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double rho = 1.0 / std::cosh(std::abs(x[i] - center) / R);
    const double d = f[i] - g[i];
    const double wt = (i == 0 || i + 1 == x.size()) ? 0.5 : 1.0;
    s += wt * rho * d * d;
  }
  return s * (x[1] - x[0]);
}

double oscillation_amplitude(const std::vector<double>& x, const std::vector<double>& f,
                             double period, double window_lo, double window_hi) {
  if (x.size() != f.size() || x.size() < 3)
    throw Error(ErrorCode::InvalidArgument, "amplitude measurement needs a grid function");
  const double dx = x[1] - x[0];
  const auto m = static_cast<std::size_t>(std::lround(period / dx));
  if (m < 2 || m >= x.size())
    throw Error(ErrorCode::ResolutionError, "grid does not resolve the averaging period");
  const std::size_t half = m / 2;

  double amp = 0.0;
  for (std::size_t i = half; i + half < x.size(); ++i) {
    if (x[i] < window_lo || x[i] > window_hi) continue;
    // trapezoid mean over one period centered at x_i
    double s = 0.5 * (f[i - half] + f[i - half + m]);
    for (std::size_t j = 1; j < m; ++j) s += f[i - half + j];
    amp = std::max(amp, std::abs(f[i] - s / static_cast<double>(m)));
  }
  return amp;
}

}  // namespace memfront
