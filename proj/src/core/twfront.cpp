#include "core/twfront.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace memfront {
namespace {

// Quadrature for the shifted memory integral: I(xi) ~ sum_q w[q] U(xi + s[q]),
// with the weights summing to one so constants are reproduced exactly.
struct ShiftQuad {
  std::vector<double> s, w;
};

// Exact mass and first moment of c*exp(-rate*tau) over [t0, t0+dt], written
// with expm1 so narrow cells do not cancel.
struct CellMoments {
  double m0 = 0.0, m1 = 0.0;
};

CellMoments exp_cell_moments(double coeff, double rate, double t0, double dt) {
  const double e0 = std::exp(-rate * t0);
  const double em = std::expm1(-rate * dt);  // in (-1, 0]
  CellMoments cm;
  cm.m0 = -coeff * e0 * em / rate;
  cm.m1 = coeff * (-e0 * (dt + em * (t0 + dt)) / rate - e0 * em / (rate * rate));
  return cm;
}

ShiftQuad build_shift_quad(const MemoryKernel& k, double v, double h, double tail_tol) {
  ShiftQuad q;
  if (k.form() == MemoryKernel::Form::DelayComb) {
    for (const auto& t : k.taps()) {
      q.s.push_back(v * t.delay);
      q.w.push_back(t.weight);
    }
    return q;
  }

  const double support = std::max(k.support_bound(tail_tol), 1e-12);
  const double span_cells = std::abs(v) * support / h;
  std::size_t cells;
  if (k.form() == MemoryKernel::Form::ExpSum)
    cells = span_cells <= 8.0 ? 8 : std::min<std::size_t>(static_cast<std::size_t>(std::ceil(span_cells)), 20000);
  else
    cells = std::min<std::size_t>(std::max<std::size_t>(2000, static_cast<std::size_t>(std::ceil(span_cells))), 40000);
  const double dtau = support / static_cast<double>(cells);

  q.s.resize(cells + 1);
  q.w.assign(cells + 1, 0.0);
  for (std::size_t i = 0; i <= cells; ++i) q.s[i] = v * dtau * static_cast<double>(i);

  if (k.form() == MemoryKernel::Form::ExpSum) {
    // product integration: kernel integrated exactly against the hat basis
    for (std::size_t i = 0; i < cells; ++i) {
      const double t0 = dtau * static_cast<double>(i);
      double m0 = 0.0, m1 = 0.0;
      for (const auto& term : k.exp_terms()) {
        const CellMoments cm = exp_cell_moments(term.coeff, term.rate, t0, dtau);
        m0 += cm.m0;
        m1 += cm.m1;
      }
      const double t1 = t0 + dtau;
      q.w[i] += (t1 * m0 - m1) / dtau;
      q.w[i + 1] += (m1 - t0 * m0) / dtau;
    }
  } else {
    for (std::size_t i = 0; i <= cells; ++i) {
      const double wt = (i == 0 || i == cells) ? 0.5 : 1.0;
      q.w[i] += wt * dtau * k.density(dtau * static_cast<double>(i));
    }
  }
  q.w[cells] += k.tail_mass(support);

  double total = 0.0;
  for (double w : q.w) total += w;
  for (double& w : q.w) w /= total;
  return q;
}

struct ShiftIndex {
  int base;     // floor(s/h)
  double frac;  // interpolation fraction
};

struct NewtonResult {
  std::vector<double> U;
  double c = 0.0;
  double residual_inf = 0.0;
  int iterations = 0;
};

class ProfileSystem {
 public:
  ProfileSystem(const BistableProblem& p, const MemoryKernel& k, double v,
                const FrontOptions& opts)
      : p_(p), opts_(opts), roots_(tilted_roots(p)) {
    n_half_ = static_cast<int>(std::lround(opts.L / opts.h));
    if (n_half_ < 10)
      throw Error(ErrorCode::InvalidArgument, "profile domain must span at least 10 cells per side");
    N_ = 2 * n_half_;
    quad_ = build_shift_quad(k, v, opts.h, opts.tail_tol);
    idx_.resize(quad_.s.size());
    for (std::size_t qi = 0; qi < quad_.s.size(); ++qi) {
      const double o = quad_.s[qi] / opts.h;
      const double fl = std::floor(o);
      idx_[qi] = {static_cast<int>(fl), o - fl};
    }
  }

  int size() const { return N_; }
  const Roots& roots() const { return roots_; }
  double xi(int i) const { return (i - n_half_) * opts_.h; }

  double shifted_value(const std::vector<double>& U, int i, std::size_t qi) const {
    const int a = std::clamp(i + idx_[qi].base, 0, N_);
    const int b = std::clamp(i + idx_[qi].base + 1, 0, N_);
    return (1.0 - idx_[qi].frac) * U[a] + idx_[qi].frac * U[b];
  }

  // residual of the interior equations plus the phase condition
  void residual(const std::vector<double>& U, double c, Eigen::VectorXd& R) const {
    const double h = opts_.h, D = p_.D, gamma = p_.gamma;
    R.resize(N_);
    for (int i = 1; i < N_; ++i) {
      const double lap = (U[i - 1] - 2.0 * U[i] + U[i + 1]) / (h * h);
      const double der = (U[i + 1] - U[i - 1]) / (2.0 * h);
      double nl = 0.0;
      for (std::size_t qi = 0; qi < quad_.w.size(); ++qi)
        nl += quad_.w[qi] * shifted_value(U, i, qi);
      R[i - 1] = D * lap + c * der + p_.F(U[i]) + gamma * nl;
    }
    R[N_ - 1] = U[n_half_] - roots_.middle;
  }

  void assemble(const std::vector<double>& U, double c,
                std::vector<Eigen::Triplet<double>>& trip) const {
    const double h = opts_.h, D = p_.D, gamma = p_.gamma;
    trip.clear();
    auto add = [&](int row, int node, double val) {
      if (node >= 1 && node <= N_ - 1) trip.emplace_back(row, node - 1, val);
    };
    for (int i = 1; i < N_; ++i) {
      const int row = i - 1;
      add(row, i - 1, D / (h * h) - c / (2.0 * h));
      add(row, i, -2.0 * D / (h * h) + p_.dF(U[i]));
      add(row, i + 1, D / (h * h) + c / (2.0 * h));
      for (std::size_t qi = 0; qi < quad_.w.size(); ++qi) {
        const int a = i + idx_[qi].base;
        const double f = idx_[qi].frac;
        const double gw = gamma * quad_.w[qi];
        if (a >= 0 && a <= N_) add(row, std::clamp(a, 0, N_), gw * (1.0 - f));
        if (a + 1 >= 0 && a + 1 <= N_) add(row, std::clamp(a + 1, 0, N_), gw * f);
      }
      trip.emplace_back(row, N_ - 1, (U[i + 1] - U[i - 1]) / (2.0 * h));  // d/dc
    }
    trip.emplace_back(N_ - 1, n_half_ - 1, 1.0);  // phase row
  }

  NewtonResult newton(std::vector<double> U, double c) const {
    Eigen::VectorXd R;
    residual(U, c, R);
    double n2 = R.norm();
    if (!std::isfinite(n2))
      throw Error(ErrorCode::NaNDetected, "initial profile residual is not finite");

    Eigen::SparseMatrix<double> J(N_, N_);
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    std::vector<Eigen::Triplet<double>> trip;
    bool analyzed = false;
    int stagnation = 0;

    for (int it = 0; it < opts_.max_newton_iter; ++it) {
      if (R.lpNorm<Eigen::Infinity>() <= opts_.newton_tol)
        return {std::move(U), c, R.lpNorm<Eigen::Infinity>(), it};

      assemble(U, c, trip);
      J.setFromTriplets(trip.begin(), trip.end());
      if (!analyzed) {
        lu.analyzePattern(J);
        analyzed = true;
      }
      lu.factorize(J);
      if (lu.info() != Eigen::Success)
        throw Error(ErrorCode::NoConvergence, "profile Jacobian factorization failed");
      const Eigen::VectorXd delta = lu.solve(-R);

      double lam = 1.0;
      bool accepted = false;
      std::vector<double> U_try(U.size());
      Eigen::VectorXd R_try;
      for (int half = 0; half <= 8; ++half, lam *= 0.5) {
        U_try = U;
        for (int j = 1; j < N_; ++j) U_try[j] += lam * delta[j - 1];
        const double c_try = c + lam * delta[N_ - 1];
        residual(U_try, c_try, R_try);
        const double n2_try = R_try.norm();
        if (std::isfinite(n2_try) && n2_try <= (1.0 - 1e-4 * lam) * n2) {
          U.swap(U_try);
          c = c_try;
          R.swap(R_try);
          n2 = n2_try;
          accepted = true;
          break;
        }
      }
      if (!accepted) {
        if (++stagnation >= 2)
          throw Error(ErrorCode::NoConvergence, "profile Newton stagnated under damping");
      } else {
        stagnation = 0;
      }
    }
    residual(U, c, R);
    if (R.lpNorm<Eigen::Infinity>() <= opts_.newton_tol)
      return {std::move(U), c, R.lpNorm<Eigen::Infinity>(), opts_.max_newton_iter};
    std::ostringstream os;
    os << "profile Newton did not reach tolerance (residual " << R.lpNorm<Eigen::Infinity>()
       << " after " << opts_.max_newton_iter << " iterations)";
    throw Error(ErrorCode::NoConvergence, os.str());
  }

 private:
  const BistableProblem& p_;
  const FrontOptions& opts_;
  Roots roots_;
  int n_half_ = 0, N_ = 0;
  ShiftQuad quad_;
  std::vector<ShiftIndex> idx_;
};

FrontSolution solve_profile_impl(const BistableProblem& p, const MemoryKernel& k, double v,
                                 const FrontOptions& opts, const FrontSolution* warm) {
  ProfileSystem sys(p, k, v, opts);
  const int N = sys.size();
  const Roots r = sys.roots();

  std::vector<double> U(N + 1);
  double c;
  if (warm && static_cast<int>(warm->profile.size()) == N + 1) {
    U = warm->profile;
    c = warm->speed;
  } else {
    // logistic seed matched to the outer equilibria, centered so U(0) is near
    // the middle equilibrium
    const double span = r.upper - r.lower;
    const double kw = span / std::sqrt(2.0 * p.D);
    const double frac = (r.middle - r.lower) / span;
    const double shift = std::log(frac / (1.0 - frac));
    for (int i = 0; i <= N; ++i)
      U[i] = r.lower + span / (1.0 + std::exp(-(kw * sys.xi(i) + shift)));
    c = p.is_cubic ? mckean_speed(p.cubic_a, -p.gamma) : 0.0;
  }
  U[0] = r.lower;
  U[N] = r.upper;

  NewtonResult nr = sys.newton(std::move(U), c);

  for (int i = 0; i < N; ++i)
    if (nr.U[i + 1] < nr.U[i] - 1e-8)
      throw Error(ErrorCode::MonotonicityViolation, "front profile lost monotonicity");
  const double slope_lo = std::abs(nr.U[1] - nr.U[0]) / opts.h;
  const double slope_hi = std::abs(nr.U[N] - nr.U[N - 1]) / opts.h;
  if (slope_lo > opts.layer_tol || slope_hi > opts.layer_tol) {
    std::ostringstream os;
    os << "boundary layers do not fit: |U'| at the ends is " << std::max(slope_lo, slope_hi);
    throw Error(ErrorCode::DomainTooSmall, os.str());
  }

  FrontSolution out;
  out.xi_grid.resize(N + 1);
  for (int i = 0; i <= N; ++i) out.xi_grid[i] = sys.xi(i);
  out.profile = std::move(nr.U);
  out.speed = nr.c;
  out.v = v;
  out.connects = {r.lower, r.upper};
  out.residual_norm = nr.residual_inf;
  out.newton_iterations = nr.iterations;
  return out;
}

}  // namespace

FrontSolution solve_profile(const BistableProblem& p, const MemoryKernel& k, double v,
                            const FrontOptions& opts) {
  return solve_profile_impl(p, k, v, opts, nullptr);
}

std::vector<std::pair<double, double>> speed_curve(const BistableProblem& p,
                                                   const MemoryKernel& k,
                                                   const std::vector<double>& v_list,
                                                   const FrontOptions& opts) {
  std::vector<std::pair<double, double>> out;
  FrontSolution last;
  bool have_last = false;
  for (double v : v_list) {
    last = solve_profile_impl(p, k, v, opts, have_last ? &last : nullptr);
    have_last = true;
    out.emplace_back(v, last.speed);
  }
  auto sorted = out;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 1; i < sorted.size(); ++i) {
    if (sorted[i].second > sorted[i - 1].second + opts.mono_tol) {
      std::ostringstream os;
      os << "speed curve increases between v=" << sorted[i - 1].first << " and v="
         << sorted[i].first << " (" << sorted[i - 1].second << " -> " << sorted[i].second << ")";
      throw Error(ErrorCode::MonotonicityViolation, os.str());
    }
  }
  return out;
}

FrontSolution solve_fixed_point(const BistableProblem& p, const MemoryKernel& k,
                                const FrontOptions& opts) {
  FrontSolution warm = solve_profile_impl(p, k, 0.0, opts, nullptr);
  const double c0 = warm.speed;

  FrontSolution best = warm;
  double best_gap = std::abs(c0 - 0.0);

  auto g = [&](double v) {
    warm = solve_profile_impl(p, k, v, opts, &warm);
    const double gap = warm.speed - v;
    if (std::abs(gap) < best_gap) {
      best = warm;
      best_gap = std::abs(gap);
    }
    return gap;
  };

  auto finish = [&](FrontSolution sol) {
    sol.fixed_point_gap = std::abs(sol.speed - sol.v);
    sol.c_at_zero = c0;
    sol.sandwich_checked = p.gamma >= 0.0;
    if (sol.sandwich_checked) {
      const double area = area_functional(p);
      const double slack = std::max(1e-4, 10.0 * opts.fp_tol);
      bool sign_ok = true;
      if (area > 1e-10) sign_ok = sol.speed <= slack;
      if (area < -1e-10) sign_ok = sol.speed >= -slack;
      sol.sandwich_ok = sign_ok && std::abs(sol.speed) <= std::abs(c0) + slack;
    }
    return sol;
  };

  // g is strictly decreasing (the speed map cannot increase in v), so its sign
  // points at the root: expand directionally from the v=0 speed rather than
  // jumping by the worst-case drift, which can leave the solvable range.
  if (std::abs(c0) < opts.fp_tol) return finish(warm);
  double lo, hi, g_lo;
  {
    double v = 0.0, g_v = c0;  // g(0) = C(gamma,0) - 0
    // slightly past c0: since |c* - 0| <= |g(0)|, this usually brackets at once
    double step = std::max(0.05 * (1.0 + std::abs(c0)), 4.0 * std::abs(c0) / 3.0);
    int expand = 0;
    for (;;) {
      const double v_next = g_v > 0.0 ? v + step : v - step;
      const double g_next = g(v_next);
      if (std::abs(g_next) < opts.fp_tol) return finish(best);
      if ((g_next < 0.0) != (g_v < 0.0)) {
        lo = std::min(v, v_next);
        hi = std::max(v, v_next);
        g_lo = v < v_next ? g_v : g_next;
        break;
      }
      v = v_next;
      g_v = g_next;
      step *= 2.0;
      if (++expand > opts.max_expand)
        throw Error(ErrorCode::BracketFailure,
                    "no sign change of C(gamma,v) - v after bracket expansion");
    }
  }

  for (int it = 0; it < opts.max_bisect; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double g_mid = g(mid);
    if (std::abs(g_mid) < opts.fp_tol) return finish(warm);
    if ((g_mid < 0.0) == (g_lo < 0.0)) {
      lo = mid;
      g_lo = g_mid;
    } else {
      hi = mid;
    }
    if (hi - lo < 1e-14 * std::max(1.0, std::abs(mid))) break;
  }
  if (best_gap < 10.0 * opts.fp_tol) return finish(best);
  std::ostringstream os;
  os << "fixed-point residual floor " << best_gap << " exceeds tolerance " << opts.fp_tol;
  throw Error(ErrorCode::NoConvergence, os.str());
}

}  // namespace memfront
