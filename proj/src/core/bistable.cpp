#include "core/bistable.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace memfront {
namespace {

double poly_eval(const std::vector<double>& c, double u) {
  double r = 0.0;
  for (std::size_t i = c.size(); i-- > 0;) r = r * u + c[i];
  return r;
}

std::vector<double> poly_derivative(const std::vector<double>& c) {
  std::vector<double> d;
  for (std::size_t i = 1; i < c.size(); ++i) d.push_back(c[i] * static_cast<double>(i));
  if (d.empty()) d.push_back(0.0);
  return d;
}

double bisect_root(const std::function<double(double)>& f, double lo, double hi) {
  double flo = f(lo);
  for (int it = 0; it < 200 && hi - lo > 0.0; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid == lo || mid == hi) break;
    const double fm = f(mid);
    if ((fm < 0.0) == (flo < 0.0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

// 7-point Gauss-Legendre on [-1, 1]
constexpr double kGlNode[7] = {-0.9491079123427585, -0.7415311855993945, -0.4058451513773972,
                               0.0,
                               0.4058451513773972, 0.7415311855993945, 0.9491079123427585};
constexpr double kGlWeight[7] = {0.1294849661688697, 0.2797053914892766, 0.3818300505051189,
                                 0.4179591836734694,
                                 0.3818300505051189, 0.2797053914892766, 0.1294849661688697};

struct Chord {
  double a = 0.0, b = 0.0, alpha = 0.0;
};

// Best chord below f on [xs.front(), xs.back()] anchored at (a, 0), found by
// maximizing slope * window length over anchor candidates and window ends.
// `mirror` flips to the upper-chord search on the negative well.
Chord best_chord(const std::vector<double>& xs, const std::vector<double>& fs, bool mirror) {
  const std::size_t n = xs.size();
  const std::size_t stride = std::max<std::size_t>(1, n / 64);
  Chord best;
  double best_score = 0.0;
  for (std::size_t ia = 0; ia + 1 < n; ia += stride) {
    const double a = mirror ? xs[n - 1 - ia] : xs[ia];
    double runmin = std::numeric_limits<double>::infinity();
    for (std::size_t off = 1; off + ia < n; ++off) {
      const std::size_t j = mirror ? n - 1 - ia - off : ia + off;
      const double du = xs[j] - a;
      const double ratio = fs[j] / du;  // positive in the interior of either well
      runmin = std::min(runmin, ratio);
      if (runmin <= 0.0) break;
      const double score = runmin * std::abs(du);
      if (score > best_score) {
        best_score = score;
        best = {a, xs[j], runmin};
      }
    }
  }
  if (!(best.alpha > 0.0))
    throw Error(ErrorCode::NoConvergence, "no admissible chord found for the speed estimates");
  best.alpha *= 1.0 - 1e-12;
  return best;
}

std::vector<double> linspace(double a, double b, std::size_t n) {
  std::vector<double> xs(n);
  for (std::size_t i = 0; i < n; ++i)
    xs[i] = a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1);
  xs.back() = b;
  return xs;
}

constexpr double kEpsPad = 1e-6;
constexpr std::size_t kDense = 10001;

}  // namespace

BistableProblem BistableProblem::cubic(double a, double D, double gamma) {
  if (!(a > 0.0 && a < 1.0))
    throw Error(ErrorCode::InvalidArgument, "cubic parameter a must lie in ]0,1[");
  BistableProblem p = polynomial({0.0, -a, 1.0 + a, -1.0}, D, gamma);
  p.is_cubic = true;
  p.cubic_a = a;
  return p;
}

BistableProblem BistableProblem::polynomial(std::vector<double> coeffs, double D, double gamma) {
  if (!(D > 0.0)) throw Error(ErrorCode::InvalidArgument, "diffusion constant must be positive");
  if (coeffs.empty()) throw Error(ErrorCode::InvalidArgument, "empty polynomial");
  BistableProblem p;
  p.D = D;
  p.gamma = gamma;
  p.poly = std::move(coeffs);
  auto dcoeffs = poly_derivative(p.poly);
  p.F = [c = p.poly](double u) { return poly_eval(c, u); };
  p.dF = [c = std::move(dcoeffs)](double u) { return poly_eval(c, u); };
  return p;
}

BistableProblem BistableProblem::general(std::function<double(double)> F,
                                         std::function<double(double)> dF, double D,
                                         double gamma, double scan_lo, double scan_hi) {
  if (!(D > 0.0)) throw Error(ErrorCode::InvalidArgument, "diffusion constant must be positive");
  if (!F || !dF) throw Error(ErrorCode::InvalidArgument, "reaction callbacks must be set");
  if (!(scan_lo < scan_hi))
    throw Error(ErrorCode::InvalidArgument, "root-scan window is empty");
  BistableProblem p;
  p.D = D;
  p.gamma = gamma;
  p.F = std::move(F);
  p.dF = std::move(dF);
  p.scan_lo = scan_lo;
  p.scan_hi = scan_hi;
  return p;
}

Roots tilted_roots(const BistableProblem& p) {
  std::vector<double> roots;
  if (p.is_cubic) {
    // f_gamma(u) = -u (u^2 - (1+a) u + (a - gamma)); quadratic factor solved
    // in closed form.
    const double a = p.cubic_a;
    const double disc = (1.0 + a) * (1.0 + a) - 4.0 * (a - p.gamma);
    if (disc <= 1e-14) {
      std::ostringstream os;
      os << "cubic loses its three-root structure (a=" << a << ", gamma=" << p.gamma << ")";
      throw Error(ErrorCode::NotBistable, os.str());
    }
    const double m = std::sqrt(disc);
    roots = {0.0, 0.5 * (1.0 + a - m), 0.5 * (1.0 + a + m)};
    std::sort(roots.begin(), roots.end());
  } else {
    const auto f = [&p](double u) { return p.f_gamma(u); };
    const int cells = 4000;
    double prev_u = p.scan_lo, prev_f = f(prev_u);
    for (int i = 1; i <= cells; ++i) {
      const double u = p.scan_lo + (p.scan_hi - p.scan_lo) * i / cells;
      const double fu = f(u);
      if (prev_f == 0.0)
        roots.push_back(prev_u);
      else if ((prev_f < 0.0) != (fu < 0.0))
        roots.push_back(bisect_root(f, prev_u, u));
      prev_u = u;
      prev_f = fu;
    }
    if (prev_f == 0.0) roots.push_back(prev_u);
  }

  const double scale = std::max({1.0, std::abs(p.scan_lo), std::abs(p.scan_hi)});
  if (roots.size() != 3) {
    std::ostringstream os;
    os << "expected 3 equilibria, found " << roots.size() << " in the scan window";
    throw Error(ErrorCode::NotBistable, os.str());
  }
  if (roots[1] - roots[0] < 1e-10 * scale || roots[2] - roots[1] < 1e-10 * scale)
    throw Error(ErrorCode::NotBistable, "equilibria are not simple (near-degenerate roots)");
  if (!(p.df_gamma(roots[0]) < 0.0 && p.df_gamma(roots[1]) > 0.0 && p.df_gamma(roots[2]) < 0.0))
    throw Error(ErrorCode::NotBistable, "equilibria do not follow the stable/unstable/stable pattern");
  return {roots[0], roots[1], roots[2]};
}

double area_functional(const BistableProblem& p) {
  const Roots r = tilted_roots(p);
  if (!p.poly.empty()) {
    // antiderivative of poly + gamma*u, evaluated exactly
    std::vector<double> anti(p.poly.size() + 1, 0.0);
    for (std::size_t i = 0; i < p.poly.size(); ++i)
      anti[i + 1] = p.poly[i] / static_cast<double>(i + 1);
    anti[2] += 0.5 * p.gamma;
    return poly_eval(anti, r.upper) - poly_eval(anti, r.lower);
  }
  const int panels = 64;
  const double hw = 0.5 * (r.upper - r.lower) / panels;
  double sum = 0.0;
  for (int q = 0; q < panels; ++q) {
    const double mid = r.lower + (2 * q + 1) * hw;
    for (int j = 0; j < 7; ++j) sum += kGlWeight[j] * p.f_gamma(mid + hw * kGlNode[j]);
  }
  return sum * hw;
}

double mckean_speed(double a, double beta) {
  if (!(a > 0.0 && a < 1.0))
    throw Error(ErrorCode::OutOfRegime, "cubic parameter a must lie in ]0,1[");
  const double disc = (1.0 - a) * (1.0 - a) - 4.0 * beta;
  if (disc <= 0.0)
    throw Error(ErrorCode::NotBistable, "tilt too strong: (1-a)^2 - 4 beta <= 0");
  return (1.0 + a - 3.0 * std::sqrt(disc)) / (2.0 * std::sqrt(2.0));
}

double beta_zero(double a) {
  if (!(a >= 0.5 && a <= 1.0))
    throw Error(ErrorCode::OutOfRegime, "beta_zero is defined for a in [1/2, 1]");
  return (2.0 * a * a - 5.0 * a + 2.0) / 9.0;
}

EstimateParams estimate_params(const BistableProblem& p) {
  const Roots r = tilted_roots(p);
  EstimateParams e;

  const auto xs_left = linspace(r.lower, r.middle, kDense);
  const auto xs_right = linspace(r.middle, r.upper, kDense);
  std::vector<double> fs_left(kDense), fs_right(kDense);
  double min_left = 0.0, max_right = 0.0;
  for (std::size_t i = 0; i < kDense; ++i) {
    fs_left[i] = p.f_gamma(xs_left[i]);
    fs_right[i] = p.f_gamma(xs_right[i]);
    min_left = std::min(min_left, fs_left[i]);
    max_right = std::max(max_right, fs_right[i]);
  }
  e.phi_star = std::max(0.0, -min_left) + kEpsPad;
  e.phi_sup = std::max(0.0, max_right) + kEpsPad;

  const Chord right = best_chord(xs_right, fs_right, false);
  e.a_star = right.a;
  e.b_star = right.b;
  e.alpha_star = right.alpha;

  const Chord left = best_chord(xs_left, fs_left, true);
  e.a_sup = left.a;
  e.b_sup = left.b;
  e.alpha_sup = left.alpha;

  validate_estimates(p, e);
  return e;
}

void validate_estimates(const BistableProblem& p, const EstimateParams& e) {
  const Roots r = tilted_roots(p);
  const double tol = 1e-9;
  auto fail = [](const char* what) {
    throw Error(ErrorCode::InvalidArgument, std::string("estimate data invalid: ") + what);
  };
  if (!(e.phi_star > 0.0 && e.phi_sup > 0.0)) fail("level bounds must be positive");
  if (!(e.a_star < e.b_star) || e.a_star < r.middle - tol || e.b_star > r.upper + tol)
    fail("lower chord window out of order");
  if (!(e.b_sup < e.a_sup) || e.b_sup < r.lower - tol || e.a_sup > r.middle + tol)
    fail("upper chord window out of order");
  if (!(e.alpha_star > 0.0 && e.alpha_sup > 0.0)) fail("chord slopes must be positive");
  for (const auto& u : linspace(r.lower, r.middle, kDense))
    if (p.f_gamma(u) < -e.phi_star - tol) fail("level bound fails on the lower well");
  for (const auto& u : linspace(r.middle, r.upper, kDense))
    if (p.f_gamma(u) > e.phi_sup + tol) fail("level bound fails on the upper well");
  for (const auto& u : linspace(e.a_star, e.b_star, kDense))
    if (p.f_gamma(u) < e.alpha_star * (u - e.a_star) - tol) fail("lower chord is not below f");
  for (const auto& u : linspace(e.b_sup, e.a_sup, kDense))
    if (p.f_gamma(u) > e.alpha_sup * (u - e.a_sup) + tol) fail("upper chord is not above f");
}

double gamma_star(const BistableProblem& p) {
  const double step = 0.005;
  BistableProblem q = p;
  q.gamma = 0.0;
  tilted_roots(q);  // NotBistable propagates if even the untilted problem fails
  double good = 0.0;
  for (double g = step; g <= 10.0 + 0.5 * step; g += step) {
    q.gamma = g;
    try {
      tilted_roots(q);
    } catch (const Error&) {
      break;
    }
    good = g;
  }
  return std::max(0.0, good - step);
}

std::pair<double, double> speed_bounds(const BistableProblem& p, const EstimateParams& e,
                                       const MemoryKernel& k, double v) {
  if (p.gamma < 0.0)
    throw Error(ErrorCode::OutOfRegime, "speed bounds require a nonnegative tilt");
  validate_estimates(p, e);
  const Roots r = tilted_roots(p);
  const double g1 = k.mean_delay();
  const double drift = p.gamma * g1 * std::abs(v);
  const double w_left = e.a_sup - e.b_sup;
  const double w_right = e.b_star - e.a_star;

  // shift moves mass forward: chord data on the lower well controls the dip
  const double lo_pos = -std::max(std::sqrt(e.phi_sup * p.D / w_left),
                                  e.phi_sup * drift / (e.alpha_sup * w_left)) -
                        drift;
  const double hi_pos = std::sqrt(e.phi_star * p.D / (r.upper - r.middle));
  // mirrored estimate for backward shifts
  const double lo_neg = -std::sqrt(e.phi_sup * p.D / (r.middle - r.lower));
  const double hi_neg = std::max(std::sqrt(e.phi_star * p.D / w_right),
                                 e.phi_star * drift / (e.alpha_star * w_right)) +
                        drift;

  double lo, hi;
  if (v > 0.0) {
    lo = lo_pos;
    hi = hi_pos;
  } else if (v < 0.0) {
    lo = lo_neg;
    hi = hi_neg;
  } else {
    lo = std::max(lo_pos, lo_neg);
    hi = std::min(hi_pos, hi_neg);
  }
  if (!(lo <= hi))
    throw Error(ErrorCode::InvalidArgument, "speed bounds degenerate: lower exceeds upper");
  return {lo, hi};
}

}  // namespace memfront
