#include "core/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace memfront {
namespace {

constexpr int kNonnegSamples = 10000;
constexpr double kUnitMassTol = 1e-10;

void require_finite(double x, const char* what) {
  if (!std::isfinite(x)) throw Error(ErrorCode::InvalidArgument, std::string(what) + " must be finite");
}

double lerp_history(std::span<const double> h, double s) {
  // s in units of the sample spacing, guaranteed within [0, n-1]
  const auto i = static_cast<std::size_t>(s);
  if (i + 1 >= h.size()) return h.back();
  const double f = s - static_cast<double>(i);
  return (1.0 - f) * h[i] + f * h[i + 1];
}

}  // namespace

MemoryKernel MemoryKernel::exp_sum(std::vector<ExpTerm> terms, double gamma) {
  require_finite(gamma, "gamma");
  std::erase_if(terms, [](const ExpTerm& t) { return t.coeff == 0.0; });
  if (terms.empty())
    throw Error(ErrorCode::InvalidArgument, "exponential kernel needs at least one term");
  double mass = 0.0, mass_abs = 0.0;
  for (const auto& t : terms) {
    require_finite(t.coeff, "coeff");
    require_finite(t.rate, "rate");
    if (t.rate <= 0.0)
      throw Error(ErrorCode::DivergentMoment, "exponential rate must be positive");
    mass += t.coeff / t.rate;
    mass_abs += std::abs(t.coeff) / t.rate;
  }
  if (std::abs(mass) <= 1e-14 * mass_abs || mass == 0.0)
    throw Error(ErrorCode::ZeroWeight, "kernel shape has (numerically) zero mass");
  MemoryKernel k;
  k.form_ = Form::ExpSum;
  k.gamma_ = gamma;
  k.terms_ = std::move(terms);
  for (auto& t : k.terms_) t.coeff /= mass;
  k.validate_nonnegative();
  k.check_unit_mass();
  return k;
}

MemoryKernel MemoryKernel::from_pde_ode(std::span<const Coupling> channels) {
  if (channels.empty())
    throw Error(ErrorCode::InvalidArgument, "channel list is empty");
  std::vector<ExpTerm> terms;
  terms.reserve(channels.size());
  for (const auto& c : channels) {
    require_finite(c.a, "a");
    require_finite(c.b, "b");
    require_finite(c.rate, "rate");
    if (c.rate <= 0.0)
      throw Error(ErrorCode::DivergentMoment, "channel rate must be positive");
    terms.push_back({c.a * c.b, c.rate});
  }
  double gamma = 0.0;
  for (const auto& t : terms) gamma += t.coeff / t.rate;
  MemoryKernel k = exp_sum(std::move(terms), gamma);
  k.channels_.assign(channels.begin(), channels.end());
  return k;
}

MemoryKernel MemoryKernel::delay_comb(std::vector<DelayTap> taps) {
  double total = 0.0;
  for (const auto& t : taps) total += t.weight;
  return delay_comb(std::move(taps), total);
}

MemoryKernel MemoryKernel::delay_comb(std::vector<DelayTap> taps, double gamma) {
  require_finite(gamma, "gamma");
  if (taps.empty())
    throw Error(ErrorCode::InvalidArgument, "delay comb needs at least one tap");
  double total = 0.0;
  for (const auto& t : taps) {
    require_finite(t.weight, "weight");
    require_finite(t.delay, "delay");
    if (t.weight <= 0.0)
      throw Error(ErrorCode::NotPositive, "delay tap weights must be positive");
    if (t.delay < 0.0)
      throw Error(ErrorCode::InvalidArgument, "delays must be nonnegative");
    total += t.weight;
  }
  MemoryKernel k;
  k.form_ = Form::DelayComb;
  k.gamma_ = gamma;
  k.taps_ = std::move(taps);
  for (auto& t : k.taps_) t.weight /= total;
  std::sort(k.taps_.begin(), k.taps_.end(),
            [](const DelayTap& a, const DelayTap& b) { return a.delay < b.delay; });
  k.check_unit_mass();
  return k;
}

MemoryKernel MemoryKernel::tabulated(std::vector<double> tau, std::vector<double> values,
                                     double tail_rate, double gamma) {
  require_finite(gamma, "gamma");
  require_finite(tail_rate, "tail_rate");
  if (tau.size() < 2 || tau.size() != values.size())
    throw Error(ErrorCode::InvalidArgument, "tabulated kernel needs matching grids of size >= 2");
  if (tau.front() < 0.0)
    throw Error(ErrorCode::InvalidArgument, "tabulated grid must start at tau >= 0");
  for (std::size_t i = 0; i < tau.size(); ++i) {
    require_finite(tau[i], "tau");
    require_finite(values[i], "value");
    if (i > 0 && tau[i] <= tau[i - 1])
      throw Error(ErrorCode::InvalidArgument, "tabulated grid must be strictly increasing");
    if (values[i] < 0.0)
      throw Error(ErrorCode::NegativeKernel, "tabulated density has a negative entry");
  }
  const double tail_value = values.back();
  if (tail_value > 0.0 && tail_rate <= 0.0)
    throw Error(ErrorCode::DivergentMoment, "non-decaying tail has divergent moments");
  double mass = tail_value > 0.0 ? tail_value / tail_rate : 0.0;
  for (std::size_t i = 0; i + 1 < tau.size(); ++i)
    mass += 0.5 * (tau[i + 1] - tau[i]) * (values[i] + values[i + 1]);
  if (mass <= 0.0)
    throw Error(ErrorCode::ZeroWeight, "tabulated density has zero mass");
  MemoryKernel k;
  k.form_ = Form::Tabulated;
  k.gamma_ = gamma;
  k.grid_ = std::move(tau);
  k.values_ = std::move(values);
  k.tail_rate_ = tail_rate;
  for (auto& v : k.values_) v /= mass;
  k.check_unit_mass();
  return k;
}

void MemoryKernel::validate_nonnegative() const {
  // Sample tau = 0 plus a geometric sweep out to where every mode has decayed
  // through ~50 e-foldings. Negative excursions beyond roundoff are rejected.
  double min_rate = std::numeric_limits<double>::infinity();
  for (const auto& t : terms_) min_rate = std::min(min_rate, t.rate);
  const double hi = 50.0 / min_rate;
  const double lo = hi * 1e-6;
  const double ratio = std::pow(hi / lo, 1.0 / (kNonnegSamples - 1));
  double peak = 0.0, worst = 0.0, worst_tau = 0.0;
  double tau = lo;
  for (int i = -1; i < kNonnegSamples; ++i, tau *= ratio) {
    const double g = density(i < 0 ? 0.0 : tau);
    peak = std::max(peak, std::abs(g));
    if (g < worst) {
      worst = g;
      worst_tau = i < 0 ? 0.0 : tau;
    }
  }
  if (worst < -1e-12 * std::max(peak, 1.0)) {
    std::ostringstream os;
    os << "kernel density is negative near tau = " << worst_tau << " (value " << worst << ")";
    throw Error(ErrorCode::NegativeKernel, os.str());
  }
}

void MemoryKernel::check_unit_mass() const {
  const double total = moments().total;
  if (std::abs(total - 1.0) > kUnitMassTol)
    throw Error(ErrorCode::ZeroWeight, "kernel normalization is ill-conditioned");
}

double MemoryKernel::density(double tau) const {
  switch (form_) {
    case Form::ExpSum: {
      double g = 0.0;
      for (const auto& t : terms_) g += t.coeff * std::exp(-t.rate * tau);
      return g;
    }
    case Form::Tabulated: {
      if (tau < grid_.front()) return 0.0;
      if (tau >= grid_.back())
        return values_.back() > 0.0
                   ? values_.back() * std::exp(-tail_rate_ * (tau - grid_.back()))
                   : 0.0;
      const auto it = std::upper_bound(grid_.begin(), grid_.end(), tau);
      const auto i = static_cast<std::size_t>(it - grid_.begin()) - 1;
      const double f = (tau - grid_[i]) / (grid_[i + 1] - grid_[i]);
      return (1.0 - f) * values_[i] + f * values_[i + 1];
    }
    case Form::DelayComb:
      throw Error(ErrorCode::InvalidArgument, "atomic kernel has no pointwise density");
  }
  return 0.0;
}

KernelMoments MemoryKernel::moments() const {
  KernelMoments m;
  switch (form_) {
    case Form::ExpSum:
      for (const auto& t : terms_) {
        m.total += t.coeff / t.rate;
        m.mean_delay += t.coeff / (t.rate * t.rate);
      }
      break;
    case Form::DelayComb:
      for (const auto& t : taps_) {
        m.total += t.weight;
        m.mean_delay += t.weight * t.delay;
      }
      break;
    case Form::Tabulated: {
      for (std::size_t i = 0; i + 1 < grid_.size(); ++i) {
        const double dt = grid_[i + 1] - grid_[i];
        m.total += 0.5 * dt * (values_[i] + values_[i + 1]);
        // exact first moment of the linear interpolant on the cell
        m.mean_delay += dt / 6.0 *
                        (values_[i] * (2.0 * grid_[i] + grid_[i + 1]) +
                         values_[i + 1] * (grid_[i] + 2.0 * grid_[i + 1]));
      }
      if (values_.back() > 0.0) {
        m.total += values_.back() / tail_rate_;
        m.mean_delay += values_.back() * (grid_.back() / tail_rate_ + 1.0 / (tail_rate_ * tail_rate_));
      }
      break;
    }
  }
  return m;
}

double MemoryKernel::tail_mass(double tau) const {
  switch (form_) {
    case Form::ExpSum: {
      double s = 0.0;
      for (const auto& t : terms_) s += t.coeff / t.rate * std::exp(-t.rate * tau);
      return std::max(s, 0.0);
    }
    case Form::DelayComb: {
      double s = 0.0;
      for (const auto& t : taps_)
        if (t.delay > tau) s += t.weight;
      return s;
    }
    case Form::Tabulated: {
      if (tau >= grid_.back())
        return values_.back() > 0.0
                   ? values_.back() / tail_rate_ * std::exp(-tail_rate_ * (tau - grid_.back()))
                   : 0.0;
      double s = values_.back() > 0.0 ? values_.back() / tail_rate_ : 0.0;
      double t0 = std::max(tau, grid_.front());
      const double g0 = density(t0);
      for (std::size_t i = 0; i + 1 < grid_.size(); ++i) {
        if (grid_[i + 1] <= t0) continue;
        const double a = std::max(grid_[i], t0);
        const double ga = a == grid_[i] ? values_[i] : g0;
        s += 0.5 * (grid_[i + 1] - a) * (ga + values_[i + 1]);
      }
      return s;
    }
  }
  return 0.0;
}

double MemoryKernel::support_bound(double tail_tol) const {
  if (tail_tol <= 0.0)
    throw Error(ErrorCode::InvalidArgument, "tail tolerance must be positive");
  if (form_ == Form::DelayComb) return taps_.back().delay;
  if (tail_mass(0.0) <= tail_tol) return 0.0;
  double hi = 1.0;
  int guard = 0;
  while (tail_mass(hi) > tail_tol) {
    hi *= 2.0;
    if (++guard > 200)
      throw Error(ErrorCode::DivergentMoment, "kernel tail does not decay below tolerance");
  }
  double lo = hi > 1.0 ? hi * 0.5 : 0.0;
  for (int i = 0; i < 100; ++i) {
    const double mid = 0.5 * (lo + hi);
    (tail_mass(mid) > tail_tol ? lo : hi) = mid;
  }
  return hi;
}

double MemoryKernel::convolve_history(std::span<const double> history, double dt,
                                      double tau_max) const {
  if (history.empty()) throw Error(ErrorCode::InvalidArgument, "history is empty");
  if (!(dt > 0.0)) throw Error(ErrorCode::InvalidArgument, "history spacing must be positive");
  const double horizon = dt * static_cast<double>(history.size() - 1);

  double result = 0.0;
  if (form_ == Form::DelayComb) {
    for (const auto& t : taps_) {
      if (t.delay > horizon * (1.0 + 1e-12) || (horizon == 0.0 && t.delay > 0.0))
        throw Error(ErrorCode::InsufficientHistory, "history shorter than the largest delay");
      result += t.weight * lerp_history(history, std::min(t.delay / dt, horizon / dt));
    }
  } else {
    const auto steps = static_cast<std::size_t>(tau_max / dt + 1e-9);
    if (steps + 1 > history.size())
      throw Error(ErrorCode::InsufficientHistory, "history shorter than the requested horizon");
    double sum = 0.0;
    for (std::size_t j = 0; j <= steps; ++j) {
      const double w = (j == 0 || j == steps) ? 0.5 : 1.0;
      sum += w * density(dt * static_cast<double>(j)) * history[j];
    }
    result = sum * dt + history[steps] * tail_mass(dt * static_cast<double>(steps));
  }
  if (!std::isfinite(result))
    throw Error(ErrorCode::NaNDetected, "history convolution produced a non-finite value");
  return result;
}

}  // namespace memfront
