#include "core/evolve.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace memfront {
namespace {

constexpr double kStabilityFactor = 0.25;

double mean_front(const std::vector<double>& u, std::size_t begin, std::size_t end) {
  double s = 0.0;
  for (std::size_t i = begin; i < end; ++i) s += u[i];
  return s / static_cast<double>(end - begin);
}

}  // namespace

std::optional<double> track_level_crossing(const std::vector<double>& x,
                                           const std::vector<double>& u, double level,
                                           std::optional<double> hint) {
  std::optional<double> best;
  for (std::size_t i = 0; i + 1 < u.size(); ++i) {
    if (u[i] < level && level <= u[i + 1]) {
      const double pos = x[i] + (x[i + 1] - x[i]) * (level - u[i]) / (u[i + 1] - u[i]);
      if (!best) {
        best = pos;
      } else if (hint && std::abs(pos - *hint) < std::abs(*best - *hint)) {
        best = pos;
      } else if (!hint) {
        break;  // first crossing wins when there is no hint
      }
    }
  }
  return best;
}

std::pair<double, double> fit_front_speed(const std::vector<TrackSample>& samples,
                                          double window_fraction) {
  if (samples.size() < 3)
    throw Error(ErrorCode::InvalidArgument, "not enough track samples for a speed fit");
  const double t0 = samples.front().t, t1 = samples.back().t;
  const double t_start = t1 - window_fraction * (t1 - t0);
  std::vector<const TrackSample*> win;
  for (const auto& s : samples)
    if (s.t >= t_start - 1e-12) win.push_back(&s);
  if (win.size() < 3)
    throw Error(ErrorCode::InvalidArgument, "speed-fit window holds fewer than 3 samples");

  const double n = static_cast<double>(win.size());
  double mt = 0.0, mx = 0.0;
  for (const auto* s : win) {
    mt += s->t;
    mx += s->x;
  }
  mt /= n;
  mx /= n;
  double stt = 0.0, stx = 0.0;
  for (const auto* s : win) {
    stt += (s->t - mt) * (s->t - mt);
    stx += (s->t - mt) * (s->x - mx);
  }
  const double slope = stx / stt;
  double ss = 0.0;
  for (const auto* s : win) {
    const double r = s->x - mx - slope * (s->t - mt);
    ss += r * r;
  }
  return {slope, std::sqrt(ss / n)};
}

Evolver::Evolver(BistableProblem p, MemoryKernel k, EvolveOptions opts)
    : p_(std::move(p)), k_(std::move(k)), opts_(opts), roots_(tilted_roots(p_)) {
  if (!(opts_.dx > 0.0 && opts_.dt > 0.0 && opts_.X > opts_.dx))
    throw Error(ErrorCode::InvalidArgument, "invalid grid parameters");
  nx_ = static_cast<std::size_t>(std::lround(opts_.X / opts_.dx)) + 1;
  if (nx_ < 16) throw Error(ErrorCode::InvalidArgument, "domain too coarse");

  const double span = roots_.upper - roots_.lower;
  u_lo_bound_ = roots_.lower - 0.5 * span;
  u_hi_bound_ = roots_.upper + 0.5 * span;
  double lip = 0.0;
  for (int i = 0; i <= 2000; ++i) {
    const double u = u_lo_bound_ + (u_hi_bound_ - u_lo_bound_) * i / 2000.0;
    lip = std::max(lip, std::abs(p_.dF(u)));
  }
  lip += std::abs(p_.gamma);
  dt_limit_ = kStabilityFactor / lip;
  if (opts_.dt > dt_limit_) {
    std::ostringstream os;
    os << "dt = " << opts_.dt << " exceeds the explicit stability limit " << dt_limit_;
    throw Error(ErrorCode::StabilityViolation, os.str());
  }

  // backward Euler diffusion with mirrored (zero-flux) ends
  const double r = opts_.dt * p_.D / (opts_.dx * opts_.dx);
  std::vector<double> lo(nx_, -r), di(nx_, 1.0 + 2.0 * r), up(nx_, -r);
  up[0] = -2.0 * r;
  lo[nx_ - 1] = -2.0 * r;
  diffusion_.factorize(lo, di, up);

  rep_ = opts_.rep;
  if (rep_ == MemoryRep::Auto) {
    switch (k_.form()) {
      case MemoryKernel::Form::ExpSum: rep_ = MemoryRep::Channels; break;
      case MemoryKernel::Form::DelayComb: rep_ = MemoryRep::DelayTaps; break;
      case MemoryKernel::Form::Tabulated: rep_ = MemoryRep::HistoryRing; break;
    }
  }
  switch (rep_) {
    case MemoryRep::Channels: {
      if (k_.form() != MemoryKernel::Form::ExpSum)
        throw Error(ErrorCode::InvalidArgument, "channel representation needs an exponential kernel");
      channels_ = k_.channels();
      if (channels_.empty())
        for (const auto& t : k_.exp_terms())
          channels_.push_back({p_.gamma * t.coeff, 1.0, t.rate});
      for (const auto& c : channels_) {
        decay_.push_back(std::exp(-c.rate * opts_.dt));
        gain_.push_back(-std::expm1(-c.rate * opts_.dt) * c.b / c.rate);
      }
      break;
    }
    case MemoryRep::DelayTaps: {
      if (k_.form() != MemoryKernel::Form::DelayComb)
        throw Error(ErrorCode::InvalidArgument, "tap representation needs a delay-comb kernel");
      break;
    }
    case MemoryRep::HistoryRing: {
      if (k_.atomic())
        throw Error(ErrorCode::InvalidArgument,
                    "atomic kernels have no density; use the tap representation");
      const double support = k_.support_bound(opts_.tail_tol);
      const auto steps = static_cast<std::size_t>(std::ceil(support / opts_.dt));
      ring_weights_.resize(steps + 1);
      for (std::size_t j = 0; j <= steps; ++j) {
        const double wt = (j == 0 || j == steps) ? 0.5 : 1.0;
        ring_weights_[j] = wt * opts_.dt * k_.density(opts_.dt * static_cast<double>(j));
      }
      ring_weights_[steps] += k_.tail_mass(opts_.dt * static_cast<double>(steps));
      break;
    }
    case MemoryRep::Auto: break;  // unreachable
  }
}

FieldState Evolver::make_front_state() const {
  std::vector<double> u0(nx_);
  const double span = roots_.upper - roots_.lower;
  const double kw = span / (2.0 * std::sqrt(2.0 * p_.D));
  const double x0 = opts_.front_offset * opts_.X;
  for (std::size_t i = 0; i < nx_; ++i) {
    const double x = opts_.dx * static_cast<double>(i);
    u0[i] = roots_.lower + span * 0.5 * (1.0 + std::tanh(kw * (x - x0)));
  }
  return make_state(std::move(u0));
}

FieldState Evolver::make_state(std::vector<double> u0) const {
  if (u0.size() != nx_)
    throw Error(ErrorCode::InvalidArgument, "initial data size does not match the grid");
  FieldState s;
  s.x.resize(nx_);
  for (std::size_t i = 0; i < nx_; ++i) s.x[i] = opts_.dx * static_cast<double>(i);
  s.u = std::move(u0);
  s.t = 0.0;

  if (rep_ == MemoryRep::Channels) {
    for (const auto& c : channels_) {
      std::vector<double> w(nx_);
      for (std::size_t i = 0; i < nx_; ++i) w[i] = c.b * s.u[i] / c.rate;
      s.w.push_back(std::move(w));
    }
  } else {
    std::size_t cap;
    if (rep_ == MemoryRep::DelayTaps) {
      double max_delay = 0.0;
      for (const auto& tap : k_.taps()) max_delay = std::max(max_delay, tap.delay);
      cap = static_cast<std::size_t>(std::ceil(max_delay / opts_.dt)) + 2;
    } else {
      cap = ring_weights_.size();
    }
    s.ring.assign(cap, s.u);
    s.ring_head = 0;
  }
  return s;
}

std::vector<double> Evolver::memory_term(const FieldState& s) const {
  std::vector<double> m(nx_, 0.0);
  switch (rep_) {
    case MemoryRep::Channels:
      for (std::size_t ch = 0; ch < channels_.size(); ++ch) {
        const double a = channels_[ch].a;
        const auto& w = s.w[ch];
        for (std::size_t i = 0; i < nx_; ++i) m[i] += a * w[i];
      }
      break;
    case MemoryRep::HistoryRing: {
      const std::size_t cap = s.ring.size();
      for (std::size_t j = 0; j < ring_weights_.size(); ++j) {
        const double gw = p_.gamma * ring_weights_[j];
        const auto& past = s.ring[(s.ring_head + j) % cap];
        for (std::size_t i = 0; i < nx_; ++i) m[i] += gw * past[i];
      }
      break;
    }
    case MemoryRep::DelayTaps: {
      const std::size_t cap = s.ring.size();
      for (const auto& tap : k_.taps()) {
        const double pos = tap.delay / opts_.dt;
        const auto j = static_cast<std::size_t>(pos);
        const double f = pos - static_cast<double>(j);
        const auto& p0 = s.ring[(s.ring_head + j) % cap];
        const auto& p1 = s.ring[(s.ring_head + std::min(j + 1, cap - 1)) % cap];
        const double gw = p_.gamma * tap.weight;
        for (std::size_t i = 0; i < nx_; ++i)
          m[i] += gw * ((1.0 - f) * p0[i] + f * p1[i]);
      }
      break;
    }
    case MemoryRep::Auto: break;
  }
  return m;
}

void Evolver::check_state(const FieldState& s) const {
  for (double v : s.u) {
    if (!std::isfinite(v))
      throw Error(ErrorCode::NaNDetected, "field became non-finite during time stepping");
    if (v < u_lo_bound_ || v > u_hi_bound_) {
      std::ostringstream os;
      os << "field value " << v << " left the invariant region [" << u_lo_bound_ << ", "
         << u_hi_bound_ << "]";
      throw Error(ErrorCode::StabilityViolation, os.str());
    }
  }
}

void Evolver::step(FieldState& s) const {
  const std::vector<double> m = memory_term(s);
  std::vector<double> rhs(nx_);
  for (std::size_t i = 0; i < nx_; ++i)
    rhs[i] = s.u[i] + opts_.dt * (p_.F(s.u[i]) + m[i]);
  diffusion_.solve(rhs);

  if (rep_ == MemoryRep::Channels) {
    for (std::size_t ch = 0; ch < channels_.size(); ++ch) {
      auto& w = s.w[ch];
      const double d = decay_[ch], g = gain_[ch];
      for (std::size_t i = 0; i < nx_; ++i) w[i] = d * w[i] + g * s.u[i];
    }
  } else {
    s.ring_head = (s.ring_head + s.ring.size() - 1) % s.ring.size();
    s.ring[s.ring_head] = rhs;
  }
  s.u = std::move(rhs);
  s.t += opts_.dt;
  check_state(s);
}

RunResult Evolver::run_to_front(FieldState& s, double t_end) const {
  const double level = roots_.middle;
  const std::size_t edge = std::max<std::size_t>(3, nx_ / 20);
  if (!(mean_front(s.u, 0, edge) < level && mean_front(s.u, nx_ - edge, nx_) > level))
    throw Error(ErrorCode::InvalidArgument,
                "initial data is not front-admissible (plateaus must straddle the middle equilibrium)");

  const auto steps_per_out =
      std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(opts_.output_every / opts_.dt)));
  const auto total = static_cast<std::size_t>(std::lround((t_end - s.t) / opts_.dt));
  if (total == 0) throw Error(ErrorCode::InvalidArgument, "t_end does not leave room to evolve");

  RunResult out;
  const double margin = 10.0 * opts_.dx;
  std::optional<double> hint;
  auto record = [&]() {
    const auto pos = track_level_crossing(s.x, s.u, level, hint);
    if (!pos)
      throw Error(ErrorCode::NoCrossing, "front level set vanished during the run");
    if (*pos < margin || *pos > opts_.X - margin)
      throw Error(ErrorCode::FrontExited, "front reached the domain boundary");
    hint = *pos;
    out.track.push_back({s.t, *pos});
  };

  record();
  for (std::size_t n = 0; n < total; ++n) {
    step(s);
    if ((n + 1) % steps_per_out == 0 || n + 1 == total) record();
  }

  const auto [speed, rms] = fit_front_speed(out.track, 0.5);
  out.speed = speed;
  out.fit_residual = rms;
  return out;
}

}  // namespace memfront
