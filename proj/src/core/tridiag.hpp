#pragma once

#include <cassert>
#include <cstddef>
#include <vector>

namespace memfront {

// LU factorization of a tridiagonal matrix, reusable across right-hand sides.
// Row i reads: lower[i]*x[i-1] + diag[i]*x[i] + upper[i]*x[i+1] = b[i],
// with lower[0] and upper[n-1] ignored.
class TridiagFactor {
 public:
  TridiagFactor() = default;

  TridiagFactor(const std::vector<double>& lower, const std::vector<double>& diag,
                const std::vector<double>& upper) {
    factorize(lower, diag, upper);
  }

  void factorize(const std::vector<double>& lower, const std::vector<double>& diag,
                 const std::vector<double>& upper) {
    const std::size_t n = diag.size();
    assert(lower.size() == n && upper.size() == n && n > 0);
    lower_ = lower;
    upper_ = upper;
    inv_piv_.resize(n);
    double piv = diag[0];
    inv_piv_[0] = 1.0 / piv;
    for (std::size_t i = 1; i < n; ++i) {
      lower_[i] *= inv_piv_[i - 1];  // multiplier stored in place
      piv = diag[i] - lower_[i] * upper_[i - 1];
      inv_piv_[i] = 1.0 / piv;
    }
  }

  // Solves in place.
  void solve(std::vector<double>& b) const { solve(b.data(), b.size()); }

  void solve(double* b, std::size_t n) const {
    assert(n == inv_piv_.size());
    for (std::size_t i = 1; i < n; ++i) b[i] -= lower_[i] * b[i - 1];
    b[n - 1] *= inv_piv_[n - 1];
    for (std::size_t i = n - 1; i-- > 0;)
      b[i] = (b[i] - upper_[i] * b[i + 1]) * inv_piv_[i];
  }

  std::size_t size() const { return inv_piv_.size(); }

 private:
  std::vector<double> lower_, upper_, inv_piv_;
};

// Periodic (cyclic) tridiagonal solver: row i couples indices i-1, i, i+1 mod n.
// The corner entries are folded in with a rank-one update, so each solve costs
// one ordinary tridiagonal solve plus two dot products.
class CyclicTridiagFactor {
 public:
  CyclicTridiagFactor() = default;

  CyclicTridiagFactor(const std::vector<double>& lower, const std::vector<double>& diag,
                      const std::vector<double>& upper) {
    factorize(lower, diag, upper);
  }

  void factorize(const std::vector<double>& lower, const std::vector<double>& diag,
                 const std::vector<double>& upper) {
    const std::size_t n = diag.size();
    assert(n >= 3);
    const double alpha = lower[0];      // A(0, n-1)
    const double beta = upper[n - 1];   // A(n-1, 0)
    gamma_ = -diag[0];
    std::vector<double> d = diag;
    d[0] -= gamma_;
    d[n - 1] -= alpha * beta / gamma_;
    base_.factorize(lower, d, upper);

    z_.assign(n, 0.0);
    z_[0] = gamma_;
    z_[n - 1] = beta;
    base_.solve(z_);
    alpha_over_gamma_ = alpha / gamma_;
    denom_ = 1.0 + z_[0] + alpha_over_gamma_ * z_[n - 1];
  }

  void solve(std::vector<double>& b) const { solve(b.data(), b.size()); }

  void solve(double* b, std::size_t n) const {
    base_.solve(b, n);
    const double fact = (b[0] + alpha_over_gamma_ * b[n - 1]) / denom_;
    for (std::size_t i = 0; i < n; ++i) b[i] -= fact * z_[i];
  }

  std::size_t size() const { return base_.size(); }

 private:
  TridiagFactor base_;
  std::vector<double> z_;
  double gamma_ = 0.0, alpha_over_gamma_ = 0.0, denom_ = 1.0;
};

}  // namespace memfront
