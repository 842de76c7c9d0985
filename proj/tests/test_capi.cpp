#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "memfront/memfront.h"

// Everything here goes through the C surface of the shared library; the C++
// core stays an implementation detail.

namespace {

using doctest::Approx;

memfront_kernel* unit_exp_kernel(double gamma) {
  const double c = 1.0, r = 1.0;
  memfront_kernel* k = nullptr;
  REQUIRE(memfront_kernel_exp_sum(&c, &r, 1, gamma, &k) == MEMFRONT_OK);
  REQUIRE(k != nullptr);
  return k;
}

std::filesystem::path capi_scratch() {
  const auto dir = std::filesystem::temp_directory_path() / "memfront_capi";
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("version and status names are stable strings") {
  CHECK(std::strcmp(memfront_version(), "0.1.0") == 0);
  CHECK(std::strcmp(memfront_status_name(MEMFRONT_OK), "ok") == 0);
  CHECK(std::strcmp(memfront_status_name(MEMFRONT_ERR_NOT_BISTABLE), "not_bistable") == 0);
  CHECK(std::strcmp(memfront_status_name(MEMFRONT_ERR_UNKNOWN), "unknown") == 0);
  CHECK(memfront_last_error() != nullptr);
}

TEST_CASE("kernel constructors expose weight and normalized moments") {
  const double coeffs[] = {1.0, -2.0, 1.0};
  const double rates[] = {2.0, 3.0, 4.0};
  memfront_kernel* k = nullptr;
  REQUIRE(memfront_kernel_exp_sum(coeffs, rates, 3, 1.0 / 12.0, &k) == MEMFRONT_OK);
  double gamma = 0.0, mass = 0.0, mean = 0.0;
  CHECK(memfront_kernel_gamma(k, &gamma) == MEMFRONT_OK);
  CHECK(gamma == Approx(1.0 / 12.0));
  CHECK(memfront_kernel_moments(k, &mass, &mean) == MEMFRONT_OK);
  CHECK(mass == Approx(1.0).epsilon(1e-12));
  CHECK(mean == Approx(13.0 / 12.0).epsilon(1e-12));
  memfront_kernel_free(k);

  const double w[] = {0.25, 0.75};
  const double d[] = {0.8, 2.0};
  memfront_kernel* comb = nullptr;
  REQUIRE(memfront_kernel_delay_comb(w, d, 2, &comb) == MEMFRONT_OK);
  CHECK(memfront_kernel_gamma(comb, &gamma) == MEMFRONT_OK);
  CHECK(gamma == Approx(1.0));
  CHECK(memfront_kernel_moments(comb, nullptr, &mean) == MEMFRONT_OK);
  CHECK(mean == Approx(1.7));
  memfront_kernel_free(comb);

  const double ca[] = {1.0, 0.5};
  const double cb[] = {1.0, 2.0};
  const double cr[] = {2.0, 4.0};
  memfront_kernel* ch = nullptr;
  REQUIRE(memfront_kernel_pde_ode(ca, cb, cr, 2, &ch) == MEMFRONT_OK);
  CHECK(memfront_kernel_gamma(ch, &gamma) == MEMFRONT_OK);
  CHECK(gamma == Approx(0.75));
  CHECK(memfront_kernel_moments(ch, &mass, &mean) == MEMFRONT_OK);
  CHECK(mean == Approx(5.0 / 12.0));
  memfront_kernel_free(ch);

  const double tau[] = {0.0, 1.0, 2.0};
  const double vals[] = {1.0, 1.0, 0.0};
  memfront_kernel* tab = nullptr;
  REQUIRE(memfront_kernel_tabulated(tau, vals, 3, 1.0, 0.5, &tab) == MEMFRONT_OK);
  CHECK(memfront_kernel_moments(tab, &mass, &mean) == MEMFRONT_OK);
  CHECK(mass == Approx(1.0).epsilon(1e-12));
  CHECK(mean == Approx(7.0 / 9.0).epsilon(1e-12));
  memfront_kernel_free(tab);
}

TEST_CASE("kernel failures map onto the status enum and leave a message") {
  memfront_kernel* k = reinterpret_cast<memfront_kernel*>(0x1);
  const double c = 1.0;
  const double bad_rate = -1.0;
  CHECK(memfront_kernel_exp_sum(&c, &bad_rate, 1, 0.0, &k) == MEMFRONT_ERR_DIVERGENT_MOMENT);
  CHECK(k == reinterpret_cast<memfront_kernel*>(0x1));  // untouched on failure
  CHECK(std::strlen(memfront_last_error()) > 0);

  const double mixed_c[] = {1.0, -2.0};
  const double mixed_r[] = {1.0, 3.0};
  CHECK(memfront_kernel_exp_sum(mixed_c, mixed_r, 2, 0.1, &k) == MEMFRONT_ERR_NEGATIVE_KERNEL);
  CHECK(memfront_kernel_exp_sum(nullptr, &bad_rate, 1, 0.0, &k) == MEMFRONT_ERR_INVALID_ARGUMENT);
  CHECK(memfront_kernel_exp_sum(&c, &c, 1, 0.0, nullptr) == MEMFRONT_ERR_INVALID_ARGUMENT);

  const double neg_w = -0.5, delay = 1.0;
  CHECK(memfront_kernel_delay_comb(&neg_w, &delay, 1, &k) == MEMFRONT_ERR_NOT_POSITIVE);
  CHECK(memfront_kernel_gamma(nullptr, nullptr) == MEMFRONT_ERR_INVALID_ARGUMENT);
}

TEST_CASE("cubic equilibria come back ordered and tilt-aware") {
  memfront_problem* p = nullptr;
  REQUIRE(memfront_problem_cubic(0.6, 1.0, 0.05, &p) == MEMFRONT_OK);
  double lo = -1.0, mid = -1.0, up = -1.0;
  CHECK(memfront_problem_equilibria(p, &lo, &mid, &up) == MEMFRONT_OK);
  // (1 - a)^2 + 4 gamma = 0.36, so the quadratic factor splits exactly
  CHECK(lo == Approx(0.0));
  CHECK(mid == Approx(0.5).epsilon(1e-12));
  CHECK(up == Approx(1.1).epsilon(1e-12));
  memfront_problem_free(p);

  memfront_problem* strong = nullptr;
  REQUIRE(memfront_problem_cubic(0.6, 1.0, 0.6, &strong) == MEMFRONT_OK);
  CHECK(memfront_problem_equilibria(strong, &lo, &mid, &up) == MEMFRONT_ERR_NOT_BISTABLE);
  CHECK(std::strlen(memfront_last_error()) > 0);
  memfront_problem_free(strong);

  const double coeffs[] = {0.0, -0.6, 1.6, -1.0};  // same cubic, written out
  memfront_problem* poly = nullptr;
  REQUIRE(memfront_problem_polynomial(coeffs, 4, 1.0, 0.05, -1.0, 2.0, &poly) == MEMFRONT_OK);
  CHECK(memfront_problem_equilibria(poly, &lo, &mid, &up) == MEMFRONT_OK);
  CHECK(mid == Approx(0.5).epsilon(1e-9));
  CHECK(up == Approx(1.1).epsilon(1e-9));
  memfront_problem_free(poly);
}

TEST_CASE("closed-form speed helpers agree with their zero crossings") {
  double c = -1.0;
  REQUIRE(memfront_local_speed(0.6, 0.0, &c) == MEMFRONT_OK);
  CHECK(c == Approx(0.2 / std::sqrt(2.0)).epsilon(1e-12));

  double b0 = 0.0;
  REQUIRE(memfront_beta_zero(0.6, &b0) == MEMFRONT_OK);
  CHECK(b0 == Approx(-0.28 / 9.0).epsilon(1e-12));
  REQUIRE(memfront_local_speed(0.6, b0, &c) == MEMFRONT_OK);
  CHECK(std::abs(c) < 1e-12);

  CHECK(memfront_beta_zero(0.4, &b0) == MEMFRONT_ERR_OUT_OF_REGIME);
  CHECK(memfront_local_speed(0.6, 0.2, &c) == MEMFRONT_ERR_NOT_BISTABLE);
}

TEST_CASE("fixed-point front solve yields the slowed speed and a profile") {
  memfront_problem* p = nullptr;
  REQUIRE(memfront_problem_cubic(0.6, 1.0, 0.05, &p) == MEMFRONT_OK);
  memfront_kernel* k = unit_exp_kernel(0.05);

  memfront_front_options o;
  memfront_front_options_init(&o);
  CHECK(o.L == Approx(60.0));
  CHECK(o.h == Approx(0.05));

  memfront_front* f = nullptr;
  REQUIRE(memfront_solve_fixed_point(p, k, &o, &f) == MEMFRONT_OK);

  double speed = 0.0, gap = 1.0;
  CHECK(memfront_front_speed(f, &speed) == MEMFRONT_OK);
  CHECK(memfront_front_fixed_point_gap(f, &gap) == MEMFRONT_OK);
  CHECK(std::abs(gap) < 1e-6);

  double c0 = 0.0;
  REQUIRE(memfront_local_speed(0.6, -0.05, &c0) == MEMFRONT_OK);
  CHECK(speed < 0.0);       // strong enough memory reverses the front
  CHECK(speed > c0);        // but less than the directly tilted equation says

  double blo = 0.0, bhi = 0.0;
  REQUIRE(memfront_speed_bounds(p, k, speed, &blo, &bhi) == MEMFRONT_OK);
  CHECK(blo <= speed);
  CHECK(speed <= bhi);

  size_t n = 0;
  REQUIRE(memfront_front_size(f, &n) == MEMFRONT_OK);
  CHECK(n > 100);
  std::vector<double> xi(n), u(n);
  REQUIRE(memfront_front_profile(f, xi.data(), u.data(), n) == MEMFRONT_OK);
  CHECK(xi.front() < xi.back());
  CHECK(u.front() == Approx(0.0).epsilon(1e-6));
  CHECK(u.back() == Approx(1.1).epsilon(1e-5));
  for (size_t i = 1; i < n; ++i) CHECK(u[i] >= u[i - 1] - 1e-4);

  // partial copies stop at the cap and leave the rest alone
  std::vector<double> head(8, -7.0);
  REQUIRE(memfront_front_profile(f, nullptr, head.data(), 4) == MEMFRONT_OK);
  CHECK(head[3] == Approx(u[3]));
  CHECK(head[4] == Approx(-7.0));

  memfront_front_free(f);
  memfront_kernel_free(k);
  memfront_problem_free(p);
}

TEST_CASE("time-domain measurement matches the closed-form cubic speed") {
  memfront_problem* p = nullptr;
  REQUIRE(memfront_problem_cubic(0.6, 1.0, 0.0, &p) == MEMFRONT_OK);
  memfront_kernel* k = unit_exp_kernel(0.0);  // zero weight: memory switched off

  memfront_evolve_options o;
  memfront_evolve_options_init(&o);
  CHECK(o.X == Approx(400.0));
  o.X = 200.0;
  o.t_end = 60.0;
  o.front_offset = 0.35;

  double speed = 0.0, resid = 1.0;
  REQUIRE(memfront_measure_speed(p, k, &o, &speed, &resid) == MEMFRONT_OK);
  CHECK(speed == Approx(0.2 / std::sqrt(2.0)).epsilon(0.02));
  CHECK(resid < 1e-2);

  o.dt = 1.0;  // far beyond the explicit reaction step limit
  CHECK(memfront_measure_speed(p, k, &o, &speed, &resid) == MEMFRONT_ERR_STABILITY);

  memfront_kernel_free(k);
  memfront_problem_free(p);
}

TEST_CASE("experiment entry point honors the exit-code convention") {
  int exit_code = -1;
  char* summary = nullptr;
  REQUIRE(memfront_run_experiment("kernel-check", "/nonexistent.json", nullptr, nullptr, 0,
                                  &exit_code, &summary) == MEMFRONT_OK);
  CHECK(exit_code == 2);
  REQUIRE(summary != nullptr);
  CHECK(std::string(summary).find("ConfigError") != std::string::npos);
  memfront_string_free(summary);

  const auto dir = capi_scratch();
  const auto cfg_path = dir / "kernel.json";
  {
    std::ofstream cfg(cfg_path);
    cfg << R"({"kernel": {"form": "delay_comb", "taps": [[0.05, 1.25]]}})";
  }
  summary = nullptr;
  const char* ov = "kernel.taps=[[0.05, 2.5]]";
  REQUIRE(memfront_run_experiment("kernel-check", cfg_path.string().c_str(),
                                  (dir / "out").string().c_str(), &ov, 1, &exit_code,
                                  &summary) == MEMFRONT_OK);
  CHECK(exit_code == 0);
  REQUIRE(summary != nullptr);
  const std::string s(summary);
  CHECK(s.find("\"mean_delay\": 2.5") != std::string::npos);
  memfront_string_free(summary);
  CHECK(std::filesystem::exists(dir / "out" / "kernel_summary.json"));

  CHECK(memfront_run_experiment(nullptr, "x", nullptr, nullptr, 0, &exit_code, nullptr) ==
        MEMFRONT_ERR_INVALID_ARGUMENT);
}
