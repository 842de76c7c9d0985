#pragma once

#include <limits>
#include <string>
#include <vector>

#include "json.hpp"

#include "core/twfront.hpp"
#include "core/twoscale.hpp"

namespace memfront {

// One tilt value of the coupling sweep. Failed rows keep the error code name
// in status and NaN in the unpopulated columns; the sweep itself carries on.
struct SweepRow {
  double beta = 0.0;
  double gamma = 0.0;
  bool in_regime = false;  // nonnegative weight and bistable tilt
  double mckean = std::numeric_limits<double>::quiet_NaN();
  double beta0 = std::numeric_limits<double>::quiet_NaN();
  double c_evolve = std::numeric_limits<double>::quiet_NaN();
  double evolve_residual = std::numeric_limits<double>::quiet_NaN();
  double c_fp = std::numeric_limits<double>::quiet_NaN();
  double fp_gap = std::numeric_limits<double>::quiet_NaN();
  double c_at_zero = std::numeric_limits<double>::quiet_NaN();
  int bracket_ok = -1;  // 1 inside, 0 outside, -1 not applicable
  std::string status = "ok";
};

struct SweepOutcome {
  std::vector<SweepRow> rows;
  std::size_t failures = 0;
  nlohmann::json summary;
};

SweepOutcome run_speed_sweep(const nlohmann::json& cfg);
void write_sweep_outputs(const SweepOutcome& out, const std::string& out_dir);

struct FrontOutcome {
  FrontSolution sol;
  nlohmann::json summary;
};

FrontOutcome run_front(const nlohmann::json& cfg);
void write_front_outputs(const FrontOutcome& out, const std::string& out_dir);

struct TwoScaleOutcome {
  SturmBasis basis;               // eigen-resolution basis used for the report
  std::vector<double> coeff_a, coeff_b;
  double gamma = 0.0;             // from the eigen-resolution basis
  double gamma_sim = 0.0;         // from the basis matching the simulation grid
  TwoScaleResult sim;
  RunResult scalar;               // same front through the collapsed kernel
  double scalar_speed = 0.0;
  nlohmann::json summary;
};

TwoScaleOutcome run_two_scale_demo(const nlohmann::json& cfg);
void write_two_scale_outputs(const TwoScaleOutcome& out, const std::string& out_dir);

struct KernelOutcome {
  std::vector<std::pair<double, double>> samples;  // (tau, density), empty for pure combs
  nlohmann::json summary;
};

KernelOutcome run_kernel_check(const nlohmann::json& cfg);
void write_kernel_outputs(const KernelOutcome& out, const std::string& out_dir);

// CLI entry: dispatches on verb, writes outputs under out_dir, fills a JSON
// summary string. Returns 0 on success, 2 on config errors, 3 when solving
// failed (for sweeps: more than 10% failed rows).
int run_experiment(const std::string& verb, const std::string& config_path,
                   const std::string& out_dir, const std::vector<std::string>& overrides,
                   std::string& summary_out);

}  // namespace memfront
