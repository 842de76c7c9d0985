#include "core/config.hpp"

#include <array>
#include <cmath>
#include <fstream>
#include <limits>

namespace memfront {
namespace {

using nlohmann::json;

[[noreturn]] void bad(const std::string& what) { throw Error(ErrorCode::ConfigError, what); }

const json& need(const json& j, const char* key, const char* ctx) {
  auto it = j.find(key);
  if (it == j.end()) bad(std::string("missing key \"") + key + "\" in " + ctx);
  return *it;
}

double num(const json& j, const char* ctx) {
  if (!j.is_number()) bad(std::string(ctx) + " must be a number");
  return j.get<double>();
}

double num_or(const json& block, const char* key, double fallback) {
  auto it = block.find(key);
  if (it == block.end()) return fallback;
  return num(*it, key);
}

std::vector<std::array<double, 2>> pair_list(const json& j, const char* ctx) {
  if (!j.is_array() || j.empty()) bad(std::string(ctx) + " must be a non-empty array of pairs");
  std::vector<std::array<double, 2>> out;
  for (const auto& e : j) {
    if (!e.is_array() || e.size() != 2) bad(std::string(ctx) + " entries must be [x, y] pairs");
    out.push_back({num(e[0], ctx), num(e[1], ctx)});
  }
  return out;
}

}  // namespace

nlohmann::json load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) bad("cannot open config file " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    bad("config " + path + " is not valid JSON: " + e.what());
  }
}

void apply_overrides(nlohmann::json& cfg, const std::vector<std::string>& overrides) {
  for (const auto& ov : overrides) {
    const auto eq = ov.find('=');
    if (eq == std::string::npos || eq == 0) bad("override \"" + ov + "\" is not key=value");
    const std::string path = ov.substr(0, eq);
    const std::string raw = ov.substr(eq + 1);
    json value;
    try {
      value = json::parse(raw);
    } catch (const json::exception&) {
      value = raw;  // keep unparseable values as strings
    }

    json* node = &cfg;
    std::size_t start = 0;
    while (true) {
      const auto dot = path.find('.', start);
      const std::string key = path.substr(start, dot == std::string::npos ? dot : dot - start);
      if (key.empty()) bad("override path \"" + path + "\" has an empty segment");
      if (dot == std::string::npos) {
        (*node)[key] = value;
        break;
      }
      node = &(*node)[key];
      if (!node->is_object() && !node->is_null()) bad("override path \"" + path + "\" crosses a non-object");
      start = dot + 1;
    }
  }
}

BistableProblem problem_from_config(const nlohmann::json& cfg, double gamma) {
  const json& nl = need(cfg, "nonlinearity", "config");
  const std::string type = need(nl, "type", "nonlinearity").get<std::string>();
  const double D = num_or(nl, "D", 1.0);
  if (type == "cubic") {
    return BistableProblem::cubic(num(need(nl, "a", "nonlinearity"), "a"), D, gamma);
  }
  if (type == "polynomial") {
    const json& cj = need(nl, "coeffs", "nonlinearity");
    if (!cj.is_array() || cj.size() < 2) bad("polynomial coeffs must be an array");
    std::vector<double> coeffs;
    for (const auto& c : cj) coeffs.push_back(num(c, "coeffs"));
    auto p = BistableProblem::polynomial(coeffs, D, gamma);
    if (auto it = nl.find("scan"); it != nl.end()) {
      if (!it->is_array() || it->size() != 2) bad("scan must be [lo, hi]");
      p.scan_lo = num((*it)[0], "scan");
      p.scan_hi = num((*it)[1], "scan");
    }
    return p;
  }
  bad("unknown nonlinearity type \"" + type + "\"");
}

MemoryKernel kernel_from_config(const nlohmann::json& cfg, double gamma_override) {
  const json& kb = need(cfg, "kernel", "config");
  const std::string form = need(kb, "form", "kernel").get<std::string>();
  const bool retilt = std::isfinite(gamma_override);

  if (form == "exp_sum") {
    std::vector<ExpTerm> terms;
    for (const auto& [c, r] : pair_list(need(kb, "terms", "kernel"), "kernel.terms"))
      terms.push_back({c, r});
    const double gamma = retilt ? gamma_override : num(need(kb, "gamma", "kernel"), "gamma");
    return MemoryKernel::exp_sum(terms, gamma);
  }
  if (form == "delay_comb") {
    std::vector<DelayTap> taps;
    for (const auto& [w, d] : pair_list(need(kb, "taps", "kernel"), "kernel.taps"))
      taps.push_back({w, d});
    if (retilt) return MemoryKernel::delay_comb(taps, gamma_override);
    if (kb.contains("gamma")) return MemoryKernel::delay_comb(taps, num(kb["gamma"], "gamma"));
    return MemoryKernel::delay_comb(taps);
  }
  if (form == "tabulated") {
    const json& tj = need(kb, "tau", "kernel");
    const json& vj = need(kb, "values", "kernel");
    if (!tj.is_array() || !vj.is_array()) bad("tabulated kernel needs tau and values arrays");
    std::vector<double> tau, values;
    for (const auto& t : tj) tau.push_back(num(t, "tau"));
    for (const auto& v : vj) values.push_back(num(v, "values"));
    const double tail = num(need(kb, "tail_rate", "kernel"), "tail_rate");
    const double gamma = retilt ? gamma_override : num(need(kb, "gamma", "kernel"), "gamma");
    return MemoryKernel::tabulated(tau, values, tail, gamma);
  }
  if (form == "pde_ode") {
    if (retilt) bad("pde_ode kernels carry their own weight; gamma cannot be overridden");
    const json& cj = need(kb, "couplings", "kernel");
    if (!cj.is_array() || cj.empty()) bad("kernel.couplings must be a non-empty array");
    std::vector<Coupling> ch;
    for (const auto& e : cj) {
      if (!e.is_array() || e.size() != 3) bad("kernel.couplings entries must be [a, b, rate]");
      ch.push_back({num(e[0], "couplings"), num(e[1], "couplings"), num(e[2], "couplings")});
    }
    return MemoryKernel::from_pde_ode(ch);
  }
  bad("unknown kernel form \"" + form + "\"");
}

MemoryKernel kernel_from_config(const nlohmann::json& cfg) {
  return kernel_from_config(cfg, std::numeric_limits<double>::quiet_NaN());
}

FrontOptions front_options_from_config(const nlohmann::json& cfg) {
  FrontOptions o;
  auto it = cfg.find("front");
  if (it == cfg.end()) return o;
  const json& b = *it;
  o.L = num_or(b, "L", o.L);
  o.h = num_or(b, "h", o.h);
  o.newton_tol = num_or(b, "newton_tol", o.newton_tol);
  o.fp_tol = num_or(b, "fp_tol", o.fp_tol);
  o.mono_tol = num_or(b, "mono_tol", o.mono_tol);
  o.layer_tol = num_or(b, "layer_tol", o.layer_tol);
  o.tail_tol = num_or(b, "tail_tol", o.tail_tol);
  o.max_newton_iter = static_cast<int>(num_or(b, "max_newton_iter", o.max_newton_iter));
  return o;
}

EvolveOptions evolve_options_from_config(const nlohmann::json& cfg) {
  EvolveOptions o;
  auto it = cfg.find("evolve");
  if (it == cfg.end()) return o;
  const json& b = *it;
  o.X = num_or(b, "X", o.X);
  o.dx = num_or(b, "dx", o.dx);
  o.dt = num_or(b, "dt", o.dt);
  o.t_end = num_or(b, "t_end", o.t_end);
  o.output_every = num_or(b, "output_every", o.output_every);
  o.tail_tol = num_or(b, "tail_tol", o.tail_tol);
  o.front_offset = num_or(b, "front_offset", o.front_offset);
  if (auto r = b.find("rep"); r != b.end()) {
    const std::string rep = r->get<std::string>();
    if (rep == "auto") o.rep = MemoryRep::Auto;
    else if (rep == "channels") o.rep = MemoryRep::Channels;
    else if (rep == "history_ring") o.rep = MemoryRep::HistoryRing;
    else if (rep == "delay_taps") o.rep = MemoryRep::DelayTaps;
    else bad("unknown memory representation \"" + rep + "\"");
  }
  return o;
}

}  // namespace memfront
