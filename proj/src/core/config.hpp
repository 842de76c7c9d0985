#pragma once

#include <string>
#include <vector>

#include "json.hpp"

#include "core/bistable.hpp"
#include "core/evolve.hpp"
#include "core/kernels.hpp"
#include "core/twfront.hpp"

namespace memfront {

// Reads a JSON experiment description. Throws Error(ConfigError) on parse or
// schema problems, so callers can map them to the config exit code.
nlohmann::json load_config(const std::string& path);

// "key.sub=value" assignments; the value is parsed as JSON when possible and
// kept as a string otherwise. Paths create missing objects.
void apply_overrides(nlohmann::json& cfg, const std::vector<std::string>& overrides);

// Builders from the schema blocks. Each throws Error(ConfigError) with the
// offending key in the message. gamma is the memory weight the reaction is
// tilted by; it lives with the kernel, so the caller passes it in.
BistableProblem problem_from_config(const nlohmann::json& cfg, double gamma);

// gamma_override replaces the block's "gamma" when finite (sweeps retilt the
// same kernel shape per row)
MemoryKernel kernel_from_config(const nlohmann::json& cfg, double gamma_override);
MemoryKernel kernel_from_config(const nlohmann::json& cfg);

FrontOptions front_options_from_config(const nlohmann::json& cfg);
EvolveOptions evolve_options_from_config(const nlohmann::json& cfg);

}  // namespace memfront
