#include <cstdio>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "memfront/memfront.h"

int main(int argc, char** argv) {
  CLI::App app{"traveling fronts of bistable reaction-diffusion equations with memory"};
  app.require_subcommand(1);

  struct VerbArgs {
    std::string config;
    std::string out;
    std::vector<std::string> overrides;
  };
  const std::vector<std::pair<std::string, std::string>> verbs = {
      {"sweep", "scan the coupling weight and tabulate front speeds"},
      {"front", "solve one traveling-front boundary-value problem"},
      {"twoscale", "run the macro-micro system and its scalar reduction"},
      {"kernel-check", "validate a kernel block and report its moments"},
  };
  std::vector<VerbArgs> args(verbs.size());
  for (std::size_t i = 0; i < verbs.size(); ++i) {
    auto* sub = app.add_subcommand(verbs[i].first, verbs[i].second);
    sub->add_option("--config", args[i].config, "JSON experiment description")
        ->required()
        ->check(CLI::ExistingFile);
    sub->add_option("--out", args[i].out, "output directory (default: config's out_dir)");
    sub->add_option("--override", args[i].overrides, "key.path=value config edits");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int r = app.exit(e);
    return r == 0 ? 0 : 2;  // usage problems are config errors
  }

  std::size_t chosen = 0;
  for (std::size_t i = 0; i < verbs.size(); ++i)
    if (app.get_subcommand(verbs[i].first)->parsed()) chosen = i;
  const VerbArgs& a = args[chosen];

  std::vector<const char*> overrides;
  overrides.reserve(a.overrides.size());
  for (const auto& ov : a.overrides) overrides.push_back(ov.c_str());

  int exit_code = 0;
  char* summary = nullptr;
  const memfront_status st = memfront_run_experiment(
      verbs[chosen].first.c_str(), a.config.c_str(), a.out.empty() ? nullptr : a.out.c_str(),
      overrides.empty() ? nullptr : overrides.data(), overrides.size(), &exit_code, &summary);

  if (st != MEMFRONT_OK) {
    std::fprintf(stderr, "%s: %s\n", memfront_status_name(st), memfront_last_error());
    return 3;
  }
  if (summary) {
    std::printf("%s\n", summary);
    memfront_string_free(summary);
  }
  return exit_code;
}
