#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "tsdyn/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Dirichlet problems on time scales: checks, bounds and solves"};
  app.set_version_flag("--version", std::string(tsdyn::kVersion));

  tsdyn::CliOptions opts;
  std::string out;
  std::uint64_t seed = 0;
  std::string strategy;
  std::vector<std::size_t> family;
  app.add_option("command", opts.command, "check, solve, bounds or quadrature")
      ->required()
      ->check(CLI::IsMember({"check", "solve", "bounds", "quadrature"}));
  app.add_option("config", opts.config_path, "problem description")->required();
  auto* out_opt = app.add_option("--out", out, "write results here instead of stdout");
  auto* seed_opt = app.add_option("--seed", seed, "seed for the sampling checks");
  auto* strategy_opt = app.add_option("--strategy", strategy, "solver strategy override");
  auto* family_opt = app.add_option("--family", family, "refinement family, e.g. 17,33,65,129")
                         ->delimiter(',');

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return tsdyn::kExitConfig;
  }
  if (*out_opt) opts.out = out;
  if (*seed_opt) opts.seed = seed;
  if (*strategy_opt) opts.strategy = strategy;
  if (*family_opt) opts.family = family;
  return tsdyn::run(opts);
}
