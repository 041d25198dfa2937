#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace tsdyn {

inline constexpr std::string_view kVersion = "tsdyn 0.1.0";

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailed = 2;
inline constexpr int kExitInconclusive = 3;
inline constexpr int kExitConfig = 4;

struct CliOptions {
  std::string command;
  std::string config_path;
  std::optional<std::string> out;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> strategy;
  std::optional<std::vector<std::size_t>> family;
};

/// Runs one command (check, solve, bounds, quadrature) and returns the exit
/// code: 0 success, 2 criterion failed / DIVERGED / DOMAIN_ERROR,
/// 3 INCONCLUSIVE / MAX_ITERS, 4 configuration error.
int run(const CliOptions& options);

/// %.17g, the fixed format of every number the CLI writes.
std::string format_number(double v);

}  // namespace tsdyn
