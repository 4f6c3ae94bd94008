#pragma once

#include "config.hpp"

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>

namespace sidekit::cli {

/// Command-line values that take precedence over the config file.
struct Overrides {
    std::optional<Task> task;
    std::optional<std::uint64_t> seed;
    std::optional<std::uint64_t> trajectories;
    std::optional<std::string> out;
};

/// Throws ConfigError when the override task conflicts with the config.
[[nodiscard]] RunConfig apply(RunConfig cfg, const Overrides& o);

inline constexpr int kExitOk = 0;
inline constexpr int kExitNegative = 1;
inline constexpr int kExitInvalid = 2;

/// Runs the configured task, writes its artifacts under the output directory
/// and echoes the report to `log`. Returns the exit code; input errors are
/// reported as exceptions (ConfigError, std::invalid_argument).
int run(const RunConfig& cfg, std::ostream& log);

/// Full driver: exceptions become diagnostics on `err` and exit codes.
int run_guarded(const RunConfig& cfg, std::ostream& log, std::ostream& err);

} // namespace sidekit::cli
