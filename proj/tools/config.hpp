#pragma once

// Run configuration for the sidekit tool: a flat key-value file with
// [system], [task], [numeric] and [output] sections.
//
//   [system]
//   F  = [[-4]]
//   G1 = [[1]]
//   x0 = [1]
//
//   [task]
//   kind = analyze
//
//   [numeric]
//   dt_bar = 0.4
//
// '#' and ';' start comments. Scalars are plain numbers, vectors are [a, b],
// matrices are [[a, b], [c, d]].

#include "sidekit/matrix.hpp"
#include "sidekit/models.hpp"

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace sidekit::cli {

class ConfigError : public std::runtime_error {
public:
    ConfigError(const std::string& what, int line = 0, std::string key = {});

    [[nodiscard]] int line() const noexcept { return line_; }
    [[nodiscard]] const std::string& key() const noexcept { return key_; }

private:
    int line_;
    std::string key_;
};

enum class Task {
    Simulate,
    Analyze,
    MaxStepsize,
    Exponent,
    Converge,
    CpsDemo,
};

[[nodiscard]] std::string task_name(Task t);
[[nodiscard]] std::optional<Task> parse_task(const std::string& name);

struct SystemBlock {
    std::optional<Mat> f;
    std::vector<Mat> g;
    std::optional<double> lambda;
    std::optional<double> mu;
    std::optional<double> a;
    std::optional<double> k_p;
    std::optional<Vec> x0;
};

struct NumericBlock {
    std::optional<double> dt;
    std::optional<double> dt_bar;
    std::optional<double> horizon; ///< key T
    std::optional<double> p;
    std::optional<double> tol;
    std::optional<double> window;
    std::optional<std::uint64_t> seed;
    std::optional<std::uint64_t> trajectories;
    std::optional<std::uint64_t> inner_substeps;
    std::optional<std::uint64_t> refinement;
    std::optional<std::uint64_t> threads;
    /// Convergence levels, Δt = 2^-level.
    std::vector<std::int64_t> levels;
    std::optional<std::string> impulse_noise; ///< xi | brownian
    std::optional<std::string> integration;   ///< identity | separate
};

struct OutputBlock {
    std::optional<std::string> dir;
    std::optional<bool> substeps;
};

struct RunConfig {
    SystemBlock system;
    std::optional<Task> task;
    NumericBlock numeric;
    OutputBlock output;
};

[[nodiscard]] bool operator==(const RunConfig& a, const RunConfig& b);

[[nodiscard]] RunConfig parse_config(const std::string& text);
[[nodiscard]] RunConfig load_config(const std::string& path);

/// Canonical text; numbers use the shortest form that reads back exactly.
[[nodiscard]] std::string dump_config(const RunConfig& cfg);

/// F/G matrices, or the scalar λ, μ (μ defaults to 0).
[[nodiscard]] LinearSde linear_system(const RunConfig& cfg);

/// Initial state; defaults to all ones of the system dimension.
[[nodiscard]] Vec initial_state(const RunConfig& cfg, Index n);

} // namespace sidekit::cli
