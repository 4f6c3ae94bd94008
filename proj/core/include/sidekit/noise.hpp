#pragma once

// Counter-based noise. Every draw is a pure function of
// (seed, trajectory, stream, dimension, slot), so trajectories can be generated
// in any order on any thread and refining the time grid never perturbs other
// slots.

#include "sidekit/matrix.hpp"

#include <array>
#include <cstddef>
#include <cstdint>
#include <vector>

namespace sidekit {

using Philox4x32Counter = std::array<std::uint32_t, 4>;
using Philox4x32Key = std::array<std::uint32_t, 2>;

/// Philox4x32 with 10 rounds.
[[nodiscard]] Philox4x32Counter philox4x32(Philox4x32Counter ctr, Philox4x32Key key) noexcept;

/// Standard normal quantile; u must lie in (0, 1).
[[nodiscard]] double inverse_normal_cdf(double u);

enum class Stream : std::uint32_t {
    Brownian = 0,
    Impulse = 1,
};

class NoisePlan {
public:
    /// `delta` is the finest-level stepsize; `horizon` bounds the Brownian grid.
    NoisePlan(std::uint64_t seed, std::uint64_t trajectory, Index noise_dim, double delta,
              double horizon);

    [[nodiscard]] std::uint64_t seed() const noexcept { return seed_; }
    [[nodiscard]] std::uint64_t trajectory() const noexcept { return trajectory_; }
    [[nodiscard]] Index noise_dim() const noexcept { return m_; }
    [[nodiscard]] double delta() const noexcept { return delta_; }
    [[nodiscard]] double horizon() const noexcept { return horizon_; }

    /// Same plan for another trajectory index.
    [[nodiscard]] NoisePlan with_trajectory(std::uint64_t trajectory) const;

    [[nodiscard]] double standard_normal(Stream stream, Index dim, std::uint64_t slot) const;

    /// delta·2^level
    [[nodiscard]] double stepsize(int level) const;

    /// Number of level-`level` increments covering [0, horizon]. Throws
    /// GridMismatch unless horizon / (delta·2^level) is an integer to within
    /// roundoff.
    [[nodiscard]] std::size_t steps(int level) const;

    /// Increment k at the given level: the left-to-right pairwise sum of
    /// increments 2k and 2k+1 one level down. Level 0 is sqrt(delta)·z.
    [[nodiscard]] Vec increment(int level, std::size_t k) const;

    /// All `steps(level)` increments.
    [[nodiscard]] std::vector<Vec> increments(int level) const;

    /// Impulse draw ξ(k), k ≥ 1, from a stream disjoint from the Brownian one.
    [[nodiscard]] Vec xi(std::size_t k) const;

private:
    double increment_component(int level, Index dim, std::size_t k) const;

    std::uint64_t seed_;
    std::uint64_t trajectory_;
    Index m_;
    double delta_;
    double horizon_;
    double sqrt_delta_;
};

/// Cumulative Brownian path B(0) = 0, B(t_{k+1}) = B(t_k) + ΔB_k on the level grid.
[[nodiscard]] std::vector<Vec> brownian_path(const NoisePlan& plan, int level);

} // namespace sidekit
