#pragma once

// Time stepping: Euler–Maruyama, the stochastic theta method, the hybrid
// integrator for stochastic impulsive systems, the coupled CPS integrator and
// closed-form oracles.
//
// Noise conventions. In Xi mode the step k → k+1 uses √Δt·ξ(k+1) from the
// impulse stream. In BrownianIncrement mode it uses ΔB_k from the nested
// Brownian grid, which requires plan.delta()·2^level == Δt for some level.

#include "sidekit/models.hpp"
#include "sidekit/noise.hpp"

#include <cstddef>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace sidekit {

enum class ImpulseNoise {
    Xi,
    BrownianIncrement,
};

struct DiscretePath {
    double dt = 0.0;
    std::vector<Vec> states; ///< X_0..X_N

    [[nodiscard]] std::size_t steps() const noexcept { return states.empty() ? 0 : states.size() - 1; }
};

/// Right-continuous step function X(t) = X_k on [kΔt, (k+1)Δt), defined on
/// [0, NΔt] with X(NΔt) = X_N. Queries outside that range throw OutOfRange.
class StepProcess {
public:
    explicit StepProcess(DiscretePath path);

    [[nodiscard]] const Vec& operator()(double t) const;
    [[nodiscard]] std::size_t index(double t) const;
    [[nodiscard]] double horizon() const noexcept { return horizon_; }
    [[nodiscard]] const DiscretePath& path() const noexcept { return path_; }

private:
    DiscretePath path_;
    double horizon_;
};

[[nodiscard]] StepProcess step_process(DiscretePath path);

/// Level whose stepsize equals dt on the plan's grid; throws GridMismatch.
[[nodiscard]] int matching_level(const NoisePlan& plan, double dt);

[[nodiscard]] DiscretePath euler_maruyama(const VectorFieldSde& sde, const Vec& x0, double dt,
                                          std::size_t steps, const NoisePlan& plan,
                                          ImpulseNoise source = ImpulseNoise::Xi);
[[nodiscard]] DiscretePath euler_maruyama(const LinearSde& sde, const Vec& x0, double dt,
                                          std::size_t steps, const NoisePlan& plan,
                                          ImpulseNoise source = ImpulseNoise::Xi);

struct ThetaOptions {
    double tol = 1e-12;
    int max_iterations = 100;
};

/// θ = 0 reduces to euler_maruyama and gives a bitwise-equal path. For θ > 0
/// the implicit equation is solved by fixed-point iteration, which requires
/// θ·L·Δt < 1 (ContractionViolated otherwise).
[[nodiscard]] DiscretePath theta_method(const VectorFieldSde& sde, const Vec& x0, double dt,
                                        double theta, std::size_t steps, const NoisePlan& plan,
                                        ImpulseNoise source = ImpulseNoise::Xi,
                                        const ThetaOptions& opts = {});

struct TrajectorySample {
    double t = 0.0;
    Vec x;
    Vec y;
    /// The cyber state X; populated by the CPS integrator only.
    Vec cyber;
    bool post_impulse = false;
};

struct ImpulseRecord {
    std::size_t k = 0;
    double t = 0.0;
    Vec pre;  ///< z(t_k⁻) = (x, y)
    Vec post; ///< z(t_k)
};

struct HybridTrajectory {
    Index n = 0;
    Index q = 0;
    std::vector<TrajectorySample> samples;
    std::vector<ImpulseRecord> impulses;

    [[nodiscard]] bool has_cyber() const noexcept
    {
        return !samples.empty() && samples.front().cyber.size() > 0;
    }
};

/// Columns t, x_1..x_n, y_1..y_q, X_1..X_n (when present), impulse_flag.
/// Numbers are printed with 12 significant digits.
void write_csv(std::ostream& os, const HybridTrajectory& traj);

struct SideOptions {
    /// Euler–Maruyama substeps per impulse interval.
    std::size_t inner_substeps = 32;
    ImpulseNoise impulse_noise = ImpulseNoise::Xi;
    /// Also store the state after every inner substep, not only at impulse times.
    bool record_substeps = false;
};

/// Hybrid integration on [0, T]: the continuous flow is substepped between
/// impulses; at each t_{k+1} ≤ T the left limit and the post-jump state are
/// both recorded.
[[nodiscard]] HybridTrajectory simulate_side(const SideSystem& side, const Vec& z0, double horizon,
                                             const NoisePlan& plan, const SideOptions& opts = {});

/// Same system through its compact (stacked) form; agrees with simulate_side to
/// roundoff.
[[nodiscard]] HybridTrajectory simulate_compact(const CompactForm& sys,
                                                const ImpulseSchedule& schedule, const Vec& z0,
                                                double horizon, const NoisePlan& plan,
                                                const SideOptions& opts = {});

enum class CpsIntegration {
    /// y = x − X with X advanced by the standalone Euler–Maruyama recursion.
    Identity,
    /// y integrated as its own SDE with jumps, via simulate_side(make_cps(...)).
    Separate,
};

struct CpsOptions {
    std::size_t inner_substeps = 32;
    ImpulseNoise impulse_noise = ImpulseNoise::Xi;
    CpsIntegration integration = CpsIntegration::Identity;
    bool record_substeps = false;
};

/// Coupled physical/cyber trajectory with y(0) = 0. Every sample carries the
/// cyber state X. In BrownianIncrement mode the inner substeps use the level-0
/// increments of the plan, so plan.delta() must equal dt / inner_substeps and
/// inner_substeps must be a power of two.
[[nodiscard]] HybridTrajectory simulate_cps(const VectorFieldSde& sde, const Vec& x0, double dt,
                                            double horizon, const NoisePlan& plan,
                                            const CpsOptions& opts = {});
[[nodiscard]] HybridTrajectory simulate_cps(const LinearSde& sde, const Vec& x0, double dt,
                                            double horizon, const NoisePlan& plan,
                                            const CpsOptions& opts = {});

/// x(t_i) = x0·exp((λ − μ²/2)t_i + μB(t_i)) on the level grid of the plan.
[[nodiscard]] std::vector<double> exact_gbm(double lambda, double mu, double x0,
                                            const std::vector<Vec>& brownian, double dt);

struct ScalarCpsVerdict {
    bool strictly_decreasing = false;
    bool sign_preserved = false;
    bool first_step_bound = false;
    double x_dt = 0.0;  ///< x(Δt)
    double bound = 0.0; ///< |x0|·e^{−(k_p − a)Δt}

    [[nodiscard]] bool ok() const noexcept
    {
        return strictly_decreasing && sign_preserved && first_step_bound;
    }
};

struct ScalarCpsDemo {
    std::vector<double> t;
    std::vector<double> x;
    std::vector<double> cyber; ///< X(t)
    std::vector<bool> post_impulse;
    std::vector<double> plateaus; ///< X_0..X_N
    ScalarCpsVerdict verdict;
    double max_stepsize = 0.0;

    [[nodiscard]] HybridTrajectory as_trajectory() const;
};

/// ẋ = a·x − k_p·X_k on [kΔt, (k+1)Δt), X_{k+1} = x((k+1)Δt), integrated in
/// closed form with `samples_per_step` points per interval. Requires a > 0,
/// k_p > a and Δt < ln(k_p/(k_p − a))/a; StepsizeTooLarge otherwise.
[[nodiscard]] ScalarCpsDemo simulate_scalar_cps_demo(double a, double k_p, double x0, double dt,
                                                     double horizon,
                                                     std::size_t samples_per_step = 8);

/// ln(k_p/(k_p − a))/a
[[nodiscard]] double scalar_cps_max_stepsize(double a, double k_p);

} // namespace sidekit
