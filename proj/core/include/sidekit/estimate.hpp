#pragma once

// Monte-Carlo estimation: moment and almost-sure Lyapunov exponents from
// trajectory ensembles, and the strong-convergence order study of
// E sup_{t≤T}|x(t) − X(t)|².
//
// Ensembles are generated trajectory-parallel; each trajectory writes its own
// row and every reduction runs in trajectory-index order, so results do not
// depend on the thread count or schedule.

#include "sidekit/models.hpp"
#include "sidekit/simulate.hpp"

#include <cstddef>
#include <cstdint>
#include <functional>
#include <ostream>
#include <string>
#include <vector>

namespace sidekit {

/// Fills `out[0..times.size())` with ln|z(t_i)| for one trajectory (−inf for z = 0).
using PathSampler = std::function<void(std::uint64_t trajectory, double* out)>;

struct Ensemble {
    std::vector<double> times;
    Mat log_abs; ///< trajectories × times

    [[nodiscard]] std::size_t trajectories() const noexcept
    {
        return static_cast<std::size_t>(log_abs.rows());
    }
};

/// 0 picks std::thread::hardware_concurrency().
[[nodiscard]] Ensemble run_ensemble(const PathSampler& sampler, std::vector<double> times,
                                    std::size_t trajectories, unsigned threads = 0);

struct ExponentEstimate {
    double slope = 0.0;
    double intercept = 0.0;
    double t_a = 0.0;
    double t_b = 0.0;
    double stderr_slope = 0.0;
    std::size_t points = 0;
    /// Every sample was exactly zero somewhere in the window; slope is −inf.
    bool degenerate = false;
    /// Trajectories at exact zero (almost-sure estimate only).
    std::size_t zero_paths = 0;
    /// Fitted series (t, ln of the sample mean of |z|^p).
    std::vector<double> fit_t;
    std::vector<double> fit_y;
};

/// OLS slope of ln(mean |z(t_i)|^p) against t_i over [t_a, T], with
/// t_a = t0 + window·(T − t0). Requires p > 0, M ≥ 100 and ≥ 10 window points.
[[nodiscard]] ExponentEstimate moment_exponent(const Ensemble& ens, double p, double window = 0.5);

/// Mean over trajectories of ln|z(T)|/T with its standard error. Paths at
/// exact zero are counted in zero_paths and left out of the mean.
[[nodiscard]] ExponentEstimate as_exponent(const Ensemble& ens);

/// Grid k·dt for k = 0, stride, 2·stride, ..., steps (the last point is always kept).
[[nodiscard]] std::vector<double> sample_times(double dt, std::size_t steps, std::size_t stride);

/// Euler–Maruyama on a linear SDE with impulse-stream noise √Δt·ξ(k+1).
[[nodiscard]] PathSampler linear_em_sampler(const LinearSde& sde, const Vec& x0, double dt,
                                            std::size_t steps, std::size_t stride,
                                            std::uint64_t seed);

/// Closed-form scalar GBM on the level-0 Brownian grid of stepsize dt.
[[nodiscard]] PathSampler exact_gbm_sampler(double lambda, double mu, double x0, double dt,
                                            std::size_t steps, std::size_t stride,
                                            std::uint64_t seed);

/// Euler–Maruyama on a general SDE.
[[nodiscard]] PathSampler em_sampler(const VectorFieldSde& sde, const Vec& x0, double dt,
                                     std::size_t steps, std::size_t stride, std::uint64_t seed,
                                     ImpulseNoise source = ImpulseNoise::Xi);

/// |z| = |(x, y)| of the CPS at the impulse times (post-jump values).
[[nodiscard]] PathSampler cps_sampler(const LinearSde& sde, const Vec& x0, double dt,
                                      std::size_t steps, std::size_t stride, std::uint64_t seed,
                                      const CpsOptions& opts = {});

enum class Integration {
    EulerMaruyama,
    /// Scalar GBM only.
    Exact,
};

struct EnsembleOptions {
    double dt = 1e-3;
    std::uint64_t seed = 1;
    /// Recorded grid points; the stride is chosen so roughly this many are kept.
    std::size_t record_points = 201;
    unsigned threads = 0;
    Integration integration = Integration::EulerMaruyama;
};

[[nodiscard]] Ensemble simulate_ensemble(const LinearSde& sde, const Vec& x0, double horizon,
                                         std::size_t trajectories, const EnsembleOptions& opts);

[[nodiscard]] ExponentEstimate moment_exponent(const LinearSde& sde, const Vec& x0, double p,
                                               std::size_t trajectories, double horizon,
                                               const EnsembleOptions& opts, double window = 0.5);
[[nodiscard]] ExponentEstimate as_exponent(const LinearSde& sde, const Vec& x0,
                                           std::size_t trajectories, double horizon,
                                           const EnsembleOptions& opts);

struct StrongErrorRow {
    int level = 0; ///< dt = delta·2^level on the shared noise grid
    double dt = 0.0;
    double error = 0.0;
    double stderr_error = 0.0;
};

struct StrongErrorStudy {
    std::vector<StrongErrorRow> rows;
    double slope = 0.0;
    double intercept = 0.0;
    double stderr_slope = 0.0;
    /// Some level had zero error; no slope.
    bool degenerate = false;
    double reference_dt = 0.0;
};

struct StrongErrorOptions {
    /// The reference grid is 2^reference_refinement times finer than the finest level.
    int reference_refinement = 2;
    unsigned threads = 0;
};

/// E sup_{t≤T}|x(t) − X(t)|² per stepsize, where X is the Euler–Maruyama step
/// process driven by ΔB_k on the shared nested grid and x is the exact GBM
/// (scalar systems) or the Euler–Maruyama path on the reference grid. The sup
/// is taken over the reference grid. Every dt must be reference_dt·2^l
/// (GridMismatch otherwise).
[[nodiscard]] StrongErrorStudy strong_error_sup(const LinearSde& sde, const Vec& x0, double horizon,
                                                const std::vector<double>& dts,
                                                std::size_t trajectories, std::uint64_t seed,
                                                const StrongErrorOptions& opts = {});
[[nodiscard]] StrongErrorStudy strong_error_sup(const VectorFieldSde& sde, const Vec& x0,
                                                double horizon, const std::vector<double>& dts,
                                                std::size_t trajectories, std::uint64_t seed,
                                                const StrongErrorOptions& opts = {});

/// (1 + λΔt)² + μ²Δt, the exact mean-square amplification of one scalar
/// Euler–Maruyama step.
[[nodiscard]] double scalar_onestep_factor(double lambda, double mu, double dt);

/// Columns t, log_mean_moment.
void write_exponent_csv(std::ostream& os, const ExponentEstimate& est);
/// Columns level, dt, error, stderr.
void write_errors_csv(std::ostream& os, const StrongErrorStudy& study);

[[nodiscard]] std::string to_text(const ExponentEstimate& est);
[[nodiscard]] std::string to_text(const StrongErrorStudy& study);

} // namespace sidekit
