#include "sidekit/estimate.hpp"

#include "sidekit/errors.hpp"
#include "sidekit/noise.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <limits>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace sidekit {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

std::string fmt12(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

/// Runs body(i) for i in [0, count) on `threads` workers. The first exception
/// thrown by any worker is rethrown after all workers have joined.
template <class Body>
void parallel_for(std::size_t count, unsigned threads, Body&& body)
{
    if (threads == 0) {
        threads = std::max(1u, std::thread::hardware_concurrency());
    }
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(count, 1)));
    if (threads <= 1) {
        for (std::size_t i = 0; i < count; ++i) {
            body(i);
        }
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= count) {
                return;
            }
            try {
                body(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(failure_mutex);
                if (!failure) {
                    failure = std::current_exception();
                }
                next.store(count);
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (unsigned t = 0; t < threads; ++t) {
        pool.emplace_back(worker);
    }
    for (auto& th : pool) {
        th.join();
    }
    if (failure) {
        std::rethrow_exception(failure);
    }
}

struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
    double stderr_slope = 0.0;
};

LineFit ols(const std::vector<double>& x, const std::vector<double>& y)
{
    const auto n = static_cast<double>(x.size());
    double mx = 0.0;
    double my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0;
    double sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    LineFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    if (x.size() > 2) {
        double ssr = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double r = y[i] - fit.intercept - fit.slope * x[i];
            ssr += r * r;
        }
        fit.stderr_slope = std::sqrt(ssr / (n - 2.0) / sxx);
    }
    return fit;
}

double safe_log_abs(double v) { return v == 0.0 ? kNegInf : std::log(std::abs(v)); }

} // namespace

Ensemble run_ensemble(const PathSampler& sampler, std::vector<double> times,
                      std::size_t trajectories, unsigned threads)
{
    if (trajectories < 2) {
        throw std::invalid_argument("run_ensemble: at least two trajectories are required");
    }
    if (times.empty()) {
        throw std::invalid_argument("run_ensemble: empty time grid");
    }
    Ensemble ens;
    ens.times = std::move(times);
    const auto g = static_cast<Index>(ens.times.size());
    // row-major scratch so each trajectory writes one contiguous block
    std::vector<double> rows(trajectories * ens.times.size());
    parallel_for(trajectories, threads, [&](std::size_t i) {
        sampler(static_cast<std::uint64_t>(i), rows.data() + i * ens.times.size());
    });
    ens.log_abs.resize(static_cast<Index>(trajectories), g);
    for (std::size_t i = 0; i < trajectories; ++i) {
        for (Index j = 0; j < g; ++j) {
            ens.log_abs(static_cast<Index>(i), j) = rows[i * ens.times.size() + static_cast<std::size_t>(j)];
        }
    }
    return ens;
}

ExponentEstimate moment_exponent(const Ensemble& ens, double p, double window)
{
    if (!(p > 0.0)) {
        throw std::invalid_argument("moment_exponent: p must be positive");
    }
    if (ens.trajectories() < 100) {
        throw std::invalid_argument("moment_exponent: at least 100 trajectories are required");
    }
    if (!(window >= 0.0 && window < 1.0)) {
        throw std::invalid_argument("moment_exponent: window must lie in [0, 1)");
    }
    ExponentEstimate est;
    const double t0 = ens.times.front();
    est.t_b = ens.times.back();
    est.t_a = t0 + window * (est.t_b - t0);
    const auto m = static_cast<double>(ens.trajectories());

    for (std::size_t c = 0; c < ens.times.size(); ++c) {
        if (ens.times[c] < est.t_a) {
            continue;
        }
        const auto col = ens.log_abs.col(static_cast<Index>(c));
        double peak = kNegInf;
        for (Index i = 0; i < col.size(); ++i) {
            peak = std::max(peak, p * col(i));
        }
        est.fit_t.push_back(ens.times[c]);
        if (peak == kNegInf) {
            est.degenerate = true;
            est.fit_y.push_back(kNegInf);
            continue;
        }
        double sum = 0.0;
        for (Index i = 0; i < col.size(); ++i) {
            sum += std::exp(p * col(i) - peak);
        }
        est.fit_y.push_back(peak + std::log(sum) - std::log(m));
    }
    est.points = est.fit_t.size();
    if (est.points < 10) {
        throw std::invalid_argument("moment_exponent: fewer than 10 grid points in the fit window");
    }
    if (est.degenerate) {
        est.slope = kNegInf;
        return est;
    }
    const LineFit fit = ols(est.fit_t, est.fit_y);
    est.slope = fit.slope;
    est.intercept = fit.intercept;
    est.stderr_slope = fit.stderr_slope;
    return est;
}

ExponentEstimate as_exponent(const Ensemble& ens)
{
    if (ens.trajectories() < 100) {
        throw std::invalid_argument("as_exponent: at least 100 trajectories are required");
    }
    ExponentEstimate est;
    est.t_a = est.t_b = ens.times.back();
    if (!(est.t_b > 0.0)) {
        throw std::invalid_argument("as_exponent: horizon must be positive");
    }
    const auto last = ens.log_abs.col(ens.log_abs.cols() - 1);
    double sum = 0.0;
    std::size_t used = 0;
    for (Index i = 0; i < last.size(); ++i) {
        if (last(i) == kNegInf) {
            ++est.zero_paths;
            continue;
        }
        sum += last(i) / est.t_b;
        ++used;
    }
    est.points = used;
    if (used == 0) {
        est.degenerate = true;
        est.slope = kNegInf;
        return est;
    }
    est.slope = sum / static_cast<double>(used);
    if (used > 1) {
        double ss = 0.0;
        for (Index i = 0; i < last.size(); ++i) {
            if (last(i) == kNegInf) {
                continue;
            }
            const double d = last(i) / est.t_b - est.slope;
            ss += d * d;
        }
        est.stderr_slope =
            std::sqrt(ss / static_cast<double>(used - 1) / static_cast<double>(used));
    }
    return est;
}

std::vector<double> sample_times(double dt, std::size_t steps, std::size_t stride)
{
    if (stride < 1) {
        stride = 1;
    }
    std::vector<double> t;
    for (std::size_t k = 0; k <= steps; k += stride) {
        t.push_back(static_cast<double>(k) * dt);
    }
    if (steps % stride != 0) {
        t.push_back(static_cast<double>(steps) * dt);
    }
    return t;
}

namespace {

/// Calls record(k) at the same grid indices as sample_times.
inline bool recorded(std::size_t k, std::size_t steps, std::size_t stride)
{
    return k % stride == 0 || k == steps;
}

double horizon_of(double dt, std::size_t steps) { return static_cast<double>(steps) * dt; }

} // namespace

PathSampler linear_em_sampler(const LinearSde& sde, const Vec& x0, double dt, std::size_t steps,
                              std::size_t stride, std::uint64_t seed)
{
    if (x0.size() != sde.dim()) {
        throw std::invalid_argument("linear_em_sampler: x0 has the wrong dimension");
    }
    stride = std::max<std::size_t>(stride, 1);
    const Index n = sde.dim();
    const Index m = sde.noise_dim();
    const Mat a = Mat::Identity(n, n) + dt * sde.f;
    const double sqdt = std::sqrt(dt);
    const bool scalar = n == 1;
    const double a11 = a(0, 0);
    const double g11 = m > 0 ? sde.gs[0](0, 0) : 0.0;
    return [=](std::uint64_t traj, double* out) {
        const NoisePlan plan(seed, traj, m, dt, horizon_of(dt, steps));
        std::size_t w = 0;
        if (scalar && m <= 1) {
            double x = x0(0);
            out[w++] = safe_log_abs(x);
            for (std::size_t k = 0; k < steps; ++k) {
                const double z = m == 1 ? plan.standard_normal(Stream::Impulse, 0, k + 1) : 0.0;
                x = a11 * x + g11 * x * (sqdt * z);
                if (!std::isfinite(x)) {
                    throw NonFinite("linear_em_sampler: state overflow", k + 1);
                }
                if (recorded(k + 1, steps, stride)) {
                    out[w++] = safe_log_abs(x);
                }
            }
            return;
        }
        Vec x = x0;
        Vec next(n);
        out[w++] = x.isZero(0.0) ? kNegInf : std::log(x.norm());
        for (std::size_t k = 0; k < steps; ++k) {
            next.noalias() = a * x;
            for (Index j = 0; j < m; ++j) {
                const double z = sqdt * plan.standard_normal(Stream::Impulse, j, k + 1);
                next.noalias() += (z * sde.gs[static_cast<std::size_t>(j)]) * x;
            }
            x.swap(next);
            if (!x.allFinite()) {
                throw NonFinite("linear_em_sampler: state overflow", k + 1);
            }
            if (recorded(k + 1, steps, stride)) {
                out[w++] = x.isZero(0.0) ? kNegInf : std::log(x.norm());
            }
        }
    };
}

PathSampler exact_gbm_sampler(double lambda, double mu, double x0, double dt, std::size_t steps,
                              std::size_t stride, std::uint64_t seed)
{
    stride = std::max<std::size_t>(stride, 1);
    return [=](std::uint64_t traj, double* out) {
        const NoisePlan plan(seed, traj, 1, dt, horizon_of(dt, steps));
        const double sqdt = std::sqrt(dt);
        const double base = safe_log_abs(x0);
        const double drift = lambda - 0.5 * mu * mu;
        double b = 0.0;
        std::size_t w = 0;
        out[w++] = base;
        for (std::size_t k = 0; k < steps; ++k) {
            if (mu != 0.0) {
                b += sqdt * plan.standard_normal(Stream::Brownian, 0, k);
            }
            if (recorded(k + 1, steps, stride)) {
                const double t = static_cast<double>(k + 1) * dt;
                out[w++] = base + drift * t + mu * b;
            }
        }
    };
}

PathSampler em_sampler(const VectorFieldSde& sde, const Vec& x0, double dt, std::size_t steps,
                       std::size_t stride, std::uint64_t seed, ImpulseNoise source)
{
    stride = std::max<std::size_t>(stride, 1);
    return [=](std::uint64_t traj, double* out) {
        const NoisePlan plan(seed, traj, sde.m, dt, horizon_of(dt, steps));
        const DiscretePath path = euler_maruyama(sde, x0, dt, steps, plan, source);
        std::size_t w = 0;
        for (std::size_t k = 0; k <= steps; ++k) {
            if (recorded(k, steps, stride)) {
                const Vec& x = path.states[k];
                out[w++] = x.isZero(0.0) ? kNegInf : std::log(x.norm());
            }
        }
    };
}

PathSampler cps_sampler(const LinearSde& sde, const Vec& x0, double dt, std::size_t steps,
                        std::size_t stride, std::uint64_t seed, const CpsOptions& opts)
{
    stride = std::max<std::size_t>(stride, 1);
    const VectorFieldSde field = VectorFieldSde::from_linear(sde);
    CpsOptions o = opts;
    o.record_substeps = false;
    return [=](std::uint64_t traj, double* out) {
        const std::size_t inner = o.inner_substeps;
        const double delta = o.impulse_noise == ImpulseNoise::BrownianIncrement
                                 ? dt / static_cast<double>(inner)
                                 : dt;
        const NoisePlan plan(seed, traj, sde.noise_dim(), delta, horizon_of(dt, steps));
        const HybridTrajectory tr = simulate_cps(field, x0, dt, horizon_of(dt, steps), plan, o);
        std::size_t w = 0;
        std::size_t k = 0;
        for (const auto& s : tr.samples) {
            // the first sample and every post-jump sample sit on the impulse grid
            if (k > 0 && !s.post_impulse) {
                continue;
            }
            if (recorded(k, steps, stride)) {
                const double r = std::sqrt(s.x.squaredNorm() + s.y.squaredNorm());
                out[w++] = r == 0.0 ? kNegInf : std::log(r);
            }
            ++k;
        }
    };
}

Ensemble simulate_ensemble(const LinearSde& sde, const Vec& x0, double horizon,
                           std::size_t trajectories, const EnsembleOptions& opts)
{
    if (!(opts.dt > 0.0) || !(horizon > 0.0)) {
        throw std::invalid_argument("simulate_ensemble: dt and horizon must be positive");
    }
    const double r = horizon / opts.dt;
    const auto steps = static_cast<std::size_t>(std::llround(r));
    if (steps < 1 || std::abs(r - static_cast<double>(steps)) > 1e-9 * r) {
        throw GridMismatch("simulate_ensemble: horizon is not a multiple of dt");
    }
    const std::size_t points = std::max<std::size_t>(opts.record_points, 2);
    const std::size_t stride = std::max<std::size_t>(1, steps / (points - 1));
    PathSampler sampler;
    if (opts.integration == Integration::Exact) {
        if (!sde.is_scalar()) {
            throw std::invalid_argument("simulate_ensemble: exact integration needs a scalar system");
        }
        const double mu = sde.noise_dim() ? sde.gs[0](0, 0) : 0.0;
        sampler = exact_gbm_sampler(sde.f(0, 0), mu, x0(0), opts.dt, steps, stride, opts.seed);
    } else {
        sampler = linear_em_sampler(sde, x0, opts.dt, steps, stride, opts.seed);
    }
    return run_ensemble(sampler, sample_times(opts.dt, steps, stride), trajectories, opts.threads);
}

ExponentEstimate moment_exponent(const LinearSde& sde, const Vec& x0, double p,
                                 std::size_t trajectories, double horizon,
                                 const EnsembleOptions& opts, double window)
{
    if (trajectories < 100) {
        throw std::invalid_argument("moment_exponent: at least 100 trajectories are required");
    }
    return moment_exponent(simulate_ensemble(sde, x0, horizon, trajectories, opts), p, window);
}

ExponentEstimate as_exponent(const LinearSde& sde, const Vec& x0, std::size_t trajectories,
                             double horizon, const EnsembleOptions& opts)
{
    if (trajectories < 100) {
        throw std::invalid_argument("as_exponent: at least 100 trajectories are required");
    }
    return as_exponent(simulate_ensemble(sde, x0, horizon, trajectories, opts));
}

// --- strong convergence -----------------------------------------------------------

namespace {

struct LevelGrid {
    double reference_dt = 0.0;
    std::vector<int> levels;
    std::size_t fine_steps = 0;
};

LevelGrid make_grid(double horizon, const std::vector<double>& dts, int refinement)
{
    if (dts.empty()) {
        throw std::invalid_argument("strong_error_sup: no stepsizes given");
    }
    if (refinement < 0 || refinement > 20) {
        throw std::invalid_argument("strong_error_sup: reference refinement out of range");
    }
    LevelGrid grid;
    const double finest = *std::min_element(dts.begin(), dts.end());
    grid.reference_dt = std::ldexp(finest, -refinement);
    const NoisePlan probe(0, 0, 1, grid.reference_dt, horizon);
    grid.fine_steps = probe.steps(0);
    for (double dt : dts) {
        const int level = matching_level(probe, dt);
        (void)probe.steps(level);
        grid.levels.push_back(level);
    }
    return grid;
}

/// Level-by-level pairwise sums of the finest increments, for one component.
std::vector<std::vector<double>> nested_increments(const NoisePlan& plan, Index dim, int max_level,
                                                   std::size_t fine_steps)
{
    std::vector<std::vector<double>> out(static_cast<std::size_t>(max_level) + 1);
    out[0].resize(fine_steps);
    const double sq = std::sqrt(plan.delta());
    for (std::size_t i = 0; i < fine_steps; ++i) {
        out[0][i] = sq * plan.standard_normal(Stream::Brownian, dim, i);
    }
    for (int l = 1; l <= max_level; ++l) {
        const auto& prev = out[static_cast<std::size_t>(l) - 1];
        auto& cur = out[static_cast<std::size_t>(l)];
        cur.resize(prev.size() / 2);
        for (std::size_t k = 0; k < cur.size(); ++k) {
            cur[k] = prev[2 * k] + prev[2 * k + 1];
        }
    }
    return out;
}

StrongErrorStudy reduce_study(const LevelGrid& grid, const std::vector<double>& dts,
                              const std::vector<double>& sup, std::size_t trajectories)
{
    const std::size_t nl = grid.levels.size();
    StrongErrorStudy study;
    study.reference_dt = grid.reference_dt;
    std::vector<double> lx;
    std::vector<double> ly;
    for (std::size_t l = 0; l < nl; ++l) {
        double sum = 0.0;
        for (std::size_t i = 0; i < trajectories; ++i) {
            sum += sup[i * nl + l];
        }
        const double mean = sum / static_cast<double>(trajectories);
        double ss = 0.0;
        for (std::size_t i = 0; i < trajectories; ++i) {
            const double d = sup[i * nl + l] - mean;
            ss += d * d;
        }
        StrongErrorRow row;
        row.level = grid.levels[l];
        row.dt = dts[l];
        row.error = mean;
        row.stderr_error = trajectories > 1 ? std::sqrt(ss / static_cast<double>(trajectories - 1) /
                                                        static_cast<double>(trajectories))
                                            : 0.0;
        study.rows.push_back(row);
        if (!(mean > 0.0)) {
            study.degenerate = true;
        }
        lx.push_back(std::log(row.dt));
        ly.push_back(std::log(mean));
    }
    if (study.degenerate || nl < 2) {
        study.degenerate = true;
        study.slope = std::numeric_limits<double>::quiet_NaN();
        return study;
    }
    const LineFit fit = ols(lx, ly);
    study.slope = fit.slope;
    study.intercept = fit.intercept;
    study.stderr_slope = fit.stderr_slope;
    return study;
}

} // namespace

StrongErrorStudy strong_error_sup(const LinearSde& sde, const Vec& x0, double horizon,
                                  const std::vector<double>& dts, std::size_t trajectories,
                                  std::uint64_t seed, const StrongErrorOptions& opts)
{
    if (!sde.is_scalar()) {
        return strong_error_sup(VectorFieldSde::from_linear(sde), x0, horizon, dts, trajectories,
                                seed, opts);
    }
    if (x0.size() != 1) {
        throw std::invalid_argument("strong_error_sup: x0 has the wrong dimension");
    }
    if (trajectories < 2) {
        throw std::invalid_argument("strong_error_sup: at least two trajectories are required");
    }
    const LevelGrid grid = make_grid(horizon, dts, opts.reference_refinement);
    const int max_level = *std::max_element(grid.levels.begin(), grid.levels.end());
    const std::size_t nl = grid.levels.size();
    const double lambda = sde.f(0, 0);
    const double mu = sde.noise_dim() ? sde.gs[0](0, 0) : 0.0;
    const double drift = lambda - 0.5 * mu * mu;
    const double x_init = x0(0);
    std::vector<double> sup(trajectories * nl);

    parallel_for(trajectories, opts.threads, [&](std::size_t traj) {
        const NoisePlan plan(seed, traj, 1, grid.reference_dt, horizon);
        const auto inc = nested_increments(plan, 0, max_level, grid.fine_steps);
        std::vector<double> exact(grid.fine_steps + 1);
        double b = 0.0;
        exact[0] = x_init;
        for (std::size_t i = 0; i < grid.fine_steps; ++i) {
            b += inc[0][i];
            exact[i + 1] = x_init * std::exp(drift * static_cast<double>(i + 1) * grid.reference_dt + mu * b);
        }
        std::vector<double> em;
        for (std::size_t l = 0; l < nl; ++l) {
            const int level = grid.levels[l];
            const auto& d = inc[static_cast<std::size_t>(level)];
            const double dt = dts[l];
            em.assign(d.size() + 1, 0.0);
            em[0] = x_init;
            for (std::size_t k = 0; k < d.size(); ++k) {
                em[k + 1] = em[k] + lambda * em[k] * dt + mu * em[k] * d[k];
            }
            double worst = 0.0;
            for (std::size_t i = 0; i <= grid.fine_steps; ++i) {
                const double e = exact[i] - em[i >> level];
                worst = std::max(worst, e * e);
            }
            if (!std::isfinite(worst)) {
                throw NonFinite("strong_error_sup: state overflow", traj);
            }
            sup[traj * nl + l] = worst;
        }
    });
    return reduce_study(grid, dts, sup, trajectories);
}

StrongErrorStudy strong_error_sup(const VectorFieldSde& sde, const Vec& x0, double horizon,
                                  const std::vector<double>& dts, std::size_t trajectories,
                                  std::uint64_t seed, const StrongErrorOptions& opts)
{
    if (x0.size() != sde.n) {
        throw std::invalid_argument("strong_error_sup: x0 has the wrong dimension");
    }
    if (trajectories < 2) {
        throw std::invalid_argument("strong_error_sup: at least two trajectories are required");
    }
    const LevelGrid grid = make_grid(horizon, dts, opts.reference_refinement);
    const std::size_t nl = grid.levels.size();
    std::vector<double> sup(trajectories * nl);

    parallel_for(trajectories, opts.threads, [&](std::size_t traj) {
        const NoisePlan plan(seed, traj, sde.m, grid.reference_dt, horizon);
        const DiscretePath ref = euler_maruyama(sde, x0, grid.reference_dt, grid.fine_steps, plan,
                                                ImpulseNoise::BrownianIncrement);
        for (std::size_t l = 0; l < nl; ++l) {
            const int level = grid.levels[l];
            const DiscretePath coarse = euler_maruyama(sde, x0, dts[l], grid.fine_steps >> level,
                                                       plan, ImpulseNoise::BrownianIncrement);
            double worst = 0.0;
            for (std::size_t i = 0; i <= grid.fine_steps; ++i) {
                worst = std::max(worst, (ref.states[i] - coarse.states[i >> level]).squaredNorm());
            }
            sup[traj * nl + l] = worst;
        }
    });
    return reduce_study(grid, dts, sup, trajectories);
}

double scalar_onestep_factor(double lambda, double mu, double dt)
{
    const double a = 1.0 + lambda * dt;
    return a * a + mu * mu * dt;
}

// --- output -----------------------------------------------------------------------

void write_exponent_csv(std::ostream& os, const ExponentEstimate& est)
{
    os << "t,log_mean_moment\n";
    for (std::size_t i = 0; i < est.fit_t.size(); ++i) {
        os << fmt12(est.fit_t[i]) << ',' << fmt12(est.fit_y[i]) << '\n';
    }
}

void write_errors_csv(std::ostream& os, const StrongErrorStudy& study)
{
    os << "level,dt,error,stderr\n";
    for (const auto& r : study.rows) {
        os << r.level << ',' << fmt12(r.dt) << ',' << fmt12(r.error) << ','
           << fmt12(r.stderr_error) << '\n';
    }
}

std::string to_text(const ExponentEstimate& est)
{
    std::ostringstream os;
    os << "exponent: " << fmt12(est.slope) << '\n'
       << "stderr: " << fmt12(est.stderr_slope) << '\n'
       << "intercept: " << fmt12(est.intercept) << '\n'
       << "window: [" << fmt12(est.t_a) << ", " << fmt12(est.t_b) << "]\n"
       << "points: " << est.points << '\n';
    if (est.zero_paths) {
        os << "zero_paths: " << est.zero_paths << '\n';
    }
    if (est.degenerate) {
        os << "degenerate: all samples are exactly zero\n";
    }
    return os.str();
}

std::string to_text(const StrongErrorStudy& study)
{
    std::ostringstream os;
    os << "reference_dt: " << fmt12(study.reference_dt) << '\n';
    for (const auto& r : study.rows) {
        os << "level " << r.level << " dt " << fmt12(r.dt) << " error " << fmt12(r.error)
           << " stderr " << fmt12(r.stderr_error) << '\n';
    }
    if (study.degenerate) {
        os << "slope: undefined (zero error at some level)\n";
    } else {
        os << "slope: " << fmt12(study.slope) << '\n'
           << "slope_stderr: " << fmt12(study.stderr_slope) << '\n';
    }
    return os.str();
}

} // namespace sidekit
