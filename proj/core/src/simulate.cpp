#include "sidekit/simulate.hpp"

#include "sidekit/errors.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace sidekit {

namespace {

void require_finite(const Vec& v, std::size_t step, const char* what)
{
    if (!v.allFinite()) {
        std::ostringstream os;
        os << what << ": state left the representable range at step " << step;
        throw NonFinite(os.str(), step);
    }
}

void require_positive(double v, const char* what)
{
    if (!(v > 0.0) || !std::isfinite(v)) {
        throw std::invalid_argument(std::string(what) + " must be finite and positive");
    }
}

/// Noise multiplying the diffusion in the step k → k+1 of a scheme with stepsize dt.
class StepNoise {
public:
    StepNoise(const NoisePlan& plan, double dt, ImpulseNoise source)
        : plan_(plan), sqrt_dt_(std::sqrt(dt)), source_(source)
    {
        if (source_ == ImpulseNoise::BrownianIncrement) {
            level_ = matching_level(plan, dt);
        }
    }

    [[nodiscard]] Vec operator()(std::size_t k) const
    {
        if (source_ == ImpulseNoise::Xi) {
            return sqrt_dt_ * plan_.xi(k + 1);
        }
        return plan_.increment(level_, k);
    }

private:
    const NoisePlan& plan_;
    double sqrt_dt_;
    ImpulseNoise source_;
    int level_ = 0;
};

inline Vec em_step(const VectorFieldSde& sde, const Vec& x, double t, double dt, const Vec& eta)
{
    return x + sde.drift(x, t) * dt + sde.diffusion(x, t) * eta;
}

void check_noise_dim(Index expected, const NoisePlan& plan, const char* what)
{
    if (plan.noise_dim() != expected) {
        throw std::invalid_argument(std::string(what) + ": noise dimension does not match the system");
    }
}

std::string fmt12(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

bool is_power_of_two(std::size_t v) { return v != 0 && (v & (v - 1)) == 0; }

int log2_exact(std::size_t v)
{
    int l = 0;
    while ((std::size_t{1} << l) < v) {
        ++l;
    }
    return l;
}

} // namespace

int matching_level(const NoisePlan& plan, double dt)
{
    const double ratio = dt / plan.delta();
    const int level = static_cast<int>(std::lround(std::log2(ratio)));
    if (level < 0 || std::abs(std::ldexp(plan.delta(), level) - dt) > 1e-12 * dt) {
        std::ostringstream os;
        os << "stepsize " << dt << " is not delta·2^l on the noise grid (delta = " << plan.delta()
           << ")";
        throw GridMismatch(os.str());
    }
    return level;
}

// --- step process -----------------------------------------------------------

StepProcess::StepProcess(DiscretePath path) : path_(std::move(path))
{
    if (path_.states.empty()) {
        throw std::invalid_argument("StepProcess: empty path");
    }
    require_positive(path_.dt, "StepProcess: dt");
    horizon_ = static_cast<double>(path_.steps()) * path_.dt;
}

std::size_t StepProcess::index(double t) const
{
    if (!(t >= 0.0) || t > horizon_) {
        std::ostringstream os;
        os << "StepProcess: t = " << t << " outside [0, " << horizon_ << "]";
        throw OutOfRange(os.str());
    }
    auto k = static_cast<std::size_t>(std::floor(t / path_.dt));
    // t/dt can land one ulp on the wrong side of an integer
    if (k > 0 && static_cast<double>(k) * path_.dt > t) {
        --k;
    } else if (static_cast<double>(k + 1) * path_.dt <= t) {
        ++k;
    }
    return std::min(k, path_.steps());
}

const Vec& StepProcess::operator()(double t) const { return path_.states[index(t)]; }

StepProcess step_process(DiscretePath path) { return StepProcess(std::move(path)); }

// --- one-step schemes -------------------------------------------------------

DiscretePath euler_maruyama(const VectorFieldSde& sde, const Vec& x0, double dt, std::size_t steps,
                            const NoisePlan& plan, ImpulseNoise source)
{
    require_positive(dt, "euler_maruyama: dt");
    check_noise_dim(sde.m, plan, "euler_maruyama");
    if (x0.size() != sde.n) {
        throw std::invalid_argument("euler_maruyama: x0 has the wrong dimension");
    }
    const StepNoise noise(plan, dt, source);
    DiscretePath path;
    path.dt = dt;
    path.states.reserve(steps + 1);
    path.states.push_back(x0);
    for (std::size_t k = 0; k < steps; ++k) {
        const double t = static_cast<double>(k) * dt;
        Vec next = em_step(sde, path.states.back(), t, dt, noise(k));
        require_finite(next, k + 1, "euler_maruyama");
        path.states.push_back(std::move(next));
    }
    return path;
}

DiscretePath euler_maruyama(const LinearSde& sde, const Vec& x0, double dt, std::size_t steps,
                            const NoisePlan& plan, ImpulseNoise source)
{
    return euler_maruyama(VectorFieldSde::from_linear(sde), x0, dt, steps, plan, source);
}

DiscretePath theta_method(const VectorFieldSde& sde, const Vec& x0, double dt, double theta,
                          std::size_t steps, const NoisePlan& plan, ImpulseNoise source,
                          const ThetaOptions& opts)
{
    if (!(theta >= 0.0 && theta <= 1.0)) {
        throw std::invalid_argument("theta_method: theta must lie in [0, 1]");
    }
    if (theta == 0.0) {
        return euler_maruyama(sde, x0, dt, steps, plan, source);
    }
    require_positive(dt, "theta_method: dt");
    check_noise_dim(sde.m, plan, "theta_method");
    if (theta * sde.lipschitz * dt >= 1.0) {
        std::ostringstream os;
        os << "theta_method: theta·L·dt = " << theta * sde.lipschitz * dt
           << " >= 1, fixed-point iteration is not a contraction";
        throw ContractionViolated(os.str());
    }

    const StepNoise noise(plan, dt, source);
    DiscretePath path;
    path.dt = dt;
    path.states.reserve(steps + 1);
    path.states.push_back(x0);
    for (std::size_t k = 0; k < steps; ++k) {
        const Vec& x = path.states.back();
        const double t = static_cast<double>(k) * dt;
        const double t1 = static_cast<double>(k + 1) * dt;
        const Vec explicit_part =
            x + (1.0 - theta) * dt * sde.drift(x, t) + sde.diffusion(x, t) * noise(k);
        Vec y = explicit_part + theta * dt * sde.drift(x, t);
        bool converged = false;
        for (int it = 0; it < opts.max_iterations; ++it) {
            Vec next = explicit_part + theta * dt * sde.drift(y, t1);
            require_finite(next, k + 1, "theta_method");
            const double change = (next - y).norm();
            y = std::move(next);
            if (change <= opts.tol * (1.0 + y.norm())) {
                converged = true;
                break;
            }
        }
        if (!converged) {
            std::ostringstream os;
            os << "theta_method: fixed-point iteration did not converge at step " << k + 1;
            throw NoConvergence(os.str());
        }
        path.states.push_back(std::move(y));
    }
    return path;
}

// --- hybrid integration -------------------------------------------------------

namespace {

struct DecomposedStepper {
    const SideSystem& side;

    [[nodiscard]] Vec flow(const Vec& z, double t, double h, const Vec& db) const
    {
        const Vec x = z.head(side.n);
        const Vec y = z.tail(side.q);
        Vec out(z.size());
        out.head(side.n) = x + side.f(x, t) * h + side.g(x, t) * db;
        out.tail(side.q) = y + side.f_y(x, y, t) * h + side.g_y(x, y, t) * db;
        return out;
    }

    [[nodiscard]] Vec jump(const Vec& z, std::size_t k, const Vec& xi) const
    {
        const Vec x = z.head(side.n);
        const Vec y = z.tail(side.q);
        Vec out(z.size());
        out.head(side.n) = x + side.impulses.hf(x, k) + side.impulses.hg(x, k) * xi;
        out.tail(side.q) = y + side.impulses.hf_y(x, y, k) + side.impulses.hg_y(x, y, k) * xi;
        return out;
    }
};

struct CompactStepper {
    const CompactForm& sys;

    [[nodiscard]] Vec flow(const Vec& z, double t, double h, const Vec& db) const
    {
        return z + sys.drift(z, t) * h + sys.diffusion(z, t) * db;
    }

    [[nodiscard]] Vec jump(const Vec& z, std::size_t k, const Vec& xi) const
    {
        return z + sys.jump(z, k) + sys.jump_noise(z, k) * xi;
    }
};

void push_sample(HybridTrajectory& traj, double t, const Vec& z, bool post)
{
    TrajectorySample s;
    s.t = t;
    s.x = z.head(traj.n);
    s.y = z.tail(traj.q);
    s.post_impulse = post;
    traj.samples.push_back(std::move(s));
}

template <class Stepper>
HybridTrajectory run_hybrid(const Stepper& stepper, Index n, Index q, Index m,
                            const ImpulseSchedule& schedule, const Vec& z0, double horizon,
                            const NoisePlan& plan, const SideOptions& opts)
{
    require_positive(horizon, "simulate_side: horizon");
    if (opts.inner_substeps < 1) {
        throw std::invalid_argument("simulate_side: inner_substeps must be at least 1");
    }
    if (z0.size() != n + q) {
        throw std::invalid_argument("simulate_side: z0 has the wrong dimension");
    }
    check_noise_dim(m, plan, "simulate_side");

    const bool brownian = opts.impulse_noise == ImpulseNoise::BrownianIncrement;
    int level = 0;
    if (brownian) {
        if (!schedule.is_equidistant() || !is_power_of_two(opts.inner_substeps)) {
            throw GridMismatch("simulate_side: Brownian-increment impulses need an equidistant "
                               "schedule and a power-of-two substep count");
        }
        level = log2_exact(opts.inner_substeps);
        if (matching_level(plan, schedule.gap(0)) != level) {
            throw GridMismatch("simulate_side: plan delta must equal gap / inner_substeps");
        }
    }

    HybridTrajectory traj;
    traj.n = n;
    traj.q = q;
    Vec z = z0;
    push_sample(traj, 0.0, z, false);

    std::uint64_t slot = 0;
    std::size_t step_count = 0;
    auto draw_db = [&](double h) {
        Vec db(m);
        if (brownian) {
            db = plan.increment(0, slot);
        } else {
            const double sh = std::sqrt(h);
            for (Index j = 0; j < m; ++j) {
                db(j) = sh * plan.standard_normal(Stream::Brownian, j, slot);
            }
        }
        ++slot;
        return db;
    };

    for (std::size_t k = 0;; ++k) {
        const double t0 = schedule.time(k);
        const double gap = schedule.gap(k);
        const double t1 = schedule.time(k + 1);
        const bool full = t1 <= horizon + 1e-9 * gap;
        if (!full && t0 >= horizon - 1e-9 * gap) {
            break;
        }

        std::size_t substeps = opts.inner_substeps;
        double h = gap / static_cast<double>(substeps);
        if (!full) {
            if (brownian) {
                throw GridMismatch("simulate_side: horizon is not an impulse time");
            }
            const double rest = horizon - t0;
            substeps = static_cast<std::size_t>(std::ceil(rest / h - 1e-9));
            h = rest / static_cast<double>(substeps);
        }

        for (std::size_t j = 0; j < substeps; ++j) {
            const double t = t0 + static_cast<double>(j) * h;
            z = stepper.flow(z, t, h, draw_db(h));
            ++step_count;
            require_finite(z, step_count, "simulate_side");
            if (opts.record_substeps && j + 1 < substeps) {
                push_sample(traj, t0 + static_cast<double>(j + 1) * h, z, false);
            }
        }

        if (!full) {
            push_sample(traj, horizon, z, false);
            break;
        }

        Vec xi = brownian ? Vec(plan.increment(level, k) / std::sqrt(gap)) : plan.xi(k + 1);
        ImpulseRecord rec;
        rec.k = k + 1;
        rec.t = t1;
        rec.pre = z;
        push_sample(traj, t1, z, false);
        z = stepper.jump(z, k + 1, xi);
        require_finite(z, step_count, "simulate_side");
        rec.post = z;
        push_sample(traj, t1, z, true);
        traj.impulses.push_back(std::move(rec));

        if (std::abs(t1 - horizon) <= 1e-9 * gap) {
            break;
        }
    }
    return traj;
}

} // namespace

HybridTrajectory simulate_side(const SideSystem& side, const Vec& z0, double horizon,
                               const NoisePlan& plan, const SideOptions& opts)
{
    return run_hybrid(DecomposedStepper{side}, side.n, side.q, side.m, side.schedule, z0, horizon,
                      plan, opts);
}

HybridTrajectory simulate_compact(const CompactForm& sys, const ImpulseSchedule& schedule,
                                  const Vec& z0, double horizon, const NoisePlan& plan,
                                  const SideOptions& opts)
{
    return run_hybrid(CompactStepper{sys}, sys.n, sys.q, sys.m, schedule, z0, horizon, plan, opts);
}

// --- coupled CPS ------------------------------------------------------------

namespace {

void push_cps_sample(HybridTrajectory& traj, double t, const Vec& x, const Vec& cyber, bool post)
{
    TrajectorySample s;
    s.t = t;
    s.x = x;
    s.y = x - cyber;
    s.cyber = cyber;
    s.post_impulse = post;
    traj.samples.push_back(std::move(s));
}

std::size_t impulse_count(double dt, double horizon)
{
    const double r = horizon / dt;
    return static_cast<std::size_t>(std::floor(r + 1e-9));
}

} // namespace

HybridTrajectory simulate_cps(const VectorFieldSde& sde, const Vec& x0, double dt, double horizon,
                              const NoisePlan& plan, const CpsOptions& opts)
{
    require_positive(dt, "simulate_cps: dt");
    require_positive(horizon, "simulate_cps: horizon");
    check_noise_dim(sde.m, plan, "simulate_cps");
    if (x0.size() != sde.n) {
        throw std::invalid_argument("simulate_cps: x0 has the wrong dimension");
    }
    if (opts.inner_substeps < 1) {
        throw std::invalid_argument("simulate_cps: inner_substeps must be at least 1");
    }

    if (opts.integration == CpsIntegration::Separate) {
        const SideSystem side = make_cps(sde, dt);
        Vec z0(2 * sde.n);
        z0 << x0, Vec::Zero(sde.n);
        SideOptions so;
        so.inner_substeps = opts.inner_substeps;
        so.impulse_noise = opts.impulse_noise;
        so.record_substeps = opts.record_substeps;
        HybridTrajectory traj = simulate_side(side, z0, horizon, plan, so);
        for (auto& s : traj.samples) {
            s.cyber = s.x - s.y;
        }
        return traj;
    }

    const bool brownian = opts.impulse_noise == ImpulseNoise::BrownianIncrement;
    if (brownian) {
        if (!is_power_of_two(opts.inner_substeps) ||
            matching_level(plan, dt) != log2_exact(opts.inner_substeps)) {
            throw GridMismatch("simulate_cps: Brownian-increment mode needs plan delta = dt / "
                               "inner_substeps with a power-of-two substep count");
        }
    }
    const StepNoise noise(plan, dt, opts.impulse_noise);
    const std::size_t steps = impulse_count(dt, horizon);
    const std::size_t inner = opts.inner_substeps;
    const double h = dt / static_cast<double>(inner);
    const double sqrt_h = std::sqrt(h);
    const Index m = sde.m;

    HybridTrajectory traj;
    traj.n = sde.n;
    traj.q = sde.n;
    Vec x = x0;
    Vec cyber = x0;
    push_cps_sample(traj, 0.0, x, cyber, false);

    std::uint64_t slot = 0;
    Vec db(m);
    for (std::size_t k = 0; k < steps; ++k) {
        const double t0 = static_cast<double>(k) * dt;
        for (std::size_t j = 0; j < inner; ++j) {
            if (brownian) {
                db = plan.increment(0, slot);
            } else {
                for (Index d = 0; d < m; ++d) {
                    db(d) = sqrt_h * plan.standard_normal(Stream::Brownian, d, slot);
                }
            }
            ++slot;
            x = em_step(sde, x, t0 + static_cast<double>(j) * h, h, db);
            require_finite(x, k * inner + j + 1, "simulate_cps");
            if (opts.record_substeps && j + 1 < inner) {
                push_cps_sample(traj, t0 + static_cast<double>(j + 1) * h, x, cyber, false);
            }
        }
        Vec next = em_step(sde, cyber, t0, dt, noise(k));
        require_finite(next, (k + 1) * inner, "simulate_cps");

        const double t1 = static_cast<double>(k + 1) * dt;
        ImpulseRecord rec;
        rec.k = k + 1;
        rec.t = t1;
        rec.pre.resize(2 * sde.n);
        rec.pre << x, x - cyber;
        rec.post.resize(2 * sde.n);
        rec.post << x, x - next;
        traj.impulses.push_back(std::move(rec));
        push_cps_sample(traj, t1, x, cyber, false);
        cyber = std::move(next);
        push_cps_sample(traj, t1, x, cyber, true);
    }
    return traj;
}

HybridTrajectory simulate_cps(const LinearSde& sde, const Vec& x0, double dt, double horizon,
                              const NoisePlan& plan, const CpsOptions& opts)
{
    return simulate_cps(VectorFieldSde::from_linear(sde), x0, dt, horizon, plan, opts);
}

// --- output -------------------------------------------------------------------

void write_csv(std::ostream& os, const HybridTrajectory& traj)
{
    const bool cyber = traj.has_cyber();
    os << 't';
    for (Index i = 0; i < traj.n; ++i) {
        os << ",x_" << i + 1;
    }
    for (Index i = 0; i < traj.q; ++i) {
        os << ",y_" << i + 1;
    }
    if (cyber) {
        for (Index i = 0; i < traj.n; ++i) {
            os << ",X_" << i + 1;
        }
    }
    os << ",impulse_flag\n";
    for (const auto& s : traj.samples) {
        os << fmt12(s.t);
        for (Index i = 0; i < s.x.size(); ++i) {
            os << ',' << fmt12(s.x(i));
        }
        for (Index i = 0; i < s.y.size(); ++i) {
            os << ',' << fmt12(s.y(i));
        }
        if (cyber) {
            for (Index i = 0; i < s.cyber.size(); ++i) {
                os << ',' << fmt12(s.cyber(i));
            }
        }
        os << ',' << (s.post_impulse ? 1 : 0) << '\n';
    }
}

// --- closed forms ---------------------------------------------------------------

std::vector<double> exact_gbm(double lambda, double mu, double x0, const std::vector<Vec>& brownian,
                              double dt)
{
    std::vector<double> out;
    out.reserve(brownian.size());
    const double drift = lambda - 0.5 * mu * mu;
    for (std::size_t i = 0; i < brownian.size(); ++i) {
        if (brownian[i].size() < 1) {
            throw std::invalid_argument("exact_gbm: Brownian path has no component");
        }
        const double t = static_cast<double>(i) * dt;
        out.push_back(x0 * std::exp(drift * t + mu * brownian[i](0)));
    }
    return out;
}

double scalar_cps_max_stepsize(double a, double k_p)
{
    if (!(a > 0.0) || !(k_p > a)) {
        throw StepsizeTooLarge("scalar CPS demo needs a > 0 and k_p > a");
    }
    return std::log(k_p / (k_p - a)) / a;
}

ScalarCpsDemo simulate_scalar_cps_demo(double a, double k_p, double x0, double dt, double horizon,
                                       std::size_t samples_per_step)
{
    const double bound = scalar_cps_max_stepsize(a, k_p);
    if (!(dt > 0.0) || !(dt < bound)) {
        std::ostringstream os;
        os << "scalar CPS demo: dt = " << dt << " must lie in (0, " << bound << ")";
        throw StepsizeTooLarge(os.str());
    }
    require_positive(horizon, "simulate_scalar_cps_demo: horizon");
    if (samples_per_step < 1) {
        samples_per_step = 1;
    }

    ScalarCpsDemo demo;
    demo.max_stepsize = bound;
    const std::size_t steps = impulse_count(dt, horizon);
    const double factor = k_p / a - ((k_p - a) / a) * std::exp(a * dt);

    double xk = x0;
    double cyber = x0;
    demo.plateaus.push_back(cyber);
    bool sign_ok = true;
    auto push = [&](double t, double x, double c, bool post) {
        demo.t.push_back(t);
        demo.x.push_back(x);
        demo.cyber.push_back(c);
        demo.post_impulse.push_back(post);
        if (x0 > 0.0 ? !(x > 0.0) : (x0 < 0.0 ? !(x < 0.0) : x != 0.0)) {
            sign_ok = false;
        }
    };
    push(0.0, x0, x0, false);

    for (std::size_t k = 0; k < steps; ++k) {
        const double t0 = static_cast<double>(k) * dt;
        const double c = k_p * cyber / a;
        auto flow = [&](double s) { return std::exp(a * s) * (xk - c) + c; };
        for (std::size_t j = 1; j < samples_per_step; ++j) {
            const double s = dt * static_cast<double>(j) / static_cast<double>(samples_per_step);
            push(t0 + s, flow(s), cyber, false);
        }
        const double x_end = flow(dt);
        const double next = factor * cyber;
        const double t1 = static_cast<double>(k + 1) * dt;
        push(t1, x_end, cyber, false);
        push(t1, x_end, next, true);
        if (k == 0) {
            demo.verdict.x_dt = x_end;
        }
        xk = x_end;
        cyber = next;
        demo.plateaus.push_back(cyber);
    }

    bool decreasing = true;
    for (std::size_t k = 0; k + 1 < demo.plateaus.size(); ++k) {
        const double u = std::abs(demo.plateaus[k]);
        const double v = std::abs(demo.plateaus[k + 1]);
        if (!(v < u) && !(u == 0.0 && v == 0.0)) {
            decreasing = false;
        }
    }
    for (double p : demo.plateaus) {
        if (x0 > 0.0 ? !(p > 0.0) : (x0 < 0.0 ? !(p < 0.0) : p != 0.0)) {
            sign_ok = false;
        }
    }
    demo.verdict.strictly_decreasing = decreasing;
    demo.verdict.sign_preserved = sign_ok;
    demo.verdict.bound = std::abs(x0) * std::exp(-(k_p - a) * dt);
    if (steps == 0) {
        demo.verdict.x_dt = std::exp(a * dt) * (x0 - k_p * x0 / a) + k_p * x0 / a;
    }
    demo.verdict.first_step_bound =
        std::abs(demo.verdict.x_dt) <= demo.verdict.bound * (1.0 + 1e-12);
    return demo;
}

HybridTrajectory ScalarCpsDemo::as_trajectory() const
{
    HybridTrajectory traj;
    traj.n = 1;
    traj.q = 1;
    traj.samples.reserve(t.size());
    for (std::size_t i = 0; i < t.size(); ++i) {
        TrajectorySample s;
        s.t = t[i];
        s.x = Vec::Constant(1, x[i]);
        s.cyber = Vec::Constant(1, cyber[i]);
        s.y = s.x - s.cyber;
        s.post_impulse = post_impulse[i];
        traj.samples.push_back(std::move(s));
    }
    for (std::size_t i = 1; i < t.size(); ++i) {
        if (!post_impulse[i]) {
            continue;
        }
        ImpulseRecord rec;
        rec.k = traj.impulses.size() + 1;
        rec.t = t[i];
        rec.pre = Vec(2);
        rec.pre << x[i - 1], x[i - 1] - cyber[i - 1];
        rec.post = Vec(2);
        rec.post << x[i], x[i] - cyber[i];
        traj.impulses.push_back(std::move(rec));
    }
    return traj;
}

} // namespace sidekit
