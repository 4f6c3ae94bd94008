#include "sidekit/models.hpp"

#include "sidekit/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>

namespace sidekit {

LinearSde::LinearSde(Mat f_in, std::vector<Mat> gs_in) : f(std::move(f_in)), gs(std::move(gs_in))
{
    if (f.rows() != f.cols()) {
        throw std::invalid_argument("LinearSde: F must be square");
    }
    if (!f.allFinite()) {
        throw std::invalid_argument("LinearSde: F has non-finite entries");
    }
    for (const auto& g : gs) {
        if (g.rows() != f.rows() || g.cols() != f.cols()) {
            throw std::invalid_argument("LinearSde: every G_j must match the dimension of F");
        }
        if (!g.allFinite()) {
            throw std::invalid_argument("LinearSde: G_j has non-finite entries");
        }
    }
}

LinearSde LinearSde::scalar(double lambda, double mu)
{
    return LinearSde(Mat::Constant(1, 1, lambda), {Mat::Constant(1, 1, mu)});
}

Mat LinearSde::diffusion(const Vec& x) const
{
    Mat out(dim(), noise_dim());
    for (Index j = 0; j < noise_dim(); ++j) {
        out.col(j) = gs[static_cast<std::size_t>(j)] * x;
    }
    return out;
}

double LinearSde::lipschitz() const
{
    Eigen::JacobiSVD<Mat> svd(f);
    const double drift_norm = f.size() ? svd.singularValues()(0) : 0.0;
    Mat gram = Mat::Zero(dim(), dim());
    for (const auto& g : gs) {
        gram += g.transpose() * g;
    }
    double diff_norm = 0.0;
    if (gram.size()) {
        Eigen::SelfAdjointEigenSolver<Mat> es(gram, Eigen::EigenvaluesOnly);
        diff_norm = std::sqrt(std::max(0.0, es.eigenvalues().maxCoeff()));
    }
    return std::max(drift_norm, diff_norm);
}

VectorFieldSde VectorFieldSde::from_linear(const LinearSde& sde)
{
    VectorFieldSde out;
    out.n = sde.dim();
    out.m = sde.noise_dim();
    out.drift = [sde](const Vec& x, double) { return sde.drift(x); };
    out.diffusion = [sde](const Vec& x, double) { return sde.diffusion(x); };
    out.lipschitz = sde.lipschitz();
    return out;
}

ImpulseMaps ImpulseMaps::none(Index n, Index q, Index m)
{
    ImpulseMaps maps;
    maps.hf = [n](const Vec&, std::size_t) { return Vec::Zero(n).eval(); };
    maps.hg = [n, m](const Vec&, std::size_t) { return Mat::Zero(n, m).eval(); };
    maps.hf_y = [q](const Vec&, const Vec&, std::size_t) { return Vec::Zero(q).eval(); };
    maps.hg_y = [q, m](const Vec&, const Vec&, std::size_t) { return Mat::Zero(q, m).eval(); };
    return maps;
}

ImpulseSchedule::ImpulseSchedule(std::vector<double> gaps) : gaps_(std::move(gaps))
{
    if (gaps_.empty()) {
        throw std::invalid_argument("ImpulseSchedule: at least one gap is required");
    }
    for (double g : gaps_) {
        if (!(g > 0.0) || !std::isfinite(g)) {
            throw std::invalid_argument("ImpulseSchedule: gaps must be finite and positive");
        }
    }
    prefix_.reserve(gaps_.size() + 1);
    prefix_.push_back(0.0);
    for (double g : gaps_) {
        prefix_.push_back(prefix_.back() + g);
    }
    period_ = prefix_.back();
    min_gap_ = *std::min_element(gaps_.begin(), gaps_.end());
    max_gap_ = *std::max_element(gaps_.begin(), gaps_.end());
}

ImpulseSchedule ImpulseSchedule::equidistant(double dt) { return ImpulseSchedule({dt}); }

ImpulseSchedule ImpulseSchedule::cyclic(std::vector<double> gaps)
{
    return ImpulseSchedule(std::move(gaps));
}

double ImpulseSchedule::time(std::size_t k) const
{
    if (gaps_.size() == 1) {
        return static_cast<double>(k) * gaps_.front();
    }
    const std::size_t cycles = k / gaps_.size();
    const std::size_t rem = k % gaps_.size();
    return static_cast<double>(cycles) * period_ + prefix_[rem];
}

CompactForm compact_form(const SideSystem& side)
{
    CompactForm c;
    c.n = side.n;
    c.q = side.q;
    c.m = side.m;
    const Index n = side.n;
    const Index q = side.q;
    const Index m = side.m;

    c.drift = [side, n, q](const Vec& z, double t) {
        Vec out(n + q);
        const Vec x = z.head(n);
        const Vec y = z.tail(q);
        out.head(n) = side.f(x, t);
        out.tail(q) = side.f_y(x, y, t);
        return out;
    };
    c.diffusion = [side, n, q, m](const Vec& z, double t) {
        Mat out(n + q, m);
        const Vec x = z.head(n);
        const Vec y = z.tail(q);
        out.topRows(n) = side.g(x, t);
        out.bottomRows(q) = side.g_y(x, y, t);
        return out;
    };
    c.jump = [side, n, q](const Vec& z, std::size_t k) {
        Vec out(n + q);
        const Vec x = z.head(n);
        const Vec y = z.tail(q);
        out.head(n) = side.impulses.hf(x, k);
        out.tail(q) = side.impulses.hf_y(x, y, k);
        return out;
    };
    c.jump_noise = [side, n, q, m](const Vec& z, std::size_t k) {
        Mat out(n + q, m);
        const Vec x = z.head(n);
        const Vec y = z.tail(q);
        out.topRows(n) = side.impulses.hg(x, k);
        out.bottomRows(q) = side.impulses.hg_y(x, y, k);
        return out;
    };
    return c;
}

CpsSystem::CpsSystem(VectorFieldSde base_in, double dt_in) : base(std::move(base_in)), dt(dt_in)
{
    if (!(dt > 0.0) || !std::isfinite(dt)) {
        throw std::invalid_argument("CpsSystem: stepsize must be finite and positive");
    }
}

SideSystem make_cps(const VectorFieldSde& sde, double dt)
{
    if (!(dt > 0.0) || !std::isfinite(dt)) {
        throw std::invalid_argument("make_cps: stepsize must be finite and positive");
    }
    SideSystem side;
    side.n = sde.n;
    side.q = sde.n;
    side.m = sde.m;
    side.f = sde.drift;
    side.g = sde.diffusion;
    auto drift = sde.drift;
    auto diffusion = sde.diffusion;
    side.f_y = [drift](const Vec& x, const Vec&, double t) { return drift(x, t); };
    side.g_y = [diffusion](const Vec& x, const Vec&, double t) { return diffusion(x, t); };

    const Index n = sde.n;
    const Index m = sde.m;
    const double sqdt = std::sqrt(dt);
    side.impulses.hf = [n](const Vec&, std::size_t) { return Vec::Zero(n).eval(); };
    side.impulses.hg = [n, m](const Vec&, std::size_t) { return Mat::Zero(n, m).eval(); };
    // the drift/diffusion are autonomous in the coupled construction; the
    // cyber state X = x − y is held on [t_k, t_{k+1})
    side.impulses.hf_y = [drift, dt](const Vec& x, const Vec& y, std::size_t) {
        return Vec(-(drift(x - y, 0.0) * dt));
    };
    side.impulses.hg_y = [diffusion, sqdt](const Vec& x, const Vec& y, std::size_t) {
        return Mat(-(diffusion(x - y, 0.0) * sqdt));
    };
    side.schedule = ImpulseSchedule::equidistant(dt);
    side.lipschitz_x = sde.lipschitz;
    side.lipschitz_y = sde.lipschitz * std::max({1.0, 2.0 * dt, 2.0 * sqdt});
    return side;
}

SideSystem make_cps(const LinearSde& sde, double dt)
{
    return make_cps(VectorFieldSde::from_linear(sde), dt);
}

SideSystem make_cps(const CpsSystem& cps) { return make_cps(cps.base, cps.dt); }

QuadraticLyapunov::QuadraticLyapunov(SymMat p) : p_(std::move(p))
{
    const auto report = is_positive_definite(p_);
    if (!report.positive_definite) {
        std::ostringstream os;
        os << "QuadraticLyapunov: P is not positive definite (lambda_min = " << report.lambda_min
           << ")";
        throw NotPositiveDefinite(os.str());
    }
    Eigen::SelfAdjointEigenSolver<Mat> es(p_.matrix(), Eigen::EigenvaluesOnly);
    c1_ = es.eigenvalues().minCoeff();
    c2_ = es.eigenvalues().maxCoeff();
}

// --- validation -------------------------------------------------------------

namespace {

class Sampler {
public:
    Sampler(const ValidationOptions& opts) : rng_(opts.seed), dist_(-opts.box, opts.box) {}

    Vec point(Index n)
    {
        Vec v(n);
        for (Index i = 0; i < n; ++i) {
            v(i) = dist_(rng_);
        }
        return v;
    }

private:
    std::mt19937_64 rng_;
    std::uniform_real_distribution<double> dist_;
};

double norm_of(const Vec& v) { return v.norm(); }
double norm_of(const Mat& m) { return m.norm(); } // Frobenius

class Checker {
public:
    Checker(ValidationReport& report, const ValidationOptions& opts) : report_(report), opts_(opts) {}

    template <class Value>
    void origin(const std::string& name, const Value& value)
    {
        const double v = norm_of(value);
        report_.max_origin_value = std::max(report_.max_origin_value, v);
        if (!(v <= opts_.origin_tol)) {
            report_.violations.push_back({name, "origin", Vec(), Vec(), v, opts_.origin_tol});
        }
    }

    template <class Value>
    void ratio(const std::string& name, const Value& ha, const Value& hb, double dist, double limit,
               const Vec& a, const Vec& b)
    {
        if (!(dist > 0.0)) {
            return;
        }
        const double r = norm_of(Value(ha - hb)) / dist;
        auto it = std::find_if(report_.max_ratio.begin(), report_.max_ratio.end(),
                               [&](const auto& e) { return e.first == name; });
        if (it == report_.max_ratio.end()) {
            report_.max_ratio.emplace_back(name, r);
        } else {
            it->second = std::max(it->second, r);
        }
        const double bound = limit * (1.0 + opts_.slack);
        if (!(r <= bound)) {
            report_.violations.push_back({name, "lipschitz", a, b, r, limit});
        }
    }

private:
    ValidationReport& report_;
    const ValidationOptions& opts_;
};

std::string format_vec(const Vec& v)
{
    std::ostringstream os;
    os << '[';
    for (Index i = 0; i < v.size(); ++i) {
        os << (i ? ", " : "") << v(i);
    }
    os << ']';
    return os.str();
}

} // namespace

std::string ValidationReport::summary() const
{
    std::ostringstream os;
    if (ok()) {
        os << "validation passed";
    } else {
        os << violations.size() << " violation(s):";
        const std::size_t shown = std::min<std::size_t>(violations.size(), 5);
        for (std::size_t i = 0; i < shown; ++i) {
            const auto& v = violations[i];
            os << "\n  " << v.evaluator << " " << v.kind << ": value " << v.value << " > limit "
               << v.limit;
            if (v.kind == "lipschitz") {
                os << " at pair " << format_vec(v.a) << " / " << format_vec(v.b);
            }
        }
    }
    return os.str();
}

ValidationReport inspect(const VectorFieldSde& sde, const ValidationOptions& opts)
{
    ValidationReport report;
    Checker check(report, opts);
    const Vec zero = Vec::Zero(sde.n);
    for (double t : opts.probe_times) {
        check.origin("drift", sde.drift(zero, t));
        check.origin("diffusion", sde.diffusion(zero, t));
    }
    Sampler sample(opts);
    for (std::size_t i = 0; i < opts.pairs; ++i) {
        const Vec a = sample.point(sde.n);
        const Vec b = sample.point(sde.n);
        const double t = opts.probe_times.empty() ? 0.0 : opts.probe_times[i % opts.probe_times.size()];
        const double d = (a - b).norm();
        check.ratio<Vec>("drift", sde.drift(a, t), sde.drift(b, t), d, sde.lipschitz, a, b);
        check.ratio<Mat>("diffusion", sde.diffusion(a, t), sde.diffusion(b, t), d, sde.lipschitz, a,
                         b);
    }
    return report;
}

ValidationReport inspect(const LinearSde& sde, const ValidationOptions& opts)
{
    return inspect(VectorFieldSde::from_linear(sde), opts);
}

ValidationReport inspect(const SideSystem& side, const ValidationOptions& opts)
{
    ValidationReport report;
    Checker check(report, opts);
    const Vec x0 = Vec::Zero(side.n);
    const Vec y0 = Vec::Zero(side.q);
    const double l = side.lipschitz_x;
    const double lt = side.lipschitz_y;
    for (double t : opts.probe_times) {
        check.origin("f", side.f(x0, t));
        check.origin("g", side.g(x0, t));
        check.origin("f_y", side.f_y(x0, y0, t));
        check.origin("g_y", side.g_y(x0, y0, t));
    }
    for (std::size_t k : opts.probe_indices) {
        check.origin("hf", side.impulses.hf(x0, k));
        check.origin("hg", side.impulses.hg(x0, k));
        check.origin("hf_y", side.impulses.hf_y(x0, y0, k));
        check.origin("hg_y", side.impulses.hg_y(x0, y0, k));
    }

    Sampler sample(opts);
    for (std::size_t i = 0; i < opts.pairs; ++i) {
        const Vec xa = sample.point(side.n);
        const Vec xb = sample.point(side.n);
        const Vec ya = sample.point(side.q);
        const Vec yb = sample.point(side.q);
        const double t = opts.probe_times.empty() ? 0.0 : opts.probe_times[i % opts.probe_times.size()];
        const std::size_t k =
            opts.probe_indices.empty() ? 1 : opts.probe_indices[i % opts.probe_indices.size()];
        const double dx = (xa - xb).norm();
        const double dxy = std::max(dx, (ya - yb).norm());
        Vec za(side.n + side.q);
        za << xa, ya;
        Vec zb(side.n + side.q);
        zb << xb, yb;

        check.ratio<Vec>("f", side.f(xa, t), side.f(xb, t), dx, l, xa, xb);
        check.ratio<Mat>("g", side.g(xa, t), side.g(xb, t), dx, l, xa, xb);
        check.ratio<Vec>("hf", side.impulses.hf(xa, k), side.impulses.hf(xb, k), dx, l, xa, xb);
        check.ratio<Mat>("hg", side.impulses.hg(xa, k), side.impulses.hg(xb, k), dx, l, xa, xb);
        check.ratio<Vec>("f_y", side.f_y(xa, ya, t), side.f_y(xb, yb, t), dxy, lt, za, zb);
        check.ratio<Mat>("g_y", side.g_y(xa, ya, t), side.g_y(xb, yb, t), dxy, lt, za, zb);
        check.ratio<Vec>("hf_y", side.impulses.hf_y(xa, ya, k), side.impulses.hf_y(xb, yb, k), dxy,
                         lt, za, zb);
        check.ratio<Mat>("hg_y", side.impulses.hg_y(xa, ya, k), side.impulses.hg_y(xb, yb, k), dxy,
                         lt, za, zb);
    }
    return report;
}

namespace {

template <class System>
void validate_impl(const System& system, const ValidationOptions& opts)
{
    const auto report = inspect(system, opts);
    if (!report.ok()) {
        throw ValidationFailed(report.summary());
    }
}

} // namespace

void validate(const VectorFieldSde& sde, const ValidationOptions& opts) { validate_impl(sde, opts); }
void validate(const SideSystem& side, const ValidationOptions& opts) { validate_impl(side, opts); }
void validate(const LinearSde& sde, const ValidationOptions& opts) { validate_impl(sde, opts); }

} // namespace sidekit
