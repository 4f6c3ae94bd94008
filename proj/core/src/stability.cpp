#include "sidekit/stability.hpp"

#include "sidekit/errors.hpp"

#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <random>
#include <sstream>
#include <stdexcept>

namespace sidekit {

namespace {

std::string fmt12(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

Mat lyapunov_rhs_identity(Index n) { return Mat::Identity(n, n); }

/// Solve, gate, and measure the margin of a Lyapunov-type certificate.
template <class Solve, class Lhs>
StabilityCertificate certify(Index n, Solve&& solve, Lhs&& lhs, std::string kind)
{
    StabilityCertificate cert;
    cert.kind = std::move(kind);
    cert.margin = std::numeric_limits<double>::quiet_NaN();
    SymMat p;
    try {
        p = solve(SymMat(lyapunov_rhs_identity(n)));
    } catch (const SingularOperator& e) {
        cert.note = std::string("singular operator (stability boundary): ") + e.what();
        return cert;
    }
    const auto pd = is_positive_definite(p);
    if (!pd.positive_definite) {
        cert.note = "solution is not positive definite (lambda_min = " + fmt12(pd.lambda_min) + ")";
        return cert;
    }
    cert.margin = decay_rate(SymMat::symmetrize(lhs(p.matrix())), p);
    if (!(cert.margin > kStrictSlack)) {
        cert.note = "margin " + fmt12(cert.margin) + " is not strictly positive";
        return cert;
    }
    cert.verdict = Verdict::Feasible;
    cert.p = std::move(p);
    return cert;
}

} // namespace

StabilityCertificate lyapunov_ito_feasible(const LinearSde& sde)
{
    return cp_lyapunov_feasible(sde, 0.0);
}

StabilityCertificate cp_lyapunov_feasible(const LinearSde& sde, double dt_bar)
{
    if (!(dt_bar >= 0.0) || !std::isfinite(dt_bar)) {
        throw std::invalid_argument("cp_lyapunov_feasible: dt_bar must be finite and non-negative");
    }
    auto cert = certify(
        sde.dim(), [&](const SymMat& q) { return solve_ct_lyapunov(sde.f, sde.gs, dt_bar, q); },
        [&](const Mat& p) { return ct_lyapunov_lhs(sde.f, sde.gs, dt_bar, p); },
        dt_bar == 0.0 ? "lyapunov-ito" : "cyber-physical");
    cert.dt_bar = dt_bar;
    return cert;
}

StabilityCertificate discrete_ms_stable(const LinearSde& sde, double dt)
{
    if (!(dt > 0.0) || !std::isfinite(dt)) {
        throw std::invalid_argument("discrete_ms_stable: dt must be finite and positive");
    }
    auto cert = certify(
        sde.dim(), [&](const SymMat& q) { return solve_dt_lyapunov(sde.f, sde.gs, dt, q); },
        [&](const Mat& p) { return dt_lyapunov_lhs(sde.f, sde.gs, dt, p); }, "discrete");
    cert.dt = dt;
    return cert;
}

StepsizeBound max_stepsize(const LinearSde& sde, double tol)
{
    if (!(tol > 0.0)) {
        throw std::invalid_argument("max_stepsize: tol must be positive");
    }
    auto feasible = [&](double dt_bar) { return cp_lyapunov_feasible(sde, dt_bar).feasible(); };
    StepsizeBound out;
    if (!feasible(0.0)) {
        return out;
    }
    out.feasible = true;
    const double cap = std::ldexp(1.0, 20);
    double lo = 0.0;
    double hi = 1.0;
    while (feasible(hi)) {
        lo = hi;
        if (hi >= cap) {
            out.dt_bar = cap;
            out.capped = true;
            return out;
        }
        hi *= 2.0;
    }
    while (hi - lo > tol) {
        const double mid = 0.5 * (lo + hi);
        if (feasible(mid)) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    out.dt_bar = 0.5 * (lo + hi);
    return out;
}

std::optional<double> scalar_max_stepsize(double lambda, double mu)
{
    const double s = 2.0 * lambda + mu * mu;
    if (!(s < 0.0)) {
        return std::nullopt;
    }
    return -s / (lambda * lambda);
}

// --- linear extraction --------------------------------------------------------

namespace {

using VecProbe = std::function<Vec(const Vec&, double)>;
using MatProbe = std::function<Mat(const Vec&, double)>;

const std::vector<double> kProbeParams{0.0, 1.0, 2.0, 10.0};

Mat basis_vec(const VecProbe& fn, Index in, Index out, double param)
{
    Mat m(out, in);
    for (Index i = 0; i < in; ++i) {
        m.col(i) = fn(Vec::Unit(in, i), param);
    }
    return m;
}

std::vector<Mat> basis_mat(const MatProbe& fn, Index in, Index out, Index noise, double param)
{
    std::vector<Mat> ms(static_cast<std::size_t>(noise), Mat(out, in));
    for (Index i = 0; i < in; ++i) {
        const Mat g = fn(Vec::Unit(in, i), param);
        for (Index j = 0; j < noise; ++j) {
            ms[static_cast<std::size_t>(j)].col(i) = g.col(j);
        }
    }
    return ms;
}

void verify(const char* name, const std::function<double(const Vec&, double)>& residual,
            const std::function<double(const Vec&)>& scale, Index in, std::mt19937_64& rng)
{
    std::uniform_real_distribution<double> dist(-3.0, 3.0);
    for (double param : kProbeParams) {
        for (int trial = 0; trial < 4; ++trial) {
            Vec w(in);
            for (Index i = 0; i < in; ++i) {
                w(i) = dist(rng);
            }
            const double r = residual(w, param);
            if (!(r <= 1e-8 * (1.0 + scale(w)))) {
                std::ostringstream os;
                os << "evaluator " << name
                   << " is not linear and time/index-invariant (residual " << r << ")";
                throw NotLinear(os.str());
            }
        }
    }
}

Mat extract_vec(const char* name, const VecProbe& fn, Index in, Index out, std::mt19937_64& rng)
{
    Mat m = basis_vec(fn, in, out, kProbeParams.front());
    verify(
        name, [&](const Vec& w, double p) { return (fn(w, p) - m * w).norm(); },
        [&](const Vec& w) { return m.norm() * w.norm(); }, in, rng);
    return m;
}

std::vector<Mat> extract_mat(const char* name, const MatProbe& fn, Index in, Index out,
                             Index noise, std::mt19937_64& rng)
{
    auto ms = basis_mat(fn, in, out, noise, kProbeParams.front());
    verify(
        name,
        [&](const Vec& w, double p) {
            const Mat g = fn(w, p);
            if (g.rows() != out || g.cols() != noise) {
                return std::numeric_limits<double>::infinity();
            }
            double r = 0.0;
            for (Index j = 0; j < noise; ++j) {
                r = std::max(r, (g.col(j) - ms[static_cast<std::size_t>(j)] * w).norm());
            }
            return r;
        },
        [&](const Vec& w) {
            double s = 0.0;
            for (const auto& g : ms) {
                s = std::max(s, g.norm());
            }
            return s * w.norm();
        },
        in, rng);
    return ms;
}

void split_columns(const Mat& m, Index n, Mat& left, Mat& right)
{
    left = m.leftCols(n);
    right = m.rightCols(m.cols() - n);
}

std::size_t as_index(double p) { return static_cast<std::size_t>(p) + 1; }

} // namespace

LinearSide linearize(const SideSystem& side)
{
    const Index n = side.n;
    const Index q = side.q;
    const Index m = side.m;
    std::mt19937_64 rng(0x11ea5);
    LinearSide lin;

    lin.f = extract_vec("f", [&](const Vec& x, double t) { return side.f(x, t); }, n, n, rng);
    lin.g = extract_mat("g", [&](const Vec& x, double t) { return side.g(x, t); }, n, n, m, rng);

    auto stacked_y = [&](const Vec& z) { return std::make_pair(Vec(z.head(n)), Vec(z.tail(q))); };

    const Mat fy = extract_vec(
        "f_y",
        [&](const Vec& z, double t) {
            auto [x, y] = stacked_y(z);
            return side.f_y(x, y, t);
        },
        n + q, q, rng);
    split_columns(fy, n, lin.fy_x, lin.fy_y);
    const auto gy = extract_mat(
        "g_y",
        [&](const Vec& z, double t) {
            auto [x, y] = stacked_y(z);
            return side.g_y(x, y, t);
        },
        n + q, q, m, rng);
    for (const auto& g : gy) {
        Mat a, b;
        split_columns(g, n, a, b);
        lin.gy_x.push_back(a);
        lin.gy_y.push_back(b);
    }

    lin.h = extract_vec(
        "hf", [&](const Vec& x, double p) { return side.impulses.hf(x, as_index(p)); }, n, n, rng);
    lin.k = extract_mat(
        "hg", [&](const Vec& x, double p) { return side.impulses.hg(x, as_index(p)); }, n, n, m,
        rng);

    const Mat hy = extract_vec(
        "hf_y",
        [&](const Vec& z, double p) {
            auto [x, y] = stacked_y(z);
            return side.impulses.hf_y(x, y, as_index(p));
        },
        n + q, q, rng);
    split_columns(hy, n, lin.hy_x, lin.hy_y);
    const auto ky = extract_mat(
        "hg_y",
        [&](const Vec& z, double p) {
            auto [x, y] = stacked_y(z);
            return side.impulses.hg_y(x, y, as_index(p));
        },
        n + q, q, m, rng);
    for (const auto& g : ky) {
        Mat a, b;
        split_columns(g, n, a, b);
        lin.ky_x.push_back(a);
        lin.ky_y.push_back(b);
    }
    return lin;
}

// --- condition constants ------------------------------------------------------

namespace {

QuadraticBlocks generator_blocks(const LinearSide& lin, const Mat& pt)
{
    QuadraticBlocks b;
    const Index n = lin.fy_x.cols();
    b.xx = Mat::Zero(n, n);
    b.yy = lin.fy_y.transpose() * pt + pt * lin.fy_y;
    b.xy = lin.fy_x.transpose() * pt;
    for (std::size_t j = 0; j < lin.gy_x.size(); ++j) {
        const Mat& c = lin.gy_x[j];
        const Mat& d = lin.gy_y[j];
        b.xx += c.transpose() * pt * c;
        b.yy += d.transpose() * pt * d;
        b.xy += c.transpose() * pt * d;
    }
    return b;
}

QuadraticBlocks impulse_blocks(const LinearSide& lin, const Mat& pt)
{
    QuadraticBlocks b;
    const Mat& a = lin.hy_x;
    const Mat e = Mat::Identity(lin.hy_y.rows(), lin.hy_y.cols()) + lin.hy_y;
    b.xx = a.transpose() * pt * a;
    b.yy = e.transpose() * pt * e;
    b.xy = a.transpose() * pt * e;
    for (std::size_t j = 0; j < lin.ky_x.size(); ++j) {
        const Mat& c = lin.ky_x[j];
        const Mat& d = lin.ky_y[j];
        b.xx += c.transpose() * pt * c;
        b.yy += d.transpose() * pt * d;
        b.xy += c.transpose() * pt * d;
    }
    return b;
}

void apply_split(ConditionConstants& c, const SymMat& p, const SymMat& pt, double s)
{
    if (!(s > 0.0) || !std::isfinite(s)) {
        throw std::invalid_argument("split parameter must be finite and positive");
    }
    c.split = s;
    const double gx = pencil_max(SymMat::symmetrize(c.generator_y.xx), p);
    const double gy = pencil_max(SymMat::symmetrize(c.generator_y.yy), pt);
    const double gk = weighted_cross_norm(c.generator_y.xy, p, pt);
    c.alpha_tilde_1 = gx + s * gk;
    c.alpha_tilde_2 = std::max(gy + gk / s, 1e-12);

    const double ix = pencil_max(SymMat::symmetrize(c.impulse_y.xx), p);
    const double iy = pencil_max(SymMat::symmetrize(c.impulse_y.yy), pt);
    const double ik = weighted_cross_norm(c.impulse_y.xy, p, pt);
    c.beta_tilde_1 = ix + s * ik;
    c.beta_tilde_2 = iy + ik / s;
}

} // namespace

ConditionConstants quadratic_condition_constants(const SideSystem& side, const SymMat& p,
                                                 const SymMat& p_tilde, double split,
                                                 ContinuousRole role)
{
    if (p.dim() != side.n || p_tilde.dim() != side.q) {
        throw std::invalid_argument("quadratic_condition_constants: weight dimension mismatch");
    }
    if (side.q < 1) {
        throw std::invalid_argument("quadratic_condition_constants: the y-part must be non-empty");
    }
    const LinearSide lin = linearize(side);
    const Mat& pm = p.matrix();

    ConditionConstants c;
    Mat gen = lin.f.transpose() * pm + pm * lin.f;
    for (const auto& g : lin.g) {
        gen += g.transpose() * pm * g;
    }
    const double lam = pencil_max(SymMat::symmetrize(gen), p);
    c.alpha = role == ContinuousRole::Decay ? -lam : lam;

    const Mat e = Mat::Identity(side.n, side.n) + lin.h;
    Mat jump = e.transpose() * pm * e;
    for (const auto& k : lin.k) {
        jump += k.transpose() * pm * k;
    }
    c.beta = pencil_max(SymMat::symmetrize(jump), p);

    c.generator_y = generator_blocks(lin, p_tilde.matrix());
    c.impulse_y = impulse_blocks(lin, p_tilde.matrix());
    c.dt_under = side.schedule.min_gap();
    c.dt_over = side.schedule.max_gap();
    apply_split(c, p, p_tilde, split);
    return c;
}

ConditionConstants with_split(const ConditionConstants& c, const SymMat& p, const SymMat& p_tilde,
                              double split)
{
    ConditionConstants out = c;
    apply_split(out, p, p_tilde, split);
    return out;
}

double expected_post_impulse_y(const SideSystem& side, const SymMat& p_tilde, const Vec& x,
                               const Vec& y, std::size_t k)
{
    const Vec mean = y + side.impulses.hf_y(x, y, k);
    const Mat noise = side.impulses.hg_y(x, y, k);
    double out = p_tilde.quadratic(mean);
    for (Index j = 0; j < noise.cols(); ++j) {
        out += p_tilde.quadratic(noise.col(j));
    }
    return out;
}

// --- interval checks ------------------------------------------------------------

namespace {

double y_bound(const ConditionConstants& c)
{
    if (!(c.alpha_tilde_2 > 0.0)) {
        throw std::invalid_argument("condition check: alpha_tilde_2 must be positive");
    }
    return -std::log(c.beta_tilde_2) / c.alpha_tilde_2;
}

bool strictly_less(double a, double b) { return a < b - kStrictSlack; }

} // namespace

bool check_dwell_window(const ConditionConstants& c)
{
    if (!(c.alpha > 0.0)) {
        return false;
    }
    const double lower = std::log(c.beta) / c.alpha;
    return strictly_less(lower, c.dt_under) && c.dt_under <= c.dt_over &&
           strictly_less(c.dt_over, y_bound(c));
}

bool check_impulsive_stabilization(const ConditionConstants& c)
{
    if (!(c.alpha > 0.0)) {
        return false;
    }
    const double x_bound = -std::log(c.beta) / c.alpha;
    return strictly_less(c.dt_over, std::min(x_bound, y_bound(c)));
}

CpsStepsizeCheck check_cps_stepsize(const LinearSde& sde, const SymMat& p, double dt)
{
    const SideSystem side = make_cps(sde, dt);
    ConditionConstants base = quadratic_condition_constants(side, p, p, 1.0);

    CpsStepsizeCheck out;
    out.bound = -std::numeric_limits<double>::infinity();
    for (int e = -10; e <= 20; ++e) {
        ConditionConstants c = with_split(base, p, p, std::ldexp(1.0, e));
        const double b = y_bound(c);
        if (b > out.bound) {
            out.bound = b;
            out.constants = c;
        }
    }
    out.pass = out.constants.alpha > kStrictSlack && strictly_less(dt, out.bound);
    return out;
}

DecayCheck check_cp_decay(const LinearSde& sde, const SymMat& p, double dt_bar)
{
    if (!(dt_bar > 0.0)) {
        throw std::invalid_argument("check_cp_decay: dt_bar must be positive");
    }
    DecayCheck out;
    out.margin = decay_rate(SymMat::symmetrize(ct_lyapunov_lhs(sde.f, sde.gs, dt_bar, p.matrix())), p);
    out.pass = out.margin > kStrictSlack;
    out.alpha_bar = std::min(out.margin, 0.99 / dt_bar);
    return out;
}

DecreaseCheck check_discrete_decrease(const LinearSde& sde, const SymMat& p, double dt)
{
    if (!(dt > 0.0)) {
        throw std::invalid_argument("check_discrete_decrease: dt must be positive");
    }
    DecreaseCheck out;
    const Mat m = dt_lyapunov_lhs(sde.f, sde.gs, dt, p.matrix()) + p.matrix();
    out.c_bar = pencil_max(SymMat::symmetrize(m), p);
    out.pass = strictly_less(out.c_bar, 1.0);
    out.implied_alpha = (1.0 - out.c_bar) / dt;
    return out;
}

// --- reports --------------------------------------------------------------------

std::string to_text(const StabilityCertificate& cert)
{
    std::ostringstream os;
    os << "kind: " << cert.kind << '\n';
    os << "verdict: " << (cert.feasible() ? "feasible" : "infeasible") << '\n';
    if (cert.dt_bar) {
        os << "dt_bar: " << fmt12(*cert.dt_bar) << '\n';
    }
    if (cert.dt) {
        os << "dt: " << fmt12(*cert.dt) << '\n';
    }
    os << "margin: " << fmt12(cert.margin) << '\n';
    if (cert.p) {
        os << "P:\n";
        const Mat& p = cert.p->matrix();
        for (Index i = 0; i < p.rows(); ++i) {
            os << ' ';
            for (Index j = 0; j < p.cols(); ++j) {
                os << ' ' << fmt12(p(i, j));
            }
            os << '\n';
        }
    }
    if (!cert.note.empty()) {
        os << "note: " << cert.note << '\n';
    }
    return os.str();
}

std::string to_text(const ConditionConstants& c)
{
    std::ostringstream os;
    os << "alpha: " << fmt12(c.alpha) << '\n'
       << "alpha_tilde_1: " << fmt12(c.alpha_tilde_1) << '\n'
       << "alpha_tilde_2: " << fmt12(c.alpha_tilde_2) << '\n'
       << "beta: " << fmt12(c.beta) << '\n'
       << "beta_tilde_1: " << fmt12(c.beta_tilde_1) << '\n'
       << "beta_tilde_2: " << fmt12(c.beta_tilde_2) << '\n'
       << "dt_under: " << fmt12(c.dt_under) << '\n'
       << "dt_over: " << fmt12(c.dt_over) << '\n'
       << "split: " << fmt12(c.split) << '\n';
    return os.str();
}

} // namespace sidekit
