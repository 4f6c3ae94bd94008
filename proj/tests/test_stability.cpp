#include "sidekit/errors.hpp"
#include "sidekit/stability.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace sidekit;

namespace {

const LinearSde kScalar = LinearSde::scalar(-4.0, 1.0);

Mat random_mat(std::mt19937_64& rng, Index r, Index c, double sd = 1.0)
{
    std::normal_distribution<double> n(0.0, sd);
    Mat m(r, c);
    for (Index i = 0; i < r; ++i) {
        for (Index j = 0; j < c; ++j) {
            m(i, j) = n(rng);
        }
    }
    return m;
}

// F = A − sI with s past ‖A‖₂ + ½Σ‖Gⱼ‖₂²: then FᵀI + IF + ΣGᵀG ≺ 0 and the
// Lyapunov–Itô inequality is feasible.
LinearSde random_stable(std::mt19937_64& rng, double shift_sign = -1.0)
{
    std::uniform_int_distribution<int> dim(1, 3);
    std::uniform_int_distribution<int> noise(0, 2);
    const Index n = dim(rng);
    const int m = noise(rng);
    const Mat a = random_mat(rng, n, n);
    std::vector<Mat> gs;
    double s = a.operatorNorm() + 0.25;
    for (int j = 0; j < m; ++j) {
        gs.push_back(random_mat(rng, n, n, 0.5));
        const double g = gs.back().operatorNorm();
        s += 0.5 * g * g;
    }
    return LinearSde(a + shift_sign * s * Mat::Identity(n, n), gs);
}

double mc_mean(const std::function<double(double)>& f, int samples, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n;
    double s = 0.0;
    for (int i = 0; i < samples; ++i) {
        s += f(n(rng));
    }
    return s / samples;
}

ConditionConstants make_constants(double alpha, double beta, double at2, double bt2, double under,
                                  double over)
{
    ConditionConstants c;
    c.alpha = alpha;
    c.beta = beta;
    c.alpha_tilde_2 = at2;
    c.beta_tilde_2 = bt2;
    c.dt_under = under;
    c.dt_over = over;
    return c;
}

} // namespace

TEST_CASE("lyapunov_ito_feasible: examples")
{
    const auto a = lyapunov_ito_feasible(LinearSde(-Mat::Identity(2, 2), {}));
    REQUIRE(a.feasible());
    CHECK(a.p->matrix().isApprox(0.5 * Mat::Identity(2, 2), 1e-12));
    CHECK(a.margin == doctest::Approx(2.0));

    const auto b = lyapunov_ito_feasible(LinearSde(Mat::Constant(1, 1, 1.0), {}));
    CHECK_FALSE(b.feasible());
    CHECK_FALSE(b.p.has_value());

    const auto c = lyapunov_ito_feasible(LinearSde::scalar(-1.0, std::sqrt(2.0)));
    CHECK_FALSE(c.feasible());
}

TEST_CASE("cp_lyapunov_feasible: scalar examples")
{
    const auto a = cp_lyapunov_feasible(kScalar, 0.4);
    REQUIRE(a.feasible());
    // −8 + 1 + 6.4 = −0.6, so P = 1/0.6
    CHECK((*a.p)(0, 0) == doctest::Approx(1.0 / 0.6).epsilon(1e-12));
    CHECK(a.margin == doctest::Approx(0.6).epsilon(1e-12));
    CHECK(*a.dt_bar == 0.4);
    CHECK_FALSE(cp_lyapunov_feasible(kScalar, 0.5).feasible());
    CHECK_FALSE(cp_lyapunov_feasible(kScalar, 0.4375).feasible());
    CHECK_THROWS_AS((void)cp_lyapunov_feasible(kScalar, -0.1), std::invalid_argument);
}

TEST_CASE("cp_lyapunov_feasible at dt_bar = 0 reduces to the Lyapunov-Ito verdict")
{
    std::mt19937_64 rng(5);
    for (int i = 0; i < 20; ++i) {
        const LinearSde s = random_stable(rng, i % 2 == 0 ? -1.0 : 0.3);
        const auto a = lyapunov_ito_feasible(s);
        const auto b = cp_lyapunov_feasible(s, 0.0);
        CHECK(a.feasible() == b.feasible());
        if (a.feasible()) {
            CHECK(a.p->matrix() == b.p->matrix());
        }
    }
}

TEST_CASE("max_stepsize: examples")
{
    const auto a = max_stepsize(kScalar, 1e-10);
    REQUIRE(a.feasible);
    CHECK(std::abs(a.dt_bar - 0.4375) <= 1e-9);

    const auto b = max_stepsize(LinearSde(-Mat::Identity(2, 2), {}), 1e-10);
    REQUIRE(b.feasible);
    CHECK(std::abs(b.dt_bar - 2.0) <= 1e-9);
    CHECK_FALSE(b.capped);

    CHECK_FALSE(max_stepsize(LinearSde(Mat::Constant(1, 1, 1.0), {})).feasible);
    CHECK_THROWS_AS((void)max_stepsize(kScalar, 0.0), std::invalid_argument);
}

TEST_CASE("scalar_max_stepsize: examples")
{
    CHECK(*scalar_max_stepsize(-1.0, 0.0) == 2.0);
    CHECK(*scalar_max_stepsize(-4.0, 1.0) == 0.4375);
    CHECK_FALSE(scalar_max_stepsize(-1.0, std::sqrt(2.0)).has_value());
    CHECK_FALSE(scalar_max_stepsize(0.1, 1.0).has_value());
}

TEST_CASE("scalar consistency between bisection and closed form")
{
    const double tol = 1e-9;
    const std::pair<double, double> cases[] = {{-1, 0}, {-4, 1}, {-2, 1.5}, {-0.3, 0.2}, {-10, 4}};
    for (const auto& [lambda, mu] : cases) {
        const auto closed = scalar_max_stepsize(lambda, mu);
        const auto bis = max_stepsize(LinearSde::scalar(lambda, mu), tol);
        REQUIRE(closed.has_value());
        REQUIRE(bis.feasible);
        CHECK(std::abs(bis.dt_bar - *closed) <= 2 * tol);
    }
}

TEST_CASE("discrete_ms_stable: scalar examples")
{
    const auto a = discrete_ms_stable(kScalar, 0.4);
    REQUIRE(a.feasible());
    // P(1 − 0.76) = 1
    CHECK((*a.p)(0, 0) == doctest::Approx(1.0 / 0.24).epsilon(1e-12));
    CHECK(*a.dt == 0.4);
    CHECK_FALSE(discrete_ms_stable(kScalar, 0.5).feasible());
    CHECK_FALSE(discrete_ms_stable(kScalar, 0.4375).feasible());
    CHECK_THROWS_AS((void)discrete_ms_stable(kScalar, 0.0), std::invalid_argument);
}

TEST_CASE("cp_lyapunov_feasible is monotone in dt_bar")
{
    std::mt19937_64 rng(8);
    for (int i = 0; i < 15; ++i) {
        const LinearSde s = random_stable(rng);
        bool previous = true;
        for (int j = 0; j <= 40; ++j) {
            const bool now = cp_lyapunov_feasible(s, 0.05 * j).feasible();
            CHECK((previous || !now));
            previous = now;
        }
    }
}

TEST_CASE("constructive chain on a random stable family")
{
    std::mt19937_64 rng(77);
    for (int i = 0; i < 20; ++i) {
        const LinearSde s = random_stable(rng);
        REQUIRE(lyapunov_ito_feasible(s).feasible());
        const auto bound = max_stepsize(s, 1e-9);
        REQUIRE(bound.feasible);
        CHECK(bound.dt_bar > 0.0);
        for (double frac : {0.25, 0.5, 0.99}) {
            const double dt = frac * bound.dt_bar;
            const auto disc = discrete_ms_stable(s, dt);
            REQUIRE(disc.feasible());
            const auto dec = check_discrete_decrease(s, *disc.p, dt);
            CHECK(dec.pass);
            const auto cp = check_cp_decay(s, *disc.p, dt);
            CHECK(cp.pass);
            CHECK(cp.margin == doctest::Approx(dec.implied_alpha).epsilon(1e-8));
            CHECK(cp.margin * dt == doctest::Approx(1.0 - dec.c_bar).epsilon(1e-8));
        }
    }
}

TEST_CASE("unstable family fails every link")
{
    std::mt19937_64 rng(78);
    for (int i = 0; i < 10; ++i) {
        const LinearSde s = random_stable(rng, +1.0);
        CHECK_FALSE(lyapunov_ito_feasible(s).feasible());
        CHECK_FALSE(max_stepsize(s).feasible);
        for (double dt : {0.01, 0.1, 1.0}) {
            CHECK_FALSE(discrete_ms_stable(s, dt).feasible());
            const SymMat id = SymMat::identity(s.dim());
            CHECK_FALSE(check_discrete_decrease(s, id, dt).pass);
            CHECK_FALSE(check_cp_decay(s, id, dt).pass);
        }
    }
}

TEST_CASE("check_cp_decay passes on every smaller stepsize")
{
    std::mt19937_64 rng(90);
    for (int i = 0; i < 10; ++i) {
        const LinearSde s = random_stable(rng);
        const double dt_bar = 0.9 * max_stepsize(s).dt_bar;
        const auto cert = cp_lyapunov_feasible(s, dt_bar);
        REQUIRE(cert.feasible());
        for (int j = 1; j <= 10; ++j) {
            CHECK(check_cp_decay(s, *cert.p, dt_bar * j / 10.0).pass);
        }
    }
}

TEST_CASE("check_cp_decay: examples")
{
    const auto a = check_cp_decay(kScalar, SymMat::scalar(1.0), 0.4);
    CHECK(a.pass);
    CHECK(a.margin == doctest::Approx(0.6).epsilon(1e-12));
    CHECK(a.alpha_bar == doctest::Approx(0.6).epsilon(1e-12));

    const auto b = check_cp_decay(kScalar, SymMat::scalar(1.0), 0.4375);
    CHECK_FALSE(b.pass);
    CHECK(std::abs(b.margin) <= 1e-12);

    const auto c = check_cp_decay(LinearSde(-Mat::Identity(2, 2), {}), SymMat::identity(2), 1.0);
    CHECK(c.pass);
    CHECK(c.margin == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(c.alpha_bar == doctest::Approx(0.99).epsilon(1e-12));
    CHECK(c.alpha_bar * 1.0 < 1.0);
}

TEST_CASE("check_discrete_decrease: examples")
{
    const auto a = check_discrete_decrease(kScalar, SymMat::scalar(1.0), 0.4);
    CHECK(a.pass);
    CHECK(a.c_bar == doctest::Approx(0.76).epsilon(1e-12));
    CHECK(a.implied_alpha == doctest::Approx(0.6).epsilon(1e-12));

    const auto b = check_discrete_decrease(kScalar, SymMat::scalar(1.0), 0.5);
    CHECK_FALSE(b.pass);
    CHECK(b.c_bar == doctest::Approx(1.5).epsilon(1e-12));

    for (double dt : {0.01, 1.0, 7.0}) {
        const auto c = check_discrete_decrease(LinearSde(Mat::Zero(2, 2), {}), SymMat::identity(2), dt);
        CHECK_FALSE(c.pass);
        CHECK(c.c_bar == doctest::Approx(1.0).epsilon(1e-14));
    }
}

TEST_CASE("quadratic_condition_constants: alpha and beta")
{
    const SideSystem cps = make_cps(kScalar, 0.1);
    const auto c = quadratic_condition_constants(cps, SymMat::scalar(1.0), SymMat::scalar(1.0));
    CHECK(c.alpha == doctest::Approx(7.0).epsilon(1e-12));
    // the cps leaves x untouched at impulses
    CHECK(c.beta == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(c.dt_under == doctest::Approx(0.1));
    CHECK(c.dt_over == doctest::Approx(0.1));

    const auto g = quadratic_condition_constants(cps, SymMat::scalar(1.0), SymMat::scalar(1.0), 1.0,
                                                 ContinuousRole::Growth);
    CHECK(g.alpha == doctest::Approx(-7.0).epsilon(1e-12));
}

TEST_CASE("quadratic_condition_constants: scalar CPS impulse by hand")
{
    const double lambda = -4.0;
    const double mu = 1.0;
    const double dt = 0.4;
    const SideSystem cps = make_cps(kScalar, dt);
    const SymMat one = SymMat::scalar(1.0);
    const auto c = quadratic_condition_constants(cps, one, one, 1.0);

    // y' = (1 + λΔt)y − λΔt·x − μ√Δt(x − y)ξ
    // E y'² = ((1+λΔt)y − λΔt·x)² + μ²Δt(x − y)²
    const double xx = lambda * lambda * dt * dt + mu * mu * dt;
    const double yy = (1 + lambda * dt) * (1 + lambda * dt) + mu * mu * dt;
    const double xy = -lambda * dt * (1 + lambda * dt) - mu * mu * dt;
    CHECK(c.impulse_y.xx(0, 0) == doctest::Approx(xx).epsilon(1e-12));
    CHECK(c.impulse_y.yy(0, 0) == doctest::Approx(yy).epsilon(1e-12));
    CHECK(c.impulse_y.xy(0, 0) == doctest::Approx(xy).epsilon(1e-12));
    CHECK(xx == doctest::Approx(2.96));
    CHECK(yy == doctest::Approx(0.76));
    CHECK(xy == doctest::Approx(-1.36));

    // s = 1 split: 2|xy|·|x||y| ≤ |xy|(x² + y²)
    CHECK(c.beta_tilde_1 == doctest::Approx(2.96 + 1.36).epsilon(1e-12));
    CHECK(c.beta_tilde_2 == doctest::Approx(0.76 + 1.36).epsilon(1e-12));
    // ℒ̃Ṽ = 2yλx + μ²x²
    CHECK(c.alpha_tilde_1 == doctest::Approx(1.0 + 4.0).epsilon(1e-12));
    CHECK(c.alpha_tilde_2 == doctest::Approx(4.0).epsilon(1e-12));
    const auto c4 = with_split(c, one, one, 4.0);
    CHECK(c4.beta_tilde_1 == doctest::Approx(2.96 + 4 * 1.36).epsilon(1e-12));
    CHECK(c4.beta_tilde_2 == doctest::Approx(0.76 + 1.36 / 4).epsilon(1e-12));
    CHECK(c4.alpha_tilde_2 == doctest::Approx(1.0).epsilon(1e-12));

    const double x = 0.7;
    const double y = -0.3;
    const double analytic = c.impulse_y(Vec::Constant(1, x), Vec::Constant(1, y));
    const double mc = mc_mean(
        [&](double xi) {
            const double yp = (1 + lambda * dt) * y - lambda * dt * x - mu * std::sqrt(dt) * (x - y) * xi;
            return yp * yp;
        },
        1000000, 31);
    CHECK(std::abs(mc / analytic - 1.0) < 0.01);
    CHECK(expected_post_impulse_y(cps, one, Vec::Constant(1, x), Vec::Constant(1, y), 1) ==
          doctest::Approx(analytic).epsilon(1e-12));
}

TEST_CASE("expected post-impulse value matches Monte Carlo on random linear impulses")
{
    std::mt19937_64 rng(404);
    for (int trial = 0; trial < 3; ++trial) {
        const Index n = 2;
        const Index q = 2;
        const Index m = 2;
        const Mat hx = random_mat(rng, q, n, 0.5);
        const Mat hy = random_mat(rng, q, q, 0.5);
        std::vector<Mat> kx;
        std::vector<Mat> ky;
        for (Index j = 0; j < m; ++j) {
            kx.push_back(random_mat(rng, q, n, 0.4));
            ky.push_back(random_mat(rng, q, q, 0.4));
        }
        SideSystem side;
        side.n = n;
        side.q = q;
        side.m = m;
        side.f = [](const Vec& x, double) { return Vec(-x); };
        side.g = [n, m](const Vec&, double) { return Mat::Zero(n, m); };
        side.f_y = [](const Vec&, const Vec& y, double) { return Vec(-y); };
        side.g_y = [q, m](const Vec&, const Vec&, double) { return Mat::Zero(q, m); };
        side.impulses = ImpulseMaps::none(n, q, m);
        side.impulses.hf_y = [=](const Vec& x, const Vec& y, std::size_t) { return Vec(hx * x + hy * y); };
        side.impulses.hg_y = [=](const Vec& x, const Vec& y, std::size_t) {
            Mat out(q, m);
            for (Index j = 0; j < m; ++j) {
                out.col(j) = kx[j] * x + ky[j] * y;
            }
            return out;
        };
        side.schedule = ImpulseSchedule::equidistant(0.2);
        const Mat r = random_mat(rng, q, q, 0.3);
        const SymMat pt = SymMat::symmetrize(Mat::Identity(q, q) + r * r.transpose());
        const auto c = quadratic_condition_constants(side, SymMat::identity(n), pt);

        const Vec x = random_mat(rng, n, 1);
        const Vec y = random_mat(rng, q, 1);
        const double analytic = c.impulse_y(x, y);
        CHECK(expected_post_impulse_y(side, pt, x, y, 3) == doctest::Approx(analytic).epsilon(1e-12));

        const Vec mean = y + hx * x + hy * y;
        const Mat noise = side.impulses.hg_y(x, y, 0);
        std::mt19937_64 draw(1000 + static_cast<std::uint64_t>(trial));
        std::normal_distribution<double> nd;
        double acc = 0.0;
        const int samples = 1000000;
        for (int i = 0; i < samples; ++i) {
            Vec xi(m);
            for (Index j = 0; j < m; ++j) {
                xi(j) = nd(draw);
            }
            acc += pt.quadratic(mean + noise * xi);
        }
        CHECK(std::abs(acc / samples / analytic - 1.0) < 0.01);
    }
}

TEST_CASE("linearize rejects nonlinear evaluators")
{
    SideSystem side = make_cps(kScalar, 0.1);
    side.f = [](const Vec& x, double) { return Vec(x.array().square()); };
    try {
        (void)linearize(side);
        FAIL("expected NotLinear");
    } catch (const NotLinear& e) {
        CHECK(std::string(e.what()).find("f") != std::string::npos);
    }
    SideSystem timed = make_cps(kScalar, 0.1);
    timed.f = [](const Vec& x, double t) { return Vec((1.0 + t) * x); };
    CHECK_THROWS_AS((void)linearize(timed), NotLinear);
}

TEST_CASE("linearize recovers the CPS coefficients")
{
    Mat f(2, 2);
    f << -1, 2, 0, -3;
    const Mat g = Mat::Identity(2, 2) * 0.5;
    const double dt = 0.2;
    const LinearSide lin = linearize(make_cps(LinearSde(f, {g}), dt));
    CHECK(lin.f.isApprox(f, 1e-12));
    CHECK(lin.fy_x.isApprox(f, 1e-12));
    CHECK(lin.fy_y.isZero(1e-12));
    CHECK(lin.h.isZero(0.0));
    CHECK(lin.hy_x.isApprox(-dt * f, 1e-12));
    CHECK(lin.hy_y.isApprox(dt * f, 1e-12));
    REQUIRE(lin.ky_x.size() == 1);
    CHECK(lin.ky_x[0].isApprox(-std::sqrt(dt) * g, 1e-12));
}

TEST_CASE("check_dwell_window: table")
{
    const double upper = std::log(4.0) / 2.0;
    CHECK(check_dwell_window(make_constants(1, 0.5, 2, 0.25, 0.1, 0.5)));
    CHECK_FALSE(check_dwell_window(make_constants(1, 0.5, 2, 0.25, 0.1, 0.7)));
    CHECK_FALSE(check_dwell_window(make_constants(1, 0.5, 2, 0.25, 0.1, upper)));
    CHECK(check_dwell_window(make_constants(1, 0.5, 2, 0.25, 0.1, upper - 1e-9)));
    for (double bt2 : {1.0, 1.5}) {
        for (double over : {1e-6, 0.1, 2.0}) {
            CHECK_FALSE(check_dwell_window(make_constants(1, 0.5, 2, bt2, over / 2, over)));
        }
    }
    // the lower bound ln β/α is positive once β > 1
    CHECK_FALSE(check_dwell_window(make_constants(1, std::exp(0.2), 2, 0.25, 0.2, 0.3)));
    CHECK(check_dwell_window(make_constants(1, std::exp(0.2), 2, 0.25, 0.2 + 1e-9, 0.3)));
    CHECK_FALSE(check_dwell_window(make_constants(1, 0.5, 2, 0.25, 0.5, 0.4)));
    CHECK_FALSE(check_dwell_window(make_constants(0, 0.5, 2, 0.25, 0.1, 0.5)));
}

TEST_CASE("check_impulsive_stabilization: table")
{
    CHECK(check_impulsive_stabilization(make_constants(1, 0.5, 2, 0.25, 0.5, 0.5)));
    CHECK_FALSE(check_impulsive_stabilization(make_constants(1, 0.5, 2, 0.25, 0.7, 0.7)));
    CHECK_FALSE(check_impulsive_stabilization(make_constants(1, 0.5, 2, 0.25, 0.1, std::log(2.0))));
    CHECK(check_impulsive_stabilization(make_constants(1, 0.5, 2, 0.25, 0.1, std::log(2.0) - 1e-9)));
    for (double beta : {1.0, 2.0}) {
        for (double over : {1e-6, 0.1}) {
            CHECK_FALSE(check_impulsive_stabilization(make_constants(1, beta, 2, 0.25, over, over)));
        }
    }
    // the y bound can be the binding one
    CHECK_FALSE(check_impulsive_stabilization(make_constants(1, 0.1, 2, 0.25, 0.7, 0.7)));
}

TEST_CASE("check_cps_stepsize: scalar cases")
{
    const SymMat one = SymMat::scalar(1.0);
    for (double dt : {0.01, 0.1, 0.2, 0.4}) {
        const auto r = check_cps_stepsize(kScalar, one, dt);
        CHECK(r.pass);
        CHECK(r.bound > dt);
        CHECK(r.constants.beta_tilde_2 < 1.0);
    }
    for (double dt : {0.5, 0.8}) {
        const auto r = check_cps_stepsize(kScalar, one, dt);
        CHECK_FALSE(r.pass);
    }
    CHECK(check_cps_stepsize(LinearSde::scalar(-1.0, 0.0), one, 1e-4).pass);
}

TEST_CASE("to_text reports")
{
    const auto cert = cp_lyapunov_feasible(kScalar, 0.4);
    const std::string s = to_text(cert);
    CHECK(s.find("verdict: feasible") != std::string::npos);
    CHECK(s.find("dt_bar: 0.4") != std::string::npos);
    CHECK(s.find("P:") != std::string::npos);
    const auto c = quadratic_condition_constants(make_cps(kScalar, 0.4), SymMat::scalar(1.0), SymMat::scalar(1.0));
    CHECK(to_text(c).find("alpha: 7") != std::string::npos);
}
