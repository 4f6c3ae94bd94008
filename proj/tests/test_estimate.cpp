#include "sidekit/errors.hpp"
#include "sidekit/estimate.hpp"
#include "sidekit/stability.hpp"

#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

using namespace sidekit;

namespace {

const Vec kOne = Vec::Ones(1);

std::vector<double> level_dts(int lo, int hi)
{
    std::vector<double> out;
    for (int l = lo; l <= hi; ++l) {
        out.push_back(std::ldexp(1.0, -l));
    }
    return out;
}

std::size_t count_lines(const std::string& s)
{
    std::size_t n = 0;
    for (char c : s) {
        n += c == '\n';
    }
    return n;
}

} // namespace

TEST_CASE("ols-based exponents on deterministic decay")
{
    EnsembleOptions opts;
    opts.dt = 1e-2;
    opts.integration = Integration::Exact;
    const LinearSde det = LinearSde::scalar(-1.0, 0.0);
    const auto m = moment_exponent(det, kOne, 2.0, 100, 4.0, opts);
    CHECK(m.slope == doctest::Approx(-2.0).epsilon(1e-12));
    CHECK(m.intercept == doctest::Approx(0.0).scale(1.0).epsilon(1e-10));
    CHECK(m.stderr_slope < 1e-10);
    CHECK(m.t_a == doctest::Approx(2.0));
    CHECK(m.t_b == doctest::Approx(4.0));
    CHECK(m.points >= 10);
    CHECK_FALSE(m.degenerate);

    const auto a = as_exponent(det, kOne, 100, 4.0, opts);
    CHECK(a.slope == doctest::Approx(-1.0).epsilon(1e-12));
    CHECK(a.stderr_slope == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
}

TEST_CASE("exponent estimators: preconditions and zero paths")
{
    EnsembleOptions opts;
    opts.dt = 0.1;
    const LinearSde det = LinearSde::scalar(-1.0, 0.0);
    CHECK_THROWS_AS((void)moment_exponent(det, kOne, 0.0, 100, 2.0, opts), std::invalid_argument);
    CHECK_THROWS_AS((void)moment_exponent(det, kOne, 2.0, 50, 2.0, opts), std::invalid_argument);
    CHECK_THROWS_AS((void)as_exponent(det, kOne, 99, 2.0, opts), std::invalid_argument);

    // Euler with λΔt = −1 hits exact zero after one step
    EnsembleOptions hard = opts;
    hard.dt = 1.0;
    hard.record_points = 21;
    const LinearSde zero_after_one = LinearSde::scalar(-1.0, 0.0);
    const auto m = moment_exponent(zero_after_one, kOne, 2.0, 100, 20.0, hard);
    CHECK(m.degenerate);
    CHECK(m.slope == -std::numeric_limits<double>::infinity());
    const auto a = as_exponent(zero_after_one, kOne, 100, 20.0, hard);
    CHECK(a.zero_paths == 100);
    CHECK(a.degenerate);
}

TEST_CASE("moment exponents of geometric Brownian motion")
{
    EnsembleOptions opts;
    opts.dt = 1e-3;
    opts.seed = 31;
    const Ensemble ens = simulate_ensemble(LinearSde::scalar(-1.0, 0.5), kOne, 5.0, 10000, opts);
    CHECK(ens.trajectories() == 10000);
    const auto p2 = moment_exponent(ens, 2.0);
    const auto p1 = moment_exponent(ens, 1.0);
    CHECK(std::abs(p2.slope - (-1.75)) < 0.1);
    CHECK(std::abs(p1.slope - (-1.0)) < 0.1);
    const auto as = as_exponent(ens);
    CHECK(std::abs(as.slope - (-1.125)) < 4 * as.stderr_slope + 0.01);

    // ln|x|² has variance 4μ²t: at μ = 1 the sample mean of 10⁴ lognormal
    // draws is only usable on a short horizon, and then only to about ±0.3
    const Ensemble heavy = simulate_ensemble(LinearSde::scalar(-2.0, 1.0), kOne, 1.0, 10000, opts);
    CHECK(std::abs(moment_exponent(heavy, 2.0).slope - (-3.0)) < 0.3);
}

TEST_CASE("exact and Euler ensembles share the Brownian grid")
{
    EnsembleOptions em;
    em.dt = 1e-3;
    em.seed = 5;
    EnsembleOptions ex = em;
    ex.integration = Integration::Exact;
    const auto a = moment_exponent(LinearSde::scalar(-1.0, 0.5), kOne, 2.0, 4000, 2.0, ex);
    CHECK(std::abs(a.slope - (-1.75)) < 0.15);
    CHECK_THROWS_AS((void)simulate_ensemble(LinearSde(-Mat::Identity(2, 2), {}), Vec::Ones(2), 1.0, 100, ex),
                    std::invalid_argument);
}

TEST_CASE("almost-sure exponent below a positive second-moment exponent")
{
    EnsembleOptions opts;
    opts.dt = 1e-3;
    opts.seed = 20261014;
    const auto a = as_exponent(LinearSde::scalar(0.1, 1.0), kOne, 2000, 5.0, opts);
    CHECK(std::abs(a.slope - (-0.4)) < 0.1);
    CHECK_FALSE(scalar_max_stepsize(0.1, 1.0).has_value());
}

TEST_CASE("certified systems have negative almost-sure exponent")
{
    std::mt19937_64 rng(3);
    std::normal_distribution<double> nd(0.0, 0.5);
    for (int i = 0; i < 4; ++i) {
        const Index n = 1 + i % 3;
        Mat f = Mat::Zero(n, n);
        Mat g = Mat::Zero(n, n);
        for (Index r = 0; r < n; ++r) {
            for (Index c = 0; c < n; ++c) {
                f(r, c) = nd(rng);
                g(r, c) = nd(rng);
            }
        }
        const double gn = g.operatorNorm();
        f -= (f.operatorNorm() + 0.5 * gn * gn + 0.25) * Mat::Identity(n, n);
        const LinearSde s(f, {g});
        REQUIRE(lyapunov_ito_feasible(s).feasible());
        EnsembleOptions opts;
        opts.dt = 1e-2;
        opts.seed = 100 + static_cast<std::uint64_t>(i);
        const auto a = as_exponent(s, Vec::Ones(n), 200, 5.0, opts);
        CHECK(a.slope + 3 * a.stderr_slope < 0.0);
    }
}

TEST_CASE("ensembles are bitwise reproducible across runs and thread counts")
{
    EnsembleOptions opts;
    opts.dt = 1e-2;
    opts.seed = 44;
    opts.threads = 1;
    Mat f(2, 2);
    f << -1, 0.3, 0.1, -0.7;
    const LinearSde s(f, {0.4 * Mat::Identity(2, 2), Mat::Constant(2, 2, 0.1)});
    const Ensemble a = simulate_ensemble(s, Vec::Ones(2), 2.0, 300, opts);
    const Ensemble b = simulate_ensemble(s, Vec::Ones(2), 2.0, 300, opts);
    opts.threads = 3;
    const Ensemble c = simulate_ensemble(s, Vec::Ones(2), 2.0, 300, opts);
    CHECK(a.log_abs == b.log_abs);
    CHECK(a.log_abs == c.log_abs);
    const auto ma = moment_exponent(a, 2.0);
    const auto mc = moment_exponent(c, 2.0);
    CHECK(ma.slope == mc.slope);
    CHECK(ma.stderr_slope == mc.stderr_slope);

    StrongErrorOptions so;
    so.threads = 1;
    const auto sa = strong_error_sup(LinearSde::scalar(-1, 0.5), kOne, 1.0, level_dts(3, 5), 100, 8, so);
    so.threads = 4;
    const auto sb = strong_error_sup(LinearSde::scalar(-1, 0.5), kOne, 1.0, level_dts(3, 5), 100, 8, so);
    REQUIRE(sa.rows.size() == sb.rows.size());
    for (std::size_t i = 0; i < sa.rows.size(); ++i) {
        CHECK(sa.rows[i].error == sb.rows[i].error);
    }
    CHECK(sa.slope == sb.slope);
}

TEST_CASE("sample_times keeps the horizon")
{
    const auto t = sample_times(0.1, 10, 3);
    REQUIRE(t.size() == 5);
    CHECK(t[1] == doctest::Approx(0.3));
    CHECK(t.back() == doctest::Approx(1.0));
    CHECK(sample_times(0.5, 4, 1).size() == 5);
}

TEST_CASE("simulate_ensemble: grid errors")
{
    EnsembleOptions opts;
    opts.dt = 0.3;
    CHECK_THROWS_AS((void)simulate_ensemble(LinearSde::scalar(-1, 0), kOne, 1.0, 10, opts), GridMismatch);
    opts.dt = 0.1;
    CHECK_THROWS_AS((void)simulate_ensemble(LinearSde::scalar(-1, 0), kOne, 1.0, 1, opts), std::invalid_argument);
}

TEST_CASE("strong error: deterministic flow has order two in the squared sup")
{
    const auto s = strong_error_sup(LinearSde::scalar(-1.0, 0.0), kOne, 1.0, level_dts(4, 9), 2, 1);
    CHECK_FALSE(s.degenerate);
    CHECK(s.rows.size() == 6);
    CHECK(s.slope == doctest::Approx(2.0).epsilon(0.05));
    CHECK(s.reference_dt == doctest::Approx(std::ldexp(1.0, -11)));
    for (std::size_t i = 1; i < s.rows.size(); ++i) {
        CHECK(s.rows[i].dt < s.rows[i - 1].dt);
        CHECK(s.rows[i].error < s.rows[i - 1].error);
    }
}

TEST_CASE("strong error: the zero system is exact")
{
    const auto s = strong_error_sup(LinearSde::scalar(0.0, 0.0), kOne, 1.0, level_dts(2, 4), 4, 1);
    CHECK(s.degenerate);
    for (const auto& r : s.rows) {
        CHECK(r.error == 0.0);
    }
}

TEST_CASE("strong error: GBM order one")
{
    const auto s = strong_error_sup(LinearSde::scalar(-1.0, 0.5), kOne, 1.0, level_dts(4, 8), 400, 77);
    CHECK(s.slope > 0.7);
    CHECK(s.slope < 1.3);
}

TEST_CASE("strong error: general systems against a fine Euler reference")
{
    Mat f(2, 2);
    f << -1, 0.5, 0, -1;
    const LinearSde s(f, {0.5 * Mat::Identity(2, 2)});
    const auto study = strong_error_sup(s, Vec::Ones(2), 1.0, level_dts(3, 7), 200, 5);
    CHECK(study.rows.size() == 5);
    CHECK(study.slope > 0.7);
    CHECK(study.slope < 1.4);
}

TEST_CASE("strong error: grid mismatch")
{
    CHECK_THROWS_AS((void)strong_error_sup(LinearSde::scalar(-1, 0.5), kOne, 1.0, {0.1, 0.3}, 10, 1),
                    GridMismatch);
    CHECK_THROWS_AS((void)strong_error_sup(LinearSde::scalar(-1, 0.5), kOne, 1.0, {0.3}, 10, 1), GridMismatch);
}

TEST_CASE("scalar_onestep_factor: examples")
{
    CHECK(scalar_onestep_factor(-4.0, 1.0, 0.4) == doctest::Approx(0.76).epsilon(1e-15));
    CHECK(scalar_onestep_factor(-4.0, 1.0, 0.4375) == 1.0);
    for (double dt : {0.01, 1.0, 10.0}) {
        CHECK(scalar_onestep_factor(0.0, 0.0, dt) == 1.0);
    }
}

TEST_CASE("discrete certificate agrees with the one-step factor on a grid")
{
    int cases = 0;
    for (double lambda : {-4.0, -2.0, -1.0, -0.5, 0.5}) {
        for (double mu : {0.0, 1.0}) {
            for (double dt : {0.05, 0.2, 0.4375, 0.8, 1.5}) {
                const bool stable = discrete_ms_stable(LinearSde::scalar(lambda, mu), dt).feasible();
                CHECK(stable == (scalar_onestep_factor(lambda, mu, dt) < 1.0));
                ++cases;
            }
        }
    }
    CHECK(cases == 50);
}

TEST_CASE("csv writers")
{
    EnsembleOptions opts;
    opts.dt = 1e-2;
    opts.integration = Integration::Exact;
    const auto m = moment_exponent(LinearSde::scalar(-1.0, 0.0), kOne, 2.0, 100, 2.0, opts);
    std::ostringstream a;
    write_exponent_csv(a, m);
    CHECK(a.str().rfind("t,log_mean_moment\n", 0) == 0);
    CHECK(count_lines(a.str()) == 1 + m.fit_t.size());

    const auto s = strong_error_sup(LinearSde::scalar(-1.0, 0.0), kOne, 1.0, level_dts(2, 4), 2, 1);
    std::ostringstream b;
    write_errors_csv(b, s);
    CHECK(b.str().rfind("level,dt,error,stderr\n", 0) == 0);
    CHECK(count_lines(b.str()) == 4);
    CHECK(to_text(s).find("slope") != std::string::npos);
    CHECK(to_text(m).find("exponent: -2") != std::string::npos);
}
