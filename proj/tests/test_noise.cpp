#include "sidekit/errors.hpp"
#include "sidekit/noise.hpp"

#include <doctest.h>

#include <cmath>

using namespace sidekit;

// Published Philox4x32-10 known-answer vectors.
TEST_CASE("philox4x32: known-answer vectors")
{
    CHECK(philox4x32({0, 0, 0, 0}, {0, 0}) ==
          Philox4x32Counter{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u});
    CHECK(philox4x32({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu}, {0xffffffffu, 0xffffffffu}) ==
          Philox4x32Counter{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu});
    CHECK(philox4x32({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}, {0xa4093822u, 0x299f31d0u}) ==
          Philox4x32Counter{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u});
}

TEST_CASE("inverse_normal_cdf: reference quantiles")
{
    CHECK(inverse_normal_cdf(0.5) == 0.0);
    CHECK(inverse_normal_cdf(0.975) == doctest::Approx(1.959963984540054).epsilon(1e-14));
    CHECK(inverse_normal_cdf(0.025) == doctest::Approx(-1.959963984540054).epsilon(1e-14));
    CHECK(inverse_normal_cdf(0.8413447460685429) == doctest::Approx(1.0).epsilon(1e-13));
    CHECK(inverse_normal_cdf(1e-300) == doctest::Approx(-37.0471).epsilon(1e-5));
    CHECK_THROWS_AS((void)inverse_normal_cdf(0.0), std::domain_error);
    CHECK_THROWS_AS((void)inverse_normal_cdf(1.0), std::domain_error);
}

TEST_CASE("inverse_normal_cdf is monotone")
{
    double prev = -1e300;
    for (int i = 1; i < 1000; ++i) {
        const double v = inverse_normal_cdf(i / 1000.0);
        CHECK(v > prev);
        prev = v;
    }
}

TEST_CASE("NoisePlan: equal parameters give bitwise-equal draws")
{
    const NoisePlan a(42, 7, 2, 0.01, 1.0);
    const NoisePlan b(42, 7, 2, 0.01, 1.0);
    for (std::size_t k = 0; k < 100; ++k) {
        CHECK(a.increment(0, k) == b.increment(0, k));
    }
    for (std::size_t k = 1; k < 50; ++k) {
        CHECK(a.xi(k) == b.xi(k));
        CHECK(a.xi(k) == a.xi(k));
    }
    const NoisePlan c = a.with_trajectory(8);
    CHECK(c.trajectory() == 8);
    CHECK(c.increment(0, 3) != a.increment(0, 3));
    CHECK(NoisePlan(43, 7, 2, 0.01, 1.0).xi(1) != a.xi(1));
}

TEST_CASE("NoisePlan: level-0 increments are sqrt(delta) times the Brownian stream")
{
    const NoisePlan plan(1, 0, 2, 0.25, 4.0);
    for (std::size_t k = 0; k < 16; ++k) {
        const Vec inc = plan.increment(0, k);
        for (Index j = 0; j < 2; ++j) {
            CHECK(inc(j) == 0.5 * plan.standard_normal(Stream::Brownian, j, k));
        }
    }
}

TEST_CASE("NoisePlan: nesting identity holds exactly")
{
    const NoisePlan plan(9, 3, 2, 1.0 / 64, 1.0);
    for (int level = 0; level < 6; ++level) {
        const auto fine = plan.increments(level);
        const auto coarse = plan.increments(level + 1);
        REQUIRE(coarse.size() * 2 == fine.size());
        for (std::size_t k = 0; k < coarse.size(); ++k) {
            CHECK(coarse[k] == fine[2 * k] + fine[2 * k + 1]);
            CHECK(plan.increment(level + 1, k) == coarse[k]);
        }
    }
}

TEST_CASE("NoisePlan: B(T) telescopes identically across nested levels")
{
    const NoisePlan plan(5, 0, 1, 1.0 / 32, 1.0);
    // 32 = 2^5: every level is a pairwise tree of the level below, so the
    // level-5 single increment equals the full tree sum
    const Vec top = plan.increment(5, 0);
    for (int level = 0; level <= 5; ++level) {
        const auto inc = plan.increments(level);
        std::vector<Vec> s = inc;
        while (s.size() > 1) {
            std::vector<Vec> next;
            for (std::size_t k = 0; k < s.size(); k += 2) {
                next.push_back(s[k] + s[k + 1]);
            }
            s = next;
        }
        CHECK(s.front() == top);
        const auto path = brownian_path(plan, level);
        CHECK(path.front().isZero(0.0));
        CHECK(path.back()(0) == doctest::Approx(top(0)).epsilon(1e-12));
    }
}

TEST_CASE("NoisePlan: grid errors")
{
    const NoisePlan plan(1, 0, 1, 0.1, 1.0);
    CHECK(plan.steps(0) == 10);
    CHECK(plan.steps(1) == 5);
    CHECK_THROWS_AS((void)plan.steps(2), GridMismatch);
    CHECK_THROWS_AS((void)plan.increment(0, 10), OutOfRange);
    CHECK_THROWS_AS((void)plan.xi(0), std::invalid_argument);
    CHECK(plan.stepsize(3) == doctest::Approx(0.8));
    CHECK_THROWS_AS(NoisePlan(1, 0, 1, 0.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(NoisePlan(1, 0, 1, 0.1, -1.0), std::invalid_argument);
    CHECK_THROWS_AS(NoisePlan(1, 1ull << 33, 1, 0.1, 1.0), std::invalid_argument);
}

TEST_CASE("xi: sample mean and variance over 1e5 draws")
{
    const NoisePlan plan(2026, 0, 1, 1.0, 1.0);
    const int n = 100000;
    double s = 0.0;
    double s2 = 0.0;
    for (int k = 1; k <= n; ++k) {
        const double v = plan.xi(static_cast<std::size_t>(k))(0);
        s += v;
        s2 += v * v;
    }
    const double mean = s / n;
    const double var = s2 / n - mean * mean;
    CHECK(std::abs(mean) < 0.02);
    CHECK(std::abs(var - 1.0) < 0.03);
}

TEST_CASE("level-0 increments have variance delta")
{
    const double delta = 1.0 / 1024;
    const NoisePlan plan(17, 4, 1, delta, 64.0);
    const auto inc = plan.increments(0);
    double s2 = 0.0;
    for (const auto& v : inc) {
        s2 += v(0) * v(0);
    }
    const double var = s2 / static_cast<double>(inc.size());
    // 65536 samples: relative standard error of the variance is sqrt(2/N) ≈ 0.0055
    CHECK(std::abs(var / delta - 1.0) < 0.03);
}

TEST_CASE("xi and Brownian streams are uncorrelated")
{
    const NoisePlan plan(123, 0, 1, 1.0, 1e6);
    const int n = 100000;
    double sxy = 0.0;
    double sx = 0.0;
    double sy = 0.0;
    double sxx = 0.0;
    double syy = 0.0;
    for (int k = 1; k <= n; ++k) {
        const double a = plan.standard_normal(Stream::Impulse, 0, static_cast<std::uint64_t>(k));
        const double b = plan.standard_normal(Stream::Brownian, 0, static_cast<std::uint64_t>(k));
        sx += a;
        sy += b;
        sxy += a * b;
        sxx += a * a;
        syy += b * b;
    }
    const double cov = sxy / n - (sx / n) * (sy / n);
    const double corr = cov / std::sqrt((sxx / n - (sx / n) * (sx / n)) * (syy / n - (sy / n) * (sy / n)));
    CHECK(std::abs(corr) < 0.01);
}

TEST_CASE("dimensions draw from separate counters")
{
    const NoisePlan plan(1, 0, 3, 0.5, 1.0);
    const Vec v = plan.xi(1);
    CHECK(v(0) != v(1));
    CHECK(v(1) != v(2));
}
