#include "sidekit/noise.hpp"

#include "sidekit/errors.hpp"

#include <boost/math/special_functions/erf.hpp>

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace sidekit {

namespace {

constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
constexpr std::uint32_t kPhiloxW0 = 0x9E3779B9u;
constexpr std::uint32_t kPhiloxW1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) noexcept
{
    const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
    hi = static_cast<std::uint32_t>(p >> 32);
    lo = static_cast<std::uint32_t>(p);
}

inline Philox4x32Counter philox_round(const Philox4x32Counter& c, const Philox4x32Key& k) noexcept
{
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kPhiloxM0, c[0], hi0, lo0);
    mulhilo(kPhiloxM1, c[2], hi1, lo1);
    return {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
}

constexpr double kTwoPow53Inv = 1.0 / 9007199254740992.0;

} // namespace

Philox4x32Counter philox4x32(Philox4x32Counter ctr, Philox4x32Key key) noexcept
{
    for (int r = 0; r < 10; ++r) {
        if (r > 0) {
            key[0] += kPhiloxW0;
            key[1] += kPhiloxW1;
        }
        ctr = philox_round(ctr, key);
    }
    return ctr;
}

double inverse_normal_cdf(double u)
{
    if (!(u > 0.0 && u < 1.0)) {
        throw std::domain_error("inverse_normal_cdf: argument outside (0, 1)");
    }
    return -std::sqrt(2.0) * boost::math::erfc_inv(2.0 * u);
}

NoisePlan::NoisePlan(std::uint64_t seed, std::uint64_t trajectory, Index noise_dim, double delta,
                     double horizon)
    : seed_(seed), trajectory_(trajectory), m_(noise_dim), delta_(delta), horizon_(horizon),
      sqrt_delta_(std::sqrt(delta))
{
    if (!(delta > 0.0) || !std::isfinite(delta)) {
        throw std::invalid_argument("NoisePlan: delta must be finite and positive");
    }
    if (!(horizon > 0.0) || !std::isfinite(horizon)) {
        throw std::invalid_argument("NoisePlan: horizon must be finite and positive");
    }
    if (noise_dim < 0 || noise_dim >= (Index{1} << 24)) {
        throw std::invalid_argument("NoisePlan: noise dimension out of range");
    }
    if (trajectory > 0xffffffffull) {
        throw std::invalid_argument("NoisePlan: trajectory index exceeds 32 bits");
    }
}

NoisePlan NoisePlan::with_trajectory(std::uint64_t trajectory) const
{
    return NoisePlan(seed_, trajectory, m_, delta_, horizon_);
}

double NoisePlan::standard_normal(Stream stream, Index dim, std::uint64_t slot) const
{
    // counter layout: slot (64 bits) | trajectory (32) | stream (8) : dim (24)
    const Philox4x32Counter ctr{
        static_cast<std::uint32_t>(slot),
        static_cast<std::uint32_t>(slot >> 32),
        static_cast<std::uint32_t>(trajectory_),
        (static_cast<std::uint32_t>(stream) << 24) | static_cast<std::uint32_t>(dim),
    };
    const Philox4x32Key key{static_cast<std::uint32_t>(seed_),
                            static_cast<std::uint32_t>(seed_ >> 32)};
    const auto out = philox4x32(ctr, key);
    const std::uint64_t bits = ((static_cast<std::uint64_t>(out[0]) << 32) | out[1]) >> 11;
    const double u = (static_cast<double>(bits) + 0.5) * kTwoPow53Inv;
    return inverse_normal_cdf(u);
}

double NoisePlan::stepsize(int level) const
{
    if (level < 0 || level > 60) {
        throw GridMismatch("NoisePlan: level out of range");
    }
    return std::ldexp(delta_, level);
}

std::size_t NoisePlan::steps(int level) const
{
    const double ratio = horizon_ / stepsize(level);
    const double rounded = std::round(ratio);
    if (rounded < 1.0 || std::abs(ratio - rounded) > 1e-9 * std::max(1.0, ratio)) {
        std::ostringstream os;
        os << "NoisePlan: level " << level << " stepsize " << stepsize(level)
           << " does not divide the horizon " << horizon_;
        throw GridMismatch(os.str());
    }
    return static_cast<std::size_t>(rounded);
}

double NoisePlan::increment_component(int level, Index dim, std::size_t k) const
{
    if (level == 0) {
        return sqrt_delta_ * standard_normal(Stream::Brownian, dim, k);
    }
    return increment_component(level - 1, dim, 2 * k) + increment_component(level - 1, dim, 2 * k + 1);
}

Vec NoisePlan::increment(int level, std::size_t k) const
{
    if (k >= steps(level)) {
        throw OutOfRange("NoisePlan::increment: index beyond the horizon");
    }
    Vec out(m_);
    for (Index j = 0; j < m_; ++j) {
        out(j) = increment_component(level, j, k);
    }
    return out;
}

std::vector<Vec> NoisePlan::increments(int level) const
{
    const std::size_t n = steps(level);
    // build level by level so each finer increment is drawn once
    std::vector<Vec> cur(steps(0), Vec(m_));
    for (std::size_t k = 0; k < cur.size(); ++k) {
        for (Index j = 0; j < m_; ++j) {
            cur[k](j) = sqrt_delta_ * standard_normal(Stream::Brownian, j, k);
        }
    }
    for (int l = 1; l <= level; ++l) {
        std::vector<Vec> next(cur.size() / 2);
        for (std::size_t k = 0; k < next.size(); ++k) {
            next[k] = cur[2 * k] + cur[2 * k + 1];
        }
        cur = std::move(next);
    }
    cur.resize(n);
    return cur;
}

Vec NoisePlan::xi(std::size_t k) const
{
    if (k < 1) {
        throw std::invalid_argument("NoisePlan::xi: impulse index starts at 1");
    }
    Vec out(m_);
    for (Index j = 0; j < m_; ++j) {
        out(j) = standard_normal(Stream::Impulse, j, k);
    }
    return out;
}

std::vector<Vec> brownian_path(const NoisePlan& plan, int level)
{
    const auto inc = plan.increments(level);
    std::vector<Vec> path;
    path.reserve(inc.size() + 1);
    path.push_back(Vec::Zero(plan.noise_dim()));
    for (const auto& d : inc) {
        path.push_back(path.back() + d);
    }
    return path;
}

} // namespace sidekit
