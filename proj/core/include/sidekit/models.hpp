#pragma once

// System descriptions: linear SDEs, general vector-field SDEs, impulse maps,
// full stochastic impulsive systems (x-part, y-part, jumps at scheduled
// times), and the cyber-physical construction that couples an SDE with its
// Euler–Maruyama discretization through the difference process y = x − X.
//
// Evaluators are user-supplied callables. They must be pure and reentrant:
// descriptions are shared read-only across simulation threads.

#include "sidekit/matrix.hpp"

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace sidekit {

using Drift = std::function<Vec(const Vec& x, double t)>;
/// n×m matrix whose column j multiplies dB_j.
using Diffusion = std::function<Mat(const Vec& x, double t)>;
using CoupledDrift = std::function<Vec(const Vec& x, const Vec& y, double t)>;
using CoupledDiffusion = std::function<Mat(const Vec& x, const Vec& y, double t)>;
using Jump = std::function<Vec(const Vec& x, std::size_t k)>;
using JumpNoise = std::function<Mat(const Vec& x, std::size_t k)>;
using CoupledJump = std::function<Vec(const Vec& x, const Vec& y, std::size_t k)>;
using CoupledJumpNoise = std::function<Mat(const Vec& x, const Vec& y, std::size_t k)>;

/// dx = F x dt + Σⱼ Gⱼ x dBⱼ
struct LinearSde {
    Mat f;
    std::vector<Mat> gs;

    LinearSde(Mat f, std::vector<Mat> gs);

    /// dx = λx dt + μx dB (one noise channel, also when μ = 0).
    [[nodiscard]] static LinearSde scalar(double lambda, double mu);

    [[nodiscard]] Index dim() const noexcept { return f.rows(); }
    [[nodiscard]] Index noise_dim() const noexcept { return static_cast<Index>(gs.size()); }
    [[nodiscard]] bool is_scalar() const noexcept { return dim() == 1 && noise_dim() <= 1; }

    [[nodiscard]] Vec drift(const Vec& x) const { return f * x; }
    [[nodiscard]] Mat diffusion(const Vec& x) const;

    /// max(‖F‖₂, √λ_max(Σ GⱼᵀGⱼ)): a global Lipschitz constant for both fields.
    [[nodiscard]] double lipschitz() const;
};

struct VectorFieldSde {
    Index n = 0;
    Index m = 0;
    Drift drift;
    Diffusion diffusion;
    /// Declared global Lipschitz constant of drift and diffusion.
    double lipschitz = 0.0;

    [[nodiscard]] static VectorFieldSde from_linear(const LinearSde& sde);
};

/// Jump maps applied at impulse time t_k to the left limits (x, y):
///   x ← x + hf(x,k) + hg(x,k)ξ(k),   y ← y + hf_y(x,y,k) + hg_y(x,y,k)ξ(k).
struct ImpulseMaps {
    Jump hf;
    JumpNoise hg;
    CoupledJump hf_y;
    CoupledJumpNoise hg_y;

    /// All four maps identically zero.
    [[nodiscard]] static ImpulseMaps none(Index n, Index q, Index m);
};

/// Strictly increasing impulse times 0 = t_0 < t_1 < ..., generated on demand
/// from a repeating pattern of gaps.
class ImpulseSchedule {
public:
    [[nodiscard]] static ImpulseSchedule equidistant(double dt);
    /// Gaps repeat cyclically: t_{k+1} − t_k = gaps[k mod gaps.size()].
    [[nodiscard]] static ImpulseSchedule cyclic(std::vector<double> gaps);

    [[nodiscard]] double time(std::size_t k) const;
    [[nodiscard]] double gap(std::size_t k) const { return gaps_[k % gaps_.size()]; }
    /// inf of the gaps
    [[nodiscard]] double min_gap() const noexcept { return min_gap_; }
    /// sup of the gaps
    [[nodiscard]] double max_gap() const noexcept { return max_gap_; }
    [[nodiscard]] bool is_equidistant() const noexcept { return gaps_.size() == 1; }

private:
    explicit ImpulseSchedule(std::vector<double> gaps);

    std::vector<double> gaps_;
    std::vector<double> prefix_;
    double period_ = 0.0;
    double min_gap_ = 0.0;
    double max_gap_ = 0.0;
};

/// General stochastic impulsive system in decomposed form.
struct SideSystem {
    Index n = 0;
    Index q = 0;
    Index m = 0;
    Drift f;
    Diffusion g;
    CoupledDrift f_y;
    CoupledDiffusion g_y;
    ImpulseMaps impulses;
    ImpulseSchedule schedule = ImpulseSchedule::equidistant(1.0);
    double lipschitz_x = 0.0;
    double lipschitz_y = 0.0;
};

/// The same system for the stacked state z = (x, y), with x = Cz, y = Dz.
struct CompactForm {
    Index n = 0;
    Index q = 0;
    Index m = 0;
    std::function<Vec(const Vec& z, double t)> drift;
    std::function<Mat(const Vec& z, double t)> diffusion;
    std::function<Vec(const Vec& z, std::size_t k)> jump;
    std::function<Mat(const Vec& z, std::size_t k)> jump_noise;

    [[nodiscard]] Index dim() const noexcept { return n + q; }
    [[nodiscard]] Vec select_x(const Vec& z) const { return z.head(n); }
    [[nodiscard]] Vec select_y(const Vec& z) const { return z.tail(q); }
};

[[nodiscard]] CompactForm compact_form(const SideSystem& side);

/// An SDE together with the stepsize of its Euler–Maruyama discretization.
struct CpsSystem {
    VectorFieldSde base;
    double dt;

    CpsSystem(VectorFieldSde base, double dt);
};

/// Builds the coupled physical/cyber system: q = n, f_y = f(x), g_y = g(x),
/// no x-jumps, y-jumps hf_y = −f(x−y)Δt and hg_y = −g(x−y)√Δt at t_k = kΔt.
[[nodiscard]] SideSystem make_cps(const VectorFieldSde& sde, double dt);
[[nodiscard]] SideSystem make_cps(const LinearSde& sde, double dt);
[[nodiscard]] SideSystem make_cps(const CpsSystem& cps);

/// V(x) = xᵀPx with P ≻ 0; c1 and c2 are the extreme eigenvalues of P.
class QuadraticLyapunov {
public:
    /// Throws NotPositiveDefinite unless p passes the PD gate.
    explicit QuadraticLyapunov(SymMat p);

    [[nodiscard]] double operator()(const Vec& x) const { return p_.quadratic(x); }
    [[nodiscard]] const SymMat& p() const noexcept { return p_; }
    [[nodiscard]] double c1() const noexcept { return c1_; }
    [[nodiscard]] double c2() const noexcept { return c2_; }

private:
    SymMat p_;
    double c1_ = 0.0;
    double c2_ = 0.0;
};

struct ValidationOptions {
    double box = 10.0;
    std::size_t pairs = 1000;
    /// Relative slack on the declared Lipschitz constant.
    double slack = 1e-9;
    double origin_tol = 1e-12;
    std::vector<double> probe_times{0.0, 1.0, 10.0};
    std::vector<std::size_t> probe_indices{1, 2, 10};
    std::uint64_t seed = 0x5eed;
};

struct Violation {
    std::string evaluator;
    std::string kind; ///< "lipschitz" or "origin"
    Vec a;
    Vec b;
    double value = 0.0;
    double limit = 0.0;
};

struct ValidationReport {
    /// Largest observed |h(a) − h(b)| / |a − b| per evaluator.
    std::vector<std::pair<std::string, double>> max_ratio;
    /// Largest observed |h(0)| over every evaluator and probe.
    double max_origin_value = 0.0;
    std::vector<Violation> violations;

    [[nodiscard]] bool ok() const noexcept { return violations.empty(); }
    [[nodiscard]] std::string summary() const;
};

/// Sample-based spot check of the equilibrium-at-origin and global Lipschitz
/// hypotheses on [−box, box]. Never throws on a failed check.
[[nodiscard]] ValidationReport inspect(const VectorFieldSde& sde, const ValidationOptions& opts = {});
[[nodiscard]] ValidationReport inspect(const SideSystem& side, const ValidationOptions& opts = {});
[[nodiscard]] ValidationReport inspect(const LinearSde& sde, const ValidationOptions& opts = {});

/// As inspect(), but throws ValidationFailed naming the first violations.
void validate(const VectorFieldSde& sde, const ValidationOptions& opts = {});
void validate(const SideSystem& side, const ValidationOptions& opts = {});
void validate(const LinearSde& sde, const ValidationOptions& opts = {});

} // namespace sidekit
