#pragma once

// Mean-square stability certificates for linear SDEs and their
// Euler–Maruyama discretizations, and exact condition checks for quadratic
// Lyapunov functions on linear stochastic impulsive systems.
//
// Every strict inequality is tested with an absolute slack of kStrictSlack,
// so boundary cases (one-step factor exactly 1, zero margin) are rejected.

#include "sidekit/matrix.hpp"
#include "sidekit/models.hpp"

#include <optional>
#include <string>
#include <vector>

namespace sidekit {

inline constexpr double kStrictSlack = 1e-12;

enum class Verdict {
    Feasible,
    Infeasible,
};

struct StabilityCertificate {
    Verdict verdict = Verdict::Infeasible;
    std::optional<SymMat> p;
    /// decay_rate(LHS(P), P) when P passed the PD gate, NaN otherwise.
    double margin = 0.0;
    std::optional<double> dt_bar;
    /// Stepsize of a discrete certificate.
    std::optional<double> dt;
    std::string kind;
    std::string note;

    [[nodiscard]] bool feasible() const noexcept { return verdict == Verdict::Feasible; }
};

/// FᵀP + PF + ΣGᵀPG = −I, then P ≻ 0.
[[nodiscard]] StabilityCertificate lyapunov_ito_feasible(const LinearSde& sde);
/// FᵀP + PF + ΣGᵀPG + Δt̄·FᵀPF = −I, then P ≻ 0. Feasibility also certifies the
/// Euler–Maruyama scheme and the coupled CPS for every Δt ∈ (0, Δt̄].
[[nodiscard]] StabilityCertificate cp_lyapunov_feasible(const LinearSde& sde, double dt_bar);
/// (I+ΔtF)ᵀP(I+ΔtF) + ΔtΣGᵀPG − P = −I, then P ≻ 0.
[[nodiscard]] StabilityCertificate discrete_ms_stable(const LinearSde& sde, double dt);

struct StepsizeBound {
    bool feasible = false;
    double dt_bar = 0.0;
    /// True when the search stopped at the 2^20 cap without finding infeasibility.
    bool capped = false;
};

/// Supremum of the Δt̄ for which cp_lyapunov_feasible holds, to within tol.
/// Bracket [0, 1], doubled until infeasible (cap 2^20), then bisected.
[[nodiscard]] StepsizeBound max_stepsize(const LinearSde& sde, double tol = 1e-9);

/// −(2λ + μ²)/λ² when 2λ + μ² < 0, nothing otherwise.
[[nodiscard]] std::optional<double> scalar_max_stepsize(double lambda, double mu);

/// Whether the continuous x-part must decay (α in ℒV ≤ −αV) or may grow
/// (α in ℒV ≤ αV, compensated by stabilizing impulses).
enum class ContinuousRole {
    Decay,
    Growth,
};

/// The quadratic form xᵀ·xx·x + 2xᵀ·xy·y + yᵀ·yy·y.
struct QuadraticBlocks {
    Mat xx;
    Mat xy;
    Mat yy;

    [[nodiscard]] double operator()(const Vec& x, const Vec& y) const
    {
        return x.dot(xx * x) + 2.0 * x.dot(xy * y) + y.dot(yy * y);
    }
};

/// Coefficient matrices of a linear, time-invariant stochastic impulsive
/// system: dx = Fx dt + ΣGⱼx dBⱼ, dy = (F_x x + F_y y)dt + Σ(G_{x,j}x + G_{y,j}y)dBⱼ,
/// jumps Δ = Hx + ΣKⱼxξⱼ and Δ̃ = H_x x + H_y y + Σ(K_{x,j}x + K_{y,j}y)ξⱼ.
struct LinearSide {
    Mat f;
    std::vector<Mat> g;
    Mat fy_x, fy_y;
    std::vector<Mat> gy_x, gy_y;
    Mat h;
    std::vector<Mat> k;
    Mat hy_x, hy_y;
    std::vector<Mat> ky_x, ky_y;
};

/// Extracts the coefficients by basis probing and verifies linearity and time
/// invariance on random probes; throws NotLinear naming the evaluator.
[[nodiscard]] LinearSide linearize(const SideSystem& side);

struct ConditionConstants {
    double alpha = 0.0;
    double alpha_tilde_1 = 0.0;
    double alpha_tilde_2 = 0.0;
    double beta = 0.0;
    double beta_tilde_1 = 0.0;
    double beta_tilde_2 = 0.0;
    double dt_under = 0.0;
    double dt_over = 0.0;
    /// Split parameter s used for the cross terms.
    double split = 1.0;
    /// ℒ̃Ṽ(x, y) and E Ṽ(y + Δ̃(x, y)) as quadratic forms.
    QuadraticBlocks generator_y;
    QuadraticBlocks impulse_y;
};

/// Exact constants for V = xᵀPx, Ṽ = yᵀP̃y on a linear system.
///
/// α and β come from the P-pencil of the x generator and of the expected
/// post-jump V. The y-side forms have a cross term 2xᵀWy, bounded with
/// κ = weighted_cross_norm(W, P, P̃) as 2xᵀWy ≤ κ(s·V(x) + Ṽ(y)/s). Hence
/// α̃₁ = λ(Ω_xx; P) + sκ, α̃₂ = λ(Ω_yy; P̃) + κ/s (floored at 1e−12), and the
/// same construction on the jump gives β̃₁, β̃₂.
[[nodiscard]] ConditionConstants quadratic_condition_constants(
    const SideSystem& side, const SymMat& p, const SymMat& p_tilde, double split = 1.0,
    ContinuousRole role = ContinuousRole::Decay);

/// Re-evaluates the split-dependent constants for another s.
[[nodiscard]] ConditionConstants with_split(const ConditionConstants& c, const SymMat& p,
                                            const SymMat& p_tilde, double split);

/// E[(y + Δ̃)ᵀP̃(y + Δ̃)] for standard-normal ξ, from the evaluators directly:
/// mᵀP̃m + Σⱼ cⱼᵀP̃cⱼ with m = y + h̃_f and cⱼ the columns of h̃_g.
[[nodiscard]] double expected_post_impulse_y(const SideSystem& side, const SymMat& p_tilde,
                                             const Vec& x, const Vec& y, std::size_t k);

/// ln β/α < Δt_under ≤ Δt_over < −ln β̃₂/α̃₂, with α the decay rate.
[[nodiscard]] bool check_dwell_window(const ConditionConstants& c);

/// Δt_over < min(−ln β/α, −ln β̃₂/α̃₂), with α the growth rate.
[[nodiscard]] bool check_impulsive_stabilization(const ConditionConstants& c);

struct CpsStepsizeCheck {
    bool pass = false;
    ConditionConstants constants;
    /// −ln β̃₂/α̃₂ at the chosen split.
    double bound = 0.0;
};

/// Builds the CPS of `sde` at stepsize dt with V = Ṽ = xᵀPx and tests
/// Δt < −ln β̃₂/α̃₂ (together with α > 0). The split s is searched over
/// 2^−10..2^20 and the largest bound kept.
[[nodiscard]] CpsStepsizeCheck check_cps_stepsize(const LinearSde& sde, const SymMat& p, double dt);

struct DecayCheck {
    bool pass = false;
    double margin = 0.0;
    /// min(margin, 0.99/Δt̄), so that ᾱΔt̄ < 1.
    double alpha_bar = 0.0;
};

/// ℒV + Δt̄·V(Fx) ≤ −ᾱV for V = xᵀPx, via decay_rate on
/// FᵀP + PF + ΣGᵀPG + Δt̄FᵀPF.
[[nodiscard]] DecayCheck check_cp_decay(const LinearSde& sde, const SymMat& p, double dt_bar);

struct DecreaseCheck {
    bool pass = false;
    double c_bar = 0.0;
    /// (1 − c̄)/Δt
    double implied_alpha = 0.0;
};

/// E V(X_{k+1}) ≤ c̄·V(X_k) for the Euler–Maruyama step: c̄ is the P-pencil
/// maximum of (I+ΔtF)ᵀP(I+ΔtF) + ΔtΣGᵀPG; pass iff c̄ < 1.
[[nodiscard]] DecreaseCheck check_discrete_decrease(const LinearSde& sde, const SymMat& p,
                                                    double dt);

[[nodiscard]] std::string to_text(const StabilityCertificate& cert);
[[nodiscard]] std::string to_text(const ConditionConstants& c);

} // namespace sidekit
