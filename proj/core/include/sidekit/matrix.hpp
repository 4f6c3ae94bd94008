#pragma once

// Dense real matrix kernels: Kronecker products, Lyapunov-type linear
// solvers, and the positive-definiteness / pencil-eigenvalue gates the
// stability certificates are built on. Storage is Eigen's dense column-major
// MatrixXd; systems handled here are small (n up to a few tens).

#include <Eigen/Dense>

#include <vector>

namespace sidekit {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using Index = Eigen::Index;

/// A finite, exactly symmetric square matrix.
class SymMat {
public:
    SymMat() = default;

    /// Throws std::invalid_argument unless `m` is square, finite and
    /// bitwise symmetric.
    explicit SymMat(Mat m);

    /// (m + mᵀ)/2, which is exactly symmetric in floating point.
    [[nodiscard]] static SymMat symmetrize(const Mat& m);
    [[nodiscard]] static SymMat identity(Index n);
    [[nodiscard]] static SymMat scalar(double value);

    [[nodiscard]] Index dim() const noexcept { return m_.rows(); }
    [[nodiscard]] const Mat& matrix() const noexcept { return m_; }
    [[nodiscard]] double operator()(Index i, Index j) const { return m_(i, j); }

    /// xᵀ P x
    [[nodiscard]] double quadratic(const Vec& x) const { return x.dot(m_ * x); }

    friend bool operator==(const SymMat& a, const SymMat& b)
    {
        return a.m_.rows() == b.m_.rows() && a.m_.cols() == b.m_.cols() && a.m_ == b.m_;
    }

private:
    Mat m_;
};

[[nodiscard]] Mat kron(const Mat& a, const Mat& b);

struct LyapunovOptions {
    /// Accepted relative residual ‖LHS(P) + Q‖ / ‖Q‖ (never below the rounding
    /// floor of evaluating LHS(P) itself).
    double rtol = 1e-9;
    /// Pivot ratio below which the vectorized operator counts as singular.
    double singular_threshold = 1e-13;
    /// Rounds of iterative refinement applied when the first solve misses rtol.
    int refinement_steps = 3;
};

/// FᵀP + PF + Σ GⱼᵀPGⱼ + dt_bar·FᵀPF, evaluated by direct multiplication.
[[nodiscard]] Mat ct_lyapunov_lhs(const Mat& f, const std::vector<Mat>& gs, double dt_bar,
                                  const Mat& p);

/// (I + dt·F)ᵀP(I + dt·F) + dt·Σ GⱼᵀPGⱼ − P, evaluated by direct multiplication.
[[nodiscard]] Mat dt_lyapunov_lhs(const Mat& f, const std::vector<Mat>& gs, double dt,
                                  const Mat& p);

/// Solves FᵀP + PF + Σ GⱼᵀPGⱼ + dt_bar·FᵀPF = −Q.
///
/// The equation is vectorized with vec(AXB) = (Bᵀ⊗A)vec(X) into an n²×n²
/// system, solved by full-pivot LU, refined until the residual meets
/// `opts.rtol`, and the result symmetrized. dt_bar = 0 gives the classical
/// Lyapunov–Itô equation.
///
/// Throws SingularOperator when the operator is singular to within
/// `opts.singular_threshold`, or when refinement cannot reach `opts.rtol`.
[[nodiscard]] SymMat solve_ct_lyapunov(const Mat& f, const std::vector<Mat>& gs, double dt_bar,
                                       const SymMat& q, const LyapunovOptions& opts = {});

/// Solves (I + dt·F)ᵀP(I + dt·F) + dt·Σ GⱼᵀPGⱼ − P = −Q. Same contract as
/// solve_ct_lyapunov; dt must be positive.
[[nodiscard]] SymMat solve_dt_lyapunov(const Mat& f, const std::vector<Mat>& gs, double dt,
                                       const SymMat& q, const LyapunovOptions& opts = {});

struct DefinitenessReport {
    bool positive_definite = false;
    double lambda_min = 0.0;
};

/// True iff λ_min(p) > tol.
[[nodiscard]] DefinitenessReport is_positive_definite(const SymMat& p, double tol);

/// Uses the default gate tolerance 1e−10·(1 + ‖p‖₂).
[[nodiscard]] DefinitenessReport is_positive_definite(const SymMat& p);

[[nodiscard]] double default_pd_tolerance(const SymMat& p);

/// Largest eigenvalue of L⁻¹ M L⁻ᵀ where LLᵀ = P, i.e. the smallest c with
/// M ⪯ c·P. Throws NotPositiveDefinite if P fails the PD gate.
[[nodiscard]] double pencil_max(const SymMat& m, const SymMat& p);

/// Largest α with M ⪯ −α·P; equal to −pencil_max(m, p).
[[nodiscard]] double decay_rate(const SymMat& m, const SymMat& p);

/// Spectral norm of the weighted block P̃^{-1/2} W ᵀ P^{-1/2}, the constant κ in
/// 2xᵀWy ≤ 2κ·√(xᵀPx)·√(yᵀP̃y). W is n×q, P is n×n, P̃ is q×q.
[[nodiscard]] double weighted_cross_norm(const Mat& w, const SymMat& p, const SymMat& p_tilde);

} // namespace sidekit
