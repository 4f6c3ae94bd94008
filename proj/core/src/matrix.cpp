#include "sidekit/matrix.hpp"

#include "sidekit/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace sidekit {

SymMat::SymMat(Mat m) : m_(std::move(m))
{
    if (m_.rows() != m_.cols()) {
        throw std::invalid_argument("SymMat: matrix is not square");
    }
    if (!m_.allFinite()) {
        throw std::invalid_argument("SymMat: non-finite entry");
    }
    if (m_ != m_.transpose()) {
        throw std::invalid_argument("SymMat: matrix is not exactly symmetric");
    }
}

SymMat SymMat::symmetrize(const Mat& m)
{
    if (m.rows() != m.cols()) {
        throw std::invalid_argument("SymMat::symmetrize: matrix is not square");
    }
    return SymMat(Mat(0.5 * (m + m.transpose())));
}

SymMat SymMat::identity(Index n) { return SymMat(Mat::Identity(n, n)); }

SymMat SymMat::scalar(double value) { return SymMat(Mat::Constant(1, 1, value)); }

Mat kron(const Mat& a, const Mat& b)
{
    Mat out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Index i = 0; i < a.rows(); ++i) {
        for (Index j = 0; j < a.cols(); ++j) {
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
        }
    }
    return out;
}

namespace {

void check_system(const Mat& f, const std::vector<Mat>& gs, const SymMat& q)
{
    if (f.rows() != f.cols()) {
        throw std::invalid_argument("Lyapunov solve: F is not square");
    }
    for (const auto& g : gs) {
        if (g.rows() != f.rows() || g.cols() != f.cols()) {
            throw std::invalid_argument("Lyapunov solve: diffusion matrix dimension mismatch");
        }
    }
    if (q.dim() != f.rows()) {
        throw std::invalid_argument("Lyapunov solve: Q dimension mismatch");
    }
}

Vec vec(const Mat& m) { return Eigen::Map<const Vec>(m.data(), m.size()); }

Mat unvec(const Vec& v, Index n) { return Eigen::Map<const Mat>(v.data(), n, n); }

template <class Lhs>
SymMat solve_vectorized(const Mat& op, double term_scale, Lhs&& lhs, const SymMat& q,
                        const LyapunovOptions& opts, const char* name)
{
    const Index n = q.dim();
    Eigen::FullPivLU<Mat> lu(op);
    lu.setThreshold(opts.singular_threshold);
    // The LU threshold is relative to the largest pivot, which cannot detect
    // cancellation between the terms (a 1×1 operator is never rank deficient).
    // Pivots are therefore also compared with the size of the terms themselves.
    const double min_pivot = lu.matrixLU().diagonal().cwiseAbs().minCoeff();
    if (!lu.isInvertible() || !(min_pivot > opts.singular_threshold * term_scale)) {
        std::ostringstream os;
        os << name << ": vectorized operator is singular (smallest pivot " << min_pivot
           << " against term scale " << term_scale << ")";
        throw SingularOperator(os.str());
    }

    const Vec rhs = -vec(q.matrix());
    Vec x = lu.solve(rhs);
    const double q_norm = q.matrix().norm();
    const double scale = q_norm > 0.0 ? q_norm : 1.0;

    auto residual = [&](const Vec& v) {
        return (lhs(unvec(v, n)) + q.matrix()).norm();
    };

    double res = residual(x);
    for (int step = 0; step < opts.refinement_steps && res > opts.rtol * scale; ++step) {
        x += lu.solve(rhs - op * x);
        res = residual(x);
    }

    SymMat p = SymMat::symmetrize(unvec(x, n));
    res = (lhs(p.matrix()) + q.matrix()).norm();
    // LHS(P) cannot be evaluated more accurately than eps·(term scale)·‖P‖, which
    // dominates rtol·‖Q‖ when P is huge just inside the stability boundary.
    const double floor = 64.0 * std::numeric_limits<double>::epsilon() * term_scale * p.matrix().norm();
    if (!(res <= std::max(opts.rtol * scale, floor))) {
        std::ostringstream os;
        os << name << ": residual " << res << " exceeds tolerance; operator is ill-conditioned";
        throw SingularOperator(os.str());
    }
    return p;
}

} // namespace

Mat ct_lyapunov_lhs(const Mat& f, const std::vector<Mat>& gs, double dt_bar, const Mat& p)
{
    Mat out = f.transpose() * p + p * f;
    for (const auto& g : gs) {
        out += g.transpose() * p * g;
    }
    if (dt_bar != 0.0) {
        out += dt_bar * (f.transpose() * p * f);
    }
    return out;
}

Mat dt_lyapunov_lhs(const Mat& f, const std::vector<Mat>& gs, double dt, const Mat& p)
{
    const Mat a = Mat::Identity(f.rows(), f.cols()) + dt * f;
    Mat out = a.transpose() * p * a;
    for (const auto& g : gs) {
        out += dt * (g.transpose() * p * g);
    }
    out -= p;
    return out;
}

SymMat solve_ct_lyapunov(const Mat& f, const std::vector<Mat>& gs, double dt_bar, const SymMat& q,
                         const LyapunovOptions& opts)
{
    check_system(f, gs, q);
    if (!(dt_bar >= 0.0) || !std::isfinite(dt_bar)) {
        throw std::invalid_argument("solve_ct_lyapunov: dt_bar must be finite and non-negative");
    }
    const Index n = f.rows();
    const Mat eye = Mat::Identity(n, n);
    const Mat ft = f.transpose();

    // vec(FᵀP) = (I⊗Fᵀ)vec P, vec(PF) = (Fᵀ⊗I)vec P, vec(GᵀPG) = (Gᵀ⊗Gᵀ)vec P
    Mat op = kron(eye, ft) + kron(ft, eye);
    for (const auto& g : gs) {
        op += kron(g.transpose(), g.transpose());
    }
    if (dt_bar != 0.0) {
        op += dt_bar * kron(ft, ft);
    }
    // ‖A⊗B‖_F = ‖A‖_F·‖B‖_F
    const double fn = f.norm();
    double scale = 2.0 * std::sqrt(static_cast<double>(n)) * fn + dt_bar * fn * fn;
    for (const auto& g : gs) {
        scale += g.squaredNorm();
    }
    return solve_vectorized(
        op, scale, [&](const Mat& p) { return ct_lyapunov_lhs(f, gs, dt_bar, p); }, q, opts,
        "solve_ct_lyapunov");
}

SymMat solve_dt_lyapunov(const Mat& f, const std::vector<Mat>& gs, double dt, const SymMat& q,
                         const LyapunovOptions& opts)
{
    check_system(f, gs, q);
    if (!(dt > 0.0) || !std::isfinite(dt)) {
        throw std::invalid_argument("solve_dt_lyapunov: dt must be finite and positive");
    }
    const Index n = f.rows();
    const Mat a = Mat::Identity(n, n) + dt * f;
    const Mat at = a.transpose();

    Mat op = kron(at, at);
    for (const auto& g : gs) {
        op += dt * kron(g.transpose(), g.transpose());
    }
    op -= Mat::Identity(n * n, n * n);
    double scale = a.squaredNorm() + static_cast<double>(n);
    for (const auto& g : gs) {
        scale += dt * g.squaredNorm();
    }
    return solve_vectorized(
        op, scale, [&](const Mat& p) { return dt_lyapunov_lhs(f, gs, dt, p); }, q, opts,
        "solve_dt_lyapunov");
}

double default_pd_tolerance(const SymMat& p)
{
    if (p.dim() == 0) {
        return 1e-10;
    }
    Eigen::SelfAdjointEigenSolver<Mat> es(p.matrix(), Eigen::EigenvaluesOnly);
    const double norm = es.eigenvalues().cwiseAbs().maxCoeff();
    return 1e-10 * (1.0 + norm);
}

DefinitenessReport is_positive_definite(const SymMat& p, double tol)
{
    if (p.dim() == 0) {
        return {false, 0.0};
    }
    Eigen::SelfAdjointEigenSolver<Mat> es(p.matrix(), Eigen::EigenvaluesOnly);
    const double lmin = es.eigenvalues().minCoeff();
    return {lmin > tol, lmin};
}

DefinitenessReport is_positive_definite(const SymMat& p)
{
    return is_positive_definite(p, default_pd_tolerance(p));
}

namespace {

Eigen::LLT<Mat> gated_cholesky(const SymMat& p, const char* name)
{
    const auto report = is_positive_definite(p);
    if (!report.positive_definite) {
        std::ostringstream os;
        os << name << ": weight matrix is not positive definite (lambda_min = " << report.lambda_min
           << ")";
        throw NotPositiveDefinite(os.str());
    }
    Eigen::LLT<Mat> llt(p.matrix());
    if (llt.info() != Eigen::Success) {
        throw NotPositiveDefinite(std::string(name) + ": Cholesky factorization failed");
    }
    return llt;
}

} // namespace

double pencil_max(const SymMat& m, const SymMat& p)
{
    if (m.dim() != p.dim()) {
        throw std::invalid_argument("pencil_max: dimension mismatch");
    }
    const auto llt = gated_cholesky(p, "pencil_max");
    const Mat l = llt.matrixL();
    // S = L⁻¹ M L⁻ᵀ
    Mat s = l.triangularView<Eigen::Lower>().solve(m.matrix());
    s = l.triangularView<Eigen::Lower>().solve(s.transpose()).eval();
    const Mat sym = 0.5 * (s + s.transpose());
    Eigen::SelfAdjointEigenSolver<Mat> es(sym, Eigen::EigenvaluesOnly);
    return es.eigenvalues().maxCoeff();
}

double decay_rate(const SymMat& m, const SymMat& p) { return -pencil_max(m, p); }

double weighted_cross_norm(const Mat& w, const SymMat& p, const SymMat& p_tilde)
{
    if (w.rows() != p.dim() || w.cols() != p_tilde.dim()) {
        throw std::invalid_argument("weighted_cross_norm: dimension mismatch");
    }
    if (w.size() == 0) {
        return 0.0;
    }
    const auto llt = gated_cholesky(p, "weighted_cross_norm");
    const auto llt_tilde = gated_cholesky(p_tilde, "weighted_cross_norm");
    const Mat l = llt.matrixL();
    const Mat lt = llt_tilde.matrixL();
    // L⁻¹ W L̃⁻ᵀ
    Mat a = l.triangularView<Eigen::Lower>().solve(w);
    a = lt.triangularView<Eigen::Lower>().solve(a.transpose()).transpose().eval();
    Eigen::JacobiSVD<Mat> svd(a);
    return svd.singularValues()(0);
}

} // namespace sidekit
