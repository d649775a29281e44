#ifndef CVMB_BOUNDS_HPP
#define CVMB_BOUNDS_HPP

/**
 * @file bounds.hpp
 * @brief Classical, SLD and RLD Cramer-Rao bounds for displacement models.
 *
 * A displacement model is a Gaussian probe whose mean moves linearly with
 * the two parameters (q, p) while the covariance stays fixed. All bounds are
 * lower bounds on the sum of the mean squared errors of both parameters and
 * are independent of the evaluation point.
 *
 * Moment-level formulas (hbar = 2):
 *   SLD information  G  = J^T V^{-1} J,            C_S = Tr G^{-1}
 *   RLD information  G~ = J^T (V + i Omega)^{-1} J, C_R = Tr Re G~^{-1} + TrAbs Im G~^{-1}
 *
 * G~^{-1} is evaluated as a Schur complement so that pure probes, where
 * V + i Omega is singular, give the continuous limit instead of a blow-up.
 */

#include <cmath>
#include <complex>
#include <limits>

#include <Eigen/Dense>

#include "cvmb/errors.hpp"
#include "cvmb/gaussian.hpp"

namespace cvmb {

enum class ProbeKind { single_mode, two_mode };

enum class BoundKind { classical, sld, rld, holevo, dual_homodyne_analytic };

template <typename Scalar = double>
struct BoundResult
{
    Scalar value;
    BoundKind kind;
};

/// Probe plus the Jacobian of its mean with respect to (theta_1, theta_2).
template <typename Scalar = double>
struct DisplacementModel
{
    GaussianState<Scalar> probe;
    MatrixX<Scalar> mean_jacobian; // 2m x 2
    Eigen::Index displaced_mode;
};

/// D(theta) on `mode`: theta_1 moves Q, theta_2 moves P.
template <typename Scalar>
DisplacementModel<Scalar> displacement_model(const GaussianState<Scalar>& probe, Eigen::Index mode = 0)
{
    detail::check_mode(mode, probe.num_modes());
    MatrixX<Scalar> jac = MatrixX<Scalar>::Zero(2 * probe.num_modes(), 2);
    jac(2 * mode, 0) = Scalar(1);
    jac(2 * mode + 1, 1) = Scalar(1);
    return {probe, std::move(jac), mode};
}

/// Squeezed thermal probe: S(r) rho_th(N) for single mode, S_2(r) rho_th(N)^{x2} for two modes.
template <typename Scalar>
GaussianState<Scalar> make_probe(Scalar r, Scalar photons, ProbeKind kind)
{
    if (kind == ProbeKind::single_mode)
        return apply(single_mode_squeezer<Scalar>(r, 0, 1), make_thermal<Scalar>(photons, 1));
    return apply(two_mode_squeezer<Scalar>(r, 0, 1, 2), make_thermal<Scalar>(photons, 2));
}

/// Sum of |eigenvalues|; for a real antisymmetric matrix this is the sum of singular values.
template <typename Derived>
typename Derived::RealScalar trace_abs(const Eigen::MatrixBase<Derived>& m)
{
    using Real = typename Derived::RealScalar;
    Eigen::JacobiSVD<MatrixX<typename Derived::Scalar>> svd(m);
    return svd.singularValues().sum() + Real(0);
}

/// Tr Re A + TrAbs Im A for a Hermitian A (the Holevo-type figure of merit).
template <typename Scalar>
Scalar trace_re_plus_trace_abs_im(const MatrixX<std::complex<Scalar>>& a)
{
    const MatrixX<Scalar> im = a.imag();
    return a.real().trace() + trace_abs(im);
}

namespace detail {

template <typename Scalar>
void check_jacobian(const MatrixX<Scalar>& jac, Eigen::Index dim)
{
    if (jac.rows() != dim)
        throw std::invalid_argument("mean Jacobian row count does not match the phase-space dimension");
    Eigen::ColPivHouseholderQR<MatrixX<Scalar>> qr(jac);
    if (qr.rank() < jac.cols())
        throw DegenerateModelError("mean Jacobian is rank deficient");
}

} // namespace detail

/// SLD quantum Fisher information J^T V^{-1} J.
template <typename Scalar>
MatrixX<Scalar> sld_information(const DisplacementModel<Scalar>& model)
{
    const auto& cov = model.probe.cov();
    detail::check_jacobian(model.mean_jacobian, cov.rows());
    Eigen::LLT<MatrixX<Scalar>> llt(cov);
    if (llt.info() != Eigen::Success)
        throw DegenerateModelError("probe covariance is singular");
    return model.mean_jacobian.transpose() * llt.solve(model.mean_jacobian);
}

template <typename Scalar>
BoundResult<Scalar> sld_bound(const DisplacementModel<Scalar>& model)
{
    const MatrixX<Scalar> g = sld_information(model);
    Eigen::LLT<MatrixX<Scalar>> llt(g);
    if (llt.info() != Eigen::Success)
        throw DegenerateModelError("SLD information matrix is singular");
    const MatrixX<Scalar> inv = llt.solve(MatrixX<Scalar>::Identity(g.rows(), g.cols()));
    return {inv.trace(), BoundKind::sld};
}

/**
 * @brief Inverse RLD information [J^T (V + i Omega)^{-1} J]^{-1}.
 *
 * J is completed to an invertible basis T = [J, K] with K spanning the
 * orthogonal complement of its columns. In that basis A = V + i Omega
 * becomes B = T^{-1} A T^{-T}, and the requested inverse is the Schur
 * complement B11 - B12 B22^+ B21. This never inverts A itself.
 */
template <typename Scalar>
MatrixX<std::complex<Scalar>> rld_inverse_information(const DisplacementModel<Scalar>& model)
{
    using Complex = std::complex<Scalar>;
    using CMatrix = MatrixX<Complex>;
    const auto& cov = model.probe.cov();
    const auto& jac = model.mean_jacobian;
    const Eigen::Index n = cov.rows(), d = jac.cols();
    detail::check_jacobian(jac, n);

    const CMatrix a = cov.template cast<Complex>()
        + Complex(0, 1) * symplectic_form<Scalar>(n / 2).template cast<Complex>();
    if (n == d) {
        const MatrixX<Scalar> jinv = jac.inverse();
        return jinv.template cast<Complex>() * a * jinv.transpose().template cast<Complex>();
    }

    Eigen::HouseholderQR<MatrixX<Scalar>> qr(jac);
    const MatrixX<Scalar> q = qr.householderQ() * MatrixX<Scalar>::Identity(n, n);
    MatrixX<Scalar> basis(n, n);
    basis << jac, q.rightCols(n - d);
    const CMatrix tinv = basis.inverse().template cast<Complex>();
    const CMatrix b = tinv * a * tinv.adjoint();

    const CMatrix b22 = b.bottomRightCorner(n - d, n - d);
    Eigen::SelfAdjointEigenSolver<CMatrix> eig(b22);
    const auto& lam = eig.eigenvalues();
    const Scalar cutoff = std::numeric_limits<Scalar>::epsilon() * Scalar(n) * lam.cwiseAbs().maxCoeff();
    VectorX<Complex> lam_inv(lam.size());
    for (Eigen::Index i = 0; i < lam.size(); ++i)
        lam_inv(i) = std::abs(lam(i)) > cutoff ? Complex(Scalar(1) / lam(i)) : Complex(0);
    const CMatrix b22_pinv = eig.eigenvectors() * lam_inv.asDiagonal() * eig.eigenvectors().adjoint();

    CMatrix schur = b.topLeftCorner(d, d) - b.topRightCorner(d, n - d) * b22_pinv * b.bottomLeftCorner(n - d, d);
    return (Scalar(0.5) * (schur + schur.adjoint())).eval();
}

template <typename Scalar>
BoundResult<Scalar> rld_bound(const DisplacementModel<Scalar>& model)
{
    return {trace_re_plus_trace_abs_im<Scalar>(rld_inverse_information(model)), BoundKind::rld};
}

/// Fisher information D^T Sigma^{-1} D of a Gaussian outcome with fixed covariance Sigma.
template <typename Scalar>
MatrixX<Scalar> classical_fisher_gaussian(const MatrixX<Scalar>& mean_jacobian, const MatrixX<Scalar>& outcome_cov)
{
    if (outcome_cov.rows() != outcome_cov.cols() || outcome_cov.rows() != mean_jacobian.rows())
        throw std::invalid_argument("outcome covariance and mean Jacobian disagree in dimension");
    Eigen::LLT<MatrixX<Scalar>> llt(outcome_cov);
    if (llt.info() != Eigen::Success)
        throw DegenerateModelError("outcome covariance is not positive definite");
    return mean_jacobian.transpose() * llt.solve(mean_jacobian);
}

template <typename Scalar>
BoundResult<Scalar> classical_bound(const MatrixX<Scalar>& mean_jacobian, const MatrixX<Scalar>& outcome_cov)
{
    const MatrixX<Scalar> fisher = classical_fisher_gaussian(mean_jacobian, outcome_cov);
    Eigen::LLT<MatrixX<Scalar>> llt(fisher);
    if (llt.info() != Eigen::Success)
        throw DegenerateModelError("classical Fisher information is singular");
    return {llt.solve(MatrixX<Scalar>::Identity(fisher.rows(), fisher.cols())).trace(), BoundKind::classical};
}

template <typename Scalar = double>
struct ClosedFormBounds
{
    Scalar sld;
    Scalar rld;
};

/**
 * Closed forms for squeezed thermal probes.
 *   single:   C_S = (2+4N) cosh 2r,    C_R = 2 + (2+4N) cosh 2r
 *   two-mode: C_S = (2+4N) / cosh 2r,  C_R = 8N(1+N) / ((1+2N) cosh 2r - 1)
 * At N = 0 the two-mode RLD is 0 for r > 0 and 4 at r = 0 (N -> 0 limits).
 */
template <typename Scalar>
ClosedFormBounds<Scalar> closed_form_bounds(Scalar r, Scalar photons, ProbeKind kind)
{
    if (!(photons >= Scalar(0)))
        throw DomainError("thermal photon number must be non-negative");
    using std::cosh;
    const Scalar c2 = cosh(Scalar(2) * r);
    const Scalar scale = Scalar(2) + Scalar(4) * photons;
    if (kind == ProbeKind::single_mode)
        return {scale * c2, Scalar(2) + scale * c2};
    const Scalar numerator = Scalar(8) * photons * (Scalar(1) + photons);
    const Scalar denominator = (Scalar(1) + Scalar(2) * photons) * c2 - Scalar(1);
    // N = 0, r = 0 is a product of vacua; the N -> 0 limit there is 4.
    return {scale / c2, denominator == Scalar(0) ? Scalar(4) : numerator / denominator};
}

/**
 * Sum of MSE of the dual homodyne measurement (50:50 splitter, Q on one
 * output, P on the other). Two-mode probe: (8N+4) e^{-2r}. Single-mode
 * probe (vacuum in the second port): 2 + (2+4N) cosh 2r.
 */
template <typename Scalar>
BoundResult<Scalar> dual_homodyne_mse_analytic(Scalar r, Scalar photons, ProbeKind kind = ProbeKind::two_mode)
{
    if (!(photons >= Scalar(0)))
        throw DomainError("thermal photon number must be non-negative");
    using std::cosh;
    using std::exp;
    const Scalar value = kind == ProbeKind::two_mode
        ? (Scalar(8) * photons + Scalar(4)) * exp(Scalar(-2) * r)
        : Scalar(2) + (Scalar(2) + Scalar(4) * photons) * cosh(Scalar(2) * r);
    return {value, BoundKind::dual_homodyne_analytic};
}

} // namespace cvmb

#endif
