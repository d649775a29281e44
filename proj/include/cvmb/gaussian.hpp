#ifndef CVMB_GAUSSIAN_HPP
#define CVMB_GAUSSIAN_HPP

/**
 * @file gaussian.hpp
 * @brief Gaussian bosonic states in the first/second-moment representation.
 *
 * Conventions used everywhere in the library:
 *  - hbar = 2, so [Q, P] = 2i and the vacuum covariance is the identity.
 *  - Quadratures are ordered (Q1, P1, Q2, P2, ...).
 *  - The symplectic form is block diagonal with 2x2 blocks [[0, 1], [-1, 0]].
 *
 * A state is physical iff cov + i*Omega is positive semidefinite.
 */

#include <cmath>
#include <complex>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cvmb/errors.hpp"

namespace cvmb {

template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Scalar = double>
MatrixX<Scalar> symplectic_form(Eigen::Index num_modes)
{
    MatrixX<Scalar> omega = MatrixX<Scalar>::Zero(2 * num_modes, 2 * num_modes);
    for (Eigen::Index k = 0; k < num_modes; ++k) {
        omega(2 * k, 2 * k + 1) = Scalar(1);
        omega(2 * k + 1, 2 * k) = Scalar(-1);
    }
    return omega;
}

/// Smallest eigenvalue of the Hermitian matrix cov + i*Omega.
template <typename Derived>
typename Derived::Scalar uncertainty_margin(const Eigen::MatrixBase<Derived>& cov)
{
    using Scalar = typename Derived::Scalar;
    using Complex = std::complex<Scalar>;
    const Eigen::Index modes = cov.rows() / 2;
    const MatrixX<Complex> h = cov.template cast<Complex>()
        + Complex(0, 1) * symplectic_form<Scalar>(modes).template cast<Complex>();
    Eigen::SelfAdjointEigenSolver<MatrixX<Complex>> eig(h, Eigen::EigenvaluesOnly);
    return eig.eigenvalues().minCoeff();
}

template <typename Derived>
bool is_symplectic(const Eigen::MatrixBase<Derived>& s, typename Derived::Scalar tol = 1e-12)
{
    using Scalar = typename Derived::Scalar;
    if (s.rows() != s.cols() || s.rows() % 2 != 0)
        return false;
    const MatrixX<Scalar> omega = symplectic_form<Scalar>(s.rows() / 2);
    return (s * omega * s.transpose() - omega).cwiseAbs().maxCoeff() <= tol;
}

/**
 * @brief Mean vector and covariance matrix of an m-mode Gaussian state.
 *
 * Construction validates the shapes, symmetry of the covariance (1e-12,
 * scaled by its magnitude) and the uncertainty relation cov + i*Omega >= 0
 * (eigenvalues >= -1e-10, scaled likewise). Instances are immutable.
 */
template <typename Scalar = double>
class GaussianState
{
public:
    using Vector = VectorX<Scalar>;
    using Matrix = MatrixX<Scalar>;

    GaussianState(Vector mean, Matrix cov)
        : mean_(std::move(mean))
        , cov_(std::move(cov))
    {
        if (cov_.rows() == 0 || cov_.rows() % 2 != 0 || cov_.rows() != cov_.cols())
            throw std::invalid_argument("covariance must be a non-empty 2m x 2m matrix");
        if (mean_.size() != cov_.rows())
            throw std::invalid_argument("mean length does not match covariance dimension");
        using std::max;
        const Scalar scale = max(Scalar(1), cov_.cwiseAbs().maxCoeff());
        const Scalar eps = Scalar(64) * std::numeric_limits<Scalar>::epsilon();
        if ((cov_ - cov_.transpose()).cwiseAbs().maxCoeff() > max(Scalar(1e-12), eps) * scale)
            throw DomainError("covariance is not symmetric");
        if (uncertainty_margin(cov_) < -max(Scalar(1e-10), eps) * scale)
            throw DomainError("covariance violates the uncertainty relation cov + i*Omega >= 0");
    }

    Eigen::Index num_modes() const { return cov_.rows() / 2; }
    const Vector& mean() const { return mean_; }
    const Matrix& cov() const { return cov_; }

private:
    Vector mean_;
    Matrix cov_;
};

/**
 * @brief Affine phase-space map Z -> S Z + d.
 *
 * S must be symplectic; d displaces the mean only.
 */
template <typename Scalar = double>
struct SymplecticOp
{
    MatrixX<Scalar> matrix;
    VectorX<Scalar> offset;

    Eigen::Index num_modes() const { return matrix.rows() / 2; }
};

namespace detail {

inline void check_mode(Eigen::Index mode, Eigen::Index num_modes)
{
    if (mode < 0 || mode >= num_modes)
        throw std::out_of_range("mode index " + std::to_string(mode) + " out of range for "
                                + std::to_string(num_modes) + " modes");
}

inline void check_num_modes(Eigen::Index num_modes)
{
    if (num_modes < 1)
        throw DomainError("a state needs at least one mode");
}

} // namespace detail

template <typename Scalar = double>
GaussianState<Scalar> vacuum(Eigen::Index num_modes = 1)
{
    detail::check_num_modes(num_modes);
    return {VectorX<Scalar>::Zero(2 * num_modes), MatrixX<Scalar>::Identity(2 * num_modes, 2 * num_modes)};
}

/// Product of m identical thermal modes with mean photon number N: cov = (2N+1) I.
template <typename Scalar = double>
GaussianState<Scalar> make_thermal(Scalar photons, Eigen::Index num_modes = 1)
{
    if (!(photons >= Scalar(0)))
        throw DomainError("thermal photon number must be non-negative");
    detail::check_num_modes(num_modes);
    return {VectorX<Scalar>::Zero(2 * num_modes),
            (Scalar(2) * photons + Scalar(1)) * MatrixX<Scalar>::Identity(2 * num_modes, 2 * num_modes)};
}

template <typename Scalar = double>
SymplecticOp<Scalar> identity_op(Eigen::Index num_modes)
{
    detail::check_num_modes(num_modes);
    return {MatrixX<Scalar>::Identity(2 * num_modes, 2 * num_modes), VectorX<Scalar>::Zero(2 * num_modes)};
}

/// S = diag(e^{-r}, e^{r}) on the target mode; on vacuum this gives cov diag(e^{-2r}, e^{2r}).
template <typename Scalar = double>
SymplecticOp<Scalar> single_mode_squeezer(Scalar r, Eigen::Index mode, Eigen::Index num_modes = 1)
{
    detail::check_num_modes(num_modes);
    detail::check_mode(mode, num_modes);
    using std::exp;
    auto op = identity_op<Scalar>(num_modes);
    op.matrix(2 * mode, 2 * mode) = exp(-r);
    op.matrix(2 * mode + 1, 2 * mode + 1) = exp(r);
    return op;
}

/**
 * @brief Two-mode squeezer producing the EPR covariance from vacuum.
 *
 * With Z = diag(1, -1) the map on the (a, b) block is
 * [[cosh r I, sinh r Z], [sinh r Z, cosh r I]], so the vacuum goes to
 * [[cosh 2r I, sinh 2r Z], [sinh 2r Z, cosh 2r I]].
 */
template <typename Scalar = double>
SymplecticOp<Scalar> two_mode_squeezer(Scalar r, Eigen::Index mode_a, Eigen::Index mode_b,
                                       Eigen::Index num_modes = 2)
{
    detail::check_num_modes(num_modes);
    detail::check_mode(mode_a, num_modes);
    detail::check_mode(mode_b, num_modes);
    if (mode_a == mode_b)
        throw std::invalid_argument("two-mode squeezer needs two distinct modes");
    using std::cosh;
    using std::sinh;
    auto op = identity_op<Scalar>(num_modes);
    const Scalar ch = cosh(r), sh = sinh(r);
    const Eigen::Index a = 2 * mode_a, b = 2 * mode_b;
    op.matrix(a, a) = ch;
    op.matrix(a + 1, a + 1) = ch;
    op.matrix(b, b) = ch;
    op.matrix(b + 1, b + 1) = ch;
    op.matrix(a, b) = sh;
    op.matrix(a + 1, b + 1) = -sh;
    op.matrix(b, a) = sh;
    op.matrix(b + 1, a + 1) = -sh;
    return op;
}

/**
 * @brief Real beam splitter with transmissivity tau.
 *
 * On the (a, b) block:
 *
 *     S = [[ sqrt(tau) I, -sqrt(1-tau) I ],
 *          [ sqrt(1-tau) I, sqrt(tau) I  ]]
 *
 * With this sign choice tau = 1/2 takes the EPR covariance of
 * two_mode_squeezer(r) to diag(e^{-2r}, e^{2r}, e^{2r}, e^{-2r}), i.e. the
 * product of a squeezed vacuum S(r) on mode a and S(-r) on mode b, with no
 * residual phase rotation.
 */
template <typename Scalar = double>
SymplecticOp<Scalar> beam_splitter(Scalar tau, Eigen::Index mode_a, Eigen::Index mode_b,
                                   Eigen::Index num_modes = 2)
{
    if (!(tau >= Scalar(0) && tau <= Scalar(1)))
        throw DomainError("beam splitter transmissivity must lie in [0, 1]");
    detail::check_num_modes(num_modes);
    detail::check_mode(mode_a, num_modes);
    detail::check_mode(mode_b, num_modes);
    if (mode_a == mode_b)
        throw std::invalid_argument("beam splitter needs two distinct modes");
    using std::sqrt;
    auto op = identity_op<Scalar>(num_modes);
    const Scalar t = sqrt(tau), u = sqrt(Scalar(1) - tau);
    const Eigen::Index a = 2 * mode_a, b = 2 * mode_b;
    for (Eigen::Index q = 0; q < 2; ++q) {
        op.matrix(a + q, a + q) = t;
        op.matrix(b + q, b + q) = t;
        op.matrix(a + q, b + q) = -u;
        op.matrix(b + q, a + q) = u;
    }
    return op;
}

/// Pure translation of mode `mode` by (q, p).
template <typename Scalar = double>
SymplecticOp<Scalar> displacement_op(Scalar q, Scalar p, Eigen::Index mode, Eigen::Index num_modes)
{
    detail::check_num_modes(num_modes);
    detail::check_mode(mode, num_modes);
    auto op = identity_op<Scalar>(num_modes);
    op.offset(2 * mode) = q;
    op.offset(2 * mode + 1) = p;
    return op;
}

/// mean -> S mean + d, cov -> S cov S^T (symmetrized).
template <typename Scalar>
GaussianState<Scalar> apply(const SymplecticOp<Scalar>& op, const GaussianState<Scalar>& state)
{
    if (op.matrix.rows() != state.cov().rows() || op.matrix.cols() != state.cov().rows()
        || op.offset.size() != state.mean().size())
        throw std::invalid_argument("symplectic operation and state have different dimensions");
    MatrixX<Scalar> cov = op.matrix * state.cov() * op.matrix.transpose();
    cov = (Scalar(0.5) * (cov + cov.transpose())).eval();
    return {op.matrix * state.mean() + op.offset, std::move(cov)};
}

/// Composition: (outer o inner)(Z) = outer(inner(Z)).
template <typename Scalar>
SymplecticOp<Scalar> compose(const SymplecticOp<Scalar>& outer, const SymplecticOp<Scalar>& inner)
{
    if (outer.matrix.rows() != inner.matrix.rows())
        throw std::invalid_argument("cannot compose operations on different mode counts");
    return {outer.matrix * inner.matrix, outer.matrix * inner.offset + outer.offset};
}

template <typename Scalar>
GaussianState<Scalar> displace(const GaussianState<Scalar>& state, Scalar q, Scalar p, Eigen::Index mode)
{
    detail::check_mode(mode, state.num_modes());
    VectorX<Scalar> mean = state.mean();
    mean(2 * mode) += q;
    mean(2 * mode + 1) += p;
    return {std::move(mean), state.cov()};
}

template <typename Scalar>
GaussianState<Scalar> tensor_product(const GaussianState<Scalar>& a, const GaussianState<Scalar>& b)
{
    const Eigen::Index na = a.mean().size(), nb = b.mean().size();
    VectorX<Scalar> mean(na + nb);
    mean << a.mean(), b.mean();
    MatrixX<Scalar> cov = MatrixX<Scalar>::Zero(na + nb, na + nb);
    cov.topLeftCorner(na, na) = a.cov();
    cov.bottomRightCorner(nb, nb) = b.cov();
    return {std::move(mean), std::move(cov)};
}

/// Reduced state of the listed modes, in the listed order.
template <typename Scalar>
GaussianState<Scalar> reduced_state(const GaussianState<Scalar>& state, const std::vector<Eigen::Index>& modes)
{
    const Eigen::Index n = static_cast<Eigen::Index>(modes.size());
    VectorX<Scalar> mean(2 * n);
    MatrixX<Scalar> cov(2 * n, 2 * n);
    for (Eigen::Index i = 0; i < n; ++i) {
        detail::check_mode(modes[i], state.num_modes());
        mean.template segment<2>(2 * i) = state.mean().template segment<2>(2 * modes[i]);
        for (Eigen::Index j = 0; j < n; ++j)
            cov.template block<2, 2>(2 * i, 2 * j) = state.cov().template block<2, 2>(2 * modes[i], 2 * modes[j]);
    }
    return {std::move(mean), std::move(cov)};
}

} // namespace cvmb

#endif
