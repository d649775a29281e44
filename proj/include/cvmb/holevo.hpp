#ifndef CVMB_HOLEVO_HPP
#define CVMB_HOLEVO_HPP

/**
 * @file holevo.hpp
 * @brief Holevo Cramer-Rao bound for pure-state two-parameter displacement models.
 *
 * For a pure model |psi(theta)> only the Gram data of {psi_0, psi_1, psi_2}
 * (the state and its two derivatives at theta = 0) matter. The derivatives
 * are written in an orthonormal basis {e_0 = psi_0, e_1, ..., e_{D-1}} and
 * each locally unbiased observable X_j is reduced to its first row
 * x_jm = <e_0|X_j|e_m>, m >= 1 (the <e_0|X_j|e_0> entry is fixed to zero and
 * every other entry can be dropped without increasing the objective).
 *
 * Component vectors use the real layout
 *
 *     [Re x_11, Im x_11, Re x_12, Im x_12, ..., Re x_21, Im x_21, ...]
 *
 * which for the two-mode problem (D = 3) is (t1, j1, s1, k1, t2, j2, s2, k2).
 *
 * The objective is h = Tr Re Z + TrAbs Im Z with Z_jk = sum_m x_jm conj(x_km).
 */

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cvmb/bounds.hpp"
#include "cvmb/errors.hpp"

namespace cvmb {

/// Overlaps <psi_j|psi_k> for j, k in {0, ..., dim}; index 0 is the state itself.
struct PureModelGram
{
    int dim = 2;
    Eigen::MatrixXcd overlaps;
};

/// Squeezed vacuum S(r) displaced on its only mode.
PureModelGram gram_single_mode(double r);

/// Two-mode squeezed vacuum with the displacement on the first mode.
PureModelGram gram_two_mode(double r);

/**
 * Gram data of a pure displacement model from its first and second moments:
 * <psi_j|psi_k> = (1/4) w_j^T (V + i Omega + m m^T) w_k, w_j = -Omega J_j,
 * <psi_0|psi_j> = -(i/2) w_j^T m. Throws DomainError for mixed probes.
 */
PureModelGram gram_from_moments(const DisplacementModel<double>& model);

struct HolevoProblem
{
    int num_params = 2;
    int basis_dim = 0;            // D, counting e_0
    Eigen::MatrixXcd psi_coords;  // D x num_params, column j holds psi_{j+1}

    int num_components() const { return 2 * num_params * (basis_dim - 1); }

    /// Overlap matrix rebuilt from the coordinates.
    Eigen::MatrixXcd gram() const;
};

/// Factorizes any Gram matrix by an eigen-decomposition of the derivative block.
HolevoProblem make_problem(const PureModelGram& gram);

/// psi_1 = e_1 e^r / 2, psi_2 = i e_1 e^{-r} / 2.
HolevoProblem problem_single_mode(double r);

/// psi_1 = (cosh r e_1 + sinh r e_2) / 2, psi_2 = i (cosh r e_1 - sinh r e_2) / 2.
HolevoProblem problem_two_mode(double r);

/// Adds `extra_dims` basis vectors orthogonal to every psi_j.
HolevoProblem with_ancilla(HolevoProblem problem, int extra_dims);

/// Real linear system A x = b: tr(d_k rho X_j) = delta_jk, one row per (k, j).
struct ConstraintSystem
{
    Eigen::MatrixXd matrix;
    Eigen::VectorXd rhs;
};

/// Throws DegenerateModelError when the constraints are not of full rank.
ConstraintSystem assemble_constraints(const HolevoProblem& problem);

double constraint_residual(const ConstraintSystem& system, const Eigen::VectorXd& components);

Eigen::MatrixXcd z_matrix(const HolevoProblem& problem, const Eigen::VectorXd& components);

/// Tr Re Z + TrAbs Im Z.
double holevo_function(const Eigen::MatrixXcd& z);

/// Im Z_21 for a two-parameter component vector.
double im_coupling(const HolevoProblem& problem, const Eigen::VectorXd& components);

// Two-mode problem after eliminating (t1, j1, t2, j2) with the unbiasedness
// constraints. Free variables are ordered (s1, k2, k1, s2).

Eigen::VectorXd two_mode_components(const Eigen::Vector4d& free_vars, double r);

/// f + 2|g|, f the squared norm of all eight components, g the Im Z coupling.
double holevo_objective(const Eigen::Vector4d& free_vars, double r);

/// Im Z_21 on the eliminated two-mode problem.
double two_mode_coupling(const Eigen::Vector4d& free_vars, double r);

/**
 * One stationary point of the KKT case split of the two-mode minimization.
 * Case 1 minimizes f + 2g under g >= 0, case 2 minimizes f - 2g under g < 0,
 * where g = Im Z_21.
 */
struct KktCandidate
{
    std::string label;     // "1a", "1b-", "1b+", "2"
    double lambda = 0.0;   // multiplier of the g constraint
    Eigen::Vector4d free_vars = Eigen::Vector4d::Zero();
    double coupling = 0.0; // g at the candidate
    double objective = 0.0;
    double stationarity_residual = 0.0;
    bool feasible = false;
};

/// Requires r != 0.
std::vector<KktCandidate> kkt_case_analysis(double r);

enum class SolveMethod { analytic_kkt, numeric };

struct HolevoSolution
{
    double bound = 0.0;
    Eigen::VectorXd minimizer;   // free variables at the optimum (may be empty)
    Eigen::VectorXd components;  // full component vector of the problem it was solved on
    Eigen::Matrix2cd z_matrix;
    SolveMethod method = SolveMethod::analytic_kkt;
    int restarts = 0;
    int converged_restarts = 0;
    double constraint_residual = 0.0;
};

/**
 * Closed-form minimum. Single mode: 2 + 2 cosh 2r with
 * Z = [[e^{-2r}, i], [-i, e^{2r}]]. Two mode: 4 e^{-2r} from KKT case 1b
 * (the r = 0 problem is the single-mode one and is delegated there).
 */
HolevoSolution solve_analytic(ProbeKind kind, double r);

struct NumericOptions
{
    std::uint64_t seed = 1;
    int restarts = 16;
    double init_range = 2.0;
    double step_tol = 1e-12;
    double objective_tol = 1e-14;
    int max_iterations = 5000;
};

class NonConvergenceError : public std::runtime_error
{
public:
    NonConvergenceError(const std::string& what, HolevoSolution best)
        : std::runtime_error(what)
        , best_(std::move(best))
    {}

    const HolevoSolution& best() const { return best_; }

private:
    HolevoSolution best_;
};

/**
 * Multi-start minimization over the affine solution set of the constraints
 * (particular solution plus null-space coordinates). The |Im Z| term is
 * handled by minimizing each smooth branch Tr Re Z +- 2 Im Z_21 and, when a
 * branch minimum has the wrong sign of Im Z_21, the search continues on the
 * surface Im Z_21 = 0 with an augmented Lagrangian. Deterministic for a
 * fixed seed; restart i draws from its own stream.
 */
HolevoSolution solve_numeric(const HolevoProblem& problem, const NumericOptions& options = {});

/// Same search on the four eliminated two-mode variables (s1, k2, k1, s2).
HolevoSolution solve_numeric_eliminated(double r, const NumericOptions& options = {});

} // namespace cvmb

#endif
