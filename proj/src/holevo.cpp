#include "cvmb/holevo.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <random>

namespace cvmb {

namespace {

using Complex = std::complex<double>;
constexpr Complex kI(0.0, 1.0);

struct Affine
{
    Eigen::VectorXd offset;  // x0
    Eigen::MatrixXd basis;   // M, x = x0 + M z
};

// Quadratic forms of a two-parameter component vector:
// f(x) = |x|^2 = Tr Re Z and g(x) = x^T W x = Im Z_21.
Eigen::MatrixXd coupling_form(int basis_dim)
{
    const int per = 2 * (basis_dim - 1);
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(2 * per, 2 * per);
    for (int m = 0; m < basis_dim - 1; ++m) {
        const int re1 = 2 * m, im1 = 2 * m + 1;
        const int re2 = per + 2 * m, im2 = per + 2 * m + 1;
        // Im(x2 conj x1) = Im x2 Re x1 - Re x2 Im x1
        a(re1, im2) += 1.0;
        a(re2, im1) -= 1.0;
    }
    return 0.5 * (a + a.transpose());
}

struct LocalResult
{
    Eigen::VectorXd z;
    double value = 0.0;
    int iterations = 0;
    bool converged = false;
};

using Objective = std::function<double(const Eigen::VectorXd&, Eigen::VectorXd&)>;

// BFGS with Armijo backtracking.
LocalResult minimize_bfgs(const Objective& fun, Eigen::VectorXd z, const NumericOptions& opt)
{
    const Eigen::Index n = z.size();
    LocalResult out;
    Eigen::VectorXd grad(n), trial_grad(n);
    double value = fun(z, grad);
    if (n == 0) {
        out.z = z;
        out.value = value;
        out.converged = true;
        return out;
    }
    Eigen::MatrixXd inv_hessian = Eigen::MatrixXd::Identity(n, n);
    for (int it = 0; it < opt.max_iterations; ++it) {
        out.iterations = it + 1;
        if (grad.norm() < 1e-13) {
            out.converged = true;
            break;
        }
        Eigen::VectorXd dir = -inv_hessian * grad;
        double slope = grad.dot(dir);
        if (slope >= 0.0) {
            inv_hessian.setIdentity();
            dir = -grad;
            slope = -grad.squaredNorm();
        }
        double step = 1.0;
        Eigen::VectorXd trial;
        double trial_value = value;
        for (int k = 0; k < 60; ++k) {
            trial = z + step * dir;
            trial_value = fun(trial, trial_grad);
            if (trial_value <= value + 1e-4 * step * slope)
                break;
            step *= 0.5;
        }
        const Eigen::VectorXd s = trial - z;
        const Eigen::VectorXd y = trial_grad - grad;
        const double change = std::abs(value - trial_value);
        z = trial;
        grad = trial_grad;
        value = trial_value;
        if (s.norm() < opt.step_tol || change < opt.objective_tol) {
            out.converged = grad.norm() < 1e-6;
            break;
        }
        const double sy = s.dot(y);
        if (sy > 1e-300) {
            const double rho = 1.0 / sy;
            const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(n, n);
            inv_hessian = (eye - rho * s * y.transpose()) * inv_hessian * (eye - rho * y * s.transpose())
                + rho * s * s.transpose();
        }
    }
    out.z = z;
    out.value = value;
    return out;
}

struct Candidate
{
    Eigen::VectorXd z;
    double h = std::numeric_limits<double>::infinity();
    bool converged = false;
};

// Minimizes f + 2|g| over x = x0 + M z from one starting point.
Candidate search_from(const Affine& affine, const Eigen::MatrixXd& w, const Eigen::VectorXd& start,
                      const NumericOptions& opt)
{
    const auto x_of = [&](const Eigen::VectorXd& z) -> Eigen::VectorXd { return affine.offset + affine.basis * z; };
    const auto h_of = [&](const Eigen::VectorXd& z) {
        const Eigen::VectorXd x = x_of(z);
        return x.squaredNorm() + 2.0 * std::abs(x.dot(w * x));
    };
    const auto g_of = [&](const Eigen::VectorXd& z) {
        const Eigen::VectorXd x = x_of(z);
        return x.dot(w * x);
    };

    Candidate best;
    for (const double sign : {1.0, -1.0}) {
        const Objective branch = [&](const Eigen::VectorXd& z, Eigen::VectorXd& grad) {
            const Eigen::VectorXd x = x_of(z);
            const Eigen::VectorXd wx = w * x;
            grad = affine.basis.transpose() * (2.0 * x + 4.0 * sign * wx);
            return x.squaredNorm() + 2.0 * sign * x.dot(wx);
        };
        LocalResult local = minimize_bfgs(branch, start, opt);
        bool converged = local.converged;
        Eigen::VectorXd z = local.z;

        if (sign * g_of(z) < 0.0) {
            // Branch minimum is on the wrong side; the constrained minimum sits on g = 0.
            double multiplier = 0.0, penalty = 10.0, last_violation = std::abs(g_of(z));
            converged = false;
            for (int outer = 0; outer < 60; ++outer) {
                const Objective lagrangian = [&](const Eigen::VectorXd& v, Eigen::VectorXd& grad) {
                    const Eigen::VectorXd x = x_of(v);
                    const Eigen::VectorXd wx = w * x;
                    const double g = x.dot(wx);
                    grad = affine.basis.transpose() * (2.0 * x + (multiplier + penalty * g) * 2.0 * wx);
                    return x.squaredNorm() + multiplier * g + 0.5 * penalty * g * g;
                };
                local = minimize_bfgs(lagrangian, z, opt);
                z = local.z;
                const double g = g_of(z);
                if (std::abs(g) < 1e-13 && local.converged) {
                    converged = true;
                    break;
                }
                multiplier += penalty * g;
                if (std::abs(g) > 0.25 * last_violation)
                    penalty = std::min(penalty * 10.0, 1e12);
                last_violation = std::abs(g);
            }
            if (!converged && std::abs(g_of(z)) < 1e-10)
                converged = true;
        }
        const double h = h_of(z);
        // A converged branch wins ties with a non-converged one.
        const double tie = 1e-12 * (1.0 + std::abs(h));
        const bool better = converged && !best.converged ? h <= best.h + tie : h < best.h;
        if (better) {
            best.z = z;
            best.h = h;
            best.converged = converged;
        }
    }
    return best;
}

HolevoSolution solve_affine(const HolevoProblem& problem, const ConstraintSystem& system, const Affine& affine,
                            const NumericOptions& opt)
{
    if (problem.num_params != 2)
        throw std::invalid_argument("numeric Holevo solver supports two parameters");
    if (opt.restarts < 1)
        throw std::invalid_argument("at least one restart is required");
    const Eigen::MatrixXd w = coupling_form(problem.basis_dim);
    const Eigen::Index k = affine.basis.cols();

    HolevoSolution best;
    best.method = SolveMethod::numeric;
    best.bound = std::numeric_limits<double>::infinity();
    best.restarts = opt.restarts;
    bool have_converged = false;
    for (int restart = 0; restart < opt.restarts; ++restart) {
        std::seed_seq seq{static_cast<std::uint32_t>(opt.seed), static_cast<std::uint32_t>(opt.seed >> 32),
                          static_cast<std::uint32_t>(restart)};
        std::mt19937_64 rng(seq);
        std::uniform_real_distribution<double> init(-opt.init_range, opt.init_range);
        Eigen::VectorXd start(k);
        for (Eigen::Index i = 0; i < k; ++i)
            start(i) = init(rng);

        const Candidate c = search_from(affine, w, start, opt);
        if (c.converged)
            ++best.converged_restarts;
        // Converged candidates always win over non-converged ones.
        const bool better = (c.converged && !have_converged) || (c.converged == have_converged && c.h < best.bound);
        if (better) {
            have_converged = have_converged || c.converged;
            best.bound = c.h;
            best.minimizer = c.z;
            best.components = affine.offset + affine.basis * c.z;
        }
    }
    const Eigen::MatrixXcd z = z_matrix(problem, best.components);
    best.z_matrix = z;
    best.bound = holevo_function(z);
    best.constraint_residual = constraint_residual(system, best.components);
    if (!have_converged)
        throw NonConvergenceError("Holevo minimization did not converge in any restart", best);
    return best;
}

Affine eliminated_parametrization(double r)
{
    const double t = std::tanh(r), sech = 1.0 / std::cosh(r);
    Affine a;
    a.offset = Eigen::VectorXd::Zero(8);
    a.basis = Eigen::MatrixXd::Zero(8, 4);
    // free = (s1, k2, k1, s2); components = (t1, j1, s1, k1, t2, j2, s2, k2)
    a.offset(0) = sech;   // t1 = sech r - s1 tanh r
    a.basis(0, 0) = -t;
    a.basis(1, 2) = t;    // j1 = k1 tanh r
    a.basis(2, 0) = 1.0;
    a.basis(3, 2) = 1.0;
    a.basis(4, 3) = -t;   // t2 = -s2 tanh r
    a.offset(5) = -sech;  // j2 = -sech r + k2 tanh r
    a.basis(5, 1) = t;
    a.basis(6, 3) = 1.0;
    a.basis(7, 1) = 1.0;
    return a;
}

} // namespace

PureModelGram gram_single_mode(double r)
{
    PureModelGram g;
    g.overlaps = Eigen::MatrixXcd::Zero(3, 3);
    g.overlaps(0, 0) = 1.0;
    g.overlaps(1, 1) = std::exp(2.0 * r) / 4.0;
    g.overlaps(2, 2) = std::exp(-2.0 * r) / 4.0;
    g.overlaps(1, 2) = kI / 4.0;
    g.overlaps(2, 1) = -kI / 4.0;
    return g;
}

PureModelGram gram_two_mode(double r)
{
    PureModelGram g;
    g.overlaps = Eigen::MatrixXcd::Zero(3, 3);
    g.overlaps(0, 0) = 1.0;
    g.overlaps(1, 1) = std::cosh(2.0 * r) / 4.0;
    g.overlaps(2, 2) = std::cosh(2.0 * r) / 4.0;
    g.overlaps(1, 2) = kI / 4.0;
    g.overlaps(2, 1) = -kI / 4.0;
    return g;
}

PureModelGram gram_from_moments(const DisplacementModel<double>& model)
{
    const auto& cov = model.probe.cov();
    const auto& mean = model.probe.mean();
    if (std::abs(cov.determinant() - 1.0) > 1e-9)
        throw DomainError("Gram data from moments needs a pure probe (det cov = 1)");
    const Eigen::Index n = cov.rows();
    const int d = static_cast<int>(model.mean_jacobian.cols());
    const Eigen::MatrixXd omega = symplectic_form(n / 2);
    const Eigen::MatrixXd w = -omega * model.mean_jacobian;
    const Eigen::MatrixXcd second = cov.cast<Complex>() + kI * omega.cast<Complex>()
        + (mean * mean.transpose()).cast<Complex>();

    PureModelGram g;
    g.dim = d;
    g.overlaps = Eigen::MatrixXcd::Zero(d + 1, d + 1);
    g.overlaps(0, 0) = 1.0;
    for (int j = 0; j < d; ++j) {
        g.overlaps(0, j + 1) = -0.5 * kI * w.col(j).dot(mean);
        g.overlaps(j + 1, 0) = std::conj(g.overlaps(0, j + 1));
        for (int k = 0; k < d; ++k)
            g.overlaps(j + 1, k + 1) = 0.25 * (w.col(j).cast<Complex>().transpose() * second * w.col(k).cast<Complex>())(0, 0);
    }
    return g;
}

Eigen::MatrixXcd HolevoProblem::gram() const
{
    Eigen::MatrixXcd full(basis_dim, num_params + 1);
    full.col(0) = Eigen::VectorXcd::Unit(basis_dim, 0);
    full.rightCols(num_params) = psi_coords;
    return full.adjoint() * full;
}

HolevoProblem make_problem(const PureModelGram& gram)
{
    const int d = gram.dim;
    const auto& g = gram.overlaps;
    if (g.rows() != d + 1 || g.cols() != d + 1)
        throw std::invalid_argument("Gram matrix has the wrong size");
    if ((g - g.adjoint()).cwiseAbs().maxCoeff() > 1e-12)
        throw DomainError("Gram matrix is not Hermitian");
    if (std::abs(g(0, 0) - 1.0) > 1e-12)
        throw DomainError("state is not normalized");

    const Eigen::VectorXcd to_state = g.row(0).tail(d).transpose(); // <psi_0|psi_j>
    const Eigen::MatrixXcd perp = g.bottomRightCorner(d, d) - to_state.conjugate() * to_state.transpose();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(perp);
    const double top = std::max(eig.eigenvalues().maxCoeff(), 0.0);

    std::vector<int> kept;
    for (int m = 0; m < d; ++m)
        if (eig.eigenvalues()(m) > 1e-12 * std::max(top, 1.0))
            kept.push_back(m);

    HolevoProblem p;
    p.num_params = d;
    p.basis_dim = 1 + static_cast<int>(kept.size());
    p.psi_coords = Eigen::MatrixXcd::Zero(p.basis_dim, d);
    p.psi_coords.row(0) = to_state.transpose();
    for (int i = 0; i < static_cast<int>(kept.size()); ++i) {
        const int m = kept[i];
        const double scale = std::sqrt(eig.eigenvalues()(m));
        for (int j = 0; j < d; ++j)
            p.psi_coords(1 + i, j) = scale * std::conj(eig.eigenvectors()(j, m));
    }
    return p;
}

HolevoProblem problem_single_mode(double r)
{
    HolevoProblem p;
    p.basis_dim = 2;
    p.psi_coords = Eigen::MatrixXcd::Zero(2, 2);
    p.psi_coords(1, 0) = std::exp(r) / 2.0;
    p.psi_coords(1, 1) = kI * std::exp(-r) / 2.0;
    return p;
}

HolevoProblem problem_two_mode(double r)
{
    HolevoProblem p;
    p.basis_dim = 3;
    p.psi_coords = Eigen::MatrixXcd::Zero(3, 2);
    p.psi_coords(1, 0) = std::cosh(r) / 2.0;
    p.psi_coords(2, 0) = std::sinh(r) / 2.0;
    p.psi_coords(1, 1) = kI * std::cosh(r) / 2.0;
    p.psi_coords(2, 1) = -kI * std::sinh(r) / 2.0;
    return p;
}

HolevoProblem with_ancilla(HolevoProblem problem, int extra_dims)
{
    if (extra_dims < 0)
        throw std::invalid_argument("negative ancilla dimension");
    problem.psi_coords.conservativeResize(problem.basis_dim + extra_dims, Eigen::NoChange);
    problem.psi_coords.bottomRows(extra_dims).setZero();
    problem.basis_dim += extra_dims;
    return problem;
}

ConstraintSystem assemble_constraints(const HolevoProblem& problem)
{
    const int d = problem.num_params;
    const int per = 2 * (problem.basis_dim - 1);
    ConstraintSystem sys;
    sys.matrix = Eigen::MatrixXd::Zero(d * d, d * per);
    sys.rhs = Eigen::VectorXd::Zero(d * d);
    // tr(d_k rho X_j) = 2 Re sum_m x_jm c_km
    for (int k = 0; k < d; ++k) {
        for (int j = 0; j < d; ++j) {
            const int row = k * d + j;
            for (int m = 1; m < problem.basis_dim; ++m) {
                const Complex c = problem.psi_coords(m, k);
                sys.matrix(row, j * per + 2 * (m - 1)) = 2.0 * c.real();
                sys.matrix(row, j * per + 2 * (m - 1) + 1) = -2.0 * c.imag();
            }
            sys.rhs(row) = j == k ? 1.0 : 0.0;
        }
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(sys.matrix);
    qr.setThreshold(1e-12);
    if (sys.matrix.cols() == 0 || qr.rank() < d * d)
        throw DegenerateModelError("derivative vectors are linearly dependent; unbiasedness constraints are infeasible");
    return sys;
}

double constraint_residual(const ConstraintSystem& system, const Eigen::VectorXd& components)
{
    return (system.matrix * components - system.rhs).cwiseAbs().maxCoeff();
}

Eigen::MatrixXcd z_matrix(const HolevoProblem& problem, const Eigen::VectorXd& components)
{
    const int d = problem.num_params;
    const int per = 2 * (problem.basis_dim - 1);
    if (components.size() != d * per)
        throw std::invalid_argument("component vector has the wrong length");
    Eigen::MatrixXcd rows(d, problem.basis_dim - 1);
    for (int j = 0; j < d; ++j)
        for (int m = 0; m < problem.basis_dim - 1; ++m)
            rows(j, m) = Complex(components(j * per + 2 * m), components(j * per + 2 * m + 1));
    return rows * rows.adjoint();
}

double holevo_function(const Eigen::MatrixXcd& z)
{
    return trace_re_plus_trace_abs_im<double>(z);
}

double im_coupling(const HolevoProblem& problem, const Eigen::VectorXd& components)
{
    return z_matrix(problem, components)(1, 0).imag();
}

Eigen::VectorXd two_mode_components(const Eigen::Vector4d& free_vars, double r)
{
    const Affine a = eliminated_parametrization(r);
    return a.offset + a.basis * free_vars;
}

double two_mode_coupling(const Eigen::Vector4d& free_vars, double r)
{
    const Eigen::VectorXd x = two_mode_components(free_vars, r);
    return x.dot(coupling_form(3) * x);
}

double holevo_objective(const Eigen::Vector4d& free_vars, double r)
{
    const Eigen::VectorXd x = two_mode_components(free_vars, r);
    return x.squaredNorm() + 2.0 * std::abs(x.dot(coupling_form(3) * x));
}

std::vector<KktCandidate> kkt_case_analysis(double r)
{
    if (r == 0.0)
        throw DomainError("KKT case split assumes r != 0; r = 0 is the single-mode problem");
    const Affine a = eliminated_parametrization(r);
    const Eigen::MatrixXd w = coupling_form(3);
    const double ch = std::cosh(r), sh = std::sinh(r);

    const auto make = [&](std::string label, double lambda, double shared, double branch) {
        KktCandidate c;
        c.label = std::move(label);
        c.lambda = lambda;
        c.free_vars << shared, shared, 0.0, 0.0; // s1 = k2, k1 = s2 = 0
        const Eigen::VectorXd x = a.offset + a.basis * c.free_vars;
        const Eigen::VectorXd wx = w * x;
        c.coupling = x.dot(wx);
        c.objective = x.squaredNorm() + 2.0 * std::abs(c.coupling);
        // grad(f + branch*2g) - branch*lambda*grad(g)
        const Eigen::VectorXd residual = a.basis.transpose() * (2.0 * x + branch * (4.0 - 2.0 * lambda) * wx);
        c.stationarity_residual = residual.cwiseAbs().maxCoeff();
        return c;
    };

    std::vector<KktCandidate> out;
    // Case 1: s1 = k2 = lambda sinh r / (4 cosh^2 r - lambda).
    const auto case1 = [&](const std::string& label, double lambda) {
        auto c = make(label, lambda, lambda * sh / (4.0 * ch * ch - lambda), 1.0);
        c.feasible = c.coupling >= -1e-12 && lambda >= 0.0;
        return c;
    };
    out.push_back(case1("1a", 0.0));
    out.push_back(case1("1b-", 4.0 * std::exp(-r) * ch));
    out.push_back(case1("1b+", 4.0 * std::exp(r) * ch));
    // Case 2: lambda = 0, stationary point of f - 2g at s1 = k2 = csch r.
    auto c2 = make("2", 0.0, 1.0 / sh, -1.0);
    c2.feasible = c2.coupling < 0.0;
    out.push_back(c2);
    return out;
}

HolevoSolution solve_analytic(ProbeKind kind, double r)
{
    HolevoSolution sol;
    sol.method = SolveMethod::analytic_kkt;
    if (kind == ProbeKind::single_mode || r == 0.0) {
        const HolevoProblem p = problem_single_mode(r);
        // <e0|X1|e1> = e^{-r}, <e0|X2|e1> = -i e^{r}
        sol.components = Eigen::VectorXd::Zero(4);
        sol.components(0) = std::exp(-r);
        sol.components(3) = -std::exp(r);
        sol.minimizer = Eigen::VectorXd();
        sol.z_matrix = z_matrix(p, sol.components);
        sol.bound = 2.0 + 2.0 * std::cosh(2.0 * r);
        sol.constraint_residual = constraint_residual(assemble_constraints(p), sol.components);
        return sol;
    }

    const auto candidates = kkt_case_analysis(r);
    const KktCandidate* best = nullptr;
    for (const auto& c : candidates)
        if (c.feasible && (best == nullptr || c.objective < best->objective))
            best = &c;
    if (best == nullptr || best->label != "1b-")
        throw std::logic_error("KKT case analysis did not select branch 1b");

    const HolevoProblem p = problem_two_mode(r);
    sol.minimizer = best->free_vars;
    sol.components = two_mode_components(best->free_vars, r);
    sol.z_matrix = z_matrix(p, sol.components);
    sol.bound = 4.0 * std::exp(-2.0 * r);
    sol.constraint_residual = constraint_residual(assemble_constraints(p), sol.components);
    return sol;
}

HolevoSolution solve_numeric(const HolevoProblem& problem, const NumericOptions& options)
{
    const ConstraintSystem sys = assemble_constraints(problem);
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(sys.matrix);
    Affine affine;
    affine.offset = cod.solve(sys.rhs);
    Eigen::FullPivLU<Eigen::MatrixXd> lu(sys.matrix);
    affine.basis = lu.dimensionOfKernel() > 0 ? Eigen::MatrixXd(lu.kernel()) : Eigen::MatrixXd(sys.matrix.cols(), 0);
    if (affine.basis.cols() > 0)
        affine.basis = Eigen::HouseholderQR<Eigen::MatrixXd>(affine.basis).householderQ()
            * Eigen::MatrixXd::Identity(affine.basis.rows(), affine.basis.cols());
    return solve_affine(problem, sys, affine, options);
}

HolevoSolution solve_numeric_eliminated(double r, const NumericOptions& options)
{
    const HolevoProblem p = problem_two_mode(r);
    return solve_affine(p, assemble_constraints(p), eliminated_parametrization(r), options);
}

} // namespace cvmb
