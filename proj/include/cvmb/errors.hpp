#ifndef CVMB_ERRORS_HPP
#define CVMB_ERRORS_HPP

#include <stdexcept>

namespace cvmb {

/// Argument outside the mathematical domain (negative photon number, tau > 1, ...).
class DomainError : public std::domain_error
{
public:
    using std::domain_error::domain_error;
};

/// Singular covariance, rank-deficient Jacobian or infeasible unbiasedness constraints.
class DegenerateModelError : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

} // namespace cvmb

#endif
