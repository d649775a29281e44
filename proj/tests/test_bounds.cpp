#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "cvmb/bounds.hpp"

using namespace cvmb;
using Eigen::MatrixXd;

namespace {

DisplacementModel<double> model(double r, double n, ProbeKind kind)
{
    return displacement_model(make_probe(r, n, kind), 0);
}

std::vector<double> r_grid()
{
    std::vector<double> rs;
    for (int i = 0; i <= 15; ++i)
        rs.push_back(0.1 * i);
    return rs;
}

} // namespace

TEST_CASE("sld_bound examples")
{
    CHECK(sld_bound(model(0.0, 0.0, ProbeKind::single_mode)).value == doctest::Approx(2.0).epsilon(1e-14));
    // (2 + 4*0.1) / cosh(1)
    CHECK(sld_bound(model(0.5, 0.1, ProbeKind::two_mode)).value == doctest::Approx(1.5553302567933249).epsilon(1e-13));
    for (double n : {0.0, 0.3, 2.0})
        CHECK(sld_bound(model(0.0, n, ProbeKind::two_mode)).value == doctest::Approx(2 + 4 * n).epsilon(1e-13));
    CHECK(sld_bound(model(0.5, 0.1, ProbeKind::two_mode)).kind == BoundKind::sld);
}

TEST_CASE("rld_bound examples")
{
    // 2 + 2 cosh 2
    CHECK(rld_bound(model(1.0, 0.0, ProbeKind::single_mode)).value == doctest::Approx(9.5243913821672629).epsilon(1e-13));
    for (double r : {0.3, 1.0, 1.5})
        CHECK(std::abs(rld_bound(model(r, 0.0, ProbeKind::two_mode)).value) < 1e-12);
    // r = 0: two vacua, no entanglement, same as a single vacuum mode
    CHECK(rld_bound(model(0.0, 0.0, ProbeKind::two_mode)).value == doctest::Approx(4.0).epsilon(1e-13));
    // 0.88 / (1.2 - 1)
    CHECK(rld_bound(model(0.0, 0.1, ProbeKind::two_mode)).value == doctest::Approx(4.4).epsilon(1e-12));
}

TEST_CASE("closed_form_bounds examples")
{
    const auto s = closed_form_bounds(0.0, 0.0, ProbeKind::single_mode);
    CHECK(s.sld == 2.0);
    CHECK(s.rld == 4.0);

    const auto t = closed_form_bounds(0.5, 0.1, ProbeKind::two_mode);
    CHECK(t.sld == doctest::Approx(1.5553302567933249).epsilon(1e-14));
    CHECK(t.rld == doctest::Approx(1.0332315907396572).epsilon(1e-14));

    const auto u = closed_form_bounds(0.0, 0.1, ProbeKind::two_mode);
    CHECK(u.sld == doctest::Approx(2.4).epsilon(1e-14));
    CHECK(u.rld == doctest::Approx(4.4).epsilon(1e-12));

    CHECK(closed_form_bounds(0.0, 0.0, ProbeKind::two_mode).rld == 4.0);
    CHECK(closed_form_bounds(1e-3, 0.0, ProbeKind::two_mode).rld == 0.0);
    CHECK_THROWS_AS(closed_form_bounds(0.1, -1.0, ProbeKind::two_mode), DomainError);
}

TEST_CASE("moment formulas agree with the closed forms on the grid")
{
    for (auto kind : {ProbeKind::single_mode, ProbeKind::two_mode}) {
        for (double n : {0.0, 0.1, 0.5, 2.0}) {
            for (double r : r_grid()) {
                const auto m = model(r, n, kind);
                const auto cf = closed_form_bounds(r, n, kind);
                CHECK(std::abs(sld_bound(m).value - cf.sld) < 1e-9);
                CHECK(std::abs(rld_bound(m).value - cf.rld) < 1e-9);
                if (kind == ProbeKind::single_mode)
                    CHECK(cf.rld >= cf.sld);
            }
        }
    }
}

TEST_CASE("RLD is continuous as N -> 0 for the two-mode probe")
{
    for (double r : {0.2, 0.8}) {
        double previous = rld_bound(model(r, 1e-2, ProbeKind::two_mode)).value;
        for (double n : {1e-3, 1e-5, 1e-8}) {
            const double v = rld_bound(model(r, n, ProbeKind::two_mode)).value;
            CHECK(v < previous);
            CHECK(v == doctest::Approx(closed_form_bounds(r, n, ProbeKind::two_mode).rld).epsilon(1e-6));
            previous = v;
        }
    }
}

TEST_CASE("bounds do not depend on which mode carries the two-mode displacement")
{
    const auto probe = make_probe(0.6, 0.2, ProbeKind::two_mode);
    CHECK(sld_bound(displacement_model(probe, 1)).value == doctest::Approx(sld_bound(displacement_model(probe, 0)).value));
    CHECK(rld_bound(displacement_model(probe, 1)).value == doctest::Approx(rld_bound(displacement_model(probe, 0)).value));
}

TEST_CASE("degenerate models")
{
    auto m = model(0.5, 0.1, ProbeKind::two_mode);
    m.mean_jacobian.col(1) = m.mean_jacobian.col(0);
    CHECK_THROWS_AS(sld_bound(m), DegenerateModelError);
    CHECK_THROWS_AS(rld_bound(m), DegenerateModelError);
    CHECK_THROWS_AS(classical_fisher_gaussian<double>(MatrixXd::Identity(2, 2), MatrixXd::Zero(2, 2)),
                    DegenerateModelError);
}

TEST_CASE("classical_fisher_gaussian")
{
    const MatrixXd eye = MatrixXd::Identity(2, 2);
    CHECK(classical_fisher_gaussian<double>(eye, eye).isApprox(eye));
    MatrixXd sigma = MatrixXd::Zero(2, 2);
    sigma(0, 0) = 2.0;
    sigma(1, 1) = 0.25;
    const MatrixXd f = classical_fisher_gaussian<double>(eye, sigma);
    CHECK(f(0, 0) == doctest::Approx(0.5));
    CHECK(f(1, 1) == doctest::Approx(4.0));
    CHECK(f(0, 1) == 0.0);

    // Dual homodyne outcome model: mean = theta / sqrt2, cov = (2N+1) e^{-2r} I.
    for (double n : {0.0, 0.1, 2.0}) {
        for (double r : {0.0, 0.5, 1.2}) {
            const MatrixXd jac = std::sqrt(0.5) * eye;
            const MatrixXd cov = (2 * n + 1) * std::exp(-2 * r) * eye;
            CHECK(std::abs(classical_bound<double>(jac, cov).value - dual_homodyne_mse_analytic(r, n).value) < 1e-9);
        }
    }
}

TEST_CASE("dual_homodyne_mse_analytic")
{
    CHECK(dual_homodyne_mse_analytic(0.0, 0.0).value == 4.0);
    CHECK(dual_homodyne_mse_analytic(0.5, 0.1).value == doctest::Approx(1.7658213176229231).epsilon(1e-14));
    double previous = dual_homodyne_mse_analytic(0.0, 0.0).value;
    for (int i = 1; i < 40; ++i) {
        const double v = dual_homodyne_mse_analytic(0.25 * i, 0.0).value;
        CHECK(v < previous);
        CHECK(v > 0.0);
        previous = v;
    }
    CHECK(dual_homodyne_mse_analytic(10.0, 0.0).value < 1e-8);
    // single-mode dual homodyne saturates the RLD bound
    for (double n : {0.0, 0.5})
        CHECK(dual_homodyne_mse_analytic(0.7, n, ProbeKind::single_mode).value
              == doctest::Approx(closed_form_bounds(0.7, n, ProbeKind::single_mode).rld));
}

TEST_CASE("dual homodyne misses the SLD/RLD bounds somewhere at N = 0.1")
{
    bool exceeds = false;
    for (int i = 1; i <= 15; ++i) {
        const double r = 0.1 * i;
        const auto cf = closed_form_bounds(r, 0.1, ProbeKind::two_mode);
        if (dual_homodyne_mse_analytic(r, 0.1).value > std::max(cf.sld, cf.rld))
            exceeds = true;
    }
    CHECK(exceeds);
}

TEST_CASE("float instantiation")
{
    const auto probe = make_probe<float>(0.5f, 0.1f, ProbeKind::two_mode);
    CHECK(sld_bound(displacement_model(probe, 0)).value == doctest::Approx(1.55533f).epsilon(1e-5));
}
