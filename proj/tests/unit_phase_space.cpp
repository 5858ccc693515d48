#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <vector>

#include <Eigen/Eigenvalues>

#include "nct/errors.hpp"
#include "nct/phase_space.hpp"
#include "nct/quadrature.hpp"

using namespace nct;

namespace {

constexpr double kPi = 3.14159265358979323846;

const StateModel kSingle{StateKind::single_photon, 1.0};
const StateModel kVacuum{StateKind::vacuum_control, 1.0};

StateModel squeezed(double lambda) { return {StateKind::squeezed_single_photon, lambda}; }

// Line integral of W perpendicular to direction theta at offset s; the
// independent oracle for every marginal.
double marginal_by_line_integral(const StateModel& model, double theta, double s) {
    const double c = std::cos(theta), n = std::sin(theta);
    return integrate(
        [&](double t) {
            return eval_wigner(model, {s * c - t * n, s * n + t * c});
        },
        -20.0, 20.0, {1e-10, 1e-14, 20000});
}

}  // namespace

TEST_CASE("phase-space values at the origin") {
    CHECK(eval_wigner(kSingle, {0, 0}) == doctest::Approx(-1.0 / kPi).epsilon(1e-15));
    CHECK(eval_wigner(kVacuum, {0, 0}) == doctest::Approx(1.0 / kPi).epsilon(1e-15));
}

TEST_CASE("squeezing is a coordinate rescale of the base function") {
    CHECK(eval_wigner(squeezed(2.0), {0.5, 2.0}) ==
          doctest::Approx(eval_wigner(kSingle, {1.0, 1.0})).epsilon(1e-15));
    // lambda is ignored by the unsqueezed kinds.
    CHECK(eval_wigner({StateKind::single_photon, 3.0}, {0.4, 0.7}) ==
          eval_wigner(kSingle, {0.4, 0.7}));
}

TEST_CASE("every model is normalized in phase space") {
    for (const StateModel& model : {kSingle, kVacuum, squeezed(2.0), squeezed(0.4)}) {
        const double l = model.effective_lambda();
        const double lx = 8.0 / l, lp = 8.0 * l;
        const double v = integrate2d(
            [&](double x, double p) { return eval_wigner(model, {x, p}); }, -lx, lx,
            [&](double) { return -lp; }, [&](double) { return lp; }, {1e-9, 1e-10, 40000});
        CHECK(std::abs(v - 1.0) < 1e-6);
    }
}

TEST_CASE("model validation rejects non-positive lambda") {
    CHECK_THROWS_AS(eval_wigner({StateKind::squeezed_single_photon, 0.0}, {0, 0}),
                    PreconditionError);
    CHECK_THROWS_AS(eval_wigner({StateKind::squeezed_single_photon, -2.0}, {0, 0}),
                    PreconditionError);
}

TEST_CASE("marginals match the line-integral oracle") {
    for (const StateModel& model : {kSingle, kVacuum, squeezed(2.0)}) {
        for (double theta : {0.0, 0.3, 1.2}) {
            const Marginal marg = radon_marginal(model, theta);
            for (double s : {0.0, 0.5, 1.2, 2.5}) {
                CHECK(std::abs(marg.density(s) - marginal_by_line_integral(model, theta, s)) < 1e-6);
            }
        }
    }
}

TEST_CASE("single-photon marginal vanishes at the origin and is isotropic") {
    CHECK(std::abs(radon_marginal(kSingle, 0.7).density(0.0)) < 1e-12);
    const Marginal a = radon_marginal(kSingle, 0.0);
    const Marginal b = radon_marginal(kSingle, kPi / 2);
    for (double s = -3.0; s <= 3.0; s += 0.25) CHECK(a.density(s) == doctest::Approx(b.density(s)).epsilon(1e-14));
}

TEST_CASE("squeezed marginal is the base marginal rescaled by 1/u") {
    // u(2, 0) = 1/2, so the theta = 0 marginal is 2 * base(2s).
    const Marginal m = radon_marginal(squeezed(2.0), 0.0);
    for (double s : {0.1, 0.5, 1.0, 1.7})
        CHECK(m.density(s) ==
              doctest::Approx(2.0 * base_marginal_density(StateKind::squeezed_single_photon, 2.0 * s))
                  .epsilon(1e-12));

    // General angle: density(s) = base(s/u)/u pointwise.
    for (double lambda : {0.5, 3.0}) {
        for (double theta : {0.4, 1.0, 2.2}) {
            const double u = scale_u(lambda, theta);
            const Marginal marg = radon_marginal(squeezed(lambda), theta);
            for (double s : {0.0, 0.8, 2.1})
                CHECK(std::abs(marg.density(s) -
                               base_marginal_density(StateKind::single_photon, s / u) / u) < 1e-9);
        }
    }
}

TEST_CASE("marginals are normalized probability densities") {
    for (const StateModel& model : {kSingle, kVacuum, squeezed(5.0)}) {
        for (double theta : {0.0, 0.7}) {
            const double span = 9.0 * scale_u(model.effective_lambda(), theta);
            const Marginal marg = radon_marginal(model, theta);
            const double norm = integrate([&](double s) { return marg.density(s); }, -span, span,
                                          {1e-11, 1e-13, 40000});
            CHECK(std::abs(norm - 1.0) < 1e-9);
        }
    }
    CHECK_THROWS_AS(radon_marginal(kSingle, -0.1), PreconditionError);
    CHECK_THROWS_AS(radon_marginal(kSingle, kPi), PreconditionError);
}

TEST_CASE("closed-form marginal CDF differentiates to the density") {
    for (StateKind kind : {StateKind::single_photon, StateKind::vacuum_control}) {
        CHECK(std::abs(base_marginal_cdf(kind, -9.0)) < 1e-12);
        CHECK(std::abs(base_marginal_cdf(kind, 9.0) - 1.0) < 1e-12);
        for (double s : {-2.0, -0.4, 0.0, 1.3}) {
            const double by_quadrature =
                integrate([&](double t) { return base_marginal_density(kind, t); }, -9.0, s);
            CHECK(std::abs(base_marginal_cdf(kind, s) - by_quadrature) < 1e-10);
        }
    }
}

TEST_CASE("quadrature moments: odd vanish, low even orders have closed values") {
    CHECK(quadrature_moment(kSingle, 0.9, 1) == 0.0);
    CHECK(quadrature_moment(kSingle, 0.9, 3) == 0.0);
    CHECK(quadrature_moment(kSingle, 0.2, 0) == doctest::Approx(1.0).epsilon(1e-12));
    // <Q^2> = 3/2 and <Q^4> = 15/4 for the single photon; vacuum halves to 1/2, 3/4.
    CHECK(quadrature_moment(kSingle, 0.2, 2) == doctest::Approx(1.5).epsilon(1e-10));
    CHECK(quadrature_moment(kSingle, 0.2, 4) == doctest::Approx(3.75).epsilon(1e-10));
    CHECK(quadrature_moment(kVacuum, 1.1, 2) == doctest::Approx(0.5).epsilon(1e-10));
    CHECK(quadrature_moment(kVacuum, 1.1, 4) == doctest::Approx(0.75).epsilon(1e-10));
}

TEST_CASE("moments are angle-independent for rotationally symmetric models") {
    for (int order : {2, 6, 12}) {
        const double ref = quadrature_moment(kSingle, 0.0, order);
        for (int i = 1; i < 32; ++i) {
            const double theta = kPi * i / 32.0;
            CHECK(std::abs(quadrature_moment(kSingle, theta, order) - ref) < 1e-9 * std::max(1.0, ref));
        }
    }
}

TEST_CASE("closed-form moments agree with direct integration of the marginal") {
    // u(3, 0) = 1/3, so the order-2 moment shrinks by 1/9.
    CHECK(quadrature_moment(squeezed(3.0), 0.0, 2) == doctest::Approx(1.5 / 9.0).epsilon(1e-10));
    struct Probe {
        StateModel model;
        double theta;
        int order;
    };
    for (const Probe& pr : {Probe{squeezed(2.0), 0.3, 2}, Probe{squeezed(2.0), 0.3, 4},
                            Probe{squeezed(0.5), 1.0, 6}, Probe{kVacuum, 0.9, 4}}) {
        const double span = 9.0 * scale_u(pr.model.effective_lambda(), pr.theta);
        const Marginal marg = radon_marginal(pr.model, pr.theta);
        const double by_quadrature = integrate(
            [&](double s) { return std::pow(s, pr.order) * marg.density(s); }, -span, span,
            {1e-11, 1e-13, 40000});
        const double closed = quadrature_moment(pr.model, pr.theta, pr.order);
        CHECK(std::abs(closed - by_quadrature) < 1e-9 * std::max(1.0, std::abs(closed)));
    }
}

TEST_CASE("moment order guard throws beyond the configured maximum") {
    CHECK_THROWS_AS(quadrature_moment(kSingle, 0.0, 66), OrderTooLarge);
    CHECK_NOTHROW(quadrature_moment(kSingle, 0.0, 66, 80));
}

TEST_CASE("covariance matrix values and positivity") {
    const Eigen::MatrixXd g = covariance_matrix(kSingle, 0.0, 4);
    // g^{11} = 2<Q^2> = 3; odd-total entries vanish.
    CHECK(g(0, 0) == doctest::Approx(3.0).epsilon(1e-10));
    CHECK(std::abs(g(0, 1)) < 1e-12);
    const Eigen::MatrixXd gt = g.transpose();
    CHECK((g - gt).cwiseAbs().maxCoeff() < 1e-12);

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(g);
    CHECK(eig.eigenvalues().minCoeff() > -1e-9);

    CHECK_THROWS_AS(covariance_matrix(kSingle, 0.0, 0), PreconditionError);
}

TEST_CASE("covariance entries agree with direct integration of the marginal") {
    const StateModel model = squeezed(2.0);
    const double theta = 0.9;
    const Marginal marg = radon_marginal(model, theta);
    const double span = 9.0 * scale_u(model.effective_lambda(), theta);
    auto raw = [&](int k) {
        return integrate([&](double s) { return std::pow(s, k) * marg.density(s); }, -span, span,
                         {1e-11, 1e-13, 40000});
    };
    std::vector<double> m(7);
    for (int k = 0; k <= 6; ++k) m[static_cast<std::size_t>(k)] = raw(k);

    const Eigen::MatrixXd g = covariance_matrix(model, theta, 3);
    for (int i = 1; i <= 3; ++i)
        for (int ip = 1; ip <= 3; ++ip) {
            const double want =
                2.0 * (m[static_cast<std::size_t>(i + ip)] -
                       m[static_cast<std::size_t>(i)] * m[static_cast<std::size_t>(ip)]);
            CHECK(std::abs(g(i - 1, ip - 1) - want) < 1e-8 * std::max(1.0, std::abs(want)));
        }
}

TEST_CASE("scale factor u: exact anchors and continuity at pi/2") {
    CHECK(scale_u(1.0, 0.123) == 1.0);
    CHECK(scale_u(2.0, 0.0) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(scale_u(2.0, kPi / 2) == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(std::abs(scale_u(2.0, kPi / 2 - 1e-8) - 2.0) < 1e-6);
    CHECK_THROWS_AS(scale_u(0.0, 0.3), PreconditionError);
}

TEST_CASE("angular integrals of inverse u powers have closed values") {
    for (double lambda : {0.2, 1.0, 5.0}) {
        const double i2 = integrate(
            [&](double t) {
                const double u = scale_u(lambda, t < 0 ? t + kPi : t);
                return 1.0 / (u * u);
            },
            -kPi / 2, kPi / 2, {1e-11, 1e-13, 40000});
        CHECK(std::abs(i2 - kPi) < 1e-8);

        const double i4 = integrate(
            [&](double t) {
                const double u = scale_u(lambda, t < 0 ? t + kPi : t);
                const double u2 = u * u;
                return 1.0 / (u2 * u2);
            },
            -kPi / 2, kPi / 2, {1e-11, 1e-13, 40000});
        CHECK(std::abs(i4 - (kPi / 2) * (lambda * lambda + 1.0 / (lambda * lambda))) < 1e-8);
    }
}
