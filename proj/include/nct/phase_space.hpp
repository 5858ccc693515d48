#pragma once

#include <functional>
#include <vector>

#include <Eigen/Dense>

namespace nct {

struct PhasePoint {
    double x = 0;
    double p = 0;
};

enum class StateKind { single_photon, squeezed_single_photon, vacuum_control };

// Analytic phase-space model.  `lambda` is the anisotropic rescale
// (x,p) -> (lambda*x, p/lambda); it acts only on squeezed_single_photon.
struct StateModel {
    StateKind kind = StateKind::single_photon;
    double lambda = 1.0;

    void validate() const;
    double effective_lambda() const;
};

struct Marginal {
    double theta = 0;
    std::function<double(double)> density;
};

inline constexpr int kDefaultMaxMomentOrder = 64;

// W at a phase-space point.  Single photon: (1/pi)(2r^2-1)e^{-r^2};
// squeezed variants evaluate the base function at (lambda*x, p/lambda).
double eval_wigner(const StateModel& model, PhasePoint pt);

// Scale factor u(lambda,theta) = sqrt(cos^2(theta)/lambda^2 + lambda^2 sin^2(theta)).
// Continuous on the whole angle range, u(lambda, pi/2) = lambda.
double scale_u(double lambda, double theta);

// Quadrature distribution at angle theta: the line integral of W
// perpendicular to the (cos theta, sin theta) direction.
Marginal radon_marginal(const StateModel& model, double theta);

// Density of the base (lambda = 1) marginal for `kind`; theta-independent by
// rotational symmetry.  Squeezed marginals are base(s/u)/u.
double base_marginal_density(StateKind kind, double s);

// CDF of the base marginal, in closed form (used by samplers and tests).
double base_marginal_cdf(StateKind kind, double s);

// <Q_theta^order> under the model; odd orders vanish.  Throws OrderTooLarge
// beyond max_order (numerical-stability guard).
double quadrature_moment(const StateModel& model, double theta, int order,
                         int max_order = kDefaultMaxMomentOrder);

// Base-model moment <Q^order> at lambda = 1, computed by adaptive quadrature
// of the marginal and cached per (kind, order).  Extended precision so that
// high-degree polynomial statistics downstream keep ~1e-15 relative accuracy.
long double base_moment_ld(StateKind kind, int order, int max_order = kDefaultMaxMomentOrder);

// g^{ii'} = 2(<Q^{i+i'}> - <Q^i><Q^{i'}>), entries for orders 1..max_order.
// Positive semidefinite (it is twice a moment covariance matrix).
Eigen::MatrixXd covariance_matrix(const StateModel& model, double theta, int max_order);

}  // namespace nct
