#include "nct/phase_space.hpp"

#include <array>
#include <cmath>
#include <mutex>
#include <shared_mutex>
#include <string>

#include "nct/errors.hpp"
#include "nct/quadrature.hpp"

namespace nct {

namespace {

constexpr long double kPiL = 3.14159265358979323846264338327950288L;
constexpr double kPi = 3.14159265358979323846;

// Integration cutoff for the base marginals: densities decay like e^{-s^2},
// so the truncated tail mass beyond |s| = 12 is below 1e-62.
constexpr long double kTail = 12.0L;

long double base_density_ld(StateKind kind, long double s) {
    const long double inv_sqrt_pi = 0.5641895835477562869480794515607726L;
    if (kind == StateKind::vacuum_control) return inv_sqrt_pi * std::exp(-s * s);
    return 2.0L * inv_sqrt_pi * s * s * std::exp(-s * s);
}

}  // namespace

void StateModel::validate() const {
    if (!(lambda > 0) || !std::isfinite(lambda))
        throw PreconditionError("state model: lambda must be positive and finite");
}

double StateModel::effective_lambda() const {
    return kind == StateKind::squeezed_single_photon ? lambda : 1.0;
}

double eval_wigner(const StateModel& model, PhasePoint pt) {
    model.validate();
    const double l = model.effective_lambda();
    const double x = l * pt.x;
    const double p = pt.p / l;
    const double r2 = x * x + p * p;
    if (model.kind == StateKind::vacuum_control) return std::exp(-r2) / kPi;
    return (2.0 * r2 - 1.0) * std::exp(-r2) / kPi;
}

double scale_u(double lambda, double theta) {
    if (!(lambda > 0)) throw PreconditionError("scale_u: lambda must be positive");
    if (lambda == 1.0) return 1.0;  // exact; sqrt(cos^2 + sin^2) would round
    const double c = std::cos(theta) / lambda;
    const double s = lambda * std::sin(theta);
    return std::sqrt(c * c + s * s);
}

double base_marginal_density(StateKind kind, double s) {
    return static_cast<double>(base_density_ld(kind, s));
}

double base_marginal_cdf(StateKind kind, double s) {
    const double gauss = 0.5 * (1.0 + std::erf(s));
    if (kind == StateKind::vacuum_control) return gauss;
    const double inv_sqrt_pi = 0.56418958354775628695;
    return gauss - s * std::exp(-s * s) * inv_sqrt_pi;
}

Marginal radon_marginal(const StateModel& model, double theta) {
    model.validate();
    if (!(theta >= 0.0 && theta < kPi))
        throw PreconditionError("radon_marginal: theta must lie in [0, pi)");
    const double u = scale_u(model.effective_lambda(), theta);
    const StateKind kind = model.kind;
    Marginal m;
    m.theta = theta;
    m.density = [kind, u](double s) { return base_marginal_density(kind, s / u) / u; };
    return m;
}

namespace {

struct MomentCache {
    std::shared_mutex mutex;
    // Indexed by even order / 2; odd orders are zero by symmetry.
    std::vector<long double> even_moments;
};

MomentCache& cache_for(StateKind kind) {
    static std::array<MomentCache, 3> caches;
    return caches[static_cast<std::size_t>(kind)];
}

long double compute_even_moment(StateKind kind, int order) {
    QuadratureOptions opt;
    opt.rel_tol = 1e-18;
    // s^order * density is even: integrate the positive half and double.
    const long double half = integrate(
        [&](long double s) { return std::pow(s, static_cast<long double>(order)) * base_density_ld(kind, s); },
        0.0L, kTail, opt);
    return 2.0L * half;
}

}  // namespace

long double base_moment_ld(StateKind kind, int order, int max_order) {
    if (order < 0) throw PreconditionError("moment order must be >= 0");
    if (order > max_order)
        throw OrderTooLarge("moment order " + std::to_string(order) + " exceeds configured maximum " +
                            std::to_string(max_order));
    if (order == 0) return 1.0L;
    if (order % 2 == 1) return 0.0L;

    const std::size_t slot = static_cast<std::size_t>(order / 2);
    MomentCache& cache = cache_for(kind);
    {
        std::shared_lock lock(cache.mutex);
        if (slot < cache.even_moments.size() && cache.even_moments[slot] > 0)
            return cache.even_moments[slot];
    }
    const long double value = compute_even_moment(kind, order);
    {
        std::unique_lock lock(cache.mutex);
        if (cache.even_moments.size() <= slot) cache.even_moments.resize(slot + 1, -1.0L);
        cache.even_moments[slot] = value;
    }
    return value;
}

double quadrature_moment(const StateModel& model, double theta, int order, int max_order) {
    model.validate();
    const long double base = base_moment_ld(model.kind, order, max_order);
    if (order % 2 == 1) return 0.0;
    const long double u = scale_u(model.effective_lambda(), theta);
    return static_cast<double>(std::pow(u, static_cast<long double>(order)) * base);
}

Eigen::MatrixXd covariance_matrix(const StateModel& model, double theta, int max_order) {
    model.validate();
    if (max_order < 1) throw PreconditionError("covariance_matrix: max_order must be >= 1");
    const int cap = std::max(kDefaultMaxMomentOrder, 2 * max_order);
    const long double u = scale_u(model.effective_lambda(), theta);

    std::vector<long double> mu(static_cast<std::size_t>(2 * max_order) + 1);
    for (int i = 0; i <= 2 * max_order; ++i)
        mu[static_cast<std::size_t>(i)] =
            std::pow(u, static_cast<long double>(i)) * base_moment_ld(model.kind, i, cap);

    Eigen::MatrixXd g(max_order, max_order);
    for (int i = 1; i <= max_order; ++i)
        for (int j = i; j <= max_order; ++j) {
            const long double v = 2.0L * (mu[static_cast<std::size_t>(i + j)] -
                                          mu[static_cast<std::size_t>(i)] * mu[static_cast<std::size_t>(j)]);
            g(i - 1, j - 1) = static_cast<double>(v);
            g(j - 1, i - 1) = static_cast<double>(v);
        }
    return g;
}

}  // namespace nct
