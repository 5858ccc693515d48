#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "nct/phase_space.hpp"
#include "nct/sampler.hpp"
#include "nct/elementary_test.hpp"

namespace nct {

// Normalized indicator of a stretched disc: value 1/(pi a^2) where
// ((l(x-x0))^2 + ((p-p0)/l)^2) <= a^2, zero outside.
struct FilterSpec {
    double a = 1.0;
    double l = 1.0;
    PhasePoint center{0.0, 0.0};

    void validate() const;  // throws PreconditionError unless a > 0, l > 0
};

// Back-projection kernel parameters.  epsilon = 0 is the raw kernel; for
// epsilon > 0 the band a < |s|/u < a+epsilon is excised (set to zero).
struct KernelSpec {
    double a = 1.0;
    double lambda = 1.0;
    double epsilon = 0.0;

    void validate() const;  // a > 0, lambda > 0, epsilon >= 0
};

struct MCEstimate {
    double mean = 0.0;
    double variance = 0.0;     // variance of the mean estimator
    double delta_bound = 0.0;  // excision systematic-error bound
    std::int64_t M = 0;
    double ratio = 0.0;        // mean / (sqrt(variance) + delta_bound)
};

// Symmetric middle-point partition of [-pi/2, pi/2] with theta = 0 as a
// partition boundary.  cuts[j] are the cell middle points (ascending,
// symmetric about 0), widths[j] the cell widths.
struct FiniteCutPlan {
    double lambda = 1.0;
    std::vector<double> cuts;
    std::vector<double> widths;
    std::vector<double> weights;         // w_j = width_j / pi
    std::vector<double> scaled_weights;  // W_j = w_j / u^2(lambda, cut_j)
    std::vector<std::int64_t> counts;    // empty until measurements assigned
    double numerical_error = 0.0;        // achieved |1 - sum_j W_j|

    int cut_count() const { return static_cast<int>(cuts.size()); }
    void validate() const;
};

struct FiniteCutEstimate {
    double mean = 0.0;
    double variance = 0.0;
    double delta_bound = 0.0;
    double numerical_error = 0.0;  // relative theta-quadrature error
    double total_error = 0.0;      // sqrt(variance) + delta_bound + numerical_error*|mean|
    std::int64_t M = 0;
    double ratio = 0.0;            // mean / total_error
};

struct CompareResult {
    double value = 0.0;
    bool valid = false;  // true when both means are negative (violation regime)
};

// CLI-facing run description.
struct BackprojectionPlan {
    double a = 1.0;
    double lambda = 1.0;
    double epsilon = 1e-4;
    std::string distribution = "optimal";  // "uniform" | "optimal"
    std::int64_t M = 0;
    std::uint64_t seed = 0;
};

double filter_eval(const FilterSpec& f, PhasePoint pt);

// omega_{a,lambda,eps}(theta, s - x0 cos(theta) - p0 sin(theta)).
// Piecewise in t = s/u(lambda,theta): constant 1/(pi a^2) for |t| <= a,
// zero on the excised band, negative (1/(pi a^2))(1 - 1/sqrt(1-(a/t)^2))
// outside, everything divided by u^2.
double kernel_eval(const KernelSpec& k, double theta, double s, PhasePoint center = {0.0, 0.0});

// Applies the adjoint Radon transform (1/pi) Int_{-pi/2}^{pi/2} omega dtheta
// to the raw kernel on a deterministic polar grid (stretched radii up to 3a,
// the band |r - a| <= 0.05 a around the disc edge excluded) and returns the
// maximum absolute deviation from filter_eval.  The integrable
// inverse-square-root edges are split off and integrated after a smoothing
// substitution.
double adjoint_radon_check(const KernelSpec& k, const FilterSpec& f);

// Int_a^{a+eps} |omega_a(t)| dt in closed form:
// (1/(pi a^2)) (sqrt(2 a eps + eps^2) - eps).
double excision_band_integral(double a, double epsilon);

// Upper bound on the excision bias: the band is excised at both +/-t, so the
// bound is 2 * marginal_max * excision_band_integral(a, eps).  Independent of
// lambda because the angular average of 1/u^2 equals 1.
double systematic_error_bound(const KernelSpec& k, double marginal_max);

// Maximum of the base (lambda = 1) marginal density, located numerically.
double base_marginal_peak(StateKind kind);

// Monte Carlo mean of I = omega/(pi*C) over the stream, variance of the mean,
// and the systematic bound using the empirical peak of the marginal in the
// reduced variable t = s/u.  Deterministic for fixed stream regardless of
// thread count.
MCEstimate mc_estimate(const JointSampleStream& stream, const KernelSpec& k,
                       const CutDistribution& dist, int threads = 1);

// Same quantities from quadrature instead of samples: exact E[I] and E[I^2]
// under the given cut distribution, variance of the mean for a notional M
// draws, and the systematic bound from the analytic marginal peak.
MCEstimate analytic_mc_estimate(const StateModel& model, const KernelSpec& k,
                                const CutDistribution& dist, std::int64_t M);

// Average of the single-photon Wigner function over the disc of radius a,
// by two-dimensional quadrature (independent of the kernel pipeline).
double disc_average_oracle(double a);

// Density 1/(pi u^2(lambda,theta)) on (-pi/2, pi/2]; uniform when lambda = 1.
CutDistribution optimal_cut_distribution(double lambda);

// Optimizes a symmetric m-cell middle-point partition to minimize
// |1 - (1/pi) sum_j width_j / u^2(lambda, cut_j)|.  m must be even.
FiniteCutPlan finite_cut_plan(double lambda, int m);

// Largest-remainder allocation with M_j - 1 proportional to W_j and
// sum_j M_j = M.
std::vector<std::int64_t> allocate_measurements(const FiniteCutPlan& plan, std::int64_t M);

// Weighted middle-point estimate from per-cut homodyne samples:
// mean = sum_j w_j avg_i omega(theta_j, s_ji), variance
// sum_j w_j^2 var_j/(M_j-1), plus the excision and theta-quadrature error
// terms.
FiniteCutEstimate finite_cut_estimate(const std::vector<std::vector<double>>& samples_per_cut,
                                      const FiniteCutPlan& plan, const KernelSpec& k,
                                      int threads = 1);

// Same estimate with the exact per-cut averages and variances substituted for
// samples.  Per-cut variances are divided by (counts[j] - 1) when the plan
// carries counts; otherwise variance and M are left zero.
FiniteCutEstimate analytic_finite_cut_estimate(const StateModel& model, const FiniteCutPlan& plan,
                                               const KernelSpec& k);

// R = (elementary.mean/sqrt(elementary.variance)) *
//     (sqrt(radon.variance) + radon.delta_bound) / radon.mean.
// R > 1 means the elementary test detects the violation more significantly.
// valid is false unless both means are negative.
CompareResult compare_R(const TestOutcome& elementary, const MCEstimate& radon);

// Grid search over (a, epsilon) minimizing the analytic ratio
// mean/(sqrt(variance)+delta) at sample budget M: a in [0.2, 2] (25 log
// points), epsilon in [1e-6, 1e-1] (26 log points), one 9x9 refinement
// around the best cell.
std::pair<KernelSpec, MCEstimate> optimize_kernel_parameters(const StateModel& model, double lambda,
                                                             const CutDistribution& dist,
                                                             std::int64_t M);

}  // namespace nct
