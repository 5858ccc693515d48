#include "nct/backprojection.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "nct/errors.hpp"
#include "nct/parallel.hpp"
#include "nct/quadrature.hpp"
#include "nct/summation.hpp"

namespace nct {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kTail = 12.0;  // base marginals are below 1e-60 past this

double raw_kernel(double a, double epsilon, double t) {
    const double norm = 1.0 / (kPi * a * a);
    const double at = std::abs(t);
    if (at <= a) return norm;
    if (at < a + epsilon) return 0.0;
    return norm * (1.0 - 1.0 / std::sqrt(1.0 - (a / t) * (a / t)));
}

// Histogram peak of a density from raw draws; used for the data-driven
// systematic bound.
class MarginalPeak {
public:
    static constexpr int kBins = 240;
    static constexpr double kRange = 6.0;

    void add(double t) {
        const int b = static_cast<int>((t + kRange) * (kBins / (2 * kRange)));
        if (b >= 0 && b < kBins) ++counts_[static_cast<std::size_t>(b)];
    }
    void merge(const MarginalPeak& other) {
        for (int i = 0; i < kBins; ++i) counts_[static_cast<std::size_t>(i)] += other.counts_[static_cast<std::size_t>(i)];
    }
    double peak(std::int64_t total) const {
        const std::int64_t top = *std::max_element(counts_.begin(), counts_.end());
        const double width = 2 * kRange / kBins;
        return static_cast<double>(top) / (static_cast<double>(total) * width);
    }

private:
    std::array<std::int64_t, kBins> counts_{};
};

// Reduced-variable integrals J1 = Int m(t) omega(t) dt and
// J2 = Int m(t) omega(t)^2 dt over the excised kernel, both lambda-free.
// The inverse-square-root edge at t = a is removed by t = a cosh(v):
//   omega dt -> -norm e^{-v} a dv + smooth part,
//   omega^2 dt -> norm^2 a e^{-2v}/sinh(v) dv.
double kernel_mean_1d(StateKind kind, double a, double epsilon) {
    const double norm = 1.0 / (kPi * a * a);
    const double inner = base_marginal_cdf(kind, a) - 0.5;
    if (a + epsilon >= kTail) return 2 * norm * inner;

    const double smooth = base_marginal_cdf(kind, kTail) - base_marginal_cdf(kind, a + epsilon);
    const double v_lo = std::asinh(std::sqrt(epsilon * (2 * a + epsilon)) / a);
    const double v_hi = std::acosh(kTail / a);
    QuadratureOptions opt;
    opt.rel_tol = 1e-13;
    opt.abs_tol = 1e-16;
    const double sing = integrate<double>(
        [&](double v) { return base_marginal_density(kind, a * std::cosh(v)) * std::cosh(v); }, v_lo,
        v_hi, opt);
    return 2 * norm * (inner + smooth - a * sing);
}

double kernel_second_moment_1d(StateKind kind, double a, double epsilon) {
    if (epsilon <= 0)
        throw PreconditionError("kernel second moment diverges without excision (epsilon > 0 required)");
    const double norm = 1.0 / (kPi * a * a);
    const double inner = norm * norm * (base_marginal_cdf(kind, a) - 0.5);
    if (a + epsilon >= kTail) return 2 * inner;

    const double v_lo = std::asinh(std::sqrt(epsilon * (2 * a + epsilon)) / a);
    const double v_hi = std::acosh(kTail / a);
    QuadratureOptions opt;
    opt.rel_tol = 1e-13;
    opt.abs_tol = 1e-18;
    // Integrated in w = log(v): the integrand behaves as 1/v near the band.
    const double outer = integrate<double>(
        [&](double w) {
            const double v = std::exp(w);
            const double em = std::exp(-v);
            const double shrink = em * em / std::sinh(v);  // e^{-2v}/sinh(v)
            return base_marginal_density(kind, a * std::cosh(v)) * shrink * v;
        },
        std::log(v_lo), std::log(v_hi), opt);
    return 2 * (inner + norm * norm * a * outer);
}

// (1/pi) Int_{-pi/2}^{pi/2} u^{-4} dtheta = (lambda^2 + lambda^-2)/2.
double uniform_second_moment_factor(double lambda) {
    return 0.5 * (lambda * lambda + 1.0 / (lambda * lambda));
}

double require_matching_stretch(const StateModel& model, const KernelSpec& k) {
    const double lambda = model.effective_lambda();
    if (std::abs(lambda - k.lambda) > 1e-12)
        throw PreconditionError("analytic kernel integrals need the kernel stretch to match the state");
    return lambda;
}

}  // namespace

void FilterSpec::validate() const {
    if (!(a > 0) || !std::isfinite(a)) throw PreconditionError("filter: a must be positive");
    if (!(l > 0) || !std::isfinite(l)) throw PreconditionError("filter: l must be positive");
}

void KernelSpec::validate() const {
    if (!(a > 0) || !std::isfinite(a)) throw PreconditionError("kernel: a must be positive");
    if (!(lambda > 0) || !std::isfinite(lambda)) throw PreconditionError("kernel: lambda must be positive");
    if (!(epsilon >= 0) || !std::isfinite(epsilon)) throw PreconditionError("kernel: epsilon must be >= 0");
}

double filter_eval(const FilterSpec& f, PhasePoint pt) {
    f.validate();
    const double xs = f.l * (pt.x - f.center.x);
    const double ps = (pt.p - f.center.p) / f.l;
    return (xs * xs + ps * ps <= f.a * f.a) ? 1.0 / (kPi * f.a * f.a) : 0.0;
}

double kernel_eval(const KernelSpec& k, double theta, double s, PhasePoint center) {
    k.validate();
    const double u = scale_u(k.lambda, theta);
    const double shifted = s - center.x * std::cos(theta) - center.p * std::sin(theta);
    return raw_kernel(k.a, k.epsilon, shifted / u) / (u * u);
}

double adjoint_radon_check(const KernelSpec& k, const FilterSpec& f) {
    k.validate();
    f.validate();
    if (std::abs(k.lambda - f.l) > 1e-12)
        throw PreconditionError("adjoint check: kernel stretch must equal the filter stretch");
    if (k.epsilon != 0) throw PreconditionError("adjoint check: kernel must be unexcised");

    const double a = k.a;
    const double lam = k.lambda;

    // (1/pi) Int omega_a((x cos + p sin)/u)/u^2 dtheta at one point, with the
    // domain split at the angles where the line profile crosses |t| = a.
    auto back_project = [&](double x, double p) {
        auto integrand = [&](double theta) {
            const double u = scale_u(lam, theta);
            const double t = (x * std::cos(theta) + p * std::sin(theta)) / u;
            return raw_kernel(a, 0.0, t) / (u * u);
        };

        // (s/u)^2 = a^2 in tan(theta): (p^2 - a^2 lam^2) t^2 + 2xp t + (x^2 - a^2/lam^2) = 0.
        std::vector<double> breaks{-kPi / 2, kPi / 2};
        const double A = p * p - a * a * lam * lam;
        const double B = 2 * x * p;
        const double C = x * x - a * a / (lam * lam);
        const double scale = std::max({std::abs(A), std::abs(B), std::abs(C)});
        if (std::abs(A) > 1e-12 * scale) {
            const double disc = B * B - 4 * A * C;
            if (disc > 0) {
                const double root = std::sqrt(disc);
                breaks.push_back(std::atan((-B + root) / (2 * A)));
                breaks.push_back(std::atan((-B - root) / (2 * A)));
            }
        } else if (std::abs(B) > 1e-12 * scale) {
            breaks.push_back(std::atan(-C / B));
        }
        std::sort(breaks.begin(), breaks.end());

        QuadratureOptions opt;
        opt.rel_tol = 1e-10;
        opt.abs_tol = 1e-12;
        CompensatedSum<double> total;
        for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
            const bool sing_lo = i > 0;
            const bool sing_hi = i + 2 < breaks.size();
            total.add(integrate_endpoint_singular(integrand, breaks[i], breaks[i + 1], sing_lo,
                                                  sing_hi, opt));
        }
        return total.value() / kPi;
    };

    const std::array<double, 10> radii = {0.0, 0.25, 0.5, 0.75, 0.9, 1.1, 1.3, 1.7, 2.2, 3.0};
    double worst = 0.0;
    for (double rf : radii) {
        if (std::abs(rf - 1.0) <= 0.05) continue;  // disc boundary excluded
        const int n_ang = (rf == 0.0) ? 1 : 12;
        for (int ia = 0; ia < n_ang; ++ia) {
            const double phi = 2 * kPi * ia / 12 + 0.05;
            const double x = f.center.x + (rf * a / lam) * std::cos(phi);
            const double p = f.center.p + rf * a * lam * std::sin(phi);
            const double got = back_project(x - f.center.x, p - f.center.p);
            const double want = filter_eval(f, {x, p});
            worst = std::max(worst, std::abs(got - want));
        }
    }
    return worst;
}

double excision_band_integral(double a, double epsilon) {
    if (!(a > 0)) throw PreconditionError("excision band: a must be positive");
    if (!(epsilon >= 0)) throw PreconditionError("excision band: epsilon must be >= 0");
    // |omega| = norm (t/sqrt(t^2-a^2) - 1) on (a, a+eps); antiderivative
    // sqrt(t^2-a^2) - t.
    return (std::sqrt(epsilon * (2 * a + epsilon)) - epsilon) / (kPi * a * a);
}

double systematic_error_bound(const KernelSpec& k, double marginal_max) {
    k.validate();
    if (!(marginal_max > 0) || !std::isfinite(marginal_max))
        throw PreconditionError("systematic bound: marginal_max must be positive");
    if (k.epsilon == 0) return 0.0;
    // Both signs of t are excised, hence the factor 2.  The angular average
    // of u^{-2} is 1, so the bound carries no lambda dependence.
    return 2.0 * marginal_max * excision_band_integral(k.a, k.epsilon);
}

double base_marginal_peak(StateKind kind) {
    double lo = 0.0, hi = 4.0;
    const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
    double x1 = hi - gr * (hi - lo), x2 = lo + gr * (hi - lo);
    double f1 = base_marginal_density(kind, x1), f2 = base_marginal_density(kind, x2);
    for (int it = 0; it < 200; ++it) {
        if (f1 < f2) {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + gr * (hi - lo);
            f2 = base_marginal_density(kind, x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - gr * (hi - lo);
            f1 = base_marginal_density(kind, x1);
        }
    }
    return std::max(f1, f2);
}

MCEstimate mc_estimate(const JointSampleStream& stream, const KernelSpec& k,
                       const CutDistribution& dist, int threads) {
    k.validate();
    const auto M = static_cast<std::int64_t>(stream.pairs.size());
    if (M < 2) throw InsufficientSamples("mc_estimate: need at least 2 samples");
    if (!stream.cut_distribution_id.empty() && stream.cut_distribution_id != dist.id())
        throw PreconditionError("mc_estimate: stream was drawn under '" + stream.cut_distribution_id +
                                "', not '" + dist.id() + "'");

    constexpr std::int64_t kChunk = 1 << 16;
    const std::int64_t n_chunks = (M + kChunk - 1) / kChunk;
    struct Slot {
        long double sum = 0, sum_sq = 0;
        MarginalPeak hist;
    };
    std::vector<Slot> slots(static_cast<std::size_t>(n_chunks));

    parallel_tasks(n_chunks, threads, [&](std::int64_t ci) {
        Slot& slot = slots[static_cast<std::size_t>(ci)];
        const std::int64_t begin = ci * kChunk;
        const std::int64_t end = std::min(M, begin + kChunk);
        CompensatedSum<long double> sum, sum_sq;
        for (std::int64_t i = begin; i < end; ++i) {
            const auto [theta, s] = stream.pairs[static_cast<std::size_t>(i)];
            const double u = scale_u(k.lambda, theta);
            const double I = raw_kernel(k.a, k.epsilon, s / u) / (u * u) / (kPi * dist.density(theta));
            sum.add(I);
            sum_sq.add(static_cast<long double>(I) * I);
            slot.hist.add(s / u);
        }
        slot.sum = sum.value();
        slot.sum_sq = sum_sq.value();
    });

    CompensatedSum<long double> sum, sum_sq;
    MarginalPeak hist;
    for (const auto& slot : slots) {
        sum.add(slot.sum);
        sum_sq.add(slot.sum_sq);
        hist.merge(slot.hist);
    }

    MCEstimate out;
    out.M = M;
    const long double mean = sum.value() / static_cast<long double>(M);
    long double pop = sum_sq.value() / static_cast<long double>(M) - mean * mean;
    if (pop < 0) pop = 0;
    out.mean = static_cast<double>(mean);
    out.variance = static_cast<double>(pop / static_cast<long double>(M - 1));
    out.delta_bound = (k.epsilon > 0) ? systematic_error_bound(k, hist.peak(M)) : 0.0;
    out.ratio = out.mean / (std::sqrt(out.variance) + out.delta_bound);
    return out;
}

MCEstimate analytic_mc_estimate(const StateModel& model, const KernelSpec& k,
                                const CutDistribution& dist, std::int64_t M) {
    model.validate();
    k.validate();
    if (M < 2) throw PreconditionError("analytic_mc_estimate: M must be >= 2");
    const double lambda = require_matching_stretch(model, k);
    if (dist.kind == CutDistributionKind::optimal && std::abs(dist.lambda - lambda) > 1e-12)
        throw PreconditionError("analytic_mc_estimate: cut distribution stretch must match the state");

    const double J1 = kernel_mean_1d(model.kind, k.a, k.epsilon);
    const double J2 = kernel_second_moment_1d(model.kind, k.a, k.epsilon);
    const double second =
        (dist.kind == CutDistributionKind::uniform) ? uniform_second_moment_factor(lambda) * J2 : J2;

    MCEstimate out;
    out.M = M;
    out.mean = J1;
    double pop = second - J1 * J1;
    if (pop < 0) pop = 0;
    out.variance = pop / static_cast<double>(M - 1);
    out.delta_bound = systematic_error_bound(k, base_marginal_peak(model.kind));
    out.ratio = out.mean / (std::sqrt(out.variance) + out.delta_bound);
    return out;
}

double disc_average_oracle(double a) {
    if (!(a > 0) || !std::isfinite(a)) throw PreconditionError("disc average: a must be positive");
    StateModel photon{StateKind::single_photon};
    QuadratureOptions inner;
    inner.rel_tol = 1e-13;
    inner.abs_tol = 1e-18;
    QuadratureOptions outer;
    outer.rel_tol = 1e-12;
    outer.abs_tol = 1e-16;
    // x = a sin(phi) keeps the outer integrand smooth at the disc edge.
    const double total = integrate<double>(
        [&](double phi) {
            const double x = a * std::sin(phi);
            const double half = a * std::cos(phi);
            const double col = integrate<double>(
                [&](double p) { return eval_wigner(photon, {x, p}); }, -half, half, inner);
            return a * std::cos(phi) * col;
        },
        -kPi / 2, kPi / 2, outer);
    return total / (kPi * a * a);
}

CutDistribution optimal_cut_distribution(double lambda) {
    if (!(lambda > 0) || !std::isfinite(lambda))
        throw PreconditionError("optimal_cut_distribution: lambda must be positive");
    CutDistribution dist;
    dist.kind = (lambda == 1.0) ? CutDistributionKind::uniform : CutDistributionKind::optimal;
    dist.lambda = lambda;
    return dist;
}

void FiniteCutPlan::validate() const {
    const int m = cut_count();
    if (m < 2 || m % 2 != 0) throw PreconditionError("finite-cut plan: m must be even and >= 2");
    if (!(lambda > 0)) throw PreconditionError("finite-cut plan: lambda must be positive");
    if (static_cast<int>(widths.size()) != m || static_cast<int>(weights.size()) != m ||
        static_cast<int>(scaled_weights.size()) != m)
        throw PreconditionError("finite-cut plan: per-cut arrays must match the cut count");
    CompensatedSum<double> width_sum;
    for (int j = 0; j < m; ++j) {
        if (!(widths[static_cast<std::size_t>(j)] > 0))
            throw PreconditionError("finite-cut plan: widths must be positive");
        if (!(scaled_weights[static_cast<std::size_t>(j)] > 0))
            throw PreconditionError("finite-cut plan: scaled weights must be positive");
        width_sum.add(widths[static_cast<std::size_t>(j)]);
        const double mirror = cuts[static_cast<std::size_t>(m - 1 - j)];
        if (std::abs(cuts[static_cast<std::size_t>(j)] + mirror) > 1e-9)
            throw PreconditionError("finite-cut plan: cuts must be symmetric about 0");
    }
    if (std::abs(width_sum.value() - kPi) > 1e-9)
        throw PreconditionError("finite-cut plan: widths must partition an interval of length pi");
    if (!counts.empty() && static_cast<int>(counts.size()) != m)
        throw PreconditionError("finite-cut plan: counts must match the cut count");
}

namespace {

// S(b) = (2/pi) sum_k (b_k - b_{k-1}) / u^2(lambda, midpoint_k) for the
// positive half-partition 0 = b_0 < ... < b_H = pi/2.
double half_partition_sum(const std::vector<double>& b, double lambda) {
    CompensatedSum<double> s;
    for (std::size_t k = 0; k + 1 < b.size(); ++k) {
        const double mid = 0.5 * (b[k] + b[k + 1]);
        const double u = scale_u(lambda, mid);
        s.add((b[k + 1] - b[k]) / (u * u));
    }
    return 2.0 * s.value() / kPi;
}

double partition_objective(const std::vector<double>& b, double lambda) {
    return std::abs(1.0 - half_partition_sum(b, lambda));
}

// Golden-section minimization of the objective in the single boundary b[k].
void refine_boundary(std::vector<double>& b, std::size_t k, double lambda) {
    const double margin = 1e-9;
    double lo = b[k - 1] + margin;
    double hi = b[k + 1] - margin;
    if (lo >= hi) return;
    const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
    auto eval = [&](double v) {
        b[k] = v;
        return partition_objective(b, lambda);
    };
    double x1 = hi - gr * (hi - lo), x2 = lo + gr * (hi - lo);
    double f1 = eval(x1), f2 = eval(x2);
    for (int it = 0; it < 120 && hi - lo > 1e-15; ++it) {
        if (f1 < f2) {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - gr * (hi - lo);
            f1 = eval(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + gr * (hi - lo);
            f2 = eval(x2);
        }
    }
    b[k] = (f1 < f2) ? x1 : x2;
    eval(b[k]);
}

std::vector<double> optimize_half_partition(std::vector<double> b, double lambda, double* achieved) {
    double current = partition_objective(b, lambda);
    for (int sweep = 0; sweep < 200 && current > 1e-15; ++sweep) {
        for (std::size_t k = 1; k + 1 < b.size(); ++k) refine_boundary(b, k, lambda);
        const double next = partition_objective(b, lambda);
        if (current - next < 1e-16) {
            current = next;
            break;
        }
        current = next;
    }
    *achieved = current;
    return b;
}

}  // namespace

FiniteCutPlan finite_cut_plan(double lambda, int m) {
    if (!(lambda > 0) || !std::isfinite(lambda))
        throw PreconditionError("finite_cut_plan: lambda must be positive");
    if (m < 2 || m % 2 != 0) throw PreconditionError("finite_cut_plan: m must be even and >= 2");

    const int H = m / 2;
    std::vector<double> equal_mass(static_cast<std::size_t>(H) + 1);
    std::vector<double> uniform(static_cast<std::size_t>(H) + 1);
    for (int kk = 0; kk <= H; ++kk) {
        const double frac = static_cast<double>(kk) / H;
        uniform[static_cast<std::size_t>(kk)] = frac * kPi / 2;
        // Boundaries of equal mass under 1/u^2: atan(lambda^2 tan b) = frac*pi/2.
        equal_mass[static_cast<std::size_t>(kk)] =
            (kk == H) ? kPi / 2 : std::atan(std::tan(frac * kPi / 2) / (lambda * lambda));
    }

    double err_a = 0, err_b = 0;
    const auto opt_a = optimize_half_partition(equal_mass, lambda, &err_a);
    const auto opt_b = optimize_half_partition(uniform, lambda, &err_b);
    const auto& best = (err_a <= err_b) ? opt_a : opt_b;
    const double achieved = std::min(err_a, err_b);
    if (!std::isfinite(achieved)) throw NonConvergence("finite_cut_plan: optimizer diverged");

    FiniteCutPlan plan;
    plan.lambda = lambda;
    plan.cuts.resize(static_cast<std::size_t>(m));
    plan.widths.resize(static_cast<std::size_t>(m));
    plan.weights.resize(static_cast<std::size_t>(m));
    plan.scaled_weights.resize(static_cast<std::size_t>(m));
    for (int kk = 1; kk <= H; ++kk) {
        const double width = best[static_cast<std::size_t>(kk)] - best[static_cast<std::size_t>(kk - 1)];
        const double mid = 0.5 * (best[static_cast<std::size_t>(kk)] + best[static_cast<std::size_t>(kk - 1)]);
        const int pos = H + kk - 1;   // positive-side cell kk
        const int neg = H - kk;       // mirrored cell
        plan.cuts[static_cast<std::size_t>(pos)] = mid;
        plan.cuts[static_cast<std::size_t>(neg)] = -mid;
        plan.widths[static_cast<std::size_t>(pos)] = width;
        plan.widths[static_cast<std::size_t>(neg)] = width;
    }
    for (int j = 0; j < m; ++j) {
        const double u = scale_u(lambda, plan.cuts[static_cast<std::size_t>(j)]);
        plan.weights[static_cast<std::size_t>(j)] = plan.widths[static_cast<std::size_t>(j)] / kPi;
        plan.scaled_weights[static_cast<std::size_t>(j)] =
            plan.weights[static_cast<std::size_t>(j)] / (u * u);
    }
    CompensatedSum<double> W_sum;
    for (double W : plan.scaled_weights) W_sum.add(W);
    plan.numerical_error = std::abs(1.0 - W_sum.value());
    plan.validate();
    return plan;
}

std::vector<std::int64_t> allocate_measurements(const FiniteCutPlan& plan, std::int64_t M) {
    plan.validate();
    const int m = plan.cut_count();
    if (M <= m) throw PreconditionError("allocate_measurements: M must exceed the cut count");

    CompensatedSum<double> W_sum;
    for (double W : plan.scaled_weights) W_sum.add(W);

    std::vector<std::int64_t> counts(static_cast<std::size_t>(m));
    std::vector<std::pair<double, int>> remainders(static_cast<std::size_t>(m));
    std::int64_t assigned = 0;
    for (int j = 0; j < m; ++j) {
        const double share = static_cast<double>(M - m) * plan.scaled_weights[static_cast<std::size_t>(j)] /
                             W_sum.value();
        const auto base = static_cast<std::int64_t>(std::floor(share));
        counts[static_cast<std::size_t>(j)] = base;
        assigned += base;
        remainders[static_cast<std::size_t>(j)] = {share - static_cast<double>(base), j};
    }
    std::sort(remainders.begin(), remainders.end(), [](const auto& lhs, const auto& rhs) {
        if (lhs.first != rhs.first) return lhs.first > rhs.first;
        return lhs.second < rhs.second;
    });
    for (std::int64_t r = 0; r < (M - m) - assigned; ++r)
        ++counts[static_cast<std::size_t>(remainders[static_cast<std::size_t>(r)].second)];
    for (auto& c : counts) ++c;  // the allocation fixes M_j - 1
    return counts;
}

FiniteCutEstimate finite_cut_estimate(const std::vector<std::vector<double>>& samples_per_cut,
                                      const FiniteCutPlan& plan, const KernelSpec& k, int threads) {
    plan.validate();
    k.validate();
    const int m = plan.cut_count();
    if (static_cast<int>(samples_per_cut.size()) != m)
        throw CutMismatch("finite_cut_estimate: sample groups must match the plan cuts");
    for (const auto& s : samples_per_cut)
        if (s.size() < 2) throw InsufficientSamples("finite_cut_estimate: every cut needs at least 2 samples");

    constexpr std::int64_t kChunk = 1 << 16;
    struct Task {
        int cut;
        std::int64_t begin, count;
        long double sum = 0, sum_sq = 0;
        MarginalPeak hist;
    };
    std::vector<Task> tasks;
    for (int j = 0; j < m; ++j) {
        const auto M_j = static_cast<std::int64_t>(samples_per_cut[static_cast<std::size_t>(j)].size());
        for (std::int64_t b = 0; b < M_j; b += kChunk)
            tasks.push_back({j, b, std::min(kChunk, M_j - b), 0.0L, 0.0L, {}});
    }
    parallel_tasks(static_cast<std::int64_t>(tasks.size()), threads, [&](std::int64_t ti) {
        Task& t = tasks[static_cast<std::size_t>(ti)];
        const double theta = plan.cuts[static_cast<std::size_t>(t.cut)];
        const double u = scale_u(k.lambda, theta);
        const double* s = samples_per_cut[static_cast<std::size_t>(t.cut)].data() + t.begin;
        CompensatedSum<long double> sum, sum_sq;
        for (std::int64_t i = 0; i < t.count; ++i) {
            const double v = raw_kernel(k.a, k.epsilon, s[i] / u) / (u * u);
            sum.add(v);
            sum_sq.add(static_cast<long double>(v) * v);
            t.hist.add(s[i] / u);
        }
        t.sum = sum.value();
        t.sum_sq = sum_sq.value();
    });

    FiniteCutEstimate out;
    MarginalPeak hist;
    CompensatedSum<long double> mean_acc, var_acc;
    for (int j = 0; j < m; ++j) {
        const auto M_j = static_cast<std::int64_t>(samples_per_cut[static_cast<std::size_t>(j)].size());
        out.M += M_j;
        CompensatedSum<long double> sum, sum_sq;
        for (const auto& t : tasks) {
            if (t.cut != j) continue;
            sum.add(t.sum);
            sum_sq.add(t.sum_sq);
        }
        const long double mean_j = sum.value() / static_cast<long double>(M_j);
        long double pop = sum_sq.value() / static_cast<long double>(M_j) - mean_j * mean_j;
        if (pop < 0) pop = 0;
        const double w = plan.weights[static_cast<std::size_t>(j)];
        mean_acc.add(static_cast<long double>(w) * mean_j);
        var_acc.add(static_cast<long double>(w) * w * pop / static_cast<long double>(M_j - 1));
    }
    for (const auto& t : tasks) hist.merge(t.hist);

    out.mean = static_cast<double>(mean_acc.value());
    out.variance = static_cast<double>(var_acc.value());
    out.delta_bound = (k.epsilon > 0) ? systematic_error_bound(k, hist.peak(out.M)) : 0.0;
    out.numerical_error = plan.numerical_error;
    out.total_error = std::sqrt(out.variance) + out.delta_bound + out.numerical_error * std::abs(out.mean);
    out.ratio = (out.total_error > 0) ? out.mean / out.total_error : 0.0;
    return out;
}

FiniteCutEstimate analytic_finite_cut_estimate(const StateModel& model, const FiniteCutPlan& plan,
                                               const KernelSpec& k) {
    model.validate();
    plan.validate();
    k.validate();
    require_matching_stretch(model, k);
    const int m = plan.cut_count();

    // Per cut: E[omega | theta_j] = J1/u^2, Var[omega | theta_j] = (J2 - J1^2)/u^4.
    const double J1 = kernel_mean_1d(model.kind, k.a, k.epsilon);
    const bool need_var = !plan.counts.empty();
    const double J2 = need_var ? kernel_second_moment_1d(model.kind, k.a, k.epsilon) : 0.0;

    FiniteCutEstimate out;
    CompensatedSum<double> mean_acc, var_acc;
    for (int j = 0; j < m; ++j) {
        const double u = scale_u(k.lambda, plan.cuts[static_cast<std::size_t>(j)]);
        const double w = plan.weights[static_cast<std::size_t>(j)];
        mean_acc.add(w * J1 / (u * u));
        if (need_var) {
            const std::int64_t M_j = plan.counts[static_cast<std::size_t>(j)];
            if (M_j < 2) throw InsufficientSamples("analytic finite-cut estimate: counts must be >= 2");
            out.M += M_j;
            const double pop = (J2 - J1 * J1) / (u * u * u * u);
            var_acc.add(w * w * pop / static_cast<double>(M_j - 1));
        }
    }
    out.mean = mean_acc.value();
    out.variance = var_acc.value();
    out.delta_bound = systematic_error_bound(k, base_marginal_peak(model.kind));
    out.numerical_error = plan.numerical_error;
    out.total_error = std::sqrt(out.variance) + out.delta_bound + out.numerical_error * std::abs(out.mean);
    out.ratio = (out.total_error > 0) ? out.mean / out.total_error : 0.0;
    return out;
}

CompareResult compare_R(const TestOutcome& elementary, const MCEstimate& radon) {
    if (elementary.M != radon.M)
        throw PreconditionError("compare_R: both pipelines must use the same total M");
    if (!(elementary.variance > 0) || !(radon.variance >= 0))
        throw PreconditionError("compare_R: variances must be positive");
    CompareResult out;
    out.value = (elementary.mean / std::sqrt(elementary.variance)) *
                (std::sqrt(radon.variance) + radon.delta_bound) / radon.mean;
    out.valid = elementary.mean < 0 && radon.mean < 0;
    return out;
}

std::pair<KernelSpec, MCEstimate> optimize_kernel_parameters(const StateModel& model, double lambda,
                                                             const CutDistribution& dist,
                                                             std::int64_t M) {
    model.validate();
    if (std::abs(model.effective_lambda() - lambda) > 1e-12)
        throw PreconditionError("optimize_kernel_parameters: lambda must match the state");
    if (M < 2) throw PreconditionError("optimize_kernel_parameters: M must be >= 2");

    const double peak = base_marginal_peak(model.kind);
    const double factor =
        (dist.kind == CutDistributionKind::uniform) ? uniform_second_moment_factor(lambda) : 1.0;

    auto evaluate = [&](double a, double eps) {
        MCEstimate est;
        est.M = M;
        est.mean = kernel_mean_1d(model.kind, a, eps);
        double pop = factor * kernel_second_moment_1d(model.kind, a, eps) - est.mean * est.mean;
        if (pop < 0) pop = 0;
        est.variance = pop / static_cast<double>(M - 1);
        KernelSpec k{a, lambda, eps};
        est.delta_bound = systematic_error_bound(k, peak);
        est.ratio = est.mean / (std::sqrt(est.variance) + est.delta_bound);
        return est;
    };

    auto log_grid = [](double lo, double hi, int n) {
        std::vector<double> g(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i)
            g[static_cast<std::size_t>(i)] = lo * std::pow(hi / lo, static_cast<double>(i) / (n - 1));
        return g;
    };

    const auto a_grid = log_grid(0.2, 2.0, 25);
    const auto e_grid = log_grid(1e-6, 1e-1, 26);

    int best_i = 0, best_j = 0;
    MCEstimate best_est;
    double best_ratio = std::numeric_limits<double>::infinity();
    for (int i = 0; i < static_cast<int>(a_grid.size()); ++i)
        for (int j = 0; j < static_cast<int>(e_grid.size()); ++j) {
            const MCEstimate est = evaluate(a_grid[static_cast<std::size_t>(i)], e_grid[static_cast<std::size_t>(j)]);
            if (est.ratio < best_ratio) {
                best_ratio = est.ratio;
                best_est = est;
                best_i = i;
                best_j = j;
            }
        }

    // One refinement pass around the winning cell.
    const double a_lo = a_grid[static_cast<std::size_t>(std::max(0, best_i - 1))];
    const double a_hi = a_grid[static_cast<std::size_t>(std::min<int>(a_grid.size() - 1, best_i + 1))];
    const double e_lo = e_grid[static_cast<std::size_t>(std::max(0, best_j - 1))];
    const double e_hi = e_grid[static_cast<std::size_t>(std::min<int>(e_grid.size() - 1, best_j + 1))];
    double best_a = a_grid[static_cast<std::size_t>(best_i)];
    double best_e = e_grid[static_cast<std::size_t>(best_j)];
    for (double a : log_grid(a_lo, a_hi, 9))
        for (double eps : log_grid(e_lo, e_hi, 9)) {
            const MCEstimate est = evaluate(a, eps);
            if (est.ratio < best_ratio) {
                best_ratio = est.ratio;
                best_est = est;
                best_a = a;
                best_e = eps;
            }
        }

    return {KernelSpec{best_a, lambda, best_e}, best_est};
}

}  // namespace nct
