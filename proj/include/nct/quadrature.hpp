#pragma once

#include <cmath>
#include <cstddef>
#include <queue>
#include <type_traits>
#include <vector>

#include "nct/errors.hpp"
#include "nct/summation.hpp"

namespace nct {

namespace gk_detail {

// Gauss-7 / Kronrod-15 rule on [-1,1], positive half of the symmetric node
// set.  Constants carry 34 significant digits so the rule keeps full accuracy
// when instantiated with long double.
inline constexpr long double kNodes[8] = {
    0.0L,
    0.2077849550078984676006894037732449L,
    0.4058451513773971669066064120769615L,
    0.5860872354676911302941448382587296L,
    0.7415311855993944398638647732807884L,
    0.8648644233597690727897127886409262L,
    0.9491079123427585245261896840478513L,
    0.9914553711208126392068546975263285L,
};
inline constexpr long double kKronrodW[8] = {
    0.2094821410847278280129991748917143L,
    0.2044329400752988924141619992346491L,
    0.1903505780647854099132564024210137L,
    0.1690047266392679028265834265985503L,
    0.1406532597155259187451895905102379L,
    0.1047900103222501838398763225415180L,
    0.0630920926299785532907006631892042L,
    0.0229353220105292249637320080589695L,
};
// Gauss weights belong to the even-index nodes (0, 2, 4, 6 above).
inline constexpr long double kGaussW[4] = {
    0.4179591836734693877551020408163265L,
    0.3818300505051189449503697754889751L,
    0.2797053914892766679014677714237796L,
    0.1294849661688696932706114326790820L,
};

}  // namespace gk_detail

template <typename Real>
struct GKEstimate {
    Real value;  // Kronrod-15 value
    Real error;  // |K15 - G7|, a conservative proxy for the K15 error
};

template <typename Real, typename F>
GKEstimate<Real> gk15(F&& f, Real a, Real b) {
    static_assert(std::is_floating_point_v<Real>,
                  "quadrature bounds must be floating point (integer literals truncate)");
    using namespace gk_detail;
    const Real c = (a + b) / 2;
    const Real h = (b - a) / 2;

    Real fc = f(c);
    Real k15 = Real(kKronrodW[0]) * fc;
    Real g7 = Real(kGaussW[0]) * fc;
    for (int i = 1; i < 8; ++i) {
        const Real dx = h * Real(kNodes[i]);
        const Real fi = f(c + dx) + f(c - dx);
        k15 += Real(kKronrodW[i]) * fi;
        if (i % 2 == 0) g7 += Real(kGaussW[i / 2]) * fi;
    }
    k15 *= h;
    g7 *= h;
    return {k15, std::abs(k15 - g7)};
}

struct QuadratureOptions {
    double rel_tol = 1e-12;
    double abs_tol = 0.0;
    int max_intervals = 20000;
};

// Globally adaptive bisection: always split the interval carrying the largest
// error estimate until sum(err) <= max(abs_tol, rel_tol*|integral|).
template <typename Real, typename F>
Real integrate(F&& f, Real a, Real b, const QuadratureOptions& opt = {}) {
    if (a == b) return Real(0);
    Real sign = Real(1);
    if (b < a) {
        std::swap(a, b);
        sign = Real(-1);
    }

    struct Interval {
        Real a, b, value, error;
        bool operator<(const Interval& o) const { return error < o.error; }
    };

    std::priority_queue<Interval> queue;
    auto first = gk15(f, a, b);
    queue.push({a, b, first.value, first.error});
    Real total_value = first.value;
    Real total_error = first.error;
    int n_intervals = 1;

    while (n_intervals < opt.max_intervals) {
        const Real bound =
            std::max(Real(opt.abs_tol), Real(opt.rel_tol) * std::abs(total_value));
        if (total_error <= bound) break;

        Interval worst = queue.top();
        queue.pop();
        const Real mid = (worst.a + worst.b) / 2;
        if (mid <= worst.a || mid >= worst.b) {
            // Interval no longer splittable at this precision; accept as is.
            queue.push({worst.a, worst.b, worst.value, Real(0)});
            total_error -= worst.error;
            continue;
        }
        auto left = gk15(f, worst.a, mid);
        auto right = gk15(f, mid, worst.b);
        total_value += left.value + right.value - worst.value;
        total_error += left.error + right.error - worst.error;
        queue.push({worst.a, mid, left.value, left.error});
        queue.push({mid, worst.b, right.value, right.error});
        ++n_intervals;
    }

    // Re-sum interval contributions with compensation; the running total has
    // accumulated add/subtract noise over many refinements.
    CompensatedSum<Real> sum;
    while (!queue.empty()) {
        sum.add(queue.top().value);
        queue.pop();
    }
    return sign * sum.value();
}

// Integral with an inverse-square-root (or weaker) singularity at one or both
// endpoints, removed by the substitution x = endpoint ± v^2.
template <typename Real, typename F>
Real integrate_endpoint_singular(F&& f, Real a, Real b, bool singular_at_a, bool singular_at_b,
                                 const QuadratureOptions& opt = {}) {
    if (a == b) return Real(0);
    if (singular_at_a && singular_at_b) {
        const Real mid = (a + b) / 2;
        return integrate_endpoint_singular(f, a, mid, true, false, opt) +
               integrate_endpoint_singular(f, mid, b, false, true, opt);
    }
    if (singular_at_a) {
        const Real w = std::sqrt(b - a);
        return integrate([&](Real v) { return Real(2) * v * f(a + v * v); }, Real(0), w, opt);
    }
    if (singular_at_b) {
        const Real w = std::sqrt(b - a);
        return integrate([&](Real v) { return Real(2) * v * f(b - v * v); }, Real(0), w, opt);
    }
    return integrate(f, a, b, opt);
}

// Nested adaptive quadrature of f(x, y) over a <= x <= b, ylo(x) <= y <= yhi(x).
template <typename Real, typename F, typename YLo, typename YHi>
Real integrate2d(F&& f, Real a, Real b, YLo&& ylo, YHi&& yhi, const QuadratureOptions& outer_opt = {},
                 QuadratureOptions inner_opt = QuadratureOptions{-1.0, 0.0, 0}) {
    if (inner_opt.rel_tol < 0) {
        inner_opt = outer_opt;
        inner_opt.rel_tol = outer_opt.rel_tol * 0.1;
    }
    return integrate(
        [&](Real x) {
            return integrate([&](Real y) { return f(x, y); }, ylo(x), yhi(x), inner_opt);
        },
        a, b, outer_opt);
}

}  // namespace nct
