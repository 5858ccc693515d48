#include "nct/interp.hpp"

#include <algorithm>
#include <cmath>

#include "nct/errors.hpp"

namespace nct {

MonotoneCubic::MonotoneCubic(std::vector<double> x, std::vector<double> y)
    : x_(std::move(x)), y_(std::move(y)) {
    const std::size_t n = x_.size();
    if (n < 2 || y_.size() != n) throw PreconditionError("interpolation needs >= 2 matching knots");
    for (std::size_t i = 0; i + 1 < n; ++i)
        if (!(x_[i] < x_[i + 1])) throw PreconditionError("interpolation abscissae must increase");

    // Detect a uniform grid so cell lookup can skip the binary search.
    const double h0 = x_[1] - x_[0];
    bool uniform = true;
    for (std::size_t i = 0; i + 1 < n && uniform; ++i)
        uniform = std::abs((x_[i + 1] - x_[i]) - h0) <= 1e-12 * h0;
    if (uniform) uniform_step_ = h0;

    std::vector<double> delta(n - 1);
    for (std::size_t i = 0; i + 1 < n; ++i) delta[i] = (y_[i + 1] - y_[i]) / (x_[i + 1] - x_[i]);

    slope_.assign(n, 0.0);
    slope_[0] = delta[0];
    slope_[n - 1] = delta[n - 2];
    for (std::size_t i = 1; i + 1 < n; ++i) slope_[i] = (delta[i - 1] + delta[i]) / 2;

    // Fritsch-Carlson limiter: zero slopes across flat cells, then pull the
    // slope vector inside the monotonicity ball alpha^2 + beta^2 <= 9.
    for (std::size_t i = 0; i + 1 < n; ++i) {
        if (delta[i] == 0.0) {
            slope_[i] = 0.0;
            slope_[i + 1] = 0.0;
        }
    }
    for (std::size_t i = 0; i + 1 < n; ++i) {
        if (delta[i] == 0.0) continue;
        const double alpha = slope_[i] / delta[i];
        const double beta = slope_[i + 1] / delta[i];
        const double r2 = alpha * alpha + beta * beta;
        if (r2 > 9.0) {
            const double tau = 3.0 / std::sqrt(r2);
            slope_[i] = tau * alpha * delta[i];
            slope_[i + 1] = tau * beta * delta[i];
        }
    }
}

std::size_t MonotoneCubic::cell_of_x(double x) const {
    const std::size_t n = x_.size();
    if (x <= x_.front()) return 0;
    if (x >= x_[n - 2]) return n - 2;
    if (uniform_step_ > 0) {
        auto i = static_cast<std::size_t>((x - x_.front()) / uniform_step_);
        if (i > n - 2) i = n - 2;
        // Guard against rounding in the division.
        while (i > 0 && x < x_[i]) --i;
        while (i + 2 < n && x >= x_[i + 1]) ++i;
        return i;
    }
    auto it = std::upper_bound(x_.begin(), x_.end(), x);
    return static_cast<std::size_t>(it - x_.begin()) - 1;
}

double MonotoneCubic::eval(double x) const {
    const std::size_t i = cell_of_x(x);
    const double h = x_[i + 1] - x_[i];
    const double t = (x - x_[i]) / h;
    const double t2 = t * t;
    const double t3 = t2 * t;
    const double h00 = 2 * t3 - 3 * t2 + 1;
    const double h10 = t3 - 2 * t2 + t;
    const double h01 = -2 * t3 + 3 * t2;
    const double h11 = t3 - t2;
    return h00 * y_[i] + h10 * h * slope_[i] + h01 * y_[i + 1] + h11 * h * slope_[i + 1];
}

double MonotoneCubic::solve(double y) const {
    if (y <= y_.front()) return x_.front();
    if (y >= y_.back()) return x_.back();
    auto it = std::upper_bound(y_.begin(), y_.end(), y);
    std::size_t i = static_cast<std::size_t>(it - y_.begin()) - 1;
    if (i > x_.size() - 2) i = x_.size() - 2;
    while (i > 0 && y_[i] > y) --i;

    // Newton iteration on the cell cubic with a bisection bracket fallback.
    double lo = x_[i], hi = x_[i + 1];
    double x = lo + (hi - lo) * 0.5;
    if (y_[i + 1] > y_[i]) {
        const double frac = (y - y_[i]) / (y_[i + 1] - y_[i]);
        x = lo + (hi - lo) * frac;
    }
    for (int iter = 0; iter < 64; ++iter) {
        const double fx = eval(x) - y;
        if (fx > 0)
            hi = x;
        else
            lo = x;
        const double h = x_[i + 1] - x_[i];
        const double t = (x - x_[i]) / h;
        const double d00 = (6 * t * t - 6 * t) / h;
        const double d10 = 3 * t * t - 4 * t + 1;
        const double d01 = (-6 * t * t + 6 * t) / h;
        const double d11 = 3 * t * t - 2 * t;
        const double deriv =
            d00 * y_[i] + d10 * slope_[i] + d01 * y_[i + 1] + d11 * slope_[i + 1];
        double next = (deriv > 0) ? x - fx / deriv : 0.5 * (lo + hi);
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        if (std::abs(next - x) <= 1e-16 * (std::abs(x) + 1e-300)) {
            x = next;
            break;
        }
        x = next;
    }
    return x;
}

}  // namespace nct
