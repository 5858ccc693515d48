#pragma once

#include <cstddef>
#include <vector>

namespace nct {

// Monotone cubic Hermite interpolant (Fritsch-Carlson slope limiting).
// If the data are nondecreasing the interpolant is nondecreasing on every
// cell, which makes solve() a well-posed inverse for CDF tables.
class MonotoneCubic {
public:
    MonotoneCubic(std::vector<double> x, std::vector<double> y);

    double eval(double x) const;

    // Solve eval(x) == y for nondecreasing data; y outside the data range
    // clamps to the corresponding endpoint.
    double solve(double y) const;

    double x_front() const { return x_.front(); }
    double x_back() const { return x_.back(); }
    double y_front() const { return y_.front(); }
    double y_back() const { return y_.back(); }

private:
    std::size_t cell_of_x(double x) const;

    std::vector<double> x_, y_, slope_;
    double uniform_step_ = 0;  // >0 when the grid is uniform: O(1) cell lookup
};

}  // namespace nct
