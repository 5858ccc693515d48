#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

namespace nct {

// Neumaier variant of compensated summation: the compensation term also
// catches the case |x| > |sum|, so accumulating values that span many orders
// of magnitude stays accurate to ~1 ulp of the true sum.
template <typename Real = double>
class CompensatedSum {
public:
    void add(Real x) {
        Real t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x))
            comp_ += (sum_ - t) + x;
        else
            comp_ += (x - t) + sum_;
        sum_ = t;
    }

    CompensatedSum& operator+=(Real x) {
        add(x);
        return *this;
    }

    Real value() const { return sum_ + comp_; }

private:
    Real sum_ = 0;
    Real comp_ = 0;
};

// Pairwise reduction in a fixed order: the result depends only on the slot
// contents, never on which thread filled them.
template <typename Real>
Real pairwise_sum(std::vector<Real> v) {
    if (v.empty()) return Real(0);
    std::size_t n = v.size();
    while (n > 1) {
        std::size_t half = (n + 1) / 2;
        for (std::size_t i = 0; i + half < n; ++i) v[i] += v[i + half];
        n = half;
    }
    return v[0];
}

}  // namespace nct
