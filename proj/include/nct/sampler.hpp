#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "nct/phase_space.hpp"

namespace nct {

struct CutPlan {
    std::vector<double> cuts;           // angles in [0, pi), pairwise distinct
    std::vector<std::int64_t> counts;   // positive per-cut sample counts

    void validate() const;
    std::int64_t total() const;
};

struct QuadratureDataset {
    std::vector<double> cuts;
    std::vector<std::vector<double>> samples;  // samples[j] belongs to cuts[j]
    std::uint64_t seed = 0;
    StateModel model;
};

enum class CutDistributionKind { uniform, optimal };

// Phase-angle distribution on (-pi/2, pi/2]: uniform 1/pi, or the
// inverse-square scale density 1/(pi u^2(lambda,theta)).
struct CutDistribution {
    CutDistributionKind kind = CutDistributionKind::uniform;
    double lambda = 1.0;

    double density(double theta) const;
    std::string id() const;
};

CutDistribution parse_cut_distribution(const std::string& id, double lambda);

struct JointSampleStream {
    std::vector<std::pair<double, double>> pairs;  // (theta, s)
    std::string cut_distribution_id;
    std::uint64_t seed = 0;
};

// Per-cut homodyne simulation: counts[j] i.i.d. draws from
// radon_marginal(model, cuts[j]) via inverse-CDF lookup on a monotone table.
// Deterministic in (model, plan, seed) and independent of thread count.
QuadratureDataset sample_per_cut(const StateModel& model, const CutPlan& plan, std::uint64_t seed,
                                 int threads = 1);

// Random-phase protocol: theta from the cut distribution, then s from the
// conditional marginal at theta.
JointSampleStream sample_joint(const StateModel& model, const CutDistribution& dist, std::int64_t M,
                               std::uint64_t seed, int threads = 1);

// Inverse-CDF table of the base (lambda = 1) marginal of `kind`:
// 2^16 knots on s in [-8, 8].  Shared, built once per kind.
double sample_base_marginal(StateKind kind, double unit);

}  // namespace nct
