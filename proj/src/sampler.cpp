#include "nct/sampler.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <memory>
#include <mutex>

#include "nct/errors.hpp"
#include "nct/interp.hpp"
#include "nct/parallel.hpp"
#include "nct/rng.hpp"

namespace nct {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr std::int64_t kChunk = 1 << 16;

const MonotoneCubic& cdf_table(StateKind kind) {
    static std::array<std::unique_ptr<MonotoneCubic>, 3> tables;
    static std::once_flag flags[3];
    const auto idx = static_cast<std::size_t>(kind);
    std::call_once(flags[idx], [&] {
        constexpr int kKnots = 1 << 16;
        std::vector<double> s(kKnots), c(kKnots);
        for (int i = 0; i < kKnots; ++i) {
            s[i] = -8.0 + 16.0 * static_cast<double>(i) / (kKnots - 1);
            c[i] = base_marginal_cdf(kind, s[i]);
        }
        tables[idx] = std::make_unique<MonotoneCubic>(std::move(s), std::move(c));
    });
    return *tables[idx];
}

}  // namespace

double sample_base_marginal(StateKind kind, double unit) {
    return cdf_table(kind).solve(unit);
}

void CutPlan::validate() const {
    if (cuts.empty() || cuts.size() != counts.size())
        throw PreconditionError("cut plan: cuts and counts must be non-empty and equally long");
    for (std::size_t j = 0; j < cuts.size(); ++j) {
        if (!(cuts[j] >= 0.0 && cuts[j] < kPi))
            throw PreconditionError("cut plan: angles must lie in [0, pi)");
        if (counts[j] <= 0) throw PreconditionError("cut plan: per-cut counts must be positive");
        for (std::size_t i = 0; i < j; ++i)
            if (cuts[i] == cuts[j]) throw PreconditionError("cut plan: angles must be pairwise distinct");
    }
}

std::int64_t CutPlan::total() const {
    std::int64_t t = 0;
    for (auto c : counts) t += c;
    return t;
}

double CutDistribution::density(double theta) const {
    if (kind == CutDistributionKind::uniform) return 1.0 / kPi;
    const double u = scale_u(lambda, theta);
    return 1.0 / (kPi * u * u);
}

std::string CutDistribution::id() const {
    if (kind == CutDistributionKind::uniform) return "uniform";
    return "optimal(lambda=" + std::to_string(lambda) + ")";
}

CutDistribution parse_cut_distribution(const std::string& id, double lambda) {
    if (id == "uniform") return {CutDistributionKind::uniform, 1.0};
    if (id == "optimal") return {CutDistributionKind::optimal, lambda};
    throw UnknownDistribution("unknown cut distribution '" + id + "' (expected uniform|optimal)");
}

QuadratureDataset sample_per_cut(const StateModel& model, const CutPlan& plan, std::uint64_t seed,
                                 int threads) {
    model.validate();
    plan.validate();
    cdf_table(model.kind);  // build before fan-out

    QuadratureDataset ds;
    ds.cuts = plan.cuts;
    ds.seed = seed;
    ds.model = model;
    ds.samples.resize(plan.cuts.size());

    struct Task {
        std::size_t cut;
        std::int64_t begin, count;
        std::uint64_t chunk_index;
    };
    std::vector<Task> tasks;
    for (std::size_t j = 0; j < plan.cuts.size(); ++j) {
        ds.samples[j].resize(static_cast<std::size_t>(plan.counts[j]));
        for (std::int64_t b = 0, c = 0; b < plan.counts[j]; b += kChunk, ++c)
            tasks.push_back({j, b, std::min(kChunk, plan.counts[j] - b), static_cast<std::uint64_t>(c)});
    }

    const double l = model.effective_lambda();
    parallel_tasks(static_cast<std::int64_t>(tasks.size()), threads, [&](std::int64_t ti) {
        const Task& t = tasks[static_cast<std::size_t>(ti)];
        const double u = scale_u(l, plan.cuts[t.cut]);
        UniformSource rng(derive_seed(derive_seed(seed, t.cut), t.chunk_index));
        double* out = ds.samples[t.cut].data() + t.begin;
        for (std::int64_t n = 0; n < t.count; ++n)
            out[n] = u * sample_base_marginal(model.kind, rng.next_unit());
    });
    return ds;
}

JointSampleStream sample_joint(const StateModel& model, const CutDistribution& dist, std::int64_t M,
                               std::uint64_t seed, int threads) {
    model.validate();
    if (M < 1) throw PreconditionError("sample_joint: M must be >= 1");
    cdf_table(model.kind);

    JointSampleStream stream;
    stream.cut_distribution_id = dist.id();
    stream.seed = seed;
    stream.pairs.resize(static_cast<std::size_t>(M));

    const double l = model.effective_lambda();
    const double dist_lambda = dist.lambda;
    const bool optimal = dist.kind == CutDistributionKind::optimal;
    const std::int64_t n_chunks = (M + kChunk - 1) / kChunk;

    parallel_tasks(n_chunks, threads, [&](std::int64_t c) {
        const std::int64_t begin = c * kChunk;
        const std::int64_t count = std::min(kChunk, M - begin);
        UniformSource rng(derive_seed(seed, static_cast<std::uint64_t>(c)));
        auto* out = stream.pairs.data() + begin;
        for (std::int64_t n = 0; n < count; ++n) {
            const double v = rng.next_unit();
            // Inverse CDF of the angle distribution.  For the inverse-square
            // density, d/dtheta atan(lambda^2 tan(theta)) = 1/u^2(lambda,theta).
            const double w = kPi * (v - 0.5);
            const double theta = optimal ? std::atan(std::tan(w) / (dist_lambda * dist_lambda)) : w;
            const double u = scale_u(l, theta);
            const double s = u * sample_base_marginal(model.kind, rng.next_unit());
            out[n] = {theta, s};
        }
    });
    return stream;
}

}  // namespace nct
