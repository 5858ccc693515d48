#include "nct/cli.hpp"

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "nct/backprojection.hpp"
#include "nct/elementary_test.hpp"
#include "nct/errors.hpp"
#include "nct/phase_space.hpp"
#include "nct/quadrature.hpp"
#include "nct/sampler.hpp"
#include "nct/serialize.hpp"

namespace fs = std::filesystem;

namespace nct::cli {
namespace {

constexpr const char* kGeneratorVersion = "1.0.0";

// Fully resolved run state: parsed config plus flag overrides.  Outputs are
// write-once; reruns with the same config and seed are byte-identical, so a
// pre-existing file means the artifact is already there.
struct Context {
    std::string task;
    Json config;
    Json params;  // config "params" or {}
    StateModel model;
    bool has_model = false;
    std::uint64_t seed = 0;
    bool has_seed = false;
    int threads = 1;
    fs::path out;
};

Json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw PreconditionError("cannot open config file '" + path + "'");
    try {
        return Json::parse(in);
    } catch (const Json::parse_error& e) {
        throw SchemaError("", std::string("config is not valid JSON: ") + e.what());
    }
}

Context make_context(const Invocation& inv) {
    Context ctx;
    ctx.task = inv.task;
    if (inv.config_path.empty()) {
        if (inv.task != "verify")
            throw PreconditionError("task '" + inv.task + "' needs --config <file>");
        ctx.config = Json::object();
    } else {
        ctx.config = load_json_file(inv.config_path);
        if (!ctx.config.is_object()) throw SchemaError("", "config root must be an object");
    }

    if (ctx.config.contains("task")) {
        const std::string declared = require_string(ctx.config, "task", "");
        if (declared != inv.task)
            throw SchemaError("/task", "config is for task '" + declared +
                                           "' but subcommand is '" + inv.task + "'");
    }

    if (ctx.config.contains("model")) {
        ctx.model = state_model_from_json(ctx.config.at("model"), "/model");
        ctx.has_model = true;
    }

    if (inv.seed) {
        ctx.seed = *inv.seed;
        ctx.has_seed = true;
    } else if (ctx.config.contains("seed")) {
        const Json& s = ctx.config.at("seed");
        if (!s.is_number_integer() || s.get<std::int64_t>() < 0)
            throw SchemaError("/seed", "must be a non-negative integer");
        ctx.seed = s.get<std::uint64_t>();
        ctx.has_seed = true;
    }

    if (inv.threads > 0) {
        ctx.threads = inv.threads;
    } else if (ctx.config.contains("threads")) {
        const std::int64_t t = require_integer(ctx.config, "threads", "");
        if (t < 1 || t > 1024) throw SchemaError("/threads", "must be in [1, 1024]");
        ctx.threads = static_cast<int>(t);
    }

    if (!inv.out_dir.empty()) {
        ctx.out = inv.out_dir;
    } else if (ctx.config.contains("out")) {
        ctx.out = require_string(ctx.config, "out", "");
    } else {
        ctx.out = ".";
    }

    if (ctx.config.contains("params")) {
        if (!ctx.config.at("params").is_object())
            throw SchemaError("/params", "must be an object");
        ctx.params = ctx.config.at("params");
    } else {
        ctx.params = Json::object();
    }
    return ctx;
}

const StateModel& require_model(const Context& ctx) {
    if (!ctx.has_model) throw SchemaError("/model", "required for task '" + ctx.task + "'");
    return ctx.model;
}

std::uint64_t require_seed(const Context& ctx) {
    if (!ctx.has_seed)
        throw SchemaError("/seed", "required for task '" + ctx.task + "' (or pass --seed)");
    return ctx.seed;
}

std::int64_t integer_or(const Json& p, const std::string& key, const std::string& ptr,
                        std::int64_t dflt) {
    return p.contains(key) ? require_integer(p, key, ptr) : dflt;
}

std::string string_or(const Json& p, const std::string& key, const std::string& ptr,
                      const std::string& dflt) {
    return p.contains(key) ? require_string(p, key, ptr) : dflt;
}

// Reserves an output path: creates the directory, refuses to overwrite.
fs::path output_path(const Context& ctx, const std::string& name) {
    fs::create_directories(ctx.out);
    fs::path p = ctx.out / name;
    if (fs::exists(p))
        throw PreconditionError("output '" + p.string() + "' already exists; outputs are write-once");
    return p;
}

void write_json_file(const fs::path& path, const Json& j) {
    std::ofstream out(path);
    if (!out) throw PreconditionError("cannot write '" + path.string() + "'");
    out << j.dump(2) << '\n';
}

// Run manifest: echoes the config verbatim (nlohmann objects serialize with
// sorted keys, so the echo is deterministic) plus the resolved seed.
Json manifest_base(const Context& ctx) {
    Json m{{"task", ctx.task}, {"generator_version", kGeneratorVersion}, {"config", ctx.config}};
    if (ctx.has_seed) m["seed"] = ctx.seed;
    return m;
}

std::vector<std::int64_t> integer_array(const Json& p, const std::string& key,
                                        const std::string& ptr) {
    const Json& arr = require_field(p, key, ptr);
    if (!arr.is_array() || arr.empty())
        throw SchemaError(ptr + "/" + key, "must be a non-empty array of integers");
    std::vector<std::int64_t> out;
    out.reserve(arr.size());
    for (const Json& v : arr) {
        if (!v.is_number_integer())
            throw SchemaError(ptr + "/" + key, "must be a non-empty array of integers");
        out.push_back(v.get<std::int64_t>());
    }
    return out;
}

int task_sample(const Context& ctx) {
    const StateModel& model = require_model(ctx);
    const std::uint64_t seed = require_seed(ctx);
    const Json& p = ctx.params;

    CutPlan plan;
    if (p.contains("cuts")) {
        plan.cuts = require_number_array(p, "cuts", "/params");
    } else if (p.contains("cut_count")) {
        const std::int64_t m = require_integer(p, "cut_count", "/params");
        if (m < 1) throw SchemaError("/params/cut_count", "must be positive");
        for (std::int64_t j = 0; j < m; ++j)
            plan.cuts.push_back(static_cast<double>(j) * std::numbers::pi / static_cast<double>(m));
    } else {
        throw SchemaError("/params/cuts", "provide 'cuts' or 'cut_count'");
    }
    if (p.contains("counts")) {
        plan.counts = integer_array(p, "counts", "/params");
    } else {
        const std::int64_t n = require_integer(p, "samples_per_cut", "/params");
        plan.counts.assign(plan.cuts.size(), n);
    }

    const fs::path csv = output_path(ctx, "dataset.csv");
    const fs::path man = output_path(ctx, "sample_manifest.json");

    QuadratureDataset dataset = sample_per_cut(model, plan, seed, ctx.threads);
    write_dataset_csv(csv.string(), dataset);

    Json manifest = manifest_base(ctx);
    manifest["model"] = to_json(model);
    manifest["cuts"] = plan.cuts;
    manifest["counts"] = plan.counts;
    manifest["seed"] = seed;
    manifest["outputs"] = Json::array({"dataset.csv"});
    write_json_file(man, manifest);

    std::cout << "sample: " << plan.total() << " draws over " << plan.cuts.size()
              << " cuts -> " << csv.string() << "\n";
    return 0;
}

int task_elementary(const Context& ctx) {
    const Json& p = ctx.params;
    const std::string dataset_path = require_string(p, "dataset", "/params");

    ElementaryTestSpec spec;
    if (p.contains("spec")) {
        spec = test_spec_from_json(p.at("spec"), "/params/spec");
    } else if (p.contains("spec_path")) {
        const Json j = load_json_file(require_string(p, "spec_path", "/params"));
        spec = test_spec_from_json(j, "/params/spec_path");
    } else {
        throw SchemaError("/params/spec", "provide 'spec' or 'spec_path'");
    }

    const fs::path out = output_path(ctx, "outcome.json");
    const fs::path man = output_path(ctx, "elementary_manifest.json");

    QuadratureDataset dataset = read_dataset_csv(dataset_path);
    TestOutcome outcome = evaluate_test(dataset, spec, ctx.threads);

    Json doc = to_json(outcome);
    doc["spec"] = to_json(spec);
    write_json_file(out, doc);

    Json manifest = manifest_base(ctx);
    manifest["dataset"] = dataset_path;
    manifest["outputs"] = Json::array({"outcome.json"});
    write_json_file(man, manifest);

    std::cout << "elementary: mean=" << format_sig17(outcome.mean)
              << " g_stat=" << format_sig17(outcome.g_stat) << " G=" << format_sig17(outcome.G)
              << "\n";
    return 0;
}

int task_optimize(const Context& ctx) {
    const StateModel& model = require_model(ctx);
    const Json& p = ctx.params;

    std::vector<std::int64_t> orders;
    if (p.contains("N_list")) {
        orders = integer_array(p, "N_list", "/params");
    } else {
        const std::int64_t n_max = require_integer(p, "N_max", "/params");
        if (n_max < 1) throw SchemaError("/params/N_max", "must be positive");
        for (std::int64_t n = 1; n <= n_max; ++n) orders.push_back(n);
    }
    const std::int64_t M = integer_or(p, "M", "/params", 1000000);
    const std::int64_t fixed_m = integer_or(p, "m", "/params", 0);

    const fs::path csv = output_path(ctx, "optimize.csv");
    std::vector<fs::path> spec_paths;
    for (std::int64_t N : orders)
        spec_paths.push_back(output_path(ctx, "spec_N" + std::to_string(N) + ".json"));
    const fs::path man = output_path(ctx, "optimize_manifest.json");

    std::vector<std::vector<double>> rows;
    for (std::size_t i = 0; i < orders.size(); ++i) {
        const int N = static_cast<int>(orders[i]);
        const int m = fixed_m > 0 ? static_cast<int>(fixed_m) : N + 1;
        auto [spec, outcome] = optimize_radial(model, N, m, M);
        rows.push_back({static_cast<double>(N), outcome.G});
        Json doc = to_json(spec);
        doc["outcome"] = to_json(outcome);
        write_json_file(spec_paths[i], doc);
        std::cout << "optimize: N=" << N << " G=" << format_sig17(outcome.G) << "\n";
    }
    write_csv(csv.string(), "N,G", rows);

    Json manifest = manifest_base(ctx);
    manifest["outputs"] = Json::array({"optimize.csv"});
    for (const fs::path& sp : spec_paths) manifest["outputs"].push_back(sp.filename().string());
    write_json_file(man, manifest);
    return 0;
}

int task_backproject(const Context& ctx) {
    const StateModel& model = require_model(ctx);
    const Json& p = ctx.params;

    KernelSpec kernel;
    kernel.a = require_number(p, "a", "/params");
    kernel.epsilon = require_number(p, "epsilon", "/params");
    kernel.lambda = model.effective_lambda();
    kernel.validate();

    const std::string dist_id = string_or(p, "distribution", "/params", "uniform");
    const CutDistribution dist = parse_cut_distribution(dist_id, kernel.lambda);
    const std::int64_t M = require_integer(p, "M", "/params");
    const std::string mode = string_or(p, "mode", "/params", "mc");
    if (mode != "mc" && mode != "analytic")
        throw SchemaError("/params/mode", "must be 'mc' or 'analytic'");

    const fs::path out = output_path(ctx, "backproject.json");
    const fs::path man = output_path(ctx, "backproject_manifest.json");

    MCEstimate est;
    Json doc;
    if (mode == "mc") {
        const std::uint64_t seed = require_seed(ctx);
        JointSampleStream stream = sample_joint(model, dist, M, seed, ctx.threads);
        est = mc_estimate(stream, kernel, dist, ctx.threads);
        doc["seed"] = seed;
    } else {
        est = analytic_mc_estimate(model, kernel, dist, M);
    }
    doc["estimate"] = to_json(est);
    doc["a"] = kernel.a;
    doc["epsilon"] = kernel.epsilon;
    doc["lambda"] = kernel.lambda;
    doc["distribution"] = dist.id();
    doc["mode"] = mode;
    doc["M"] = M;
    write_json_file(out, doc);

    Json manifest = manifest_base(ctx);
    manifest["outputs"] = Json::array({"backproject.json"});
    write_json_file(man, manifest);

    std::cout << "backproject: mean=" << format_sig17(est.mean)
              << " sd=" << format_sig17(std::sqrt(est.variance))
              << " delta=" << format_sig17(est.delta_bound) << "\n";
    return 0;
}

int task_finite_cuts(const Context& ctx) {
    const StateModel& model = require_model(ctx);
    const Json& p = ctx.params;
    const double lambda = model.effective_lambda();

    std::vector<std::int64_t> ms;
    if (p.contains("m_list")) {
        ms = integer_array(p, "m_list", "/params");
    } else {
        ms.push_back(require_integer(p, "m", "/params"));
    }
    const std::int64_t M = integer_or(p, "M", "/params", 0);

    const fs::path csv = output_path(ctx, "finite_cuts.csv");
    std::vector<fs::path> plan_paths;
    for (std::int64_t m : ms)
        plan_paths.push_back(output_path(ctx, "plan_m" + std::to_string(m) + ".json"));
    const fs::path man = output_path(ctx, "finite_cuts_manifest.json");

    std::vector<std::vector<double>> rows;
    for (std::size_t i = 0; i < ms.size(); ++i) {
        FiniteCutPlan plan = finite_cut_plan(lambda, static_cast<int>(ms[i]));
        if (M > 0) plan.counts = allocate_measurements(plan, M);
        rows.push_back({static_cast<double>(ms[i]), plan.numerical_error});
        write_json_file(plan_paths[i], to_json(plan));
        std::cout << "finite-cuts: m=" << ms[i] << " E=" << format_sig17(plan.numerical_error)
                  << "\n";
    }
    write_csv(csv.string(), "m,E", rows);

    Json manifest = manifest_base(ctx);
    manifest["lambda"] = lambda;
    manifest["outputs"] = Json::array({"finite_cuts.csv"});
    for (const fs::path& pp : plan_paths) manifest["outputs"].push_back(pp.filename().string());
    write_json_file(man, manifest);
    return 0;
}

int task_compare(const Context& ctx) {
    const StateModel& model = require_model(ctx);
    const Json& p = ctx.params;

    const int N = static_cast<int>(integer_or(p, "N", "/params", 16));
    const int m = static_cast<int>(integer_or(p, "m", "/params", N + 1));
    std::vector<std::int64_t> budgets;
    if (p.contains("M_list")) {
        budgets = integer_array(p, "M_list", "/params");
    } else {
        budgets.push_back(require_integer(p, "M", "/params"));
    }
    const std::string dist_id = string_or(p, "distribution", "/params", "uniform");
    const double lambda = model.effective_lambda();
    const CutDistribution dist = parse_cut_distribution(dist_id, lambda);

    const fs::path csv = output_path(ctx, "compare.csv");
    const fs::path man = output_path(ctx, "compare_manifest.json");

    std::vector<std::vector<double>> rows;
    Json details = Json::array();
    for (std::int64_t M : budgets) {
        auto [spec, outcome] = optimize_radial(model, N, m, M);
        auto [kernel, est] = optimize_kernel_parameters(model, lambda, dist, M);
        CompareResult r = compare_R(outcome, est);
        rows.push_back({static_cast<double>(M), r.value});
        Json d{{"M", M},           {"R", r.value},           {"valid", r.valid},
               {"G", outcome.G},   {"a", kernel.a},          {"epsilon", kernel.epsilon},
               {"test_mean", outcome.mean}, {"radon_mean", est.mean}};
        details.push_back(d);
        std::cout << "compare: M=" << M << " R=" << format_sig17(r.value)
                  << (r.valid ? "" : " (invalid: a mean is non-negative)") << "\n";
    }
    write_csv(csv.string(), "M,R", rows);

    Json manifest = manifest_base(ctx);
    manifest["N"] = N;
    manifest["m"] = m;
    manifest["details"] = details;
    manifest["outputs"] = Json::array({"compare.csv"});
    write_json_file(man, manifest);
    return 0;
}

// Fast self-contained invariant sweep; prints one line per check.
int task_verify(const Context& ctx) {
    (void)ctx;
    int failures = 0;
    auto check = [&](const std::string& name, bool ok, const std::string& detail = "") {
        if (ok) {
            std::cout << "[PASS] " << name << "\n";
        } else {
            ++failures;
            std::cout << "[FAIL] " << name << (detail.empty() ? "" : " (" + detail + ")") << "\n";
        }
    };
    const double pi = std::numbers::pi;

    {
        std::vector<PhasePoint> pts;
        for (int i = 0; i < 40; ++i) {
            const double r = 0.07 * static_cast<double>(i + 1);
            const double phi = 2.39996322972865332 * static_cast<double>(i);
            pts.push_back({r * std::cos(phi), r * std::sin(phi)});
        }
        double worst = 0;
        for (int n = 1; n <= 6; ++n) worst = std::max(worst, verify_radial_identity(n, n + 1, pts));
        check("radial reconstruction identity (n <= 6, m = n + 1)", worst < 1e-9,
              "residual " + format_sig17(worst));
    }
    {
        const double e1 = std::abs(radial_t_coefficient(1, 3) - 2.0 / 3.0);
        const double e2 = std::abs(radial_t_coefficient(2, 3) - 8.0 / 9.0);
        check("uniform-cut coefficient values", e1 < 1e-14 && e2 < 1e-14);
    }
    {
        double worst = 0;
        for (double lambda : {0.2, 1.0, 5.0}) {
            const double inv2 = integrate(
                [&](double th) { return 1.0 / (scale_u(lambda, th) * scale_u(lambda, th)); },
                -pi / 2, pi / 2);
            const double sq = integrate(
                [&](double th) { return scale_u(lambda, th) * scale_u(lambda, th); }, -pi / 2,
                pi / 2);
            worst = std::max(worst, std::abs(inv2 - pi));
            worst = std::max(worst,
                             std::abs(sq - pi * (lambda * lambda + 1.0 / (lambda * lambda)) / 2));
        }
        check("angular scale integrals", worst < 1e-8, "residual " + format_sig17(worst));
    }
    {
        const StateModel single{StateKind::single_photon, 1.0};
        const StateModel vac{StateKind::vacuum_control, 1.0};
        const StateModel sq{StateKind::squeezed_single_photon, 2.0};
        const double w0 = eval_wigner(single, {0, 0});
        const double v0 = eval_wigner(vac, {0, 0});
        const double rel = eval_wigner(sq, {0.3, -0.4}) - eval_wigner(single, {0.6, -0.2});
        check("phase-space origin values and squeeze covariance",
              std::abs(w0 + 1.0 / pi) < 1e-12 && std::abs(v0 - 1.0 / pi) < 1e-12 &&
                  std::abs(rel) < 1e-12);
    }
    {
        const StateModel single{StateKind::single_photon, 1.0};
        const Marginal marg = radon_marginal(single, 0.3);
        const double norm = integrate([&](double s) { return marg.density(s); }, -10.0, 10.0);
        const double second =
            integrate([&](double s) { return s * s * marg.density(s); }, -10.0, 10.0);
        check("marginal normalization and second moment",
              std::abs(norm - 1) < 1e-9 && std::abs(second - 1.5) < 1e-9);
    }
    {
        const double m2 = static_cast<double>(base_moment_ld(StateKind::single_photon, 2));
        const double m4 = static_cast<double>(base_moment_ld(StateKind::single_photon, 4));
        const double v2 = static_cast<double>(base_moment_ld(StateKind::vacuum_control, 2));
        check("base quadrature moments",
              std::abs(m2 - 1.5) < 1e-12 && std::abs(m4 - 3.75) < 1e-12 &&
                  std::abs(v2 - 0.5) < 1e-12);
    }
    {
        KernelSpec k{1.0, 1.0, 1e-6};
        const double inner = kernel_eval(k, 0.7, 0.5);
        const double outer = kernel_eval(k, 0.7, 2.0);
        check("kernel branch values",
              std::abs(inner - 1.0 / pi) < 1e-12 &&
                  std::abs(outer - (1.0 / pi) * (1.0 - 2.0 / std::sqrt(3.0))) < 1e-12);
    }
    {
        const StateModel single{StateKind::single_photon, 1.0};
        KernelSpec k{1.0, 1.0, 1e-6};
        const MCEstimate est = analytic_mc_estimate(single, k, optimal_cut_distribution(1.0), 1000);
        const double oracle = disc_average_oracle(1.0);
        check("analytic back-projection vs disc average",
              std::abs(est.mean - oracle) <= est.delta_bound + 1e-6,
              "diff " + format_sig17(std::abs(est.mean - oracle)));
    }
    {
        KernelSpec k{0.6, 1.0, 0.0};
        FilterSpec f{0.6, 1.0, {0, 0}};
        const double dev = adjoint_radon_check(k, f);
        check("adjoint identity on the reduced disc", dev < 1e-4, "max dev " + format_sig17(dev));
    }
    {
        FiniteCutPlan plan = finite_cut_plan(1.0, 4);
        std::vector<std::int64_t> counts = allocate_measurements(plan, 100);
        std::int64_t total = 0;
        bool equal = true;
        for (std::int64_t c : counts) {
            total += c;
            equal = equal && c == 25;
        }
        check("symmetric finite-cut plan and allocation",
              plan.numerical_error < 1e-12 && total == 100 && equal);
    }
    {
        const StateModel single{StateKind::single_photon, 1.0};
        const StateModel squeezed{StateKind::squeezed_single_photon, 2.0};
        auto [spec, outcome] = optimize_radial(single, 4, 5, 1000000);
        const TestOutcome moved = analytic_outcome(squeezed, squeeze_transform(spec, 2.0), 1000000);
        const StateModel vac{StateKind::vacuum_control, 1.0};
        const TestOutcome on_vac = analytic_outcome(vac, spec, 1000000);
        check("squeeze invariance of the optimized statistic",
              std::abs(moved.G - outcome.G) < 1e-9,
              "diff " + format_sig17(std::abs(moved.G - outcome.G)));
        check("vacuum control stays non-negative", on_vac.mean >= 0,
              "mean " + format_sig17(on_vac.mean));
    }
    {
        const StateModel single{StateKind::single_photon, 1.0};
        CutPlan plan{{0.0, pi / 2}, {200, 200}};
        QuadratureDataset d1 = sample_per_cut(single, plan, 7, 1);
        QuadratureDataset d2 = sample_per_cut(single, plan, 7, 4);
        QuadratureDataset d3 = sample_per_cut(single, plan, 8, 1);
        check("sampler determinism across thread counts",
              d1.samples == d2.samples && d1.samples != d3.samples);
    }

    std::cout << (failures == 0 ? "verify: all checks passed\n"
                                : "verify: " + std::to_string(failures) + " check(s) failed\n");
    return failures == 0 ? 0 : 3;
}

int dispatch(const Invocation& inv) {
    const Context ctx = make_context(inv);
    if (inv.task == "sample") return task_sample(ctx);
    if (inv.task == "elementary") return task_elementary(ctx);
    if (inv.task == "optimize") return task_optimize(ctx);
    if (inv.task == "backproject") return task_backproject(ctx);
    if (inv.task == "finite-cuts") return task_finite_cuts(ctx);
    if (inv.task == "compare") return task_compare(ctx);
    if (inv.task == "verify") return task_verify(ctx);
    throw PreconditionError("unknown task '" + inv.task + "'");
}

}  // namespace

int run_task(const Invocation& inv) {
    try {
        return dispatch(inv);
    } catch (const SchemaError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return e.kind() == Error::Kind::precondition ? 2 : 3;
    }
}

int main_entry(const std::vector<std::string>& args) {
    CLI::App app{"Homodyne nonclassicality tests: sampling, elementary quadrature tests, "
                 "filtered back-projection, and their comparison"};
    app.require_subcommand(1);
    app.fallthrough(true);

    std::string config_path;
    std::string out_dir;
    std::uint64_t seed_value = 0;
    int threads = 0;
    app.add_option("--config", config_path, "JSON experiment config");
    auto* seed_opt = app.add_option("--seed", seed_value, "RNG seed (overrides config)");
    app.add_option("--out", out_dir, "output directory (overrides config)");
    app.add_option("--threads", threads, "worker thread count (overrides config)")
        ->check(CLI::Range(1, 1024));

    const char* names[] = {"sample",      "elementary", "optimize", "backproject",
                           "finite-cuts", "compare",    "verify"};
    const char* descs[] = {
        "simulate per-cut homodyne datasets",
        "evaluate an elementary test on a dataset",
        "optimize radial tests over a ladder of orders",
        "back-project a disc-average estimate from random-phase sampling",
        "plan finite phase-cut estimates and their discretization error",
        "compare optimized elementary tests against back-projection",
        "run fast internal consistency checks",
    };
    for (std::size_t i = 0; i < 7; ++i) app.add_subcommand(names[i], descs[i]);

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(std::move(reversed));
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    Invocation inv;
    inv.task = app.get_subcommands().front()->get_name();
    inv.config_path = config_path;
    inv.out_dir = out_dir;
    inv.threads = threads;
    if (seed_opt->count() > 0) inv.seed = seed_value;

    try {
        return run_task(inv);
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace nct::cli
