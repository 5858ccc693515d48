#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "nct/backprojection.hpp"
#include "nct/cli.hpp"
#include "nct/elementary_test.hpp"
#include "nct/sampler.hpp"
#include "nct/serialize.hpp"

namespace fs = std::filesystem;
using namespace nct;

namespace {

// Fresh scratch directory per use; wiped up front so reruns start clean.
fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / "nct_cli_tests" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

struct CapturedStream {
    explicit CapturedStream(std::ostream& s) : stream(s), saved(s.rdbuf(buffer.rdbuf())) {}
    ~CapturedStream() { stream.rdbuf(saved); }
    std::string text() const { return buffer.str(); }

    std::ostream& stream;
    std::ostringstream buffer;
    std::streambuf* saved;
};

int run_cli(const std::vector<std::string>& args, std::string* err = nullptr,
            std::string* out = nullptr) {
    CapturedStream cerr_capture(std::cerr);
    CapturedStream cout_capture(std::cout);
    const int code = cli::main_entry(args);
    if (err) *err = cerr_capture.text();
    if (out) *out = cout_capture.text();
    return code;
}

fs::path write_config(const fs::path& dir, const Json& config) {
    fs::create_directories(dir);
    const fs::path path = dir / "config.json";
    std::ofstream file(path);
    file << config.dump(2) << '\n';
    return path;
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path);
    REQUIRE(in.good());
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

Json read_json(const fs::path& path) { return Json::parse(read_file(path)); }

// Parses a two-column CSV written by the tasks ("header" then value rows).
std::vector<std::pair<double, double>> read_pairs_csv(const fs::path& path,
                                                      const std::string& header) {
    std::ifstream in(path);
    REQUIRE(in.good());
    std::string line;
    REQUIRE(std::getline(in, line));
    REQUIRE(line == header);
    std::vector<std::pair<double, double>> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto comma = line.find(',');
        REQUIRE(comma != std::string::npos);
        rows.emplace_back(std::stod(line.substr(0, comma)), std::stod(line.substr(comma + 1)));
    }
    return rows;
}

Json sample_config(const fs::path& out, std::int64_t cut_count, std::int64_t per_cut,
                   std::uint64_t seed) {
    return Json{{"task", "sample"},
                {"model", {{"kind", "single_photon"}}},
                {"seed", seed},
                {"out", out.string()},
                {"params", {{"cut_count", cut_count}, {"samples_per_cut", per_cut}}}};
}

}  // namespace

TEST_CASE("verify runs without a config and passes") {
    std::string out;
    CHECK(run_cli({"verify"}, nullptr, &out) == 0);
    CHECK(out.find("[FAIL]") == std::string::npos);
    CHECK(out.find("all checks passed") != std::string::npos);
}

TEST_CASE("argument and config-file failures") {
    std::string err;
    CHECK(run_cli({"frobnicate"}, &err) != 0);
    CHECK(run_cli({}, &err) != 0);
    CHECK(run_cli({"sample", "--threads", "0"}, &err) != 0);  // rejected by the flag range

    CHECK(run_cli({"sample"}, &err) == 2);  // config required for every task but verify
    CHECK(err.find("--config") != std::string::npos);

    const fs::path dir = scratch("bad_configs");
    CHECK(run_cli({"sample", "--config", (dir / "absent.json").string()}, &err) == 2);
    CHECK(err.find("cannot open") != std::string::npos);

    std::ofstream(dir / "broken.json") << "{ not json";
    CHECK(run_cli({"sample", "--config", (dir / "broken.json").string()}, &err) == 2);
    CHECK(err.find("config error:") != std::string::npos);

    std::ofstream(dir / "array.json") << "[1, 2]";
    CHECK(run_cli({"sample", "--config", (dir / "array.json").string()}, &err) == 2);
    CHECK(err.find("must be an object") != std::string::npos);
}

TEST_CASE("schema violations exit 2 and name the offending field") {
    const fs::path dir = scratch("schema");
    std::string err;

    Json mismatched = sample_config(dir / "o1", 2, 5, 1);
    mismatched["task"] = "optimize";
    CHECK(run_cli({"sample", "--config", write_config(dir / "c1", mismatched).string()}, &err) ==
          2);
    CHECK(err.find("/task") != std::string::npos);

    Json no_model = sample_config(dir / "o2", 2, 5, 1);
    no_model.erase("model");
    CHECK(run_cli({"sample", "--config", write_config(dir / "c2", no_model).string()}, &err) == 2);
    CHECK(err.find("/model") != std::string::npos);

    Json no_seed = sample_config(dir / "o3", 2, 5, 1);
    no_seed.erase("seed");
    CHECK(run_cli({"sample", "--config", write_config(dir / "c3", no_seed).string()}, &err) == 2);
    CHECK(err.find("/seed") != std::string::npos);

    Json bad_cuts = sample_config(dir / "o4", 2, 5, 1);
    bad_cuts["params"] = Json{{"cuts", "wat"}, {"samples_per_cut", 5}};
    CHECK(run_cli({"sample", "--config", write_config(dir / "c4", bad_cuts).string()}, &err) == 2);
    CHECK(err.find("/params/cuts") != std::string::npos);

    Json no_plan = sample_config(dir / "o5", 2, 5, 1);
    no_plan["params"] = Json::object();
    CHECK(run_cli({"sample", "--config", write_config(dir / "c5", no_plan).string()}, &err) == 2);
    CHECK(err.find("/params/cuts") != std::string::npos);

    Json bad_threads = sample_config(dir / "o6", 2, 5, 1);
    bad_threads["threads"] = 2000;
    CHECK(run_cli({"sample", "--config", write_config(dir / "c6", bad_threads).string()}, &err) ==
          2);
    CHECK(err.find("/threads") != std::string::npos);

    const Json elementary{{"task", "elementary"}, {"params", Json::object()}};
    CHECK(run_cli({"elementary", "--config", write_config(dir / "c7", elementary).string()},
                  &err) == 2);
    CHECK(err.find("/params/dataset") != std::string::npos);

    Json bad_model = sample_config(dir / "o8", 2, 5, 1);
    bad_model["model"] = Json{{"kind", "thermal"}};
    CHECK(run_cli({"sample", "--config", write_config(dir / "c8", bad_model).string()}, &err) == 2);
    CHECK(err.find("/model/kind") != std::string::npos);
}

TEST_CASE("sample: reproducible datasets and write-once outputs") {
    const fs::path dir = scratch("sample_repro");
    const fs::path out1 = dir / "run1";
    const fs::path out2 = dir / "run2";

    const fs::path cfg1 = write_config(dir / "cfg1", sample_config(out1, 3, 500, 7));
    std::string out_text;
    CHECK(run_cli({"sample", "--config", cfg1.string()}, nullptr, &out_text) == 0);
    CHECK(out_text.find("1500 draws over 3 cuts") != std::string::npos);

    const Json manifest = read_json(out1 / "sample_manifest.json");
    CHECK(manifest.at("task") == "sample");
    CHECK(manifest.at("seed") == 7);
    CHECK(manifest.at("counts") == Json::array({500, 500, 500}));
    CHECK(manifest.at("outputs") == Json::array({"dataset.csv"}));
    CHECK(manifest.at("config").at("params").at("cut_count") == 3);

    // Same config into a different directory: byte-identical artifacts.
    Json cfg_again = sample_config(out2, 3, 500, 7);
    CHECK(run_cli({"sample", "--config", write_config(dir / "cfg2", cfg_again).string()}) == 0);
    CHECK(read_file(out2 / "dataset.csv") == read_file(out1 / "dataset.csv"));

    // Outputs are write-once: a rerun into the same directory refuses.
    std::string err;
    CHECK(run_cli({"sample", "--config", cfg1.string()}, &err) == 2);
    CHECK(err.find("already exists") != std::string::npos);

    // The seed flag wins over the config and lands in the manifest.
    const fs::path out3 = dir / "run3";
    const fs::path cfg3 = write_config(dir / "cfg3", sample_config(out3, 3, 500, 7));
    CHECK(run_cli({"sample", "--config", cfg3.string(), "--seed", "99"}) == 0);
    CHECK(read_json(out3 / "sample_manifest.json").at("seed") == 99);
    CHECK(read_file(out3 / "dataset.csv") != read_file(out1 / "dataset.csv"));

    // And --out wins over the config "out".
    const fs::path out4 = dir / "run4";
    CHECK(run_cli({"sample", "--config", cfg1.string(), "--out", out4.string()}) == 0);
    CHECK(fs::exists(out4 / "dataset.csv"));
}

TEST_CASE("sample: cut_count expands to uniform cuts") {
    const fs::path dir = scratch("sample_cuts");
    const fs::path out = dir / "run";
    CHECK(run_cli({"sample", "--config", write_config(dir, sample_config(out, 4, 10, 2)).string()}) ==
          0);
    const QuadratureDataset dataset = read_dataset_csv((out / "dataset.csv").string());
    REQUIRE(dataset.cuts.size() == 4);
    for (int j = 0; j < 4; ++j) {
        CHECK(dataset.cuts[static_cast<std::size_t>(j)] ==
              doctest::Approx(j * std::numbers::pi / 4.0).epsilon(1e-15));
        CHECK(dataset.samples[static_cast<std::size_t>(j)].size() == 10);
    }
}

TEST_CASE("elementary: evaluates a sampled dataset with default weights") {
    const fs::path dir = scratch("elementary");
    const fs::path data_dir = dir / "data";
    CHECK(run_cli({"sample", "--config",
                   write_config(dir / "sample_cfg", sample_config(data_dir, 5, 20000, 3)).string()}) ==
          0);

    Json spec_json{{"N", 4}, {"mode", "radial"}, {"d", {-1.0, 0.2}}};
    Json cuts = Json::array();
    for (int j = 0; j < 5; ++j) cuts.push_back(j * std::numbers::pi / 5.0);
    spec_json["cuts"] = cuts;

    const fs::path out = dir / "run";
    const Json config{{"task", "elementary"},
                      {"out", out.string()},
                      {"params",
                       {{"dataset", (data_dir / "dataset.csv").string()}, {"spec", spec_json}}}};
    CHECK(run_cli({"elementary", "--config", write_config(dir / "cfg", config).string()}) == 0);

    const Json doc = read_json(out / "outcome.json");
    CHECK(doc.at("M") == 100000);
    CHECK(doc.at("m") == 5);

    // The omitted reconstruction matrix defaults to the uniform-cut weights.
    const Json& T = doc.at("spec").at("T");
    REQUIRE(T.size() == 4);
    for (std::size_t n = 1; n <= 4; ++n) {
        REQUIRE(T[n - 1].size() == 5);
        for (const Json& w : T[n - 1])
            CHECK(w.get<double>() ==
                  doctest::Approx(radial_t_coefficient(static_cast<int>(n), 5)).epsilon(1e-15));
    }

    // Round trip: re-evaluating the written dataset in-process reproduces the
    // reported numbers bit for bit.
    const QuadratureDataset dataset = read_dataset_csv((data_dir / "dataset.csv").string());
    const ElementaryTestSpec spec = test_spec_from_json(doc.at("spec"), "/spec");
    const TestOutcome direct = evaluate_test(dataset, spec);
    CHECK(doc.at("mean").get<double>() == direct.mean);
    CHECK(doc.at("variance").get<double>() == direct.variance);
    CHECK(doc.at("G").get<double>() == direct.G);
}

TEST_CASE("optimize: order ladder with the expected signs") {
    const fs::path dir = scratch("optimize");
    const fs::path out = dir / "run";
    const Json config{{"task", "optimize"},
                      {"model", {{"kind", "single_photon"}}},
                      {"out", out.string()},
                      {"params", {{"N_list", {2, 3, 4}}, {"M", 1000000}}}};
    CHECK(run_cli({"optimize", "--config", write_config(dir, config).string()}) == 0);

    const auto rows = read_pairs_csv(out / "optimize.csv", "N,G");
    REQUIRE(rows.size() == 3);
    CHECK(rows[0].first == 2.0);
    CHECK(rows[0].second == doctest::Approx(0.13278897737120693).epsilon(1e-9));
    CHECK(rows[1].second == doctest::Approx(0.13278897737120693).epsilon(1e-9));
    CHECK(rows[2].second == doctest::Approx(-0.13312516060742693).epsilon(1e-9));

    const Json spec4 = read_json(out / "spec_N4.json");
    CHECK(spec4.at("N") == 4);
    CHECK(spec4.at("outcome").at("G").get<double>() == rows[2].second);
    CHECK(read_json(out / "optimize_manifest.json").at("outputs").size() == 4);
}

TEST_CASE("backproject: mc determinism and analytic equivalence") {
    const fs::path dir = scratch("backproject");
    Json config{{"task", "backproject"},
                {"model", {{"kind", "single_photon"}}},
                {"seed", 17},
                {"params",
                 {{"a", 1.0}, {"epsilon", 1e-3}, {"M", 200000}, {"mode", "mc"},
                  {"distribution", "uniform"}}}};

    config["out"] = (dir / "t1").string();
    const fs::path cfg1 = write_config(dir / "c1", config);
    CHECK(run_cli({"backproject", "--config", cfg1.string(), "--threads", "1"}) == 0);
    config["out"] = (dir / "t4").string();
    const fs::path cfg4 = write_config(dir / "c4", config);
    CHECK(run_cli({"backproject", "--config", cfg4.string(), "--threads", "4"}) == 0);
    CHECK(read_file(dir / "t1" / "backproject.json") == read_file(dir / "t4" / "backproject.json"));

    // Without a seed, mc mode cannot run.
    config["out"] = (dir / "t5").string();
    config.erase("seed");
    std::string err;
    CHECK(run_cli({"backproject", "--config", write_config(dir / "c5", config).string()}, &err) ==
          2);
    CHECK(err.find("/seed") != std::string::npos);

    // Analytic mode needs no seed and reproduces the library call exactly.
    config["out"] = (dir / "t6").string();
    config["params"]["mode"] = "analytic";
    CHECK(run_cli({"backproject", "--config", write_config(dir / "c6", config).string()}) == 0);
    const Json doc = read_json(dir / "t6" / "backproject.json");
    const MCEstimate direct =
        analytic_mc_estimate({StateKind::single_photon, 1.0}, {1.0, 1.0, 1e-3},
                             {CutDistributionKind::uniform, 1.0}, 200000);
    CHECK(doc.at("estimate").at("mean").get<double>() == direct.mean);
    CHECK(doc.at("estimate").at("variance").get<double>() == direct.variance);
    CHECK(doc.at("mode") == "analytic");

    const Json mc_doc = read_json(dir / "t1" / "backproject.json");
    CHECK(std::abs(mc_doc.at("estimate").at("mean").get<double>() - direct.mean) <
          4.0 * std::sqrt(direct.variance) + direct.delta_bound);
}

TEST_CASE("finite-cuts: refinement ladder and odd cut counts") {
    const fs::path dir = scratch("finite_cuts");
    const fs::path out = dir / "run";
    const Json config{{"task", "finite-cuts"},
                      {"model", {{"kind", "squeezed_single_photon"}, {"lambda", 5.0}}},
                      {"out", out.string()},
                      {"params", {{"m_list", {4, 8}}, {"M", 10000}}}};
    CHECK(run_cli({"finite-cuts", "--config", write_config(dir / "cfg", config).string()}) == 0);

    const auto rows = read_pairs_csv(out / "finite_cuts.csv", "m,E");
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].second == doctest::Approx(0.29244068861469452).epsilon(1e-6));
    CHECK(rows[1].second == doctest::Approx(0.072655966210332767).epsilon(1e-6));

    // Written plans round-trip through the parser, counts included.
    const FiniteCutPlan plan = finite_cut_plan_from_json(read_json(out / "plan_m4.json"), "");
    CHECK(plan.cut_count() == 4);
    std::int64_t total = 0;
    for (std::int64_t c : plan.counts) total += c;
    CHECK(total == 10000);
    CHECK(plan.numerical_error == doctest::Approx(rows[0].second).epsilon(1e-12));

    Json odd = config;
    odd["out"] = (dir / "odd").string();
    odd["params"] = Json{{"m", 7}};
    std::string err;
    CHECK(run_cli({"finite-cuts", "--config", write_config(dir / "cfg_odd", odd).string()}, &err) ==
          2);
    CHECK(err.find("error:") != std::string::npos);
}

TEST_CASE("compare: the elementary test dominates the back-projection") {
    const fs::path dir = scratch("compare");
    const fs::path out = dir / "run";
    const Json config{{"task", "compare"},
                      {"model", {{"kind", "single_photon"}}},
                      {"out", out.string()},
                      {"params", {{"N", 16}, {"m", 17}, {"M", 100000}}}};
    CHECK(run_cli({"compare", "--config", write_config(dir, config).string()}) == 0);

    const auto rows = read_pairs_csv(out / "compare.csv", "M,R");
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].first == 100000.0);
    CHECK(rows[0].second == doctest::Approx(5.5199514822918321).epsilon(1e-6));
    CHECK(rows[0].second > 1.0);

    const Json manifest = read_json(out / "compare_manifest.json");
    const Json& detail = manifest.at("details").at(0);
    CHECK(detail.at("valid") == true);
    CHECK(detail.at("G").get<double>() == doctest::Approx(-0.69150913320304563).epsilon(1e-9));
    CHECK(detail.at("test_mean").get<double>() < 0.0);
    CHECK(detail.at("radon_mean").get<double>() < 0.0);
}
