#include "nct/serialize.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "nct/errors.hpp"
#include "nct/summation.hpp"

namespace nct {

std::string format_sig17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

namespace {

std::string kind_to_string(StateKind kind) {
    switch (kind) {
        case StateKind::single_photon: return "single_photon";
        case StateKind::squeezed_single_photon: return "squeezed_single_photon";
        case StateKind::vacuum_control: return "vacuum_control";
    }
    throw PreconditionError("state model: unknown kind");
}

StateKind kind_from_string(const std::string& s, const std::string& ptr) {
    if (s == "single_photon") return StateKind::single_photon;
    if (s == "squeezed_single_photon") return StateKind::squeezed_single_photon;
    if (s == "vacuum_control") return StateKind::vacuum_control;
    throw SchemaError(ptr, "unknown state kind '" + s + "'");
}

}  // namespace

const Json& require_field(const Json& j, const std::string& key, const std::string& ptr) {
    if (!j.is_object() || !j.contains(key)) throw SchemaError(ptr + "/" + key, "required field is missing");
    return j.at(key);
}

double require_number(const Json& j, const std::string& key, const std::string& ptr) {
    const Json& v = require_field(j, key, ptr);
    if (!v.is_number()) throw SchemaError(ptr + "/" + key, "expected a number");
    return v.get<double>();
}

std::int64_t require_integer(const Json& j, const std::string& key, const std::string& ptr) {
    const Json& v = require_field(j, key, ptr);
    if (!v.is_number_integer()) throw SchemaError(ptr + "/" + key, "expected an integer");
    return v.get<std::int64_t>();
}

std::string require_string(const Json& j, const std::string& key, const std::string& ptr) {
    const Json& v = require_field(j, key, ptr);
    if (!v.is_string()) throw SchemaError(ptr + "/" + key, "expected a string");
    return v.get<std::string>();
}

std::vector<double> require_number_array(const Json& j, const std::string& key, const std::string& ptr) {
    const Json& v = require_field(j, key, ptr);
    if (!v.is_array()) throw SchemaError(ptr + "/" + key, "expected an array of numbers");
    std::vector<double> out;
    out.reserve(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (!v[i].is_number())
            throw SchemaError(ptr + "/" + key + "/" + std::to_string(i), "expected a number");
        out.push_back(v[i].get<double>());
    }
    return out;
}

Json to_json(const StateModel& model) {
    return Json{{"kind", kind_to_string(model.kind)}, {"lambda", model.lambda}};
}

StateModel state_model_from_json(const Json& j, const std::string& ptr) {
    StateModel model;
    model.kind = kind_from_string(require_string(j, "kind", ptr), ptr + "/kind");
    if (j.contains("lambda")) {
        if (!j.at("lambda").is_number()) throw SchemaError(ptr + "/lambda", "expected a number");
        model.lambda = j.at("lambda").get<double>();
    }
    try {
        model.validate();
    } catch (const Error& e) {
        throw SchemaError(ptr, e.what());
    }
    return model;
}

Json to_json(const ElementaryTestSpec& spec) {
    Json j;
    j["N"] = spec.N;
    j["mode"] = (spec.mode == TestMode::radial) ? "radial" : "general";
    j["cuts"] = spec.cuts;
    j["stretch"] = spec.stretch;
    if (spec.mode == TestMode::radial) {
        j["d"] = spec.d;
        j["T"] = spec.T_radial;
    } else {
        j["D"] = spec.D;
        j["T"] = spec.T_general;
    }
    return j;
}

ElementaryTestSpec test_spec_from_json(const Json& j, const std::string& ptr) {
    ElementaryTestSpec spec;
    spec.N = static_cast<int>(require_integer(j, "N", ptr));
    const std::string mode = require_string(j, "mode", ptr);
    if (mode == "radial")
        spec.mode = TestMode::radial;
    else if (mode == "general")
        spec.mode = TestMode::general;
    else
        throw SchemaError(ptr + "/mode", "expected 'radial' or 'general'");
    spec.cuts = require_number_array(j, "cuts", ptr);
    if (j.contains("stretch")) {
        if (!j.at("stretch").is_number()) throw SchemaError(ptr + "/stretch", "expected a number");
        spec.stretch = j.at("stretch").get<double>();
    }
    try {
        if (spec.mode == TestMode::radial) {
            spec.d = require_number_array(j, "d", ptr);
            if (j.contains("T")) {
                spec.T_radial = j.at("T").get<std::vector<std::vector<double>>>();
            } else {
                // Default reconstruction for uniform cuts; validate() rejects
                // the combination when the cuts are not actually uniform.
                const int m = spec.cut_count();
                for (int n = 1; n <= 2 * spec.radial_terms(); ++n)
                    spec.T_radial.emplace_back(m, radial_t_coefficient(n, m));
            }
        } else {
            spec.D = require_field(j, "D", ptr).get<std::vector<std::vector<double>>>();
            spec.T_general =
                require_field(j, "T", ptr).get<std::vector<std::vector<std::vector<double>>>>();
        }
    } catch (const Json::exception& e) {
        throw SchemaError(ptr + "/T", std::string("malformed coefficient arrays: ") + e.what());
    }
    try {
        spec.validate();
    } catch (const Error& e) {
        throw SchemaError(ptr, e.what());
    }
    return spec;
}

Json to_json(const TestOutcome& outcome) {
    return Json{{"mean", outcome.mean},   {"variance", outcome.variance}, {"g_stat", outcome.g_stat},
                {"G", outcome.G},         {"M", outcome.M},               {"m", outcome.m}};
}

Json to_json(const MCEstimate& est) {
    return Json{{"mean", est.mean},
                {"variance", est.variance},
                {"delta_bound", est.delta_bound},
                {"M", est.M},
                {"ratio", est.ratio},
                {"numerical_error", 0.0}};
}

Json to_json(const FiniteCutEstimate& est) {
    return Json{{"mean", est.mean},
                {"variance", est.variance},
                {"delta_bound", est.delta_bound},
                {"ratio", est.ratio},
                {"numerical_error", est.numerical_error},
                {"total_error", est.total_error},
                {"M", est.M}};
}

Json to_json(const FiniteCutPlan& plan) {
    Json j;
    j["cuts"] = plan.cuts;
    j["widths"] = plan.widths;
    j["counts"] = plan.counts;
    j["lambda"] = plan.lambda;
    j["numerical_error"] = plan.numerical_error;
    return j;
}

FiniteCutPlan finite_cut_plan_from_json(const Json& j, const std::string& ptr) {
    FiniteCutPlan plan;
    plan.lambda = require_number(j, "lambda", ptr);
    plan.cuts = require_number_array(j, "cuts", ptr);
    plan.widths = require_number_array(j, "widths", ptr);
    if (j.contains("counts")) {
        const Json& c = j.at("counts");
        if (!c.is_array()) throw SchemaError(ptr + "/counts", "expected an array of integers");
        for (const auto& v : c) plan.counts.push_back(v.get<std::int64_t>());
    }
    plan.weights.resize(plan.cuts.size());
    plan.scaled_weights.resize(plan.cuts.size());
    constexpr double kPi = 3.14159265358979323846;
    CompensatedSum<double> W_sum;
    for (std::size_t i = 0; i < plan.cuts.size(); ++i) {
        const double u = scale_u(plan.lambda, plan.cuts[i]);
        plan.weights[i] = plan.widths[i] / kPi;
        plan.scaled_weights[i] = plan.weights[i] / (u * u);
        W_sum.add(plan.scaled_weights[i]);
    }
    plan.numerical_error = std::abs(1.0 - W_sum.value());
    try {
        plan.validate();
    } catch (const Error& e) {
        throw SchemaError(ptr, e.what());
    }
    return plan;
}

Json to_json(const BackprojectionPlan& plan) {
    return Json{{"a", plan.a},           {"lambda", plan.lambda}, {"epsilon", plan.epsilon},
                {"distribution", plan.distribution}, {"M", plan.M},     {"seed", plan.seed}};
}

BackprojectionPlan backprojection_plan_from_json(const Json& j, const std::string& ptr) {
    BackprojectionPlan plan;
    plan.a = require_number(j, "a", ptr);
    plan.lambda = require_number(j, "lambda", ptr);
    plan.epsilon = require_number(j, "epsilon", ptr);
    plan.distribution = require_string(j, "distribution", ptr);
    plan.M = require_integer(j, "M", ptr);
    if (j.contains("seed")) plan.seed = j.at("seed").get<std::uint64_t>();
    if (plan.distribution != "uniform" && plan.distribution != "optimal")
        throw SchemaError(ptr + "/distribution", "expected 'uniform' or 'optimal'");
    return plan;
}

void write_dataset_csv(const std::string& path, const QuadratureDataset& dataset) {
    std::ofstream out(path);
    if (!out) throw PreconditionError("cannot open '" + path + "' for writing");
    out << "theta,s\n";
    for (std::size_t j = 0; j < dataset.cuts.size(); ++j) {
        const std::string theta = format_sig17(dataset.cuts[j]);
        for (double s : dataset.samples[j]) out << theta << ',' << format_sig17(s) << '\n';
    }
    if (!out) throw PreconditionError("write to '" + path + "' failed");
}

QuadratureDataset read_dataset_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw PreconditionError("cannot open '" + path + "' for reading");
    std::string line;
    if (!std::getline(in, line) || line != "theta,s")
        throw PreconditionError("dataset '" + path + "': expected header 'theta,s'");

    QuadratureDataset dataset;
    std::size_t line_no = 1;
    std::size_t current = 0;
    bool have_current = false;
    double current_theta = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos)
            throw PreconditionError("dataset '" + path + "' line " + std::to_string(line_no) +
                                    ": expected 'theta,s'");
        double theta = 0, s = 0;
        try {
            theta = std::stod(line.substr(0, comma));
            s = std::stod(line.substr(comma + 1));
        } catch (const std::exception&) {
            throw PreconditionError("dataset '" + path + "' line " + std::to_string(line_no) +
                                    ": malformed number");
        }
        if (!have_current || theta != current_theta) {
            // Either a new cut or a return to an earlier one.
            have_current = true;
            current_theta = theta;
            current = dataset.cuts.size();
            for (std::size_t j = 0; j < dataset.cuts.size(); ++j)
                if (dataset.cuts[j] == theta) {
                    current = j;
                    break;
                }
            if (current == dataset.cuts.size()) {
                dataset.cuts.push_back(theta);
                dataset.samples.emplace_back();
            }
        }
        dataset.samples[current].push_back(s);
    }
    return dataset;
}

void write_csv(const std::string& path, const std::string& header,
               const std::vector<std::vector<double>>& rows) {
    std::ofstream out(path);
    if (!out) throw PreconditionError("cannot open '" + path + "' for writing");
    out << header << '\n';
    for (const auto& row : rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) out << ',';
            out << format_sig17(row[i]);
        }
        out << '\n';
    }
    if (!out) throw PreconditionError("write to '" + path + "' failed");
}

}  // namespace nct
