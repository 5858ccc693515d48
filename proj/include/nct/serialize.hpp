#pragma once

#include <string>
#include <vector>

#include "json.hpp"

#include "nct/backprojection.hpp"
#include "nct/elementary_test.hpp"
#include "nct/phase_space.hpp"
#include "nct/sampler.hpp"

namespace nct {

using Json = nlohmann::json;

// Decimal with 17 significant digits: doubles round-trip exactly.
std::string format_sig17(double v);

Json to_json(const StateModel& model);
// Readers take the JSON-pointer prefix of the value for error reporting and
// throw SchemaError on malformed input.
StateModel state_model_from_json(const Json& j, const std::string& ptr);

Json to_json(const ElementaryTestSpec& spec);
ElementaryTestSpec test_spec_from_json(const Json& j, const std::string& ptr);

Json to_json(const TestOutcome& outcome);
Json to_json(const MCEstimate& est);
Json to_json(const FiniteCutEstimate& est);

Json to_json(const FiniteCutPlan& plan);
FiniteCutPlan finite_cut_plan_from_json(const Json& j, const std::string& ptr);

Json to_json(const BackprojectionPlan& plan);
BackprojectionPlan backprojection_plan_from_json(const Json& j, const std::string& ptr);

// CSV with header "theta,s", one row per sample, grouped by cut.
void write_dataset_csv(const std::string& path, const QuadratureDataset& dataset);
// Groups rows by identical theta text in order of first appearance.  The seed
// and model are not stored in the CSV; callers restore them from the manifest.
QuadratureDataset read_dataset_csv(const std::string& path);

void write_csv(const std::string& path, const std::string& header,
               const std::vector<std::vector<double>>& rows);

// Schema access helpers shared with the CLI: fetch a field or throw
// SchemaError carrying the JSON-pointer path.
const Json& require_field(const Json& j, const std::string& key, const std::string& ptr);
double require_number(const Json& j, const std::string& key, const std::string& ptr);
std::int64_t require_integer(const Json& j, const std::string& key, const std::string& ptr);
std::string require_string(const Json& j, const std::string& key, const std::string& ptr);
std::vector<double> require_number_array(const Json& j, const std::string& key, const std::string& ptr);

}  // namespace nct
