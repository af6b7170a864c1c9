#pragma once

#include <string>

#include <json.hpp>

#include "vrpo/estimation.hpp"
#include "vrpo/experiments.hpp"
#include "vrpo/models.hpp"
#include "vrpo/world.hpp"

namespace vrpo {

using Json = nlohmann::json;

// Eigen helpers: vectors as arrays, matrices as row-major nested arrays.
Json to_json(const Eigen::VectorXd& v);
Json to_json(const Eigen::MatrixXd& m);
Eigen::VectorXd vector_from_json(const Json& j);
Eigen::MatrixXd matrix_from_json(const Json& j);

Json to_json(const PreferenceKernel& kernel);
PreferenceKernel kernel_from_json(const Json& j);

Json to_json(const ReferencePolicy& policy);
ReferencePolicy ref_policy_from_json(const Json& j);

Json to_json(const World& world);
World world_from_json(const Json& j);

Json to_json(const FeatureMap& features);
FeatureMap feature_map_from_json(const Json& j);

Json to_json(const AuxiliaryModel& aux);

Json to_json(const RewardModel& model);
RewardModel reward_model_from_json(const Json& j);

Json to_json(const PolicyModel& model);
PolicyModel policy_model_from_json(const Json& j);

Json to_json(const FitResult& result);
FitResult fit_result_from_json(const Json& j);

Json to_json(const TheoryReport& report);

Json to_json(const StudyReport& report);

// Line-delimited dataset format: a header object
// {"k":..,"v":..,"root_seed":..,"path":[..]} on the first line, then one
// {"x":..,"y1":..,"y2":..,"z":..} record per line.
std::string dataset_to_jsonl(const Dataset& data);
Dataset dataset_from_jsonl(const std::string& text);

void write_text_file(const std::string& path, const std::string& text);
std::string read_text_file(const std::string& path);

}  // namespace vrpo
