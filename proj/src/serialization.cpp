#include "vrpo/serialization.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace vrpo {

Json to_json(const Eigen::VectorXd& v) {
  Json arr = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

Json to_json(const Eigen::MatrixXd& m) {
  Json rows = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::VectorXd vector_from_json(const Json& j) {
  Eigen::VectorXd v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  return v;
}

Eigen::MatrixXd matrix_from_json(const Json& j) {
  const Eigen::Index rows = static_cast<Eigen::Index>(j.size());
  if (rows == 0) return Eigen::MatrixXd(0, 0);
  const Eigen::Index cols = static_cast<Eigen::Index>(j[0].size());
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    if (static_cast<Eigen::Index>(j[r].size()) != cols) {
      throw std::invalid_argument("ragged matrix rows in document");
    }
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = j[r][c].get<double>();
  }
  return m;
}

Json to_json(const PreferenceKernel& kernel) {
  Json tables = Json::array();
  for (const auto& t : kernel.probs) tables.push_back(to_json(t));
  return Json{{"probs", std::move(tables)},
              {"reward_based", kernel.reward_based}};
}

PreferenceKernel kernel_from_json(const Json& j) {
  PreferenceKernel kernel;
  for (const auto& t : j.at("probs")) kernel.probs.push_back(matrix_from_json(t));
  kernel.reward_based = j.at("reward_based").get<bool>();
  kernel.validate();
  return kernel;
}

Json to_json(const ReferencePolicy& policy) {
  return Json{{"probs", to_json(policy.probs)}};
}

ReferencePolicy ref_policy_from_json(const Json& j) {
  ReferencePolicy policy{matrix_from_json(j.at("probs"))};
  policy.validate();
  return policy;
}

Json to_json(const World& world) {
  return Json{{"num_prompts", world.num_prompts},
              {"num_responses", world.num_responses},
              {"prompt_dist", to_json(world.prompt_dist)},
              {"true_reward", to_json(world.true_reward)},
              {"kernel", to_json(world.kernel)},
              {"ref_policy", to_json(world.ref_policy)}};
}

World world_from_json(const Json& j) {
  World world;
  world.num_prompts = j.at("num_prompts").get<int>();
  world.num_responses = j.at("num_responses").get<int>();
  world.prompt_dist = vector_from_json(j.at("prompt_dist"));
  world.true_reward = matrix_from_json(j.at("true_reward"));
  world.kernel = kernel_from_json(j.at("kernel"));
  world.ref_policy = ref_policy_from_json(j.at("ref_policy"));
  world.validate();
  return world;
}

Json to_json(const FeatureMap& features) {
  return Json{{"dim", features.dim},
              {"num_prompts", features.num_prompts},
              {"num_responses", features.num_responses},
              {"table", to_json(features.table)}};
}

FeatureMap feature_map_from_json(const Json& j) {
  FeatureMap features;
  features.dim = j.at("dim").get<int>();
  features.num_prompts = j.at("num_prompts").get<int>();
  features.num_responses = j.at("num_responses").get<int>();
  features.table = matrix_from_json(j.at("table"));
  features.validate();
  return features;
}

Json to_json(const AuxiliaryModel& aux) {
  Json tables = Json::array();
  for (const auto& t : aux.probs) tables.push_back(to_json(t));
  return Json{{"probs", std::move(tables)},
              {"provenance", to_string(aux.provenance)}};
}

Json to_json(const RewardModel& model) {
  return Json{{"theta", to_json(model.theta)},
              {"features", to_json(model.features)}};
}

RewardModel reward_model_from_json(const Json& j) {
  RewardModel model;
  model.theta = vector_from_json(j.at("theta"));
  model.features = feature_map_from_json(j.at("features"));
  return model;
}

Json to_json(const PolicyModel& model) {
  return Json{{"theta", to_json(model.theta)},
              {"features", to_json(model.features)},
              {"beta", model.beta},
              {"ref", to_json(model.ref)}};
}

PolicyModel policy_model_from_json(const Json& j) {
  PolicyModel model;
  model.theta = vector_from_json(j.at("theta"));
  model.features = feature_map_from_json(j.at("features"));
  model.beta = j.at("beta").get<double>();
  model.ref = ref_policy_from_json(j.at("ref"));
  return model;
}

Json to_json(const FitResult& result) {
  return Json{{"theta", to_json(result.theta)},
              {"final_risk", result.final_risk},
              {"grad_norm", result.grad_norm},
              {"iters", result.iters},
              {"converged", result.converged}};
}

FitResult fit_result_from_json(const Json& j) {
  FitResult result;
  result.theta = vector_from_json(j.at("theta"));
  result.final_risk = j.at("final_risk").get<double>();
  result.grad_norm = j.at("grad_norm").get<double>();
  result.iters = j.at("iters").get<int>();
  result.converged = j.at("converged").get<bool>();
  return result;
}

Json to_json(const TheoryReport& report) {
  return Json{{"theta_bar", to_json(report.theta_bar)},
              {"A", to_json(report.A)},
              {"H", to_json(report.H)},
              {"lambda_min", report.lambda_min},
              {"lambda_max", report.lambda_max},
              {"n", report.n},
              {"predicted_reduction", to_json(report.predicted_reduction)},
              {"dispersion", report.dispersion},
              {"trace_H", report.H.size() > 0 ? report.H.trace() : 0.0},
              {"half_dispersion", 0.5 * report.dispersion}};
}

namespace {

Json to_json(const ArmCell& cell) {
  return Json{{"arm", cell.arm},
              {"n", cell.n},
              {"replicates_used", cell.replicates_used},
              {"failed", cell.failed},
              {"mean_theta", vrpo::to_json(cell.mean_theta)},
              {"cov", vrpo::to_json(cell.cov)},
              {"trace_var", cell.trace_var},
              {"mse", cell.mse},
              {"mean_err_norm", cell.mean_err_norm},
              {"mean_gap", cell.mean_gap},
              {"gap_se", cell.gap_se}};
}

Json to_json(const VarianceComparison& cmp) {
  return Json{{"n", cmp.n},
              {"trace_var_diff", cmp.trace_var_diff},
              {"trace_diff_ci_lo", cmp.trace_diff_ci_lo},
              {"trace_diff_ci_hi", cmp.trace_diff_ci_hi},
              {"predicted_trace", cmp.predicted_trace},
              {"reduction_ratio", cmp.reduction_ratio},
              {"psd_min_eigenvalue", cmp.psd_min_eigenvalue},
              {"psd_floor", cmp.psd_floor},
              {"mean_gap_diff", cmp.mean_gap_diff},
              {"gap_diff_ci_lo", cmp.gap_diff_ci_lo},
              {"gap_diff_ci_hi", cmp.gap_diff_ci_hi},
              {"gap_diff_se", cmp.gap_diff_se},
              {"gap_trace_formula", cmp.gap_trace_formula}};
}

Json to_json(const DrArmResult& arm) {
  return Json{{"arm", arm.arm},
              {"ns", arm.ns},
              {"mean_err_norms", arm.mean_err_norms},
              {"slope", arm.slope}};
}

}  // namespace

Json to_json(const StudyReport& report) {
  Json arms = Json::array();
  for (const auto& cell : report.arms) arms.push_back(to_json(cell));
  Json comparisons = Json::array();
  for (const auto& cmp : report.comparisons) comparisons.push_back(to_json(cmp));
  Json dr = Json::array();
  for (const auto& arm : report.dr_arms) dr.push_back(to_json(arm));
  return Json{{"study", report.study},
              {"scenario", report.scenario_name},
              {"root_seed", report.root_seed},
              {"replicates", report.replicates},
              {"tolerance_note", report.tolerance_note},
              {"theory", to_json(report.theory)},
              {"r_theta_bar", report.r_theta_bar},
              {"arms", std::move(arms)},
              {"comparisons", std::move(comparisons)},
              {"dr_arms", std::move(dr)},
              {"total_failed", report.total_failed},
              {"valid", report.valid}};
}

std::string dataset_to_jsonl(const Dataset& data) {
  std::ostringstream out;
  Json header{{"k", data.num_prompts},
              {"v", data.num_responses},
              {"root_seed", data.root_seed},
              {"path", data.path}};
  out << header.dump() << '\n';
  for (const PreferenceDatum& d : data.items) {
    out << "{\"x\":" << d.prompt << ",\"y1\":" << d.first
        << ",\"y2\":" << d.second << ",\"z\":" << d.label << "}\n";
  }
  return out.str();
}

Dataset dataset_from_jsonl(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) {
    throw std::invalid_argument("dataset file is empty");
  }
  Dataset data;
  long line_no = 1;
  try {
    const Json header = Json::parse(line);
    data.num_prompts = header.at("k").get<int>();
    data.num_responses = header.at("v").get<int>();
    data.root_seed = header.at("root_seed").get<std::uint64_t>();
    data.path = header.at("path").get<std::vector<std::uint64_t>>();
  } catch (const std::exception& e) {
    throw std::invalid_argument("dataset header (line 1): " +
                                std::string(e.what()));
  }
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const Json rec = Json::parse(line);
      PreferenceDatum d;
      d.prompt = rec.at("x").get<int>();
      d.first = rec.at("y1").get<int>();
      d.second = rec.at("y2").get<int>();
      d.label = rec.at("z").get<int>();
      if (d.prompt < 0 || d.prompt >= data.num_prompts || d.first < 0 ||
          d.first >= data.num_responses || d.second < 0 ||
          d.second >= data.num_responses || (d.label != 0 && d.label != 1)) {
        throw std::invalid_argument("field out of range");
      }
      data.items.push_back(d);
    } catch (const std::exception& e) {
      throw std::invalid_argument("dataset record (line " +
                                  std::to_string(line_no) +
                                  "): " + std::string(e.what()));
    }
  }
  return data;
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << text;
  if (!out) throw std::runtime_error("write failed: " + path);
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open for reading: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace vrpo
