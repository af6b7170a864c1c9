#include "vrpo/presets.hpp"

#include <stdexcept>

namespace vrpo {
namespace {

FeatureMap make_features(int k, int v, int d,
                         std::initializer_list<double> rows) {
  FeatureMap f;
  f.dim = d;
  f.num_prompts = k;
  f.num_responses = v;
  f.table = Eigen::MatrixXd(k * v, d);
  auto it = rows.begin();
  for (int r = 0; r < k * v; ++r) {
    for (int c = 0; c < d; ++c) f.table(r, c) = *it++;
  }
  f.validate();
  return f;
}

ReferencePolicy make_ref(int k, int v, std::initializer_list<double> rows) {
  Eigen::MatrixXd probs(k, v);
  auto it = rows.begin();
  for (int r = 0; r < k; ++r) {
    for (int c = 0; c < v; ++c) probs(r, c) = *it++;
  }
  ReferencePolicy ref{std::move(probs)};
  ref.validate();
  return ref;
}

Eigen::MatrixXd reward_from_theta(const FeatureMap& f,
                                  const Eigen::VectorXd& theta) {
  Eigen::MatrixXd r(f.num_prompts, f.num_responses);
  for (int x = 0; x < f.num_prompts; ++x) {
    for (int y = 0; y < f.num_responses; ++y) r(x, y) = f.phi(x, y).dot(theta);
  }
  return r;
}

// Correctly specified base world shared by `correct` and `label_flip`:
// the true reward lies in the span of the two features.
Scenario base_correct_scenario() {
  Scenario s;
  s.name = "correct";
  const int k = 2, v = 4, d = 2;
  s.features = make_features(k, v, d,
                             {
                                 // prompt 0
                                 0.0, 0.0,    //
                                 1.6, 0.4,    //
                                 0.4, 1.6,    //
                                 1.2, 1.2,    //
                                 // prompt 1
                                 0.2, 1.0,    //
                                 1.4, 0.2,    //
                                 0.8, 1.4,    //
                                 0.1, 0.3,    //
                             });
  Eigen::VectorXd theta_true(d);
  theta_true << 1.0, -0.5;
  s.world.num_prompts = k;
  s.world.num_responses = v;
  s.world.prompt_dist = Eigen::VectorXd(k);
  s.world.prompt_dist << 0.5, 0.5;
  s.world.true_reward = reward_from_theta(s.features, theta_true);
  s.world.kernel = build_bt_kernel(s.world.true_reward);
  s.world.ref_policy = make_ref(k, v,
                                {0.35, 0.30, 0.20, 0.15,  //
                                 0.25, 0.25, 0.30, 0.20});
  s.pipeline = Pipeline::kTwoStage;
  s.beta = 1.0;
  s.loss = LossSpec{LossKind::kCrossEntropy, 1.0};
  s.world.validate();
  return s;
}

Scenario label_flip_scenario() {
  Scenario s = base_correct_scenario();
  s.name = "label_flip";
  s.world.kernel = flip_labels_kernel(s.world.kernel, 0.2);
  return s;
}

Scenario det_ref_scenario() {
  Scenario s;
  s.name = "det_ref";
  const int k = 2, v = 3, d = 2;
  s.features = make_features(k, v, d,
                             {
                                 0.0, 0.0,  //
                                 1.0, 0.0,  //
                                 0.0, 1.0,  //
                                 0.5, 0.5,  //
                                 1.0, 0.2,  //
                                 0.2, 1.0,  //
                             });
  Eigen::VectorXd theta_true(d);
  theta_true << 0.8, -0.4;
  s.world.num_prompts = k;
  s.world.num_responses = v;
  s.world.prompt_dist = Eigen::VectorXd(k);
  s.world.prompt_dist << 0.6, 0.4;
  s.world.true_reward = reward_from_theta(s.features, theta_true);
  s.world.kernel = build_bt_kernel(s.world.true_reward);
  s.world.ref_policy = make_ref(k, v,
                                {1.0, 0.0, 0.0,  //
                                 0.0, 1.0, 0.0});
  s.pipeline = Pipeline::kTwoStage;
  s.beta = 1.0;
  s.loss = LossSpec{LossKind::kCrossEntropy, 1.0};
  s.world.validate();
  return s;
}

Scenario one_stage_intransitive_scenario() {
  Scenario s;
  s.name = "one_stage_intransitive";
  const int k = 2, v = 3, d = 2;
  s.features = make_features(k, v, d,
                             {
                                 0.0, 0.0,   //
                                 1.0, 0.3,   //
                                 0.3, 1.0,   //
                                 0.5, 0.1,   //
                                 0.2, 0.8,   //
                                 1.1, 0.6,   //
                             });
  s.world.num_prompts = k;
  s.world.num_responses = v;
  s.world.prompt_dist = Eigen::VectorXd(k);
  s.world.prompt_dist << 0.5, 0.5;
  s.world.true_reward = Eigen::MatrixXd(k, v);
  s.world.true_reward << 0.0, 0.6, 0.3,  //
      0.2, 0.8, 0.1;
  // Cyclic preferences: along 0 -> 1 -> 2 -> 0 the later response wins
  // with the stated probability; no reward difference reproduces this.
  const auto cycle = [](double p) {
    Eigen::MatrixXd t(3, 3);
    t << 0.5, p, 1.0 - p,  //
        1.0 - p, 0.5, p,   //
        p, 1.0 - p, 0.5;
    return t;
  };
  s.world.kernel = explicit_kernel({cycle(0.9), cycle(0.7)});
  s.world.ref_policy = make_ref(k, v,
                                {0.5, 0.3, 0.2,  //
                                 0.2, 0.5, 0.3});
  s.pipeline = Pipeline::kOneStage;
  s.beta = 0.5;
  s.loss = LossSpec{LossKind::kCrossEntropy, 1.0};
  s.world.validate();
  return s;
}

Scenario hinge_flip_scenario() {
  Scenario s = label_flip_scenario();
  s.name = "hinge_flip";
  s.loss = LossSpec{LossKind::kHinge, 1.0};
  return s;
}

}  // namespace

Scenario preset_scenario(const std::string& name) {
  if (name == "correct") return base_correct_scenario();
  if (name == "label_flip") return label_flip_scenario();
  if (name == "det_ref") return det_ref_scenario();
  if (name == "one_stage_intransitive") return one_stage_intransitive_scenario();
  if (name == "hinge_flip") return hinge_flip_scenario();
  std::string known;
  for (const auto& n : preset_scenario_names()) {
    if (!known.empty()) known += ", ";
    known += n;
  }
  throw std::invalid_argument("unknown scenario preset '" + name +
                              "' (known: " + known + ")");
}

const std::vector<std::string>& preset_scenario_names() {
  static const std::vector<std::string> names = {
      "correct", "label_flip", "det_ref", "one_stage_intransitive",
      "hinge_flip"};
  return names;
}

Scenario random_scenario(RandomStream stream, int num_prompts,
                         int num_responses, int dim, double flip_eps) {
  Scenario s;
  s.name = "random";
  s.features.dim = dim;
  s.features.num_prompts = num_prompts;
  s.features.num_responses = num_responses;
  s.features.table = Eigen::MatrixXd(num_prompts * num_responses, dim);
  for (Eigen::Index r = 0; r < s.features.table.rows(); ++r) {
    for (int c = 0; c < dim; ++c) {
      s.features.table(r, c) = 2.0 * stream.uniform01() - 1.0;
    }
  }
  Eigen::VectorXd theta_true(dim);
  for (int c = 0; c < dim; ++c) theta_true[c] = 2.0 * stream.uniform01() - 1.0;

  s.world.num_prompts = num_prompts;
  s.world.num_responses = num_responses;
  s.world.prompt_dist = Eigen::VectorXd(num_prompts);
  for (int x = 0; x < num_prompts; ++x) {
    s.world.prompt_dist[x] = 0.2 + stream.uniform01();
  }
  s.world.prompt_dist /= s.world.prompt_dist.sum();
  s.world.true_reward = reward_from_theta(s.features, theta_true);
  s.world.kernel = flip_labels_kernel(build_bt_kernel(s.world.true_reward),
                                      flip_eps);
  Eigen::MatrixXd ref(num_prompts, num_responses);
  for (int x = 0; x < num_prompts; ++x) {
    for (int y = 0; y < num_responses; ++y) ref(x, y) = 0.2 + stream.uniform01();
    ref.row(x) /= ref.row(x).sum();
  }
  s.world.ref_policy = ReferencePolicy{std::move(ref)};
  s.pipeline = Pipeline::kTwoStage;
  s.beta = 1.0;
  s.loss = LossSpec{LossKind::kCrossEntropy, 1.0};
  s.world.validate();
  return s;
}

}  // namespace vrpo
