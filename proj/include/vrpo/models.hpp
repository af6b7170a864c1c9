#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

#include "vrpo/world.hpp"

namespace vrpo {

// Feature table phi(x, y) in R^d, stored row-major by (x, y).
struct FeatureMap {
  int dim = 0;
  int num_prompts = 0;
  int num_responses = 0;
  Eigen::MatrixXd table;  // (K*V) x d, row x*V + y = phi(x, y)

  auto phi(int x, int y) const { return table.row(x * num_responses + y); }

  // Smallest singular value of the stacked pairwise-difference design
  // {phi(x, y2) - phi(x, y1) : y1 < y2}. Positive (> 1e-8) iff the
  // preference parameters are identifiable.
  double min_design_singular_value() const;

  void validate() const;
};

// Linear reward r_theta(x, y) = theta . phi(x, y).
struct RewardModel {
  Eigen::VectorXd theta;
  FeatureMap features;
};

// Softmax policy pi_theta(y|x) = exp(theta . phi(x, y)) / Z(x), carrying
// the regularization strength and the specified reference used by the
// policy-to-reward transform.
struct PolicyModel {
  Eigen::VectorXd theta;
  FeatureMap features;
  double beta = 1.0;
  ReferencePolicy ref;
};

enum class AuxProvenance { kFitted, kOracle, kCorrupted };

std::string to_string(AuxProvenance p);

// Reward-free (saturated) preference model: a per-(prompt, pair) table.
struct AuxiliaryModel {
  std::vector<Eigen::MatrixXd> probs;  // K matrices, each V x V
  AuxProvenance provenance = AuxProvenance::kFitted;

  double operator()(int x, int y1, int y2) const { return probs[x](y1, y2); }
  int num_prompts() const { return static_cast<int>(probs.size()); }
  int num_responses() const {
    return probs.empty() ? 0 : static_cast<int>(probs.front().rows());
  }
  void validate(double tol = 1e-12) const;
};

// How the pairwise preference logit r(x,y2) - r(x,y1) depends on theta.
// Two-stage models the reward directly; one-stage parameterizes the
// policy and recovers the reward from the policy/reference log-ratio,
// which makes the logit beta * (theta . dphi) - beta * dlog(ref).
enum class Pipeline { kTwoStage, kOneStage };

std::string to_string(Pipeline p);

// Uniform view of either pipeline's preference logit as an affine
// function of theta. The gradient of the logit is theta-free.
class PairwiseLogitModel {
 public:
  static PairwiseLogitModel two_stage(FeatureMap features);
  static PairwiseLogitModel one_stage(FeatureMap features, ReferencePolicy ref,
                                      double beta);

  double logit(const Eigen::VectorXd& theta, int x, int y1, int y2) const;
  // d(logit)/d(theta) = scale * (phi(x,y2) - phi(x,y1)).
  Eigen::VectorXd logit_grad(int x, int y1, int y2) const;
  double logit_scale() const { return scale_; }

  const FeatureMap& features() const { return features_; }
  Pipeline pipeline() const { return pipeline_; }
  double beta() const { return beta_; }
  int dim() const { return features_.dim; }
  int num_prompts() const { return features_.num_prompts; }
  int num_responses() const { return features_.num_responses; }

 private:
  FeatureMap features_;
  Pipeline pipeline_ = Pipeline::kTwoStage;
  double beta_ = 1.0;
  double scale_ = 1.0;
  Eigen::MatrixXd log_ref_;  // K x V, one-stage only
};

// theta . phi(x, y).
double reward_value(const RewardModel& model, int x, int y);

// act(r_theta(x, y2) - r_theta(x, y1)).
double preference_from_reward(const RewardModel& model, const Activation& act,
                              int x, int y1, int y2);

// KL-regularized policy improvement in closed form:
// pi(y|x) proportional to ref(y|x) * exp(r_theta(x, y) / beta).
// Responses with zero reference probability stay at zero.
ReferencePolicy policy_from_reward(const RewardModel& model,
                                   const ReferencePolicy& ref, double beta);

// beta * log(pi_theta(y|x) / ref(y|x)); identified only up to a
// per-prompt constant, so callers must difference within a prompt.
double reward_from_policy(const PolicyModel& model, int x, int y);

// Softmax table of the policy model, max-subtracted for overflow safety.
Eigen::MatrixXd policy_probabilities(const PolicyModel& model);

// Saturated preference table from pooled pair counts with Laplace
// smoothing alpha; empty cells fall back to 1/2. Pooling uses label
// antisymmetry (a z=0 draw on (y1,y2) is a win for y1 over y2 observed
// on the mirrored cell), so the output is antisymmetric by construction.
AuxiliaryModel fit_auxiliary(const Dataset& data, int num_prompts,
                             int num_responses, double alpha);

// Copies the true kernel (correctly specified auxiliary).
AuxiliaryModel oracle_auxiliary(const PreferenceKernel& kernel);

// Adversarially misspecified auxiliary: probs' = 1 - probs.
AuxiliaryModel corrupt_auxiliary(const AuxiliaryModel& aux);

}  // namespace vrpo
