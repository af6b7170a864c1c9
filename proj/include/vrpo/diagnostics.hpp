#pragma once

#include <Eigen/Core>

#include "vrpo/estimation.hpp"
#include "vrpo/losses.hpp"
#include "vrpo/models.hpp"
#include "vrpo/world.hpp"

namespace vrpo {

// Exact population-level quantities for a model on a world: the target
// parameter, the curvature and pair-dispersion matrices, and the
// predicted covariance reduction at a given sample size.
struct TheoryReport {
  Eigen::VectorXd theta_bar;
  Eigen::MatrixXd A;  // population risk Hessian at theta_bar (positive definite)
  Eigen::MatrixXd H;  // pair covariance of the label-conditional gradient
  double lambda_min = 0.0;  // extreme eigenvalues of A
  double lambda_max = 0.0;
  long n = 0;
  Eigen::MatrixXd predicted_reduction;  // (1/n) A^-1 H A^-1
  double dispersion = 0.0;  // E ||g(pair) - g(pair*)||^2 = 2 trace(H)
};

// Exact population risk E[loss] and its gradient: triple enumeration
// over prompts and response pairs weighted by prompt_dist x ref x ref,
// labels integrated under the world's preference kernel. Cross-entropy
// only.
RiskEval population_risk(const LossSpec& spec, const PairwiseLogitModel& model,
                         const Eigen::VectorXd& theta, const Activation& act,
                         const World& world);

// Target parameter: minimizer of the population risk (gradient norm at
// the returned point <= settings.grad_tol).
Eigen::VectorXd theta_bar(const LossSpec& spec, const PairwiseLogitModel& model,
                          const Activation& act, const World& world,
                          const OptimizerSettings& settings);

// Population curvature A = E[p(1-p) g g^T] at theta_bar (g is the logit
// gradient). Throws if the smallest eigenvalue is below 1e-10.
Eigen::MatrixXd matrix_A(const LossSpec& spec, const PairwiseLogitModel& model,
                         const Activation& act, const World& world,
                         const Eigen::VectorXd& theta_bar);

// Covariance, across reference pairs, of the label-conditional expected
// gradient g(x, y1, y2) = (p_theta - p*) * logit_grad:
//   H = sum_x prompt(x) E_pairs[(g - E_pairs g)(g - E_pairs g)^T].
Eigen::MatrixXd matrix_H(const LossSpec& spec, const PairwiseLogitModel& model,
                         const Activation& act, const World& world,
                         const Eigen::VectorXd& theta_bar);

// E over two independent reference pairs of ||g(pair) - g(pair*)||^2,
// enumerated exactly; equals 2 trace(H).
double dispersion(const LossSpec& spec, const PairwiseLogitModel& model,
                  const Activation& act, const World& world,
                  const Eigen::VectorXd& theta_bar);

// (1/n) A^-1 H A^-1.
Eigen::MatrixXd predicted_reduction(const Eigen::MatrixXd& A,
                                    const Eigen::MatrixXd& H, long n);

// Asymptotic covariance of the baseline estimator:
// (1/n) A^-1 Var(grad loss) A^-1, all pieces enumerated at theta_bar.
Eigen::MatrixXd sandwich_covariance(const LossSpec& spec,
                                    const PairwiseLogitModel& model,
                                    const Activation& act, const World& world,
                                    const Eigen::VectorXd& theta_bar, long n);

// sum_x prompt(x) sum_y policy(y|x) r*(x, y).
double expected_true_reward(const World& world,
                            const Eigen::MatrixXd& policy_table);

// Policy induced by theta: softmax over features for one-stage, or the
// KL-tilted reference (at strength beta) of the linear reward for
// two-stage.
Eigen::MatrixXd induced_policy(const World& world, const FeatureMap& features,
                               const Eigen::VectorXd& theta, Pipeline pipeline,
                               double beta);

// J(theta) under the induced policy.
double policy_value(const World& world, const FeatureMap& features,
                    const Eigen::VectorXd& theta, Pipeline pipeline,
                    double beta);

// R(theta) = J* - J(theta) with J* = sum_x prompt(x) max_y r*(x, y).
double suboptimality_gap(const World& world, const FeatureMap& features,
                         const Eigen::VectorXd& theta, Pipeline pipeline,
                         double beta);

// Hessian of J at theta by central finite differences (step 1e-4).
Eigen::MatrixXd policy_value_hessian(const World& world,
                                     const FeatureMap& features,
                                     const Eigen::VectorXd& theta,
                                     Pipeline pipeline, double beta,
                                     double step = 1e-4);

// Full report for a world/model at sample size n.
TheoryReport compute_theory_report(const LossSpec& spec,
                                   const PairwiseLogitModel& model,
                                   const Activation& act, const World& world,
                                   const OptimizerSettings& settings, long n);

}  // namespace vrpo
