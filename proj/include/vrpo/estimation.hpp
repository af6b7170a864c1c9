#pragma once

#include <cstdint>
#include <functional>

#include <Eigen/Core>

#include "vrpo/losses.hpp"

namespace vrpo {

struct OptimizerSettings {
  int max_iters = 5000;
  double grad_tol = 1e-9;
  Eigen::VectorXd init;  // empty = zeros
  double armijo_shrink = 0.5;
  double armijo_slope = 1e-4;
  double initial_step = 1.0;
  int restarts = 1;
  std::uint64_t restart_seed = 0;

  void validate() const;
};

struct FitResult {
  Eigen::VectorXd theta;
  double final_risk = 0.0;
  double grad_norm = 0.0;
  int iters = 0;
  bool converged = false;
};

using Objective = std::function<RiskEval(const Eigen::VectorXd&)>;

// Full-batch gradient descent with Armijo backtracking. The risk trace
// is monotone non-increasing; stops when the gradient norm reaches
// grad_tol or after max_iters. With restarts > 1 the additional starts
// are drawn uniformly from [-2, 2]^d using restart_seed and the
// lowest-risk result is returned. Throws on non-finite risk or gradient.
FitResult minimize(const Objective& objective, int dim,
                   const OptimizerSettings& settings);

// Minimizes the baseline empirical risk.
FitResult fit_baseline(const LossSpec& spec, const PairwiseLogitModel& model,
                       const Activation& act, const Dataset& data,
                       const OptimizerSettings& settings);

// Minimizes the variance-reduced risk. In monte_carlo mode the pair
// draws are fixed for the whole fit (a deterministic function of
// `stream` and the datum index), so the objective is a fixed function
// and the fit is reproducible bit-for-bit.
FitResult fit_vrpo(const LossSpec& spec, const PairwiseLogitModel& model,
                   const Activation& act, const Dataset& data,
                   const VrpoConfig& cfg, const OptimizerSettings& settings,
                   const RandomStream& stream);

}  // namespace vrpo
