#include "vrpo/estimation.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "vrpo/random.hpp"

namespace vrpo {
namespace {

constexpr double kMinStep = 1e-20;

void check_finite(const RiskEval& eval) {
  if (!std::isfinite(eval.value) || !eval.grad.allFinite()) {
    throw std::runtime_error("objective returned a non-finite risk or "
                             "gradient");
  }
}

FitResult minimize_from(const Objective& objective,
                        const Eigen::VectorXd& start,
                        const OptimizerSettings& s) {
  FitResult res;
  res.theta = start;
  RiskEval cur = objective(res.theta);
  check_finite(cur);
  double step = s.initial_step;
  int iter = 0;
  for (; iter < s.max_iters; ++iter) {
    const double gnorm2 = cur.grad.squaredNorm();
    if (std::sqrt(gnorm2) <= s.grad_tol) break;
    // Warm-start the line search just above the last accepted step; the
    // Armijo test shrinks it back when the curvature disallows it.
    step *= 2.0;
    bool accepted = false;
    // Near the minimum the Armijo decrease falls below the rounding
    // granularity of the risk value while the enumerated gradient is
    // still accurate. Once the required decrease is sub-ulp, steps are
    // judged by the gradient norm instead, which keeps contracting down
    // to the gradient's own rounding floor.
    const double slack = 16.0 * std::numeric_limits<double>::epsilon() *
                         (1.0 + std::abs(cur.value));
    while (step >= kMinStep) {
      const Eigen::VectorXd cand = res.theta - step * cur.grad;
      RiskEval next = objective(cand);
      check_finite(next);
      const bool value_informative = s.armijo_slope * step * gnorm2 > slack;
      const bool ok =
          value_informative
              ? next.value <= cur.value - s.armijo_slope * step * gnorm2
              : next.value <= cur.value + slack &&
                    next.grad.squaredNorm() < gnorm2;
      if (ok) {
        res.theta = cand;
        cur = std::move(next);
        accepted = true;
        break;
      }
      step *= s.armijo_shrink;
    }
    if (!accepted) break;  // no descent step available at this scale
  }
  res.final_risk = cur.value;
  res.grad_norm = cur.grad.norm();
  res.iters = iter;
  res.converged = res.grad_norm <= s.grad_tol;
  return res;
}

}  // namespace

void OptimizerSettings::validate() const {
  if (max_iters < 0) throw std::invalid_argument("max_iters must be >= 0");
  if (!(grad_tol > 0.0)) throw std::invalid_argument("grad_tol must be > 0");
  if (!(armijo_shrink > 0.0 && armijo_shrink < 1.0)) {
    throw std::invalid_argument("armijo shrink must lie in (0, 1)");
  }
  if (!(armijo_slope > 0.0)) throw std::invalid_argument("armijo slope > 0");
  if (!(initial_step > 0.0)) throw std::invalid_argument("initial step > 0");
  if (restarts < 1) throw std::invalid_argument("restarts must be >= 1");
}

FitResult minimize(const Objective& objective, int dim,
                   const OptimizerSettings& settings) {
  settings.validate();
  Eigen::VectorXd start = settings.init;
  if (start.size() == 0) start = Eigen::VectorXd::Zero(dim);
  if (start.size() != dim) {
    throw std::invalid_argument("init vector has wrong dimension");
  }
  FitResult best = minimize_from(objective, start, settings);
  if (settings.restarts > 1) {
    RandomStream stream(settings.restart_seed, {0xF17F17});
    for (int r = 1; r < settings.restarts; ++r) {
      Eigen::VectorXd init(dim);
      for (int j = 0; j < dim; ++j) init[j] = 4.0 * stream.uniform01() - 2.0;
      FitResult cand = minimize_from(objective, init, settings);
      if (cand.final_risk < best.final_risk) best = std::move(cand);
    }
  }
  return best;
}

FitResult fit_baseline(const LossSpec& spec, const PairwiseLogitModel& model,
                       const Activation& act, const Dataset& data,
                       const OptimizerSettings& settings) {
  const DatasetCounts counts = DatasetCounts::from_dataset(
      data, model.num_prompts(), model.num_responses());
  return minimize(
      [&](const Eigen::VectorXd& theta) {
        return baseline_risk(spec, model, theta, act, counts);
      },
      model.dim(), settings);
}

FitResult fit_vrpo(const LossSpec& spec, const PairwiseLogitModel& model,
                   const Activation& act, const Dataset& data,
                   const VrpoConfig& cfg, const OptimizerSettings& settings,
                   const RandomStream& stream) {
  if (cfg.third_term_mode == ThirdTermMode::kExactEnumeration) {
    const DatasetCounts counts = DatasetCounts::from_dataset(
        data, model.num_prompts(), model.num_responses());
    return minimize(
        [&](const Eigen::VectorXd& theta) {
          return vrpo_risk(spec, model, theta, act, counts, cfg);
        },
        model.dim(), settings);
  }
  return minimize(
      [&](const Eigen::VectorXd& theta) {
        return vrpo_risk(spec, model, theta, act, data, cfg, stream);
      },
      model.dim(), settings);
}

}  // namespace vrpo
