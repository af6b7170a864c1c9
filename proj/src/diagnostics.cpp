#include "vrpo/diagnostics.hpp"

#include <cmath>
#include <stdexcept>

#include <Eigen/Dense>

namespace vrpo {
namespace {

void require_cross_entropy(const LossSpec& spec, const Activation& act) {
  if (spec.kind != LossKind::kCrossEntropy || !is_sigmoid(act)) {
    throw std::invalid_argument("theory diagnostics are defined for the "
                                "cross-entropy loss with sigmoid activation");
  }
}

// Label-conditional expected gradient coefficient at one pair:
// E_z[d loss / d logit] = p_theta - p*.
double conditional_gcoef(const PairwiseLogitModel& model,
                         const Eigen::VectorXd& theta, const Activation& act,
                         const World& world, int x, int y1, int y2) {
  const double p = act(model.logit(theta, x, y1, y2));
  return p - world.kernel(x, y1, y2);
}

}  // namespace

RiskEval population_risk(const LossSpec& spec, const PairwiseLogitModel& model,
                         const Eigen::VectorXd& theta, const Activation& act,
                         const World& world) {
  require_cross_entropy(spec, act);
  const int k = world.num_prompts;
  const int v = world.num_responses;
  RiskEval out;
  out.grad = Eigen::VectorXd::Zero(model.dim());
  for (int x = 0; x < k; ++x) {
    const double wx = world.prompt_dist[x];
    if (wx == 0.0) continue;
    for (int y1 = 0; y1 < v; ++y1) {
      const double w1 = world.ref_policy(x, y1);
      if (w1 == 0.0) continue;
      for (int y2 = 0; y2 < v; ++y2) {
        const double w = wx * w1 * world.ref_policy(x, y2);
        if (w == 0.0) continue;
        const detail::PairLoss pl = detail::eval_pair_loss(
            spec, model.logit(theta, x, y1, y2), act, /*need_grad=*/true);
        const double pstar = world.kernel(x, y1, y2);
        out.value += w * (pl.value[0] * (1.0 - pstar) + pl.value[1] * pstar);
        const double gc = pl.gcoef[0] * (1.0 - pstar) + pl.gcoef[1] * pstar;
        if (gc != 0.0) {
          out.grad.noalias() += (w * gc) * model.logit_grad(x, y1, y2);
        }
      }
    }
  }
  return out;
}

Eigen::VectorXd theta_bar(const LossSpec& spec, const PairwiseLogitModel& model,
                          const Activation& act, const World& world,
                          const OptimizerSettings& settings) {
  const FitResult fit = minimize(
      [&](const Eigen::VectorXd& theta) {
        return population_risk(spec, model, theta, act, world);
      },
      model.dim(), settings);
  if (!fit.converged) {
    throw std::runtime_error("theta_bar: population risk minimization did "
                             "not reach the requested gradient tolerance");
  }
  return fit.theta;
}

Eigen::MatrixXd matrix_A(const LossSpec& spec, const PairwiseLogitModel& model,
                         const Activation& act, const World& world,
                         const Eigen::VectorXd& theta_bar) {
  require_cross_entropy(spec, act);
  const int k = world.num_prompts;
  const int v = world.num_responses;
  const int d = model.dim();
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(d, d);
  for (int x = 0; x < k; ++x) {
    const double wx = world.prompt_dist[x];
    if (wx == 0.0) continue;
    for (int y1 = 0; y1 < v; ++y1) {
      const double w1 = world.ref_policy(x, y1);
      if (w1 == 0.0) continue;
      for (int y2 = 0; y2 < v; ++y2) {
        const double w = wx * w1 * world.ref_policy(x, y2);
        if (w == 0.0) continue;
        const double p = act(model.logit(theta_bar, x, y1, y2));
        const Eigen::VectorXd g = model.logit_grad(x, y1, y2);
        a.noalias() += (w * p * (1.0 - p)) * g * g.transpose();
      }
    }
  }
  a = 0.5 * (a + a.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(a);
  if (eig.eigenvalues().minCoeff() < 1e-10) {
    throw std::runtime_error("population curvature is singular "
                             "(non-identifiable design)");
  }
  return a;
}

Eigen::MatrixXd matrix_H(const LossSpec& spec, const PairwiseLogitModel& model,
                         const Activation& act, const World& world,
                         const Eigen::VectorXd& theta_bar) {
  require_cross_entropy(spec, act);
  const int k = world.num_prompts;
  const int v = world.num_responses;
  const int d = model.dim();
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(d, d);
  for (int x = 0; x < k; ++x) {
    const double wx = world.prompt_dist[x];
    if (wx == 0.0) continue;
    // Pair mean of g, then pair covariance around it.
    Eigen::VectorXd gbar = Eigen::VectorXd::Zero(d);
    for (int y1 = 0; y1 < v; ++y1) {
      const double w1 = world.ref_policy(x, y1);
      if (w1 == 0.0) continue;
      for (int y2 = 0; y2 < v; ++y2) {
        const double w = w1 * world.ref_policy(x, y2);
        if (w == 0.0) continue;
        const double c = conditional_gcoef(model, theta_bar, act, world, x, y1, y2);
        gbar.noalias() += (w * c) * model.logit_grad(x, y1, y2);
      }
    }
    for (int y1 = 0; y1 < v; ++y1) {
      const double w1 = world.ref_policy(x, y1);
      if (w1 == 0.0) continue;
      for (int y2 = 0; y2 < v; ++y2) {
        const double w = w1 * world.ref_policy(x, y2);
        if (w == 0.0) continue;
        const double c = conditional_gcoef(model, theta_bar, act, world, x, y1, y2);
        const Eigen::VectorXd dev =
            c * model.logit_grad(x, y1, y2) - gbar;
        h.noalias() += (wx * w) * dev * dev.transpose();
      }
    }
  }
  return 0.5 * (h + h.transpose());
}

double dispersion(const LossSpec& spec, const PairwiseLogitModel& model,
                  const Activation& act, const World& world,
                  const Eigen::VectorXd& theta_bar) {
  require_cross_entropy(spec, act);
  const int k = world.num_prompts;
  const int v = world.num_responses;
  double total = 0.0;
  for (int x = 0; x < k; ++x) {
    const double wx = world.prompt_dist[x];
    if (wx == 0.0) continue;
    // Gather the support pairs once, then take the exact double
    // expectation over two independent pairs.
    std::vector<double> weights;
    std::vector<Eigen::VectorXd> grads;
    for (int y1 = 0; y1 < v; ++y1) {
      const double w1 = world.ref_policy(x, y1);
      if (w1 == 0.0) continue;
      for (int y2 = 0; y2 < v; ++y2) {
        const double w = w1 * world.ref_policy(x, y2);
        if (w == 0.0) continue;
        const double c = conditional_gcoef(model, theta_bar, act, world, x, y1, y2);
        weights.push_back(w);
        grads.push_back(c * model.logit_grad(x, y1, y2));
      }
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < grads.size(); ++i) {
      for (std::size_t j = 0; j < grads.size(); ++j) {
        acc += weights[i] * weights[j] * (grads[i] - grads[j]).squaredNorm();
      }
    }
    total += wx * acc;
  }
  return total;
}

Eigen::MatrixXd predicted_reduction(const Eigen::MatrixXd& A,
                                    const Eigen::MatrixXd& H, long n) {
  if (n < 1) throw std::invalid_argument("sample size must be >= 1");
  Eigen::LDLT<Eigen::MatrixXd> ldlt(A);
  if (ldlt.info() != Eigen::Success) {
    throw std::runtime_error("population curvature is singular");
  }
  const Eigen::MatrixXd ainv_h = ldlt.solve(H);
  Eigen::MatrixXd out = ldlt.solve(ainv_h.transpose()).transpose() /
                        static_cast<double>(n);
  return 0.5 * (out + out.transpose());
}

Eigen::MatrixXd sandwich_covariance(const LossSpec& spec,
                                    const PairwiseLogitModel& model,
                                    const Activation& act, const World& world,
                                    const Eigen::VectorXd& theta_bar, long n) {
  require_cross_entropy(spec, act);
  const int k = world.num_prompts;
  const int v = world.num_responses;
  const int d = model.dim();
  Eigen::MatrixXd second = Eigen::MatrixXd::Zero(d, d);
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(d);
  for (int x = 0; x < k; ++x) {
    const double wx = world.prompt_dist[x];
    if (wx == 0.0) continue;
    for (int y1 = 0; y1 < v; ++y1) {
      const double w1 = world.ref_policy(x, y1);
      if (w1 == 0.0) continue;
      for (int y2 = 0; y2 < v; ++y2) {
        const double w = wx * w1 * world.ref_policy(x, y2);
        if (w == 0.0) continue;
        const double p = act(model.logit(theta_bar, x, y1, y2));
        const double pstar = world.kernel(x, y1, y2);
        const Eigen::VectorXd g = model.logit_grad(x, y1, y2);
        // E_z[(p - z)^2] = p* (p - 1)^2 + (1 - p*) p^2.
        const double m2 = pstar * (p - 1.0) * (p - 1.0) + (1.0 - pstar) * p * p;
        second.noalias() += (w * m2) * g * g.transpose();
        mean.noalias() += (w * (p - pstar)) * g;
      }
    }
  }
  const Eigen::MatrixXd var = second - mean * mean.transpose();
  const Eigen::MatrixXd a = matrix_A(spec, model, act, world, theta_bar);
  Eigen::LDLT<Eigen::MatrixXd> ldlt(a);
  const Eigen::MatrixXd ainv_v = ldlt.solve(var);
  Eigen::MatrixXd out = ldlt.solve(ainv_v.transpose()).transpose() /
                        static_cast<double>(n);
  return 0.5 * (out + out.transpose());
}

double expected_true_reward(const World& world,
                            const Eigen::MatrixXd& policy_table) {
  double j = 0.0;
  for (int x = 0; x < world.num_prompts; ++x) {
    j += world.prompt_dist[x] * policy_table.row(x).dot(world.true_reward.row(x));
  }
  return j;
}

Eigen::MatrixXd induced_policy(const World& world, const FeatureMap& features,
                               const Eigen::VectorXd& theta, Pipeline pipeline,
                               double beta) {
  if (pipeline == Pipeline::kOneStage) {
    PolicyModel pm{theta, features, beta, world.ref_policy};
    return policy_probabilities(pm);
  }
  RewardModel rm{theta, features};
  return policy_from_reward(rm, world.ref_policy, beta).probs;
}

double policy_value(const World& world, const FeatureMap& features,
                    const Eigen::VectorXd& theta, Pipeline pipeline,
                    double beta) {
  return expected_true_reward(
      world, induced_policy(world, features, theta, pipeline, beta));
}

double suboptimality_gap(const World& world, const FeatureMap& features,
                         const Eigen::VectorXd& theta, Pipeline pipeline,
                         double beta) {
  double jstar = 0.0;
  for (int x = 0; x < world.num_prompts; ++x) {
    jstar += world.prompt_dist[x] * world.true_reward.row(x).maxCoeff();
  }
  return jstar - policy_value(world, features, theta, pipeline, beta);
}

Eigen::MatrixXd policy_value_hessian(const World& world,
                                     const FeatureMap& features,
                                     const Eigen::VectorXd& theta,
                                     Pipeline pipeline, double beta,
                                     double step) {
  const int d = static_cast<int>(theta.size());
  Eigen::MatrixXd hess(d, d);
  const auto value_at = [&](const Eigen::VectorXd& t) {
    return policy_value(world, features, t, pipeline, beta);
  };
  for (int i = 0; i < d; ++i) {
    for (int j = i; j < d; ++j) {
      Eigen::VectorXd t = theta;
      double v;
      if (i == j) {
        const double f0 = value_at(theta);
        t[i] = theta[i] + step;
        const double fp = value_at(t);
        t[i] = theta[i] - step;
        const double fm = value_at(t);
        v = (fp - 2.0 * f0 + fm) / (step * step);
      } else {
        t = theta; t[i] += step; t[j] += step;
        const double fpp = value_at(t);
        t = theta; t[i] += step; t[j] -= step;
        const double fpm = value_at(t);
        t = theta; t[i] -= step; t[j] += step;
        const double fmp = value_at(t);
        t = theta; t[i] -= step; t[j] -= step;
        const double fmm = value_at(t);
        v = (fpp - fpm - fmp + fmm) / (4.0 * step * step);
      }
      hess(i, j) = v;
      hess(j, i) = v;
    }
  }
  return hess;
}

TheoryReport compute_theory_report(const LossSpec& spec,
                                   const PairwiseLogitModel& model,
                                   const Activation& act, const World& world,
                                   const OptimizerSettings& settings, long n) {
  TheoryReport report;
  report.theta_bar = theta_bar(spec, model, act, world, settings);
  report.A = matrix_A(spec, model, act, world, report.theta_bar);
  report.H = matrix_H(spec, model, act, world, report.theta_bar);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(report.A);
  report.lambda_min = eig.eigenvalues().minCoeff();
  report.lambda_max = eig.eigenvalues().maxCoeff();
  report.n = n;
  report.predicted_reduction = predicted_reduction(report.A, report.H, n);
  report.dispersion = dispersion(spec, model, act, world, report.theta_bar);
  return report;
}

}  // namespace vrpo
