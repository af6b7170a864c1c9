#include "vrpo/models.hpp"

#include <cmath>
#include <stdexcept>
#include <utility>

#include <Eigen/Dense>
#include <Eigen/SVD>

namespace vrpo {

double FeatureMap::min_design_singular_value() const {
  const int pairs_per_prompt = num_responses * (num_responses - 1) / 2;
  Eigen::MatrixXd design(num_prompts * pairs_per_prompt, dim);
  int r = 0;
  for (int x = 0; x < num_prompts; ++x) {
    for (int y1 = 0; y1 < num_responses; ++y1) {
      for (int y2 = y1 + 1; y2 < num_responses; ++y2) {
        design.row(r++) = phi(x, y2) - phi(x, y1);
      }
    }
  }
  if (r == 0) return 0.0;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(design);
  return svd.singularValues().minCoeff();
}

void FeatureMap::validate() const {
  if (dim <= 0 || num_prompts <= 0 || num_responses <= 0) {
    throw std::invalid_argument("feature map dimensions must be positive");
  }
  if (table.rows() != num_prompts * num_responses || table.cols() != dim) {
    throw std::invalid_argument("feature table has wrong shape");
  }
  if (!table.allFinite()) {
    throw std::invalid_argument("feature table has non-finite entries");
  }
}

std::string to_string(AuxProvenance p) {
  switch (p) {
    case AuxProvenance::kFitted: return "fitted";
    case AuxProvenance::kOracle: return "oracle";
    case AuxProvenance::kCorrupted: return "corrupted";
  }
  return "unknown";
}

std::string to_string(Pipeline p) {
  return p == Pipeline::kTwoStage ? "two_stage" : "one_stage";
}

void AuxiliaryModel::validate(double tol) const {
  const int v = num_responses();
  for (int x = 0; x < num_prompts(); ++x) {
    for (int y1 = 0; y1 < v; ++y1) {
      for (int y2 = 0; y2 < v; ++y2) {
        const double p = probs[x](y1, y2);
        if (!(p >= 0.0 && p <= 1.0)) {
          throw std::invalid_argument("auxiliary probability outside [0,1]");
        }
        if (std::abs(p + probs[x](y2, y1) - 1.0) > tol) {
          throw std::invalid_argument("auxiliary model violates antisymmetry");
        }
      }
    }
  }
}

PairwiseLogitModel PairwiseLogitModel::two_stage(FeatureMap features) {
  features.validate();
  PairwiseLogitModel m;
  m.features_ = std::move(features);
  m.pipeline_ = Pipeline::kTwoStage;
  m.beta_ = 1.0;
  m.scale_ = 1.0;
  return m;
}

PairwiseLogitModel PairwiseLogitModel::one_stage(FeatureMap features,
                                                 ReferencePolicy ref,
                                                 double beta) {
  features.validate();
  ref.validate();
  if (!(beta > 0.0)) throw std::invalid_argument("beta must be positive");
  if (ref.num_prompts() != features.num_prompts ||
      ref.num_responses() != features.num_responses) {
    throw std::invalid_argument("reference policy shape does not match "
                                "feature map");
  }
  if ((ref.probs.array() <= 0.0).any()) {
    throw std::invalid_argument("one-stage logits need a strictly positive "
                                "reference policy");
  }
  PairwiseLogitModel m;
  m.features_ = std::move(features);
  m.pipeline_ = Pipeline::kOneStage;
  m.beta_ = beta;
  m.scale_ = beta;
  m.log_ref_ = ref.probs.array().log().matrix();
  return m;
}

double PairwiseLogitModel::logit(const Eigen::VectorXd& theta, int x, int y1,
                                 int y2) const {
  const double dphi = (features_.phi(x, y2) - features_.phi(x, y1)).dot(theta);
  if (pipeline_ == Pipeline::kTwoStage) return dphi;
  // Softmax normalizers cancel in the difference, leaving the reference
  // log-ratio as a theta-free offset.
  return beta_ * (dphi - (log_ref_(x, y2) - log_ref_(x, y1)));
}

Eigen::VectorXd PairwiseLogitModel::logit_grad(int x, int y1, int y2) const {
  return scale_ * (features_.phi(x, y2) - features_.phi(x, y1)).transpose();
}

double reward_value(const RewardModel& model, int x, int y) {
  return model.features.phi(x, y).dot(model.theta);
}

double preference_from_reward(const RewardModel& model, const Activation& act,
                              int x, int y1, int y2) {
  return act(reward_value(model, x, y2) - reward_value(model, x, y1));
}

ReferencePolicy policy_from_reward(const RewardModel& model,
                                   const ReferencePolicy& ref, double beta) {
  if (!(beta > 0.0)) throw std::invalid_argument("beta must be positive");
  const int k = ref.num_prompts();
  const int v = ref.num_responses();
  Eigen::MatrixXd out(k, v);
  for (int x = 0; x < k; ++x) {
    // Tilt log-weights, max-subtracted over the support only.
    double max_logw = -std::numeric_limits<double>::infinity();
    Eigen::VectorXd logw(v);
    bool any_support = false;
    for (int y = 0; y < v; ++y) {
      if (ref(x, y) > 0.0) {
        logw[y] = std::log(ref(x, y)) + reward_value(model, x, y) / beta;
        max_logw = std::max(max_logw, logw[y]);
        any_support = true;
      }
    }
    if (!any_support) {
      throw std::invalid_argument("degenerate prompt " + std::to_string(x) +
                                  ": reference row is entirely zero");
    }
    double z = 0.0;
    for (int y = 0; y < v; ++y) {
      if (ref(x, y) > 0.0) {
        out(x, y) = std::exp(logw[y] - max_logw);
        z += out(x, y);
      } else {
        out(x, y) = 0.0;
      }
    }
    out.row(x) /= z;
  }
  ReferencePolicy policy{std::move(out)};
  return policy;
}

double reward_from_policy(const PolicyModel& model, int x, int y) {
  const Eigen::MatrixXd pi = policy_probabilities(model);
  if (!(pi(x, y) > 0.0) || !(model.ref(x, y) > 0.0)) {
    throw std::invalid_argument("support violation: policy or reference "
                                "probability is zero at the queried response");
  }
  return model.beta * std::log(pi(x, y) / model.ref(x, y));
}

Eigen::MatrixXd policy_probabilities(const PolicyModel& model) {
  const int k = model.features.num_prompts;
  const int v = model.features.num_responses;
  Eigen::MatrixXd out(k, v);
  for (int x = 0; x < k; ++x) {
    Eigen::VectorXd logits(v);
    for (int y = 0; y < v; ++y) logits[y] = model.features.phi(x, y).dot(model.theta);
    const double m = logits.maxCoeff();
    out.row(x) = (logits.array() - m).exp().transpose();
    out.row(x) /= out.row(x).sum();
  }
  return out;
}

AuxiliaryModel fit_auxiliary(const Dataset& data, int num_prompts,
                             int num_responses, double alpha) {
  if (!(alpha >= 0.0)) throw std::invalid_argument("smoothing must be >= 0");
  // wins(x, y1, y2) = number of observed comparisons of {y1, y2} at x in
  // which y2 won, pooling both orderings.
  std::vector<Eigen::MatrixXd> wins(
      num_prompts, Eigen::MatrixXd::Zero(num_responses, num_responses));
  for (const PreferenceDatum& d : data.items) {
    if (d.label == 1) {
      wins[d.prompt](d.first, d.second) += 1.0;
    } else {
      wins[d.prompt](d.second, d.first) += 1.0;
    }
  }
  AuxiliaryModel aux;
  aux.provenance = AuxProvenance::kFitted;
  aux.probs.assign(num_prompts,
                   Eigen::MatrixXd::Constant(num_responses, num_responses, 0.5));
  for (int x = 0; x < num_prompts; ++x) {
    for (int y1 = 0; y1 < num_responses; ++y1) {
      for (int y2 = y1 + 1; y2 < num_responses; ++y2) {
        const double w = wins[x](y1, y2);
        const double l = wins[x](y2, y1);
        const double total = w + l;
        double p = 0.5;
        if (total + 2.0 * alpha > 0.0) p = (w + alpha) / (total + 2.0 * alpha);
        aux.probs[x](y1, y2) = p;
        aux.probs[x](y2, y1) = 1.0 - p;
      }
    }
  }
  return aux;
}

AuxiliaryModel oracle_auxiliary(const PreferenceKernel& kernel) {
  AuxiliaryModel aux;
  aux.provenance = AuxProvenance::kOracle;
  aux.probs = kernel.probs;
  return aux;
}

AuxiliaryModel corrupt_auxiliary(const AuxiliaryModel& aux) {
  AuxiliaryModel out;
  out.provenance = AuxProvenance::kCorrupted;
  out.probs.reserve(aux.probs.size());
  for (const Eigen::MatrixXd& table : aux.probs) {
    out.probs.push_back((1.0 - table.array()).matrix());
  }
  return out;
}

}  // namespace vrpo
