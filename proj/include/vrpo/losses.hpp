#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "vrpo/models.hpp"
#include "vrpo/random.hpp"
#include "vrpo/world.hpp"

namespace vrpo {

enum class LossKind { kCrossEntropy, kHinge };

std::string to_string(LossKind k);

struct LossSpec {
  LossKind kind = LossKind::kCrossEntropy;
  double hinge_margin = 1.0;

  void validate() const;
};

enum class ThirdTermMode { kExactEnumeration, kMonteCarlo };

std::string to_string(ThirdTermMode m);

// Configuration of the variance-reduced risk: the auxiliary preference
// model, the specified reference policy used inside the augmentation
// terms (possibly different from the true one), and how the pair
// expectation of the third term is computed.
struct VrpoConfig {
  ThirdTermMode third_term_mode = ThirdTermMode::kExactEnumeration;
  long mc_pairs = 1;
  ReferencePolicy specified_ref;
  AuxiliaryModel aux;

  void validate() const;
};

struct RiskEval {
  double value = 0.0;
  Eigen::VectorXd grad;
};

// Sufficient statistics of a dataset on a finite world: per-cell label
// counts and per-prompt totals. Risk values and gradients depend on the
// data only through these, which makes them exactly invariant under
// dataset permutation and cheap to re-evaluate inside an optimizer.
struct DatasetCounts {
  int num_prompts = 0;
  int num_responses = 0;
  long n = 0;
  std::vector<std::array<long, 2>> cells;  // index (x*V + y1)*V + y2
  std::vector<long> prompt_counts;

  static DatasetCounts from_dataset(const Dataset& data, int num_prompts,
                                    int num_responses);
  long cell_index(int x, int y1, int y2) const {
    return (static_cast<long>(x) * num_responses + y1) * num_responses + y2;
  }
};

// Per-datum loss. Cross-entropy uses probabilities clamped to
// [1e-12, 1 - 1e-12]; hinge is max(0, margin - s * logit) with s = 2u - 1.
double loss_value(const LossSpec& spec, const PairwiseLogitModel& model,
                  const Eigen::VectorXd& theta, const Activation& act,
                  const PreferenceDatum& datum,
                  std::optional<int> label_override = std::nullopt);

// Analytic gradient; cross-entropy requires the sigmoid activation,
// hinge takes the subgradient that is 0 at the kink.
Eigen::VectorXd loss_grad(const LossSpec& spec, const PairwiseLogitModel& model,
                          const Eigen::VectorXd& theta, const Activation& act,
                          const PreferenceDatum& datum,
                          std::optional<int> label_override = std::nullopt);

// Mean loss and gradient over the dataset.
RiskEval baseline_risk(const LossSpec& spec, const PairwiseLogitModel& model,
                       const Eigen::VectorXd& theta, const Activation& act,
                       const Dataset& data);
RiskEval baseline_risk(const LossSpec& spec, const PairwiseLogitModel& model,
                       const Eigen::VectorXd& theta, const Activation& act,
                       const DatasetCounts& counts);

// Variance-reduced risk: mean over data of
//   loss(x, y1, y2, z)
//   - sum_u loss(x, y1, y2, u) * p_aux(x, y1, y2, u)
//   + E_{pairs ~ specified_ref(.|x)} sum_u loss(x, ., ., u) * p_aux(u),
// with the pair expectation enumerated exactly or averaged over
// mc_pairs draws from a datum-indexed substream of `stream`.
RiskEval vrpo_risk(const LossSpec& spec, const PairwiseLogitModel& model,
                   const Eigen::VectorXd& theta, const Activation& act,
                   const Dataset& data, const VrpoConfig& cfg,
                   const RandomStream& stream);
RiskEval vrpo_risk(const LossSpec& spec, const PairwiseLogitModel& model,
                   const Eigen::VectorXd& theta, const Activation& act,
                   const DatasetCounts& counts, const VrpoConfig& cfg);

// The exact pair expectation of the augmentation term at one prompt:
// sum_{y1*, y2*} ref(y1*|x) ref(y2*|x) sum_u loss(x, y1*, y2*, u) p_aux(u).
double term3_per_prompt(const LossSpec& spec, const PairwiseLogitModel& model,
                        const Eigen::VectorXd& theta, const Activation& act,
                        int x, const VrpoConfig& cfg);

namespace detail {

// Loss values and d(loss)/d(logit) for both labels at one pair, computed
// from the activation at +logit and -logit so that label-swap symmetry
// holds bitwise.
struct PairLoss {
  double value[2];
  double gcoef[2];
};

PairLoss eval_pair_loss(const LossSpec& spec, double logit,
                        const Activation& act, bool need_grad);

// Exact value and gradient of the augmentation term at one prompt under
// an arbitrary pair distribution given by `weights` (a V x V matrix of
// pair probabilities, typically ref ⊗ ref).
void term3_exact(const LossSpec& spec, const PairwiseLogitModel& model,
                 const Eigen::VectorXd& theta, const Activation& act, int x,
                 const AuxiliaryModel& aux, const ReferencePolicy& ref,
                 bool need_grad, double& value, Eigen::VectorXd& grad);

}  // namespace detail

}  // namespace vrpo
