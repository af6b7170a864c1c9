#include "vrpo/losses.hpp"

#include <cmath>
#include <stdexcept>

namespace vrpo {
namespace {

constexpr double kProbFloor = 1e-12;

double clamp_prob(double p) {
  if (p < kProbFloor) return kProbFloor;
  const double hi = 1.0 - kProbFloor;
  if (p > hi) return hi;
  return p;
}

void require_grad_supported(const LossSpec& spec, const Activation& act) {
  if (spec.kind == LossKind::kCrossEntropy && !is_sigmoid(act)) {
    throw std::invalid_argument("analytic cross-entropy gradients require "
                                "the sigmoid activation");
  }
}

int effective_label(const PreferenceDatum& datum,
                    const std::optional<int>& label_override) {
  const int u = label_override.value_or(datum.label);
  if (u != 0 && u != 1) throw std::invalid_argument("label must be 0 or 1");
  return u;
}

}  // namespace

std::string to_string(LossKind k) {
  return k == LossKind::kCrossEntropy ? "cross_entropy" : "hinge";
}

std::string to_string(ThirdTermMode m) {
  return m == ThirdTermMode::kExactEnumeration ? "exact_enumeration"
                                               : "monte_carlo";
}

void LossSpec::validate() const {
  if (kind == LossKind::kHinge && !(hinge_margin > 0.0)) {
    throw std::invalid_argument("hinge margin must be positive");
  }
}

void VrpoConfig::validate() const {
  if (third_term_mode == ThirdTermMode::kMonteCarlo && mc_pairs < 1) {
    throw std::invalid_argument("monte_carlo mode needs mc_pairs >= 1");
  }
  specified_ref.validate();
  aux.validate();
}

namespace detail {

PairLoss eval_pair_loss(const LossSpec& spec, double logit,
                        const Activation& act, bool need_grad) {
  PairLoss out{};
  if (spec.kind == LossKind::kCrossEntropy) {
    // p_minus is the activation at the negated logit; for the sigmoid it
    // is the exact floating-point complement of p_plus, which makes
    // label-swap symmetry hold bitwise.
    const double p_plus = clamp_prob(act(logit));
    const double p_minus = clamp_prob(act(-logit));
    out.value[1] = -std::log(p_plus);
    out.value[0] = -std::log(p_minus);
    if (need_grad) {
      out.gcoef[1] = -p_minus;  // p - 1
      out.gcoef[0] = p_plus;    // p - 0
    }
  } else {
    // s = 2u - 1
    const double slack1 = spec.hinge_margin - logit;
    const double slack0 = spec.hinge_margin + logit;
    out.value[1] = slack1 > 0.0 ? slack1 : 0.0;
    out.value[0] = slack0 > 0.0 ? slack0 : 0.0;
    if (need_grad) {
      out.gcoef[1] = slack1 > 0.0 ? -1.0 : 0.0;
      out.gcoef[0] = slack0 > 0.0 ? 1.0 : 0.0;
    }
  }
  return out;
}

void term3_exact(const LossSpec& spec, const PairwiseLogitModel& model,
                 const Eigen::VectorXd& theta, const Activation& act, int x,
                 const AuxiliaryModel& aux, const ReferencePolicy& ref,
                 bool need_grad, double& value, Eigen::VectorXd& grad) {
  const int v = model.num_responses();
  value = 0.0;
  if (need_grad) grad = Eigen::VectorXd::Zero(model.dim());
  for (int y1 = 0; y1 < v; ++y1) {
    const double w1 = ref(x, y1);
    if (w1 == 0.0) continue;
    for (int y2 = 0; y2 < v; ++y2) {
      const double w = w1 * ref(x, y2);
      if (w == 0.0) continue;
      const PairLoss pl = eval_pair_loss(
          spec, model.logit(theta, x, y1, y2), act, need_grad);
      const double q = aux(x, y1, y2);
      value += w * (pl.value[0] * (1.0 - q) + pl.value[1] * q);
      if (need_grad) {
        const double c = w * (pl.gcoef[0] * (1.0 - q) + pl.gcoef[1] * q);
        if (c != 0.0) grad.noalias() += c * model.logit_grad(x, y1, y2);
      }
    }
  }
}

}  // namespace detail

double loss_value(const LossSpec& spec, const PairwiseLogitModel& model,
                  const Eigen::VectorXd& theta, const Activation& act,
                  const PreferenceDatum& datum,
                  std::optional<int> label_override) {
  spec.validate();
  const int u = effective_label(datum, label_override);
  const detail::PairLoss pl = detail::eval_pair_loss(
      spec, model.logit(theta, datum.prompt, datum.first, datum.second), act,
      /*need_grad=*/false);
  return pl.value[u];
}

Eigen::VectorXd loss_grad(const LossSpec& spec, const PairwiseLogitModel& model,
                          const Eigen::VectorXd& theta, const Activation& act,
                          const PreferenceDatum& datum,
                          std::optional<int> label_override) {
  spec.validate();
  require_grad_supported(spec, act);
  const int u = effective_label(datum, label_override);
  const detail::PairLoss pl = detail::eval_pair_loss(
      spec, model.logit(theta, datum.prompt, datum.first, datum.second), act,
      /*need_grad=*/true);
  return pl.gcoef[u] * model.logit_grad(datum.prompt, datum.first, datum.second);
}

DatasetCounts DatasetCounts::from_dataset(const Dataset& data, int num_prompts,
                                          int num_responses) {
  if (data.items.empty()) {
    throw std::invalid_argument("dataset is empty");
  }
  DatasetCounts counts;
  counts.num_prompts = num_prompts;
  counts.num_responses = num_responses;
  counts.n = data.size();
  counts.cells.assign(
      static_cast<std::size_t>(num_prompts) * num_responses * num_responses,
      {0, 0});
  counts.prompt_counts.assign(num_prompts, 0);
  for (const PreferenceDatum& d : data.items) {
    if (d.prompt < 0 || d.prompt >= num_prompts || d.first < 0 ||
        d.first >= num_responses || d.second < 0 ||
        d.second >= num_responses) {
      throw std::invalid_argument("datum indices outside world bounds");
    }
    if (d.label != 0 && d.label != 1) {
      throw std::invalid_argument("datum label must be 0 or 1");
    }
    counts.cells[counts.cell_index(d.prompt, d.first, d.second)][d.label] += 1;
    counts.prompt_counts[d.prompt] += 1;
  }
  return counts;
}

RiskEval baseline_risk(const LossSpec& spec, const PairwiseLogitModel& model,
                       const Eigen::VectorXd& theta, const Activation& act,
                       const Dataset& data) {
  return baseline_risk(spec, model, theta, act,
                       DatasetCounts::from_dataset(data, model.num_prompts(),
                                                   model.num_responses()));
}

RiskEval baseline_risk(const LossSpec& spec, const PairwiseLogitModel& model,
                       const Eigen::VectorXd& theta, const Activation& act,
                       const DatasetCounts& counts) {
  spec.validate();
  require_grad_supported(spec, act);
  const int k = counts.num_prompts;
  const int v = counts.num_responses;
  RiskEval out;
  out.grad = Eigen::VectorXd::Zero(model.dim());
  for (int x = 0; x < k; ++x) {
    for (int y1 = 0; y1 < v; ++y1) {
      for (int y2 = 0; y2 < v; ++y2) {
        const auto& cell = counts.cells[counts.cell_index(x, y1, y2)];
        if (cell[0] == 0 && cell[1] == 0) continue;
        const detail::PairLoss pl = detail::eval_pair_loss(
            spec, model.logit(theta, x, y1, y2), act, /*need_grad=*/true);
        const double c0 = static_cast<double>(cell[0]);
        const double c1 = static_cast<double>(cell[1]);
        out.value += c0 * pl.value[0] + c1 * pl.value[1];
        const double gc = c0 * pl.gcoef[0] + c1 * pl.gcoef[1];
        if (gc != 0.0) out.grad.noalias() += gc * model.logit_grad(x, y1, y2);
      }
    }
  }
  const double n = static_cast<double>(counts.n);
  out.value /= n;
  out.grad /= n;
  return out;
}

RiskEval vrpo_risk(const LossSpec& spec, const PairwiseLogitModel& model,
                   const Eigen::VectorXd& theta, const Activation& act,
                   const DatasetCounts& counts, const VrpoConfig& cfg) {
  spec.validate();
  require_grad_supported(spec, act);
  cfg.validate();
  if (cfg.third_term_mode != ThirdTermMode::kExactEnumeration) {
    throw std::invalid_argument("count-based vrpo_risk requires "
                                "exact_enumeration");
  }
  const int k = counts.num_prompts;
  const int v = counts.num_responses;
  RiskEval out;
  out.grad = Eigen::VectorXd::Zero(model.dim());

  // Exact augmentation term per prompt (value and gradient).
  std::vector<double> t3(k, 0.0);
  std::vector<Eigen::VectorXd> t3_grad(k);
  for (int x = 0; x < k; ++x) {
    if (counts.prompt_counts[x] == 0) continue;
    detail::term3_exact(spec, model, theta, act, x, cfg.aux, cfg.specified_ref,
                        /*need_grad=*/true, t3[x], t3_grad[x]);
  }

  for (int x = 0; x < k; ++x) {
    for (int y1 = 0; y1 < v; ++y1) {
      for (int y2 = 0; y2 < v; ++y2) {
        const auto& cell = counts.cells[counts.cell_index(x, y1, y2)];
        if (cell[0] == 0 && cell[1] == 0) continue;
        const detail::PairLoss pl = detail::eval_pair_loss(
            spec, model.logit(theta, x, y1, y2), act, /*need_grad=*/true);
        const double c0 = static_cast<double>(cell[0]);
        const double c1 = static_cast<double>(cell[1]);
        const double total = c0 + c1;
        const double q = cfg.aux(x, y1, y2);
        const double t2 = pl.value[0] * (1.0 - q) + pl.value[1] * q;
        // Grouped as observed-loss + (term3 - term2) so that when the two
        // augmentation terms coincide the result reduces to the baseline
        // risk bit-for-bit.
        out.value += c0 * pl.value[0] + c1 * pl.value[1] + total * (t3[x] - t2);
        const double t2g = pl.gcoef[0] * (1.0 - q) + pl.gcoef[1] * q;
        const double gc = c0 * pl.gcoef[0] + c1 * pl.gcoef[1] - total * t2g;
        if (gc != 0.0) out.grad.noalias() += gc * model.logit_grad(x, y1, y2);
      }
    }
  }
  for (int x = 0; x < k; ++x) {
    if (counts.prompt_counts[x] == 0) continue;
    const double w = static_cast<double>(counts.prompt_counts[x]);
    if (t3_grad[x].size() > 0) out.grad.noalias() += w * t3_grad[x];
  }
  const double n = static_cast<double>(counts.n);
  out.value /= n;
  out.grad /= n;
  return out;
}

RiskEval vrpo_risk(const LossSpec& spec, const PairwiseLogitModel& model,
                   const Eigen::VectorXd& theta, const Activation& act,
                   const Dataset& data, const VrpoConfig& cfg,
                   const RandomStream& stream) {
  if (cfg.third_term_mode == ThirdTermMode::kExactEnumeration) {
    return vrpo_risk(spec, model, theta, act,
                     DatasetCounts::from_dataset(data, model.num_prompts(),
                                                 model.num_responses()),
                     cfg);
  }
  spec.validate();
  require_grad_supported(spec, act);
  cfg.validate();
  if (data.items.empty()) throw std::invalid_argument("dataset is empty");

  RiskEval out;
  out.grad = Eigen::VectorXd::Zero(model.dim());
  for (std::size_t i = 0; i < data.items.size(); ++i) {
    const PreferenceDatum& d = data.items[i];
    const detail::PairLoss pl = detail::eval_pair_loss(
        spec, model.logit(theta, d.prompt, d.first, d.second), act,
        /*need_grad=*/true);
    const double q = cfg.aux(d.prompt, d.first, d.second);
    const double t2 = pl.value[0] * (1.0 - q) + pl.value[1] * q;
    const double t2g = pl.gcoef[0] * (1.0 - q) + pl.gcoef[1] * q;
    out.value += pl.value[d.label] - t2;
    const double gc = pl.gcoef[d.label] - t2g;
    if (gc != 0.0) {
      out.grad.noalias() += gc * model.logit_grad(d.prompt, d.first, d.second);
    }

    // Fresh substream per datum: draws depend on (stream id, datum
    // index) only, so a fixed stream yields a fixed objective.
    RandomStream pair_stream = stream.child(static_cast<std::uint64_t>(i));
    double t3 = 0.0;
    Eigen::VectorXd t3_grad = Eigen::VectorXd::Zero(model.dim());
    for (long j = 0; j < cfg.mc_pairs; ++j) {
      const int y1 =
          pair_stream.categorical(cfg.specified_ref.probs.row(d.prompt));
      const int y2 =
          pair_stream.categorical(cfg.specified_ref.probs.row(d.prompt));
      const detail::PairLoss spl = detail::eval_pair_loss(
          spec, model.logit(theta, d.prompt, y1, y2), act, /*need_grad=*/true);
      const double sq = cfg.aux(d.prompt, y1, y2);
      t3 += spl.value[0] * (1.0 - sq) + spl.value[1] * sq;
      const double sc = spl.gcoef[0] * (1.0 - sq) + spl.gcoef[1] * sq;
      if (sc != 0.0) {
        t3_grad.noalias() += sc * model.logit_grad(d.prompt, y1, y2);
      }
    }
    const double m = static_cast<double>(cfg.mc_pairs);
    out.value += t3 / m;
    out.grad.noalias() += t3_grad / m;
  }
  const double n = static_cast<double>(data.size());
  out.value /= n;
  out.grad /= n;
  return out;
}

double term3_per_prompt(const LossSpec& spec, const PairwiseLogitModel& model,
                        const Eigen::VectorXd& theta, const Activation& act,
                        int x, const VrpoConfig& cfg) {
  spec.validate();
  cfg.validate();
  if (cfg.third_term_mode != ThirdTermMode::kExactEnumeration) {
    throw std::invalid_argument("term3_per_prompt requires exact_enumeration");
  }
  double value = 0.0;
  Eigen::VectorXd unused;
  detail::term3_exact(spec, model, theta, act, x, cfg.aux, cfg.specified_ref,
                      /*need_grad=*/false, value, unused);
  return value;
}

}  // namespace vrpo
