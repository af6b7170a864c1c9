#include "vrpo/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

#include <Eigen/Dense>

namespace vrpo {
namespace {

// Fixed path tag separating bootstrap streams from data streams.
constexpr std::uint64_t kBootstrapTag = 0xB007;

long sample_sizes_max(const StudyConfig& cfg) {
  return *std::max_element(cfg.sample_sizes.begin(), cfg.sample_sizes.end());
}

OptimizerSettings theory_settings(const OptimizerSettings& base) {
  OptimizerSettings s = base;
  s.grad_tol = std::min(base.grad_tol, 1e-10);
  s.max_iters = std::max(base.max_iters, 20000);
  s.restarts = std::max(base.restarts, 3);
  s.init = Eigen::VectorXd();
  return s;
}

AuxiliaryModel make_aux(const StudyConfig& cfg, const Dataset& data) {
  switch (cfg.aux) {
    case AuxProvenance::kOracle:
      return oracle_auxiliary(cfg.scenario.world.kernel);
    case AuxProvenance::kCorrupted:
      return corrupt_auxiliary(oracle_auxiliary(cfg.scenario.world.kernel));
    case AuxProvenance::kFitted:
      return fit_auxiliary(data, cfg.scenario.world.num_prompts,
                           cfg.scenario.world.num_responses,
                           cfg.aux_smoothing);
  }
  throw std::invalid_argument("unknown auxiliary provenance");
}

struct PairedDraws {
  std::vector<Eigen::VectorXd> baseline;
  std::vector<Eigen::VectorXd> vrpo;
  std::vector<double> gap_baseline;
  std::vector<double> gap_vrpo;
  int failed = 0;
};

Eigen::VectorXd mean_of(const std::vector<Eigen::VectorXd>& draws, int dim) {
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(dim);
  for (const auto& t : draws) mean += t;
  if (!draws.empty()) mean /= static_cast<double>(draws.size());
  return mean;
}

Eigen::MatrixXd cov_of(const std::vector<Eigen::VectorXd>& draws,
                       const Eigen::VectorXd& mean) {
  const int d = static_cast<int>(mean.size());
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(d, d);
  if (draws.size() < 2) return cov;
  for (const auto& t : draws) {
    const Eigen::VectorXd dev = t - mean;
    cov.noalias() += dev * dev.transpose();
  }
  cov /= static_cast<double>(draws.size() - 1);
  return 0.5 * (cov + cov.transpose());
}

ArmCell make_cell(const std::string& arm, long n,
                  const std::vector<Eigen::VectorXd>& draws,
                  const std::vector<double>& gaps, int failed,
                  const Eigen::VectorXd& theta_bar) {
  ArmCell cell;
  cell.arm = arm;
  cell.n = n;
  cell.replicates_used = static_cast<int>(draws.size());
  cell.failed = failed;
  const int d = static_cast<int>(theta_bar.size());
  cell.mean_theta = mean_of(draws, d);
  cell.cov = cov_of(draws, cell.mean_theta);
  cell.trace_var = cell.cov.trace();
  double mse = 0.0;
  for (const auto& t : draws) mse += (t - theta_bar).squaredNorm();
  cell.mse = draws.empty() ? 0.0 : mse / static_cast<double>(draws.size());
  cell.mean_err_norm = (cell.mean_theta - theta_bar).norm();
  double gap_sum = 0.0;
  for (double g : gaps) gap_sum += g;
  const double m = static_cast<double>(gaps.size());
  cell.mean_gap = gaps.empty() ? 0.0 : gap_sum / m;
  if (gaps.size() >= 2) {
    double ss = 0.0;
    for (double g : gaps) ss += (g - cell.mean_gap) * (g - cell.mean_gap);
    cell.gap_se = std::sqrt(ss / (m - 1.0)) / std::sqrt(m);
  }
  return cell;
}

double trace_var_of_sample(const std::vector<const Eigen::VectorXd*>& sample) {
  const int d = static_cast<int>(sample.front()->size());
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(d);
  for (const auto* t : sample) mean += *t;
  mean /= static_cast<double>(sample.size());
  double trace = 0.0;
  for (const auto* t : sample) trace += (*t - mean).squaredNorm();
  return trace / static_cast<double>(sample.size() - 1);
}

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

Interval percentile_ci(std::vector<double> draws) {
  std::sort(draws.begin(), draws.end());
  const auto at = [&](double q) {
    const double pos = q * static_cast<double>(draws.size() - 1);
    const std::size_t i = static_cast<std::size_t>(pos);
    const double frac = pos - static_cast<double>(i);
    if (i + 1 >= draws.size()) return draws.back();
    return draws[i] * (1.0 - frac) + draws[i + 1] * frac;
  };
  return {at(0.025), at(0.975)};
}

// Percentile bootstrap over replicates of the trace-variance difference.
Interval bootstrap_trace_diff(const PairedDraws& draws, int resamples,
                              RandomStream stream) {
  const std::size_t m = draws.baseline.size();
  std::vector<double> stats;
  stats.reserve(resamples);
  std::vector<const Eigen::VectorXd*> b(m), v(m);
  for (int r = 0; r < resamples; ++r) {
    for (std::size_t i = 0; i < m; ++i) {
      const auto idx = static_cast<std::size_t>(stream.uniform01() *
                                                static_cast<double>(m));
      const std::size_t j = std::min(idx, m - 1);
      b[i] = &draws.baseline[j];
      v[i] = &draws.vrpo[j];
    }
    stats.push_back(trace_var_of_sample(b) - trace_var_of_sample(v));
  }
  return percentile_ci(std::move(stats));
}

Interval bootstrap_mean(const std::vector<double>& values, int resamples,
                        RandomStream stream) {
  const std::size_t m = values.size();
  std::vector<double> stats;
  stats.reserve(resamples);
  for (int r = 0; r < resamples; ++r) {
    double acc = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      const auto idx = static_cast<std::size_t>(stream.uniform01() *
                                                static_cast<double>(m));
      acc += values[std::min(idx, m - 1)];
    }
    stats.push_back(acc / static_cast<double>(m));
  }
  return percentile_ci(std::move(stats));
}

double loglog_slope(const std::vector<long>& ns,
                    const std::vector<double>& values) {
  const std::size_t k = ns.size();
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    const double x = std::log(static_cast<double>(ns[i]));
    const double y = std::log(std::max(values[i], 1e-300));
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double n = static_cast<double>(k);
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void csv_row(std::ostringstream& out, const std::string& study,
             const std::string& arm, const std::string& n,
             const std::string& metric, double value,
             const std::string& stderr_s = "", const std::string& ci_lo = "",
             const std::string& ci_hi = "") {
  out << study << ',' << arm << ',' << n << ',' << metric << ','
      << format_number(value) << ',' << stderr_s << ',' << ci_lo << ','
      << ci_hi << '\n';
}

}  // namespace

PairwiseLogitModel Scenario::model() const {
  if (pipeline == Pipeline::kOneStage) {
    return PairwiseLogitModel::one_stage(features, world.ref_policy, beta);
  }
  return PairwiseLogitModel::two_stage(features);
}

void Scenario::validate() const {
  world.validate();
  features.validate();
  loss.validate();
  if (features.num_prompts != world.num_prompts ||
      features.num_responses != world.num_responses) {
    throw std::invalid_argument("feature map shape does not match world");
  }
  if (!(beta > 0.0)) throw std::invalid_argument("beta must be positive");
}

std::string to_string(RefChoice r) {
  switch (r) {
    case RefChoice::kTrue: return "true";
    case RefChoice::kPerturbed: return "perturbed";
    case RefChoice::kDeterministic: return "deterministic";
  }
  return "unknown";
}

std::string to_string(StudyKind s) {
  switch (s) {
    case StudyKind::kVariance: return "variance";
    case StudyKind::kDrGrid: return "dr";
    case StudyKind::kSubopt: return "subopt";
  }
  return "unknown";
}

void StudyConfig::validate() const {
  scenario.validate();
  optimizer.validate();
  if (replicates < 2) throw std::invalid_argument("replicates must be >= 2");
  if (sample_sizes.empty()) {
    throw std::invalid_argument("at least one sample size is required");
  }
  for (long n : sample_sizes) {
    if (n < 50) throw std::invalid_argument("sample sizes must be >= 50");
  }
  if (bootstrap_resamples < 1) {
    throw std::invalid_argument("bootstrap_resamples must be >= 1");
  }
  if (!(ref_perturb_weight >= 0.0 && ref_perturb_weight <= 1.0)) {
    throw std::invalid_argument("ref_perturb_weight must lie in [0, 1]");
  }
}

ReferencePolicy make_specified_ref(const ReferencePolicy& true_ref,
                                   RefChoice choice, double perturb_weight) {
  switch (choice) {
    case RefChoice::kTrue:
      return true_ref;
    case RefChoice::kPerturbed: {
      const int v = true_ref.num_responses();
      const double u = 1.0 / static_cast<double>(v);
      ReferencePolicy out = true_ref;
      out.probs = (1.0 - perturb_weight) * true_ref.probs.array() +
                  perturb_weight * u;
      return out;
    }
    case RefChoice::kDeterministic: {
      ReferencePolicy out = true_ref;
      out.probs.setZero();
      for (int x = 0; x < true_ref.num_prompts(); ++x) {
        int argmax = 0;
        true_ref.probs.row(x).maxCoeff(&argmax);
        out.probs(x, argmax) = 1.0;
      }
      return out;
    }
  }
  throw std::invalid_argument("unknown reference choice");
}

namespace {

StudyReport run_paired_study(const StudyConfig& cfg, StudyKind kind) {
  cfg.validate();
  const Scenario& sc = cfg.scenario;
  const PairwiseLogitModel model = sc.model();

  StudyReport report;
  report.study = to_string(kind);
  report.scenario_name = sc.name;
  report.root_seed = cfg.root_seed;
  report.replicates = cfg.replicates;

  const OptimizerSettings tset = theory_settings(cfg.optimizer);
  report.theory = compute_theory_report(sc.loss, model, Activation::sigmoid(),
                                        sc.world, tset,
                                        sample_sizes_max(cfg));
  const Eigen::VectorXd& tbar = report.theory.theta_bar;
  report.r_theta_bar =
      suboptimality_gap(sc.world, sc.features, tbar, sc.pipeline, sc.beta);
  const Eigen::MatrixXd neg_j_hess =
      -policy_value_hessian(sc.world, sc.features, tbar, sc.pipeline, sc.beta);

  const ReferencePolicy specified_ref = make_specified_ref(
      sc.world.ref_policy, cfg.specified_ref, cfg.ref_perturb_weight);

  const double base_predicted_trace =
      report.theory.predicted_reduction.trace() *
      static_cast<double>(report.theory.n);

  int total = 0;
  for (std::size_t ni = 0; ni < cfg.sample_sizes.size(); ++ni) {
    const long n = cfg.sample_sizes[ni];
    PairedDraws draws;
    for (int m = 0; m < cfg.replicates; ++m) {
      RandomStream data_stream(cfg.root_seed,
                               {static_cast<std::uint64_t>(ni),
                                static_cast<std::uint64_t>(m)});
      const Dataset data = sample_dataset(sc.world, n, data_stream);
      VrpoConfig vcfg;
      vcfg.third_term_mode = cfg.third_term;
      vcfg.mc_pairs = cfg.mc_pairs;
      vcfg.specified_ref = specified_ref;
      vcfg.aux = make_aux(cfg, data);
      const FitResult base_fit = fit_baseline(sc.loss, model,
                                              Activation::sigmoid(), data,
                                              cfg.optimizer);
      const FitResult vrpo_fit =
          fit_vrpo(sc.loss, model, Activation::sigmoid(), data, vcfg,
                   cfg.optimizer, data_stream.child(1));
      ++total;
      if (!base_fit.converged || !vrpo_fit.converged) {
        ++draws.failed;
        continue;
      }
      draws.baseline.push_back(base_fit.theta);
      draws.vrpo.push_back(vrpo_fit.theta);
      draws.gap_baseline.push_back(suboptimality_gap(
          sc.world, sc.features, base_fit.theta, sc.pipeline, sc.beta));
      draws.gap_vrpo.push_back(suboptimality_gap(
          sc.world, sc.features, vrpo_fit.theta, sc.pipeline, sc.beta));
    }
    report.total_failed += draws.failed;

    ArmCell base_cell = make_cell("baseline", n, draws.baseline,
                                  draws.gap_baseline, draws.failed, tbar);
    ArmCell vrpo_cell = make_cell("vrpo", n, draws.vrpo, draws.gap_vrpo,
                                  draws.failed, tbar);

    VarianceComparison cmp;
    cmp.n = n;
    cmp.trace_var_diff = base_cell.trace_var - vrpo_cell.trace_var;
    if (draws.baseline.size() >= 2) {
      const Interval ci = bootstrap_trace_diff(
          draws, cfg.bootstrap_resamples,
          RandomStream(cfg.root_seed, {kBootstrapTag, ni, 0}));
      cmp.trace_diff_ci_lo = ci.lo;
      cmp.trace_diff_ci_hi = ci.hi;
    }
    cmp.predicted_trace = base_predicted_trace / static_cast<double>(n);
    cmp.reduction_ratio =
        cmp.predicted_trace != 0.0 ? cmp.trace_var_diff / cmp.predicted_trace
                                   : 0.0;
    const Eigen::MatrixXd cov_diff = base_cell.cov - vrpo_cell.cov;
    {
      const Eigen::MatrixXd predicted =
          report.theory.predicted_reduction *
          (static_cast<double>(report.theory.n) / static_cast<double>(n));
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov_diff - predicted);
      cmp.psd_min_eigenvalue = eig.eigenvalues().minCoeff();
      cmp.psd_floor = -0.1 * std::abs(base_cell.trace_var);
    }
    std::vector<double> gap_diffs(draws.gap_baseline.size());
    for (std::size_t i = 0; i < gap_diffs.size(); ++i) {
      gap_diffs[i] = draws.gap_baseline[i] - draws.gap_vrpo[i];
    }
    if (!gap_diffs.empty()) {
      double mean = 0.0;
      for (double g : gap_diffs) mean += g;
      mean /= static_cast<double>(gap_diffs.size());
      cmp.mean_gap_diff = mean;
      if (gap_diffs.size() >= 2) {
        double ss = 0.0;
        for (double g : gap_diffs) ss += (g - mean) * (g - mean);
        cmp.gap_diff_se =
            std::sqrt(ss / static_cast<double>(gap_diffs.size() - 1)) /
            std::sqrt(static_cast<double>(gap_diffs.size()));
        const Interval ci = bootstrap_mean(
            gap_diffs, cfg.bootstrap_resamples,
            RandomStream(cfg.root_seed, {kBootstrapTag, ni, 1}));
        cmp.gap_diff_ci_lo = ci.lo;
        cmp.gap_diff_ci_hi = ci.hi;
      }
    }
    cmp.gap_trace_formula = (cov_diff * neg_j_hess).trace();

    report.arms.push_back(std::move(base_cell));
    report.arms.push_back(std::move(vrpo_cell));
    report.comparisons.push_back(cmp);
  }
  report.valid = report.total_failed * 100 <= total;
  return report;
}

}  // namespace

StudyReport run_variance_study(const StudyConfig& cfg) {
  return run_paired_study(cfg, StudyKind::kVariance);
}

StudyReport run_subopt_study(const StudyConfig& cfg) {
  return run_paired_study(cfg, StudyKind::kSubopt);
}

StudyReport run_dr_grid(const StudyConfig& cfg) {
  cfg.validate();
  const Scenario& sc = cfg.scenario;
  const PairwiseLogitModel model = sc.model();

  StudyReport report;
  report.study = to_string(StudyKind::kDrGrid);
  report.scenario_name = sc.name;
  report.root_seed = cfg.root_seed;
  report.replicates = cfg.replicates;

  const OptimizerSettings tset = theory_settings(cfg.optimizer);
  report.theory = compute_theory_report(sc.loss, model, Activation::sigmoid(),
                                        sc.world, tset,
                                        sample_sizes_max(cfg));
  const Eigen::VectorXd& tbar = report.theory.theta_bar;
  report.r_theta_bar =
      suboptimality_gap(sc.world, sc.features, tbar, sc.pipeline, sc.beta);

  struct Arm {
    std::string name;
    RefChoice ref;
    AuxProvenance aux;
  };
  const std::vector<Arm> arms = {
      {"ref_true_aux_oracle", RefChoice::kTrue, AuxProvenance::kOracle},
      {"ref_true_aux_corrupted", RefChoice::kTrue, AuxProvenance::kCorrupted},
      {"ref_perturbed_aux_oracle", RefChoice::kPerturbed,
       AuxProvenance::kOracle},
      {"ref_perturbed_aux_corrupted", RefChoice::kPerturbed,
       AuxProvenance::kCorrupted},
  };

  const long n_max =
      *std::max_element(cfg.sample_sizes.begin(), cfg.sample_sizes.end());

  // theta draws indexed [arm][n][replicate]
  std::vector<std::vector<std::vector<Eigen::VectorXd>>> draws(
      arms.size(), std::vector<std::vector<Eigen::VectorXd>>(
                       cfg.sample_sizes.size()));
  std::vector<std::vector<int>> failed(
      arms.size(), std::vector<int>(cfg.sample_sizes.size(), 0));

  int total = 0;
  for (int m = 0; m < cfg.replicates; ++m) {
    // One nested dataset per replicate, shared by all arms and prefixed
    // for the smaller sample sizes (common random numbers).
    RandomStream data_stream(cfg.root_seed, {static_cast<std::uint64_t>(m)});
    const Dataset full = sample_dataset(sc.world, n_max, data_stream);
    for (std::size_t ai = 0; ai < arms.size(); ++ai) {
      VrpoConfig vcfg;
      vcfg.third_term_mode = cfg.third_term;
      vcfg.mc_pairs = cfg.mc_pairs;
      vcfg.specified_ref = make_specified_ref(sc.world.ref_policy,
                                              arms[ai].ref,
                                              cfg.ref_perturb_weight);
      StudyConfig aux_cfg = cfg;
      aux_cfg.aux = arms[ai].aux;
      for (std::size_t ni = 0; ni < cfg.sample_sizes.size(); ++ni) {
        Dataset prefix;
        prefix.root_seed = full.root_seed;
        prefix.path = full.path;
        prefix.num_prompts = full.num_prompts;
        prefix.num_responses = full.num_responses;
        prefix.items.assign(full.items.begin(),
                            full.items.begin() + cfg.sample_sizes[ni]);
        vcfg.aux = make_aux(aux_cfg, prefix);
        const FitResult fit =
            fit_vrpo(sc.loss, model, Activation::sigmoid(), prefix, vcfg,
                     cfg.optimizer, data_stream.child(1 + ni));
        ++total;
        if (!fit.converged) {
          ++failed[ai][ni];
          continue;
        }
        draws[ai][ni].push_back(fit.theta);
      }
    }
  }

  for (std::size_t ai = 0; ai < arms.size(); ++ai) {
    DrArmResult arm_result;
    arm_result.arm = arms[ai].name;
    for (std::size_t ni = 0; ni < cfg.sample_sizes.size(); ++ni) {
      ArmCell cell = make_cell(arms[ai].name, cfg.sample_sizes[ni],
                               draws[ai][ni], {}, failed[ai][ni], tbar);
      arm_result.ns.push_back(cfg.sample_sizes[ni]);
      arm_result.mean_err_norms.push_back(cell.mean_err_norm);
      report.total_failed += failed[ai][ni];
      report.arms.push_back(std::move(cell));
    }
    arm_result.slope = cfg.sample_sizes.size() >= 2
                           ? loglog_slope(arm_result.ns,
                                          arm_result.mean_err_norms)
                           : 0.0;
    report.dr_arms.push_back(std::move(arm_result));
  }
  report.valid = report.total_failed * 100 <= total;
  return report;
}

StudyReport run_study(const StudyConfig& cfg) {
  switch (cfg.study) {
    case StudyKind::kVariance: return run_variance_study(cfg);
    case StudyKind::kDrGrid: return run_dr_grid(cfg);
    case StudyKind::kSubopt: return run_subopt_study(cfg);
  }
  throw std::invalid_argument("unknown study kind");
}

std::string summarize(const StudyReport& report) {
  std::ostringstream out;
  out << "study,arm,n,metric,value,stderr,ci_lo,ci_hi\n";
  for (const ArmCell& cell : report.arms) {
    const std::string n = std::to_string(cell.n);
    csv_row(out, report.study, cell.arm, n, "mean_err_norm",
            cell.mean_err_norm);
    csv_row(out, report.study, cell.arm, n, "trace_var", cell.trace_var);
    csv_row(out, report.study, cell.arm, n, "mse", cell.mse);
    csv_row(out, report.study, cell.arm, n, "mean_gap", cell.mean_gap,
            format_number(cell.gap_se));
    csv_row(out, report.study, cell.arm, n, "failed_replicates",
            static_cast<double>(cell.failed));
  }
  for (const VarianceComparison& cmp : report.comparisons) {
    const std::string n = std::to_string(cmp.n);
    csv_row(out, report.study, "comparison", n, "trace_var_diff",
            cmp.trace_var_diff, "", format_number(cmp.trace_diff_ci_lo),
            format_number(cmp.trace_diff_ci_hi));
    csv_row(out, report.study, "comparison", n, "predicted_trace_reduction",
            cmp.predicted_trace);
    csv_row(out, report.study, "comparison", n, "reduction_ratio",
            cmp.reduction_ratio);
    csv_row(out, report.study, "comparison", n, "psd_min_eigenvalue",
            cmp.psd_min_eigenvalue);
    csv_row(out, report.study, "comparison", n, "psd_floor", cmp.psd_floor);
    csv_row(out, report.study, "comparison", n, "mean_gap_diff",
            cmp.mean_gap_diff, format_number(cmp.gap_diff_se),
            format_number(cmp.gap_diff_ci_lo),
            format_number(cmp.gap_diff_ci_hi));
    csv_row(out, report.study, "comparison", n, "gap_trace_formula",
            cmp.gap_trace_formula);
    csv_row(out, report.study, "comparison", n, "r_theta_bar",
            report.r_theta_bar);
  }
  for (const DrArmResult& arm : report.dr_arms) {
    csv_row(out, report.study, arm.arm, "", "slope", arm.slope);
  }
  return out.str();
}

}  // namespace vrpo
