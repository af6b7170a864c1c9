// Command-line driver: config-driven data generation, fitting, theory
// reports, and replicated studies on fully enumerable preference worlds.

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "vrpo/config.hpp"
#include "vrpo/diagnostics.hpp"
#include "vrpo/estimation.hpp"
#include "vrpo/experiments.hpp"
#include "vrpo/presets.hpp"
#include "vrpo/serialization.hpp"

namespace fs = std::filesystem;

namespace {

vrpo::Json load_config(const std::string& path) {
  return vrpo::Json::parse(vrpo::read_text_file(path));
}

int cmd_gen_data(const std::string& config_path, const std::string& out_path,
                 std::optional<std::uint64_t> seed) {
  const vrpo::GenDataConfig cfg =
      vrpo::parse_gen_data_config(load_config(config_path), seed);
  vrpo::RandomStream stream(cfg.seed, {});
  const vrpo::Dataset data = vrpo::sample_dataset(cfg.scenario.world, cfg.n,
                                                  stream);
  vrpo::write_text_file(out_path, vrpo::dataset_to_jsonl(data));
  std::cout << "wrote " << data.size() << " records to " << out_path << "\n";
  return 0;
}

int cmd_fit(const std::string& config_path, const std::string& data_path,
            const std::string& out_dir, std::optional<std::uint64_t> seed) {
  const vrpo::FitConfig cfg =
      vrpo::parse_fit_config(load_config(config_path), seed);
  const vrpo::Dataset data =
      vrpo::dataset_from_jsonl(vrpo::read_text_file(data_path));
  if (data.num_prompts != cfg.scenario.world.num_prompts ||
      data.num_responses != cfg.scenario.world.num_responses) {
    throw std::invalid_argument("dataset dimensions do not match scenario");
  }
  fs::create_directories(out_dir);
  const vrpo::PairwiseLogitModel model = cfg.scenario.model();
  const vrpo::Activation& act = vrpo::Activation::sigmoid();
  if (cfg.fit_baseline) {
    const vrpo::FitResult fit = vrpo::fit_baseline(cfg.scenario.loss, model,
                                                   act, data, cfg.optimizer);
    vrpo::Json doc = vrpo::to_json(fit);
    doc["seed"] = cfg.seed;
    doc["estimator"] = "baseline";
    vrpo::write_text_file((fs::path(out_dir) / "baseline_fit.json").string(),
                          doc.dump(2) + "\n");
  }
  if (cfg.fit_vrpo) {
    vrpo::VrpoConfig vcfg;
    vcfg.third_term_mode = cfg.vrpo.third_term;
    vcfg.mc_pairs = cfg.vrpo.mc_pairs;
    vcfg.specified_ref = vrpo::make_specified_ref(
        cfg.scenario.world.ref_policy, cfg.vrpo.specified_ref,
        cfg.vrpo.ref_perturb_weight);
    switch (cfg.vrpo.aux) {
      case vrpo::AuxProvenance::kOracle:
        vcfg.aux = vrpo::oracle_auxiliary(cfg.scenario.world.kernel);
        break;
      case vrpo::AuxProvenance::kCorrupted:
        vcfg.aux = vrpo::corrupt_auxiliary(
            vrpo::oracle_auxiliary(cfg.scenario.world.kernel));
        break;
      case vrpo::AuxProvenance::kFitted:
        vcfg.aux = vrpo::fit_auxiliary(data, cfg.scenario.world.num_prompts,
                                       cfg.scenario.world.num_responses,
                                       cfg.vrpo.aux_smoothing);
        break;
    }
    const vrpo::FitResult fit =
        vrpo::fit_vrpo(cfg.scenario.loss, model, act, data, vcfg,
                       cfg.optimizer, vrpo::RandomStream(cfg.seed, {1}));
    vrpo::Json doc = vrpo::to_json(fit);
    doc["seed"] = cfg.seed;
    doc["estimator"] = "vrpo";
    vrpo::write_text_file((fs::path(out_dir) / "vrpo_fit.json").string(),
                          doc.dump(2) + "\n");
  }
  std::cout << "fit results written to " << out_dir << "\n";
  return 0;
}

int cmd_study(const std::string& config_path, const std::string& out_dir,
              std::optional<std::string> study,
              std::optional<std::uint64_t> seed) {
  const vrpo::StudyConfig cfg =
      vrpo::parse_study_config(load_config(config_path), study, seed);
  const vrpo::StudyReport report = vrpo::run_study(cfg);
  fs::create_directories(out_dir);
  vrpo::write_text_file((fs::path(out_dir) / "study_report.json").string(),
                        vrpo::to_json(report).dump(2) + "\n");
  vrpo::write_text_file((fs::path(out_dir) / "summary.csv").string(),
                        vrpo::summarize(report));
  if (!report.valid) {
    std::cerr << "study invalid: " << report.total_failed
              << " replicate fits failed to converge\n";
    return 1;
  }
  std::cout << "study outputs written to " << out_dir << "\n";
  return 0;
}

int cmd_theory(const std::string& config_path, const std::string& out_path,
               std::optional<std::uint64_t> seed) {
  const vrpo::TheoryConfig cfg =
      vrpo::parse_theory_config(load_config(config_path), seed);
  vrpo::OptimizerSettings settings = cfg.optimizer;
  settings.grad_tol = std::min(settings.grad_tol, 1e-10);
  settings.max_iters = std::max(settings.max_iters, 20000);
  settings.restarts = std::max(settings.restarts, 3);
  settings.restart_seed = cfg.seed;
  const vrpo::TheoryReport report = vrpo::compute_theory_report(
      cfg.scenario.loss, cfg.scenario.model(), vrpo::Activation::sigmoid(),
      cfg.scenario.world, settings, cfg.n);
  vrpo::Json doc = vrpo::to_json(report);
  doc["seed"] = cfg.seed;
  doc["scenario"] = cfg.scenario.name;
  vrpo::write_text_file(out_path, doc.dump(2) + "\n");
  std::cout << "theory report written to " << out_path << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Desk-scale preference-optimization laboratory"};
  app.require_subcommand(1);

  std::string config_path, out_path, data_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> study_name;

  auto add_common = [&](CLI::App* cmd, bool with_out = true) {
    cmd->add_option("--config", config_path, "config file (JSON)")
        ->required();
    if (with_out) {
      cmd->add_option("--out", out_path, "output path or directory")
          ->required();
    }
    cmd->add_option_function<std::uint64_t>(
        "--seed", [&](std::uint64_t s) { seed = s; },
        "override the config root seed");
  };

  CLI::App* gen = app.add_subcommand("gen-data", "sample a preference dataset");
  add_common(gen);

  CLI::App* fit = app.add_subcommand("fit", "fit estimators on a dataset");
  add_common(fit);
  fit->add_option("--data", data_path, "dataset file (JSONL)")->required();

  CLI::App* study = app.add_subcommand("study", "run a replicated study");
  add_common(study);
  study->add_option_function<std::string>(
      "--study", [&](std::string s) { study_name = std::move(s); },
      "variance|dr|subopt (overrides config)");

  CLI::App* theory = app.add_subcommand("theory", "exact theory report");
  add_common(theory);

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) return cmd_gen_data(config_path, out_path, seed);
    if (fit->parsed()) return cmd_fit(config_path, data_path, out_path, seed);
    if (study->parsed()) return cmd_study(config_path, out_path, study_name, seed);
    if (theory->parsed()) return cmd_theory(config_path, out_path, seed);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
