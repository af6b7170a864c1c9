#include "vrpo/config.hpp"

#include <set>
#include <stdexcept>

#include "vrpo/presets.hpp"

namespace vrpo {
namespace {

void check_keys(const Json& obj, const std::set<std::string>& allowed,
                const std::string& context) {
  if (!obj.is_object()) {
    throw std::invalid_argument("config section '" + context +
                                "' must be an object");
  }
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (allowed.find(it.key()) == allowed.end()) {
      throw std::invalid_argument("unknown config key '" + it.key() +
                                  "' in " + context);
    }
  }
}

Activation activation_from_name(const std::string& name) {
  if (name == "sigmoid") return Activation::sigmoid();
  throw std::invalid_argument("unknown activation '" + name + "'");
}

PreferenceKernel kernel_from_config(const Json& j,
                                    const Eigen::MatrixXd& true_reward) {
  check_keys(j, {"type", "eps", "activation", "probs"}, "world.kernel");
  const std::string type = j.at("type").get<std::string>();
  const Activation act = activation_from_name(
      j.value("activation", std::string("sigmoid")));
  if (type == "bt") {
    return build_bt_kernel(true_reward, act);
  }
  if (type == "bt_flip") {
    return flip_labels_kernel(build_bt_kernel(true_reward, act),
                              j.at("eps").get<double>());
  }
  if (type == "explicit") {
    std::vector<Eigen::MatrixXd> probs;
    for (const auto& t : j.at("probs")) probs.push_back(matrix_from_json(t));
    return explicit_kernel(std::move(probs));
  }
  throw std::invalid_argument("unknown kernel type '" + type +
                              "' (known: bt, bt_flip, explicit)");
}

World world_from_config(const Json& j) {
  check_keys(j,
             {"num_prompts", "num_responses", "prompt_dist", "true_reward",
              "kernel", "ref_policy"},
             "world");
  World world;
  world.num_prompts = j.at("num_prompts").get<int>();
  world.num_responses = j.at("num_responses").get<int>();
  world.prompt_dist = vector_from_json(j.at("prompt_dist"));
  world.true_reward = matrix_from_json(j.at("true_reward"));
  world.kernel = kernel_from_config(j.at("kernel"), world.true_reward);
  world.ref_policy = ReferencePolicy{matrix_from_json(j.at("ref_policy"))};
  world.validate();
  return world;
}

FeatureMap features_from_config(const Json& j, int k, int v) {
  check_keys(j, {"dim", "table"}, "features");
  FeatureMap f;
  f.dim = j.at("dim").get<int>();
  f.num_prompts = k;
  f.num_responses = v;
  f.table = matrix_from_json(j.at("table"));
  f.validate();
  return f;
}

LossSpec loss_from_config(const Json& j) {
  check_keys(j, {"kind", "hinge_margin"}, "loss");
  LossSpec spec;
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "cross_entropy") {
    spec.kind = LossKind::kCrossEntropy;
  } else if (kind == "hinge") {
    spec.kind = LossKind::kHinge;
  } else {
    throw std::invalid_argument("unknown loss kind '" + kind +
                                "' (known: cross_entropy, hinge)");
  }
  spec.hinge_margin = j.value("hinge_margin", 1.0);
  spec.validate();
  return spec;
}

OptimizerSettings optimizer_from_config(const Json& j) {
  OptimizerSettings s;
  if (j.is_null()) return s;
  check_keys(j,
             {"max_iters", "grad_tol", "armijo_shrink", "armijo_slope",
              "initial_step", "restarts"},
             "optimizer");
  s.max_iters = j.value("max_iters", s.max_iters);
  s.grad_tol = j.value("grad_tol", s.grad_tol);
  s.armijo_shrink = j.value("armijo_shrink", s.armijo_shrink);
  s.armijo_slope = j.value("armijo_slope", s.armijo_slope);
  s.initial_step = j.value("initial_step", s.initial_step);
  s.restarts = j.value("restarts", s.restarts);
  s.validate();
  return s;
}

VrpoChoices vrpo_from_config(const Json& j) {
  VrpoChoices c;
  if (j.is_null()) return c;
  check_keys(j,
             {"aux", "aux_smoothing", "specified_ref", "ref_perturb_weight",
              "third_term", "mc_pairs"},
             "vrpo");
  if (j.contains("aux")) {
    const std::string aux = j.at("aux").get<std::string>();
    if (aux == "oracle") {
      c.aux = AuxProvenance::kOracle;
    } else if (aux == "corrupted") {
      c.aux = AuxProvenance::kCorrupted;
    } else if (aux == "fitted") {
      c.aux = AuxProvenance::kFitted;
    } else {
      throw std::invalid_argument("unknown aux provenance '" + aux +
                                  "' (known: oracle, corrupted, fitted)");
    }
  }
  c.aux_smoothing = j.value("aux_smoothing", c.aux_smoothing);
  if (j.contains("specified_ref")) {
    const std::string ref = j.at("specified_ref").get<std::string>();
    if (ref == "true") {
      c.specified_ref = RefChoice::kTrue;
    } else if (ref == "perturbed") {
      c.specified_ref = RefChoice::kPerturbed;
    } else if (ref == "deterministic") {
      c.specified_ref = RefChoice::kDeterministic;
    } else {
      throw std::invalid_argument(
          "unknown specified_ref '" + ref +
          "' (known: true, perturbed, deterministic)");
    }
  }
  c.ref_perturb_weight = j.value("ref_perturb_weight", c.ref_perturb_weight);
  if (j.contains("third_term")) {
    const std::string mode = j.at("third_term").get<std::string>();
    if (mode == "exact") {
      c.third_term = ThirdTermMode::kExactEnumeration;
    } else if (mode == "monte_carlo") {
      c.third_term = ThirdTermMode::kMonteCarlo;
    } else {
      throw std::invalid_argument("unknown third_term '" + mode +
                                  "' (known: exact, monte_carlo)");
    }
  }
  c.mc_pairs = j.value("mc_pairs", c.mc_pairs);
  return c;
}

std::uint64_t seed_from_config(const Json& j,
                               std::optional<std::uint64_t> seed_override) {
  if (seed_override) return *seed_override;
  return j.value("seed", static_cast<std::uint64_t>(0));
}

}  // namespace

Scenario scenario_from_config(const Json& j) {
  if (j.is_string()) return preset_scenario(j.get<std::string>());
  check_keys(j, {"name", "world", "features", "pipeline", "beta", "loss"},
             "scenario");
  Scenario s;
  s.name = j.value("name", std::string("custom"));
  s.world = world_from_config(j.at("world"));
  s.features = features_from_config(j.at("features"), s.world.num_prompts,
                                    s.world.num_responses);
  const std::string pipeline = j.value("pipeline", std::string("two_stage"));
  if (pipeline == "two_stage") {
    s.pipeline = Pipeline::kTwoStage;
  } else if (pipeline == "one_stage") {
    s.pipeline = Pipeline::kOneStage;
  } else {
    throw std::invalid_argument("unknown pipeline '" + pipeline +
                                "' (known: two_stage, one_stage)");
  }
  s.beta = j.value("beta", 1.0);
  s.loss = j.contains("loss") ? loss_from_config(j.at("loss")) : LossSpec{};
  s.validate();
  return s;
}

GenDataConfig parse_gen_data_config(
    const Json& j, std::optional<std::uint64_t> seed_override) {
  check_keys(j, {"scenario", "seed", "n"}, "gen-data config");
  GenDataConfig cfg;
  cfg.scenario = scenario_from_config(j.at("scenario"));
  cfg.seed = seed_from_config(j, seed_override);
  cfg.n = j.at("n").get<long>();
  if (cfg.n < 1) throw std::invalid_argument("n must be >= 1");
  return cfg;
}

FitConfig parse_fit_config(const Json& j,
                           std::optional<std::uint64_t> seed_override) {
  check_keys(j, {"scenario", "seed", "estimators", "vrpo", "optimizer"},
             "fit config");
  FitConfig cfg;
  cfg.scenario = scenario_from_config(j.at("scenario"));
  cfg.seed = seed_from_config(j, seed_override);
  if (j.contains("estimators")) {
    cfg.fit_baseline = false;
    cfg.fit_vrpo = false;
    for (const auto& e : j.at("estimators")) {
      const std::string name = e.get<std::string>();
      if (name == "baseline") {
        cfg.fit_baseline = true;
      } else if (name == "vrpo") {
        cfg.fit_vrpo = true;
      } else {
        throw std::invalid_argument("unknown estimator '" + name +
                                    "' (known: baseline, vrpo)");
      }
    }
    if (!cfg.fit_baseline && !cfg.fit_vrpo) {
      throw std::invalid_argument("estimators list is empty");
    }
  }
  cfg.vrpo = vrpo_from_config(j.contains("vrpo") ? j.at("vrpo") : Json());
  cfg.optimizer =
      optimizer_from_config(j.contains("optimizer") ? j.at("optimizer")
                                                    : Json());
  return cfg;
}

StudyConfig parse_study_config(const Json& j,
                               std::optional<std::string> study_override,
                               std::optional<std::uint64_t> seed_override) {
  check_keys(j,
             {"scenario", "seed", "study", "sample_sizes", "replicates",
              "vrpo", "optimizer", "bootstrap"},
             "study config");
  StudyConfig cfg;
  cfg.scenario = scenario_from_config(j.at("scenario"));
  cfg.root_seed = seed_from_config(j, seed_override);
  std::string study = j.value("study", std::string());
  if (study_override) study = *study_override;
  if (study == "variance") {
    cfg.study = StudyKind::kVariance;
  } else if (study == "dr") {
    cfg.study = StudyKind::kDrGrid;
  } else if (study == "subopt") {
    cfg.study = StudyKind::kSubopt;
  } else {
    throw std::invalid_argument("invalid study '" + study +
                                "' (valid options: variance, dr, subopt)");
  }
  cfg.sample_sizes = j.at("sample_sizes").get<std::vector<long>>();
  cfg.replicates = j.at("replicates").get<int>();
  const VrpoChoices choices =
      vrpo_from_config(j.contains("vrpo") ? j.at("vrpo") : Json());
  cfg.aux = choices.aux;
  cfg.aux_smoothing = choices.aux_smoothing;
  cfg.specified_ref = choices.specified_ref;
  cfg.ref_perturb_weight = choices.ref_perturb_weight;
  cfg.third_term = choices.third_term;
  cfg.mc_pairs = choices.mc_pairs;
  cfg.optimizer =
      optimizer_from_config(j.contains("optimizer") ? j.at("optimizer")
                                                    : Json());
  cfg.bootstrap_resamples = j.value("bootstrap", cfg.bootstrap_resamples);
  cfg.validate();
  return cfg;
}

TheoryConfig parse_theory_config(const Json& j,
                                 std::optional<std::uint64_t> seed_override) {
  check_keys(j, {"scenario", "seed", "n", "optimizer"}, "theory config");
  TheoryConfig cfg;
  cfg.scenario = scenario_from_config(j.at("scenario"));
  cfg.seed = seed_from_config(j, seed_override);
  cfg.n = j.value("n", cfg.n);
  if (cfg.n < 1) throw std::invalid_argument("n must be >= 1");
  cfg.optimizer =
      optimizer_from_config(j.contains("optimizer") ? j.at("optimizer")
                                                    : Json());
  return cfg;
}

}  // namespace vrpo
