#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include <json.hpp>

#include "vrpo/experiments.hpp"
#include "vrpo/serialization.hpp"

namespace vrpo {

// Parsed command configurations. Every object in a config document is
// checked against its set of allowed keys; unknown keys are an error
// naming the key.

struct VrpoChoices {
  AuxProvenance aux = AuxProvenance::kOracle;
  double aux_smoothing = 1.0;
  RefChoice specified_ref = RefChoice::kTrue;
  double ref_perturb_weight = 0.5;
  ThirdTermMode third_term = ThirdTermMode::kExactEnumeration;
  long mc_pairs = 1;
};

struct GenDataConfig {
  Scenario scenario;
  std::uint64_t seed = 0;
  long n = 0;
};

struct FitConfig {
  Scenario scenario;
  std::uint64_t seed = 0;
  bool fit_baseline = true;
  bool fit_vrpo = false;
  VrpoChoices vrpo;
  OptimizerSettings optimizer;
};

struct TheoryConfig {
  Scenario scenario;
  std::uint64_t seed = 0;
  long n = 1000;
  OptimizerSettings optimizer;
};

Scenario scenario_from_config(const Json& j);

GenDataConfig parse_gen_data_config(
    const Json& j, std::optional<std::uint64_t> seed_override);
FitConfig parse_fit_config(const Json& j,
                           std::optional<std::uint64_t> seed_override);
StudyConfig parse_study_config(const Json& j,
                               std::optional<std::string> study_override,
                               std::optional<std::uint64_t> seed_override);
TheoryConfig parse_theory_config(const Json& j,
                                 std::optional<std::uint64_t> seed_override);

}  // namespace vrpo
