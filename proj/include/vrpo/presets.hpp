#pragma once

#include <string>
#include <vector>

#include "vrpo/experiments.hpp"

namespace vrpo {

// Named desk-scale scenarios used by the CLI presets and the test
// suites:
//   correct                two-stage cross-entropy, reward in the feature
//                          span, sigmoid kernel (correctly specified)
//   label_flip             `correct` with preference labels flipped at
//                          rate 0.2 (misspecified preference model)
//   det_ref                deterministic reference policy (degenerate
//                          design; zero variance-reduction case)
//   one_stage_intransitive one-stage cross-entropy against an
//                          intransitive preference cycle
//   hinge_flip             hinge loss on the label_flip world
Scenario preset_scenario(const std::string& name);

const std::vector<std::string>& preset_scenario_names();

// Random small worlds for property tests: reward-based with label
// flipping, random features, diffuse reference rows.
Scenario random_scenario(RandomStream stream, int num_prompts,
                         int num_responses, int dim, double flip_eps);

}  // namespace vrpo
