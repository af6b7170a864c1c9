#include "vrpo/world.hpp"

#include <cmath>
#include <stdexcept>
#include <utility>

namespace vrpo {
namespace {

double sigmoid_fn(double t) {
  if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
  return 1.0 - 1.0 / (1.0 + std::exp(t));
}

void check_activation_symmetry(const Activation& act) {
  // Probe grid spanning the saturated and linear regimes.
  static const double kProbe[] = {0.0,  1e-8, 1e-3, 0.1, 0.5, 1.0,
                                  2.0,  5.0,  10.0, 25.0};
  for (double t : kProbe) {
    const double sum = act(t) + act(-t);
    if (!(std::abs(sum - 1.0) <= 1e-9)) {
      throw std::invalid_argument(
          "activation fails symmetry act(t) + act(-t) = 1 at t = " +
          std::to_string(t));
    }
    if (act(t) < 0.0 || act(t) > 1.0) {
      throw std::invalid_argument("activation leaves [0,1] at t = " +
                                  std::to_string(t));
    }
  }
}

}  // namespace

const Activation& Activation::sigmoid() {
  static const Activation act{"sigmoid", sigmoid_fn};
  return act;
}

bool is_sigmoid(const Activation& act) { return act.name == "sigmoid"; }

void ReferencePolicy::validate(double tol) const {
  for (int x = 0; x < num_prompts(); ++x) {
    double row = 0.0;
    for (int y = 0; y < num_responses(); ++y) {
      const double p = probs(x, y);
      if (!(p >= 0.0) || !std::isfinite(p)) {
        throw std::invalid_argument("reference policy has a negative or "
                                    "non-finite probability");
      }
      row += p;
    }
    if (std::abs(row - 1.0) > tol) {
      throw std::invalid_argument("reference policy row " + std::to_string(x) +
                                  " does not sum to 1");
    }
  }
}

void PreferenceKernel::validate(double tol) const {
  const int v = num_responses();
  for (int x = 0; x < num_prompts(); ++x) {
    if (probs[x].rows() != v || probs[x].cols() != v) {
      throw std::invalid_argument("kernel table is not square per prompt");
    }
    for (int y1 = 0; y1 < v; ++y1) {
      for (int y2 = 0; y2 < v; ++y2) {
        const double p = probs[x](y1, y2);
        if (!(p >= 0.0 && p <= 1.0)) {
          throw std::invalid_argument("kernel probability outside [0,1]");
        }
        const double sum = p + probs[x](y2, y1);
        if (std::abs(sum - 1.0) > tol) {
          throw std::invalid_argument("kernel violates antisymmetry at (" +
                                      std::to_string(x) + ", " +
                                      std::to_string(y1) + ", " +
                                      std::to_string(y2) + ")");
        }
      }
    }
  }
}

void World::validate() const {
  if (num_prompts <= 0 || num_responses <= 0) {
    throw std::invalid_argument("world dimensions must be positive");
  }
  if (prompt_dist.size() != num_prompts) {
    throw std::invalid_argument("prompt_dist has wrong length");
  }
  double total = 0.0;
  for (int x = 0; x < num_prompts; ++x) {
    if (!(prompt_dist[x] >= 0.0)) {
      throw std::invalid_argument("prompt_dist has a negative entry");
    }
    total += prompt_dist[x];
  }
  if (std::abs(total - 1.0) > 1e-12) {
    throw std::invalid_argument("prompt_dist does not sum to 1");
  }
  if (true_reward.rows() != num_prompts || true_reward.cols() != num_responses) {
    throw std::invalid_argument("true_reward has wrong shape");
  }
  if (!true_reward.allFinite()) {
    throw std::invalid_argument("true_reward has non-finite entries");
  }
  if (kernel.num_prompts() != num_prompts ||
      kernel.num_responses() != num_responses) {
    throw std::invalid_argument("kernel has wrong shape");
  }
  kernel.validate();
  if (ref_policy.num_prompts() != num_prompts ||
      ref_policy.num_responses() != num_responses) {
    throw std::invalid_argument("ref_policy has wrong shape");
  }
  ref_policy.validate();
}

PreferenceKernel build_bt_kernel(const Eigen::MatrixXd& true_reward,
                                 const Activation& act) {
  check_activation_symmetry(act);
  const int k = static_cast<int>(true_reward.rows());
  const int v = static_cast<int>(true_reward.cols());
  PreferenceKernel kernel;
  kernel.reward_based = true;
  kernel.probs.reserve(k);
  for (int x = 0; x < k; ++x) {
    Eigen::MatrixXd table(v, v);
    for (int y1 = 0; y1 < v; ++y1) {
      for (int y2 = 0; y2 < v; ++y2) {
        table(y1, y2) = act(true_reward(x, y2) - true_reward(x, y1));
      }
    }
    kernel.probs.push_back(std::move(table));
  }
  return kernel;
}

PreferenceKernel flip_labels_kernel(const PreferenceKernel& base, double eps) {
  if (!(eps >= 0.0 && eps < 0.5)) {
    throw std::invalid_argument("flip probability must lie in [0, 0.5)");
  }
  PreferenceKernel kernel;
  kernel.reward_based = (eps == 0.0) ? base.reward_based : false;
  kernel.probs.reserve(base.probs.size());
  for (const Eigen::MatrixXd& table : base.probs) {
    kernel.probs.push_back(((1.0 - eps) * table.array() +
                            eps * (1.0 - table.array()))
                               .matrix());
  }
  return kernel;
}

PreferenceKernel explicit_kernel(std::vector<Eigen::MatrixXd> probs) {
  PreferenceKernel kernel;
  kernel.reward_based = false;
  kernel.probs = std::move(probs);
  kernel.validate(1e-9);
  return kernel;
}

Dataset sample_dataset(const World& world, long n, RandomStream stream) {
  if (n < 1) throw std::invalid_argument("sample count must be >= 1");
  Dataset data;
  data.root_seed = stream.root_seed();
  data.path = stream.path();
  data.num_prompts = world.num_prompts;
  data.num_responses = world.num_responses;
  data.items.reserve(static_cast<std::size_t>(n));
  for (long i = 0; i < n; ++i) {
    PreferenceDatum d;
    d.prompt = stream.categorical(world.prompt_dist);
    d.first = stream.categorical(world.ref_policy.probs.row(d.prompt));
    d.second = stream.categorical(world.ref_policy.probs.row(d.prompt));
    d.label = stream.bernoulli(world.kernel(d.prompt, d.first, d.second)) ? 1 : 0;
    data.items.push_back(d);
  }
  return data;
}

}  // namespace vrpo
