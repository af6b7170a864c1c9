#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "vrpo/random.hpp"

namespace vrpo {

// Monotone map R -> [0,1] turning reward differences into preference
// probabilities. Must satisfy act(t) + act(-t) = 1; constructors of
// reward-based kernels verify this on a probe grid.
struct Activation {
  std::string name;
  std::function<double(double)> fn;

  double operator()(double t) const { return fn(t); }

  // Logistic sigmoid, computed so that sigma(t) + sigma(-t) == 1 holds
  // exactly in floating point (the t < 0 branch returns the exact
  // complement of the t > 0 branch).
  static const Activation& sigmoid();
};

bool is_sigmoid(const Activation& act);

// Response-generating distribution: probs(x, y) = pi(y | x).
struct ReferencePolicy {
  Eigen::MatrixXd probs;  // K x V, rows sum to 1

  int num_prompts() const { return static_cast<int>(probs.rows()); }
  int num_responses() const { return static_cast<int>(probs.cols()); }
  double operator()(int x, int y) const { return probs(x, y); }
  void validate(double tol = 1e-12) const;
};

// probs[x](y1, y2) = P(y2 preferred over y1 | x). Antisymmetric:
// probs[x](y1, y2) + probs[x](y2, y1) = 1, so the diagonal is 1/2.
struct PreferenceKernel {
  std::vector<Eigen::MatrixXd> probs;  // K matrices, each V x V
  bool reward_based = false;

  int num_prompts() const { return static_cast<int>(probs.size()); }
  int num_responses() const {
    return probs.empty() ? 0 : static_cast<int>(probs.front().rows());
  }
  double operator()(int x, int y1, int y2) const { return probs[x](y1, y2); }
  void validate(double tol = 1e-9) const;
};

// Fully enumerable synthetic data-generating process over K prompts and
// a shared vocabulary of V responses.
struct World {
  int num_prompts = 0;
  int num_responses = 0;
  Eigen::VectorXd prompt_dist;  // K, sums to 1
  Eigen::MatrixXd true_reward;  // K x V
  PreferenceKernel kernel;
  ReferencePolicy ref_policy;  // the true response-generating policy

  void validate() const;
};

// One labeled comparison: z = 1 iff `second` was preferred.
struct PreferenceDatum {
  int prompt = 0;
  int first = 0;
  int second = 0;
  int label = 0;
};

struct Dataset {
  std::vector<PreferenceDatum> items;
  // Stream identifier that generated the data, plus world dimensions,
  // recorded for the serialized header.
  std::uint64_t root_seed = 0;
  std::vector<std::uint64_t> path;
  int num_prompts = 0;
  int num_responses = 0;

  long size() const { return static_cast<long>(items.size()); }
};

// Reward-based kernel per the pairwise-comparison model:
// probs[x](y1, y2) = act(r(x, y2) - r(x, y1)). Rejects activations that
// fail the probe-grid symmetry check act(t) + act(-t) = 1.
PreferenceKernel build_bt_kernel(const Eigen::MatrixXd& true_reward,
                                 const Activation& act = Activation::sigmoid());

// Label-flip mixture: probs' = (1 - eps) * probs + eps * (1 - probs),
// eps in [0, 0.5). The result is generally not reward-based.
PreferenceKernel flip_labels_kernel(const PreferenceKernel& base, double eps);

// Wraps an arbitrary antisymmetric table (e.g. an intransitive cycle).
PreferenceKernel explicit_kernel(std::vector<Eigen::MatrixXd> probs);

// n i.i.d. draws: x ~ prompt_dist, y1, y2 ~ ref_policy(.|x) independently
// (y1 == y2 allowed), z ~ Bernoulli(kernel(x, y1, y2)).
Dataset sample_dataset(const World& world, long n, RandomStream stream);

}  // namespace vrpo
