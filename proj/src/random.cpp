#include "vrpo/random.hpp"

#include <stdexcept>
#include <utility>

namespace vrpo {
namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

// splitmix64 finalizer (bijective, well mixing).
std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::uint64_t derive_key(std::uint64_t root,
                         const std::vector<std::uint64_t>& path) {
  std::uint64_t key = mix64(root + kGolden);
  for (std::size_t depth = 0; depth < path.size(); ++depth) {
    key = mix64(key + kGolden * (depth + 2) + mix64(path[depth] + kGolden));
  }
  return key;
}

}  // namespace

RandomStream::RandomStream(std::uint64_t root_seed,
                           std::vector<std::uint64_t> path)
    : root_seed_(root_seed),
      path_(std::move(path)),
      key_(derive_key(root_seed_, path_)) {}

RandomStream RandomStream::child(std::uint64_t i) const {
  std::vector<std::uint64_t> p = path_;
  p.push_back(i);
  return RandomStream(root_seed_, std::move(p));
}

std::uint64_t RandomStream::next_u64() {
  counter_ += kGolden;
  return mix64(key_ ^ mix64(counter_));
}

double RandomStream::uniform01() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

bool RandomStream::bernoulli(double p) { return uniform01() < p; }

int RandomStream::categorical(const Eigen::Ref<const Eigen::VectorXd>& probs) {
  const double u = uniform01();
  double cum = 0.0;
  const int n = static_cast<int>(probs.size());
  for (int i = 0; i < n; ++i) {
    cum += probs[i];
    if (u < cum) return i;
  }
  // u landed past the accumulated mass (rounding); return the last
  // index with positive probability.
  for (int i = n - 1; i >= 0; --i) {
    if (probs[i] > 0.0) return i;
  }
  throw std::invalid_argument("categorical: probability vector is all zero");
}

}  // namespace vrpo
