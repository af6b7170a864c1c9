#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

namespace vrpo {

// Splittable counter-based random stream. A stream is identified by
// (root_seed, path); child(i) appends i to the path and yields a stream
// whose output is unrelated to the parent's. The same identifier always
// reproduces the same sequence, independent of platform and call site,
// so replicated experiments can be sharded and rerun bit-for-bit.
//
// The generator is the splitmix64 finalizer over a derived key; path
// elements are folded into the key with a depth-salted hash chain.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t root_seed,
                        std::vector<std::uint64_t> path = {});

  // Substream for index `i`; does not disturb this stream's state.
  RandomStream child(std::uint64_t i) const;

  std::uint64_t next_u64();

  // Uniform on [0, 1) with 53-bit resolution.
  double uniform01();

  // Returns true with probability p.
  bool bernoulli(double p);

  // Index i with probability probs[i]; probs must sum to ~1.
  int categorical(const Eigen::Ref<const Eigen::VectorXd>& probs);

  std::uint64_t root_seed() const { return root_seed_; }
  const std::vector<std::uint64_t>& path() const { return path_; }

 private:
  std::uint64_t root_seed_;
  std::vector<std::uint64_t> path_;
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace vrpo
