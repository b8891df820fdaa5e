#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace coupled {

// Mixes (seed, stream) into an independent stream seed. Used so that e.g. the
// test-block draws of a generator never perturb the training draws.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

// mt19937_64 engine (bit-stable per the standard) with hand-rolled uniform and
// Box-Muller normal transforms, so output does not depend on the stdlib's
// distribution implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next_u64();
  double uniform();      // [0, 1)
  double normal();       // standard normal
  int uniform_int(int lo, int hi);  // inclusive bounds, rejection-free modulo via 64-bit scaling

  std::vector<int> permutation(int n);
  // k distinct indices drawn from {0,...,n-1}, in draw order.
  std::vector<int> sample_without_replacement(int n, int k);

 private:
  std::mt19937_64 eng_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace coupled
