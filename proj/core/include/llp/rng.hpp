#pragma once

#include <array>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <string_view>
#include <vector>

namespace llp {

// Counter-based PRNG: Philox4x64-10 (Salmon et al., "Parallel random
// numbers: as easy as 1, 2, 3"). Every stochastic operation in this
// library takes an explicit 64-bit seed; independent streams are derived
// with derive_seed(), so parallel work never shares generator state.
struct Philox4x64 {
  using Counter = std::array<std::uint64_t, 4>;
  using Key = std::array<std::uint64_t, 2>;

  static Counter block(const Counter& ctr, const Key& key);
};

std::uint64_t fnv1a64(std::string_view s);

// Deterministic seed derivation: mixes `parts` into `base` through the
// Philox bijection. Distinct part sequences give independent streams.
std::uint64_t derive_seed(std::uint64_t base, std::span<const std::uint64_t> parts);
std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> parts);
std::uint64_t derive_seed(std::uint64_t base, std::string_view tag);
std::uint64_t derive_seed(std::uint64_t base, std::string_view tag, std::uint64_t part);

// Sequential engine over Philox blocks. Cheap to construct and copy;
// all draws are platform-independent (no std:: distributions).
class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0);

  std::uint64_t next_u64();

  // uniform in [0, 1), 53-bit resolution
  double next_double();
  double uniform(double lo, double hi);

  // uniform integer in [0, n), n >= 1; unbiased (rejection sampling)
  std::uint64_t next_below(std::uint64_t n);

  // standard normal via Box-Muller
  double normal();

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(next_below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  // index drawn from an unnormalized nonnegative weight vector
  std::size_t categorical(std::span<const double> weights);

 private:
  void refill();

  Philox4x64::Key key_;
  Philox4x64::Counter ctr_;
  std::array<std::uint64_t, 4> buf_;
  int pos_;
  bool have_cached_normal_ = false;
  double cached_normal_ = 0.0;
};

}  // namespace llp
