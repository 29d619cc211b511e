#include "llp/rng.hpp"

#include <cmath>

namespace llp {

namespace {

constexpr std::uint64_t kPhiloxM0 = 0xD2E7470EE14C6C93ULL;
constexpr std::uint64_t kPhiloxM1 = 0xCA5A826395121157ULL;
constexpr std::uint64_t kWeyl0 = 0x9E3779B97F4A7C15ULL;
constexpr std::uint64_t kWeyl1 = 0xBB67AE8584CAA73BULL;

inline std::uint64_t mulhilo(std::uint64_t a, std::uint64_t b, std::uint64_t& hi) {
  unsigned __int128 p = static_cast<unsigned __int128>(a) * b;
  hi = static_cast<std::uint64_t>(p >> 64);
  return static_cast<std::uint64_t>(p);
}

inline Philox4x64::Counter round_once(const Philox4x64::Counter& x, const Philox4x64::Key& k) {
  std::uint64_t hi0, hi1;
  std::uint64_t lo0 = mulhilo(kPhiloxM0, x[0], hi0);
  std::uint64_t lo1 = mulhilo(kPhiloxM1, x[2], hi1);
  return {hi1 ^ x[1] ^ k[0], lo1, hi0 ^ x[3] ^ k[1], lo0};
}

}  // namespace

Philox4x64::Counter Philox4x64::block(const Counter& ctr, const Key& key) {
  Counter x = ctr;
  Key k = key;
  x = round_once(x, k);
  for (int r = 1; r < 10; ++r) {
    k[0] += kWeyl0;
    k[1] += kWeyl1;
    x = round_once(x, k);
  }
  return x;
}

std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t derive_seed(std::uint64_t base, std::span<const std::uint64_t> parts) {
  std::uint64_t h = base;
  std::size_t i = 0;
  do {
    Philox4x64::Counter ctr{0, 0, 0, 0};
    for (std::size_t j = 0; j < 4 && i < parts.size(); ++j, ++i) ctr[j] = parts[i];
    auto out = Philox4x64::block(ctr, {h, 0x243F6A8885A308D3ULL});
    h = out[0];
  } while (i < parts.size());
  return h;
}

std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> parts) {
  return derive_seed(base, std::span<const std::uint64_t>(parts.begin(), parts.size()));
}

std::uint64_t derive_seed(std::uint64_t base, std::string_view tag) {
  return derive_seed(base, {fnv1a64(tag)});
}

std::uint64_t derive_seed(std::uint64_t base, std::string_view tag, std::uint64_t part) {
  return derive_seed(base, {fnv1a64(tag), part});
}

Rng::Rng(std::uint64_t seed, std::uint64_t stream)
    : key_{seed, stream}, ctr_{0, 0, 0, 0}, pos_(4) {}

void Rng::refill() {
  // pre-increment, matching the counter discipline of numpy's Philox
  if (++ctr_[0] == 0)
    if (++ctr_[1] == 0)
      if (++ctr_[2] == 0) ++ctr_[3];
  buf_ = Philox4x64::block(ctr_, key_);
  pos_ = 0;
}

std::uint64_t Rng::next_u64() {
  if (pos_ >= 4) refill();
  return buf_[pos_++];
}

double Rng::next_double() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) {
  return lo + (hi - lo) * next_double();
}

std::uint64_t Rng::next_below(std::uint64_t n) {
  if (n <= 1) return 0;
  // rejection below the largest multiple of n
  std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n) - 1;
  for (;;) {
    std::uint64_t v = next_u64();
    if (v <= limit) return v % n;
  }
}

double Rng::normal() {
  if (have_cached_normal_) {
    have_cached_normal_ = false;
    return cached_normal_;
  }
  double u1, u2;
  do {
    u1 = next_double();
  } while (u1 <= 0.0);
  u2 = next_double();
  double r = std::sqrt(-2.0 * std::log(u1));
  double a = 6.283185307179586476925286766559 * u2;
  cached_normal_ = r * std::sin(a);
  have_cached_normal_ = true;
  return r * std::cos(a);
}

std::size_t Rng::categorical(std::span<const double> weights) {
  double total = 0.0;
  for (double w : weights) total += w;
  double u = next_double() * total;
  double cum = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    cum += weights[i];
    if (u < cum) return i;
  }
  // u landed on the tail due to rounding; return last positive-weight index
  for (std::size_t i = weights.size(); i-- > 0;)
    if (weights[i] > 0.0) return i;
  return weights.size() - 1;
}

}  // namespace llp
