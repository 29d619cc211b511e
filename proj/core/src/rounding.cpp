#include "llp/rounding.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "llp/errors.hpp"

namespace llp {

std::vector<long> largest_remainder(const std::vector<double>& quotas, long total) {
  std::vector<long> caps(quotas.size(), total);
  return largest_remainder_capped(quotas, total, caps);
}

std::vector<long> largest_remainder_capped(const std::vector<double>& quotas, long total,
                                           const std::vector<long>& caps) {
  const std::size_t n = quotas.size();
  std::vector<long> counts(n, 0);
  std::vector<double> frac(n, 0.0);
  long assigned = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (quotas[i] < -1e-9) throw Error("largest_remainder: negative quota");
    double q = std::max(0.0, quotas[i]);
    long f = static_cast<long>(std::floor(q + 1e-12));
    counts[i] = std::min(f, caps[i]);
    frac[i] = q - static_cast<double>(f);
    assigned += counts[i];
  }
  if (assigned > total) {
    // floors overshoot the requested total: trim smallest fractional parts
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return frac[a] < frac[b]; });
    for (std::size_t k = 0; assigned > total; k = (k + 1) % n) {
      std::size_t i = order[k];
      if (counts[i] > 0) {
        --counts[i];
        --assigned;
      }
    }
    return counts;
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return frac[a] > frac[b]; });
  std::size_t k = 0, stuck = 0;
  while (assigned < total) {
    std::size_t i = order[k];
    if (counts[i] < caps[i]) {
      ++counts[i];
      ++assigned;
      stuck = 0;
    } else if (++stuck > n) {
      throw Error("largest_remainder_capped: caps below requested total");
    }
    k = (k + 1) % n;
  }
  return counts;
}

long ceil_tol(double x, double tol) {
  double r = std::round(x);
  if (std::abs(x - r) <= tol) return static_cast<long>(r);
  return static_cast<long>(std::ceil(x));
}

}  // namespace llp
