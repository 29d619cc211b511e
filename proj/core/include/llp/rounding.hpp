#pragma once

#include <vector>

namespace llp {

// Largest-remainder rounding: integer counts summing to `total`, one per
// quota. Each count starts at floor(quota); leftover units go to the
// largest fractional parts (ties by lowest index). Quotas must be >= 0.
std::vector<long> largest_remainder(const std::vector<double>& quotas, long total);

// Variant with per-entry caps: counts[i] <= cap[i]. Requires sum(cap) >= total.
std::vector<long> largest_remainder_capped(const std::vector<double>& quotas, long total,
                                           const std::vector<long>& caps);

// ceil that tolerates values a hair above an integer (floating-point
// products like p*n where p was computed as k/n must round back to k)
long ceil_tol(double x, double tol = 1e-9);

}  // namespace llp
