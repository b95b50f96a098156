#pragma once

// Independent reference implementations used only by tests. None of these
// call into the library's metric code.

#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace biaslens::oracle {

// Ideal count on the 1/m grid for a population ratio p/q and an observed
// model count k, by the literal three-case rule: floor and ceiling found by
// search, the fractional part compared against one half by cross
// multiplication, and the tie settled by evaluating both distances.
inline std::int64_t ideal_count(std::int64_t p, std::int64_t q, std::int64_t m,
                                std::int64_t k) {
  const std::int64_t scaled = p * m;  // value is scaled / q
  std::int64_t lo = 0;
  while ((lo + 1) * q <= scaled) ++lo;
  const std::int64_t hi = lo * q == scaled ? lo : lo + 1;
  const std::int64_t twice_frac = 2 * (scaled - lo * q);  // 2 * delta * q
  if (twice_frac < q) return lo;
  if (twice_frac > q) return hi;
  const std::int64_t d_lo = lo > k ? lo - k : k - lo;
  const std::int64_t d_hi = hi > k ? hi - k : k - hi;
  return d_lo <= d_hi ? lo : hi;
}

struct Moments {
  double mean = 0.0;
  double sd_sample = 0.0;
  double sd_population = 0.0;
  double mean_abs = 0.0;
  double min = 0.0;
  double max = 0.0;
};

// Welford single pass.
inline Moments single_pass(const std::vector<double>& xs) {
  Moments out;
  double mean = 0.0;
  double m2 = 0.0;
  double abs_mean = 0.0;
  std::size_t n = 0;
  for (double x : xs) {
    ++n;
    const double d = x - mean;
    mean += d / static_cast<double>(n);
    m2 += d * (x - mean);
    abs_mean += (std::abs(x) - abs_mean) / static_cast<double>(n);
    if (n == 1 || x < out.min) out.min = x;
    if (n == 1 || x > out.max) out.max = x;
  }
  out.mean = mean;
  out.mean_abs = abs_mean;
  out.sd_population = n ? std::sqrt(m2 / static_cast<double>(n)) : 0.0;
  out.sd_sample = n > 1 ? std::sqrt(m2 / static_cast<double>(n - 1)) : 0.0;
  return out;
}

// Tally of bias numerators k for grid values k/n.
inline std::map<std::int64_t, std::int64_t> tally(
    const std::vector<std::pair<std::int64_t, std::int64_t>>& fractions,
    std::int64_t n) {
  std::map<std::int64_t, std::int64_t> bins;
  for (const auto& [num, den] : fractions) {
    // nearest k with k/n ~ num/den, halves away from zero
    const double x = static_cast<double>(num) * static_cast<double>(n) /
                     static_cast<double>(den);
    const auto k = static_cast<std::int64_t>(x < 0 ? -std::floor(-x + 0.5)
                                                   : std::floor(x + 0.5));
    ++bins[k];
  }
  return bins;
}

}  // namespace biaslens::oracle
