#include "vanet/numeric.hpp"

#include <algorithm>
#include <limits>

namespace vanet {

double log_binomial(long n, long k) {
  if (n < 0 || k < 0 || k > n) return -std::numeric_limits<double>::infinity();
  return std::lgamma(static_cast<double>(n) + 1.0) - std::lgamma(static_cast<double>(k) + 1.0) -
         std::lgamma(static_cast<double>(n - k) + 1.0);
}

double binomial(long n, long k) {
  if (n < 0 || k < 0 || k > n) return 0.0;
  if (n > 60) return std::exp(log_binomial(n, k));
  k = std::min(k, n - k);
  double c = 1.0;
  for (long i = 1; i <= k; ++i) {
    c = c * static_cast<double>(n - k + i) / static_cast<double>(i);
  }
  return std::round(c);
}

double poisson_pmf(long n, double mean) {
  if (n < 0) return 0.0;
  if (mean <= 0.0) return n == 0 ? 1.0 : 0.0;
  return std::exp(static_cast<double>(n) * std::log(mean) - mean -
                  std::lgamma(static_cast<double>(n) + 1.0));
}

long poisson_truncation(double mean) {
  const double m = std::max(mean, 0.0);
  return std::max(50L, static_cast<long>(std::ceil(m + 12.0 * std::sqrt(m))));
}

}  // namespace vanet
