#pragma once

#include <cmath>
#include <cstddef>

namespace vanet {

/// Neumaier-compensated running sum. Used for the alternating series that
/// appear in the spacing probabilities, where plain accumulation loses
/// several digits.
class CompensatedSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  CompensatedSum& operator+=(double x) {
    add(x);
    return *this;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

/// log C(n, k); -infinity for k < 0, k > n or n < 0.
double log_binomial(long n, long k);

/// C(n, k) with the convention C(n, k) = 0 whenever k < 0 or k > n.
/// Exact multiplicative evaluation for n <= 60, lgamma above.
double binomial(long n, long k);

/// exp(n log(mean) - mean - log n!), with the mean == 0 limit handled.
double poisson_pmf(long n, double mean);

/// Truncation point used for every Poisson mixture in the library:
/// max(50, ceil(mean + 12 sqrt(mean))).
long poisson_truncation(double mean);

}  // namespace vanet
