#include "vanet/street_connectivity.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "vanet/csv.hpp"
#include "vanet/numeric.hpp"

namespace vanet {

namespace {

constexpr double kTailTolerance = 1e-10;
constexpr long kExactBinomialLimit = 60;
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kRoundingSlack = 1e-9;
/// Block-sum terms below e^-46 (about 1e-20) are dropped; there are at most
/// O(N^2) of them and each multiplies a probability, so the total omitted
/// mass stays far below the Poisson truncation tolerance.
constexpr double kLogNegligible = -46.0;

/// Pulls rounding-level excursions back into [0, 1]; anything larger is a
/// real numerical failure and is returned unchanged so it stays visible.
double settle_probability(double x) {
  if (x < 0.0 && x > -kRoundingSlack) return 0.0;
  if (x > 1.0 && x < 1.0 + kRoundingSlack) return 1.0;
  return x;
}

/// C(n, k) * base^power with the binomial taken in log space once it could
/// overflow.
double binomial_power(long n, long k, double base, long power) {
  if (n <= kExactBinomialLimit) return binomial(n, k) * std::pow(base, static_cast<double>(power));
  if (power == 0) return binomial(n, k);
  return std::exp(log_binomial(n, k) + static_cast<double>(power) * std::log(base));
}

/// log-factorial table for the two-range mixture, where the same binomials
/// are needed O(N^2) times per N.
class LogFactorials {
 public:
  explicit LogFactorials(long n_max) { ensure(n_max); }
  void ensure(long n_max) {
    const auto want = static_cast<std::size_t>(std::max(n_max, 0L)) + 3;
    const std::size_t have = table_.size();
    if (want <= have) return;
    table_.resize(want, 0.0);
    for (std::size_t i = std::max<std::size_t>(have, 1); i < want; ++i) {
      table_[i] = table_[i - 1] + std::log(static_cast<double>(i));
    }
  }
  double log_choose(long n, long k) const {
    if (n < 0 || k < 0 || k > n) return kNegInf;
    return table_[static_cast<std::size_t>(n)] - table_[static_cast<std::size_t>(k)] -
           table_[static_cast<std::size_t>(n - k)];
  }

 private:
  std::vector<double> table_{0.0};
};

double log_count_power(double base, long count) {
  if (count == 0) return 0.0;
  if (base <= 0.0) return kNegInf;
  return static_cast<double>(count) * std::log(base);
}

/// Qt(r, N) with spacing probabilities supplied by `pv(n1)` = p(n1, N+1-n1),
/// pattern weight folded into the binomial exponent as `log_weight`.
template <typename SpacingFn>
double weighted_block_sum(long count, long r, BoundForm form, TypeWeighting weighting, double log_weight,
                          SpacingFn&& pv, const LogFactorials& lf) {
  const long n = count;
  if (weighting == TypeWeighting::printed) {
    if (r == 0) return std::exp(log_weight) * pv(0);
  } else {
    if (n == 0) return std::exp(log_weight) * pv(0);
    if (r == 0) return std::exp(log_weight) * pv(n + 1);
    if (r == n) return std::exp(log_weight) * pv(0);
  }
  CompensatedSum sum;
  for (long q = 1; q <= n; ++q) {
    const double lc_long = lf.log_choose(r - 1, r - q);
    if (lc_long == kNegInf) continue;
    if (form == BoundForm::approximate) {
      const double lc_short = lf.log_choose(n - r + 1, n - r - q + 1);
      const double lt = log_weight + lc_long + lc_short;
      if (lt < kLogNegligible) continue;
      sum += std::exp(lt) * pv(n + 1 - r + q);
      continue;
    }
    // Long-range runs touching neither end, one end (two ways), both ends.
    const double c0 = lf.log_choose(n - r - 1, q);
    const double c1 = lf.log_choose(n - r - 1, q - 1);
    const double c2 = lf.log_choose(n - r - 1, q - 2);
    const double base = log_weight + lc_long;
    if (base + c0 >= kLogNegligible) sum += std::exp(base + c0) * pv(n + 1 - r + q);
    if (base + c1 >= kLogNegligible) sum += 2.0 * std::exp(base + c1) * pv(n - r + q);
    if (base + c2 >= kLogNegligible) sum += std::exp(base + c2) * pv(n - 1 - r + q);
  }
  return sum.value();
}

template <typename TermFn>
MixtureBracket poisson_mixture(double mean, TermFn&& term) {
  MixtureBracket out;
  CompensatedSum value;
  CompensatedSum mass;
  long n = 0;
  long n_max = poisson_truncation(mean);
  for (;; ++n) {
    if (n > n_max) {
      if (1.0 - mass.value() < kTailTolerance || n > 100 * n_max) break;
      n_max = n + n_max / 4 + 1;
    }
    const double w = poisson_pmf(n, mean);
    mass += w;
    if (w > 0.0) value += w * term(n);
  }
  out.value = value.value();
  out.tail = std::max(0.0, 1.0 - mass.value());
  out.n_max = n - 1;
  return out;
}

void check_rhos(double rho1, double rho2, double rho3) {
  if (!(rho1 >= 0.0 && rho2 >= 0.0 && rho3 >= 0.0)) throw Error("section densities must be nonnegative");
}

}  // namespace

const char* to_string(ConnectivityMode mode) {
  return mode == ConnectivityMode::exact_single_range ? "exact_single_range" : "hetero_lower_bound";
}

double p_connect_uniform(long n, double range, double length) {
  if (n < 0) throw Error("node count must be nonnegative");
  if (!(range > 0.0) || !(length > 0.0)) throw Error("range and length must be positive");
  if (range >= length) return 1.0;
  const double x = range / length;
  const long m = std::min(n + 1, static_cast<long>(std::floor(length / range)));
  CompensatedSum sum;
  for (long i = 0; i <= m; ++i) {
    const double base = 1.0 - static_cast<double>(i) * x;
    if (base <= 0.0) break;
    const double term = binomial_power(n + 1, i, base, n);
    sum += (i % 2 == 0) ? term : -term;
  }
  return settle_probability(sum.value());
}

MixtureBracket p_connect_middle_bracket(double rho2, double range, double length) {
  if (!(rho2 >= 0.0)) throw Error("rho2 must be nonnegative");
  if (!(range > 0.0) || !(length > 0.0)) throw Error("range and length must be positive");
  if (range >= length) return {1.0, 0.0, 0};
  auto b = poisson_mixture(rho2, [&](long n) { return p_connect_uniform(n, range, length); });
  b.value = settle_probability(b.value);
  return b;
}

double p_connect_middle(double rho2, double range, double length) {
  return p_connect_middle_bracket(rho2, range, length).value;
}

StreetConnectivity p_connect_street(const SingleRangeInputs& in) {
  check_rhos(in.rho1, in.rho2, in.rho3);
  StreetConnectivity out;
  out.mode = ConnectivityMode::exact_single_range;
  out.rho1 = in.rho1;
  out.rho2 = in.rho2;
  out.rho3 = in.rho3;
  out.range_or_x1 = in.range;
  const double middle = p_connect_middle(in.rho2, in.range, in.length);
  out.p_open = std::clamp(-std::expm1(-in.rho1) * middle * -std::expm1(-in.rho3), 0.0, 1.0);
  return out;
}

double spacing_ie_prob(long n1, long n2, double x1, double x2, long count) {
  if (count < 0 || n1 < 0 || n2 < 0) throw Error("spacing counts must be nonnegative");
  if (n1 + n2 != count + 1) throw Error("n1 + n2 must equal N + 1");
  CompensatedSum sum;
  for (long l = 0; l <= n1; ++l) {
    if (1.0 - static_cast<double>(l) * x1 <= 0.0) break;
    const double c1 = binomial(n1, l);
    for (long j = 0; j <= n2; ++j) {
      const double base = 1.0 - static_cast<double>(l) * x1 - static_cast<double>(j) * x2;
      if (base <= 0.0) break;
      double term;
      if (n1 <= kExactBinomialLimit && n2 <= kExactBinomialLimit) {
        term = c1 * binomial(n2, j) * std::pow(base, static_cast<double>(count));
      } else {
        term = std::exp(log_binomial(n1, l) + log_binomial(n2, j) + log_count_power(base, count));
      }
      sum += ((l + j) % 2 == 0) ? term : -term;
    }
  }
  return sum.value();
}

double hetero_bound_given_n(long count, long r, double x1, double x2, BoundForm form, TypeWeighting weighting) {
  if (count < 0 || r < 0 || r > count) throw Error("require 0 <= r <= N");
  const LogFactorials lf(count + 2);
  auto pv = [&](long n1) { return spacing_ie_prob(n1, count + 1 - n1, x1, x2, count); };
  return weighted_block_sum(count, r, form, weighting, 0.0, pv, lf);
}

MixtureBracket hetero_middle_bound(const HeteroRangeInputs& in) {
  if (!(in.rho2 >= 0.0)) throw Error("rho2 must be nonnegative");
  if (!(in.x1 > 0.0 && in.x1 <= in.x2)) throw Error("0 < x1 <= x2 required");
  if (!(in.p_type1 >= 0.0 && in.p_type1 <= 1.0)) throw Error("0 <= p <= 1 required");
  if (!(in.length > 0.0)) throw Error("length must be positive");
  const double x1 = in.x1 / in.length;
  const double x2 = in.x2 / in.length;
  const double p = in.p_type1;
  LogFactorials lf(poisson_truncation(in.rho2) + 2);
  std::vector<double> spacing;

  return poisson_mixture(in.rho2, [&](long n) {
    spacing.resize(static_cast<std::size_t>(n) + 2);
    for (long n1 = 0; n1 <= n + 1; ++n1) spacing[static_cast<std::size_t>(n1)] = spacing_ie_prob(n1, n + 1 - n1, x1, x2, n);
    auto pv = [&](long n1) { return spacing[static_cast<std::size_t>(n1)]; };
    lf.ensure(n + 2);
    CompensatedSum total;
    for (long r = 0; r <= n; ++r) {
      // r counts long-range (type 2) nodes in the default orientation.
      const double lw = in.weighting == TypeWeighting::type2_count
                            ? log_count_power(1.0 - p, r) + log_count_power(p, n - r)
                            : log_count_power(p, r) + log_count_power(1.0 - p, n - r);
      if (lw == kNegInf) continue;
      total += weighted_block_sum(n, r, in.form, in.weighting, lw, pv, lf);
    }
    return total.value();
  });
}

StreetConnectivity hetero_lower_bound_street(const HeteroRangeInputs& in) {
  return hetero_street_from_middle(in, hetero_middle_bound(in).value);
}

StreetConnectivity hetero_street_from_middle(const HeteroRangeInputs& in, double middle) {
  check_rhos(in.rho1, in.rho2, in.rho3);
  StreetConnectivity out;
  out.mode = ConnectivityMode::hetero_lower_bound;
  out.rho1 = in.rho1;
  out.rho2 = in.rho2;
  out.rho3 = in.rho3;
  out.range_or_x1 = in.x1;
  out.x2 = in.x2;
  out.p_type1 = in.p_type1;
  // The end-section factors only ask for one vehicle; judged at x1 they are
  // the same (1 - e^-rho) terms as for a single range.
  out.p_open = std::clamp(-std::expm1(-in.rho1) * middle * -std::expm1(-in.rho3), 0.0, 1.0);
  return out;
}

void write_street_csv(std::ostream& out, std::span<const StreetConnectivity> streets) {
  CsvWriter csv(out);
  csv.header({"street_id", "rho1", "rho2", "rho3", "R_or_x1", "x2_or_blank", "p_type1_or_blank", "p_open", "mode"});
  for (const auto& s : streets) {
    csv.cell(s.street ? std::to_string(*s.street) : std::string());
    csv.cell(s.rho1).cell(s.rho2).cell(s.rho3).cell(s.range_or_x1);
    csv.cell(s.x2 ? format_double(*s.x2) : std::string());
    csv.cell(s.p_type1 ? format_double(*s.p_type1) : std::string());
    csv.cell(s.p_open).cell(to_string(s.mode));
    csv.end_row();
  }
}

}  // namespace vanet
