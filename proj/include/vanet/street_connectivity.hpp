#pragma once

#include <cstddef>
#include <optional>
#include <ostream>
#include <span>
#include <vector>

#include "vanet/core_model.hpp"

namespace vanet {

struct SingleRangeInputs {
  double rho1 = 0.0;
  double rho2 = 0.0;
  double rho3 = 0.0;
  double range = 200.0;
  double length = 1600.0;  ///< D, the middle-section length
};

struct HeteroRangeInputs {
  double rho1 = 0.0;
  double rho2 = 0.0;
  double rho3 = 0.0;
  double x1 = 200.0;
  double x2 = 400.0;
  double p_type1 = 0.5;  ///< probability that a vehicle has the short range x1
  double length = 1600.0;
  TypeWeighting weighting = TypeWeighting::type2_count;
  BoundForm form = BoundForm::approximate;
};

enum class ConnectivityMode : std::uint8_t { exact_single_range, hetero_lower_bound };

const char* to_string(ConnectivityMode mode);

struct StreetConnectivity {
  std::optional<std::size_t> street;
  double p_open = 0.0;
  ConnectivityMode mode = ConnectivityMode::exact_single_range;
  double rho1 = 0.0;
  double rho2 = 0.0;
  double rho3 = 0.0;
  double range_or_x1 = 0.0;
  std::optional<double> x2;
  std::optional<double> p_type1;
};

/// Probability that n points dropped uniformly on [0, D], together with
/// both endpoints, leave no gap longer than R:
///   sum_{i=0}^{m} (-1)^i C(n+1, i) (1 - iR/D)^n,  m = min(n+1, floor(D/R)),
/// keeping only terms with a positive base.
double p_connect_uniform(long n, double range, double length);

/// Truncated Poisson mixture together with the mass it leaves out. The
/// true mixture lies in [value, value + tail].
struct MixtureBracket {
  double value = 0.0;
  double tail = 0.0;
  long n_max = 0;
};

/// Poisson(rho2) mixture of p_connect_uniform over the middle section.
MixtureBracket p_connect_middle_bracket(double rho2, double range, double length);
double p_connect_middle(double rho2, double range, double length);

/// (1 - e^-rho1) * P(middle) * (1 - e^-rho3).
StreetConnectivity p_connect_street(const SingleRangeInputs& in);

/// Probability that a chosen set of n1 of the N+1 spacings of N uniform
/// points on [0, 1] are all <= x1 while the remaining n2 are all <= x2, by
/// inclusion-exclusion. x1 and x2 are ranges divided by the section length.
/// Throws Error unless n1 + n2 == N + 1.
double spacing_ie_prob(long n1, long n2, double x1, double x2, long count);

/// Block-pattern sum for N nodes of which r have the long range x2,
/// summed over the number q of maximal runs of long-range nodes:
///   approximate: sum_q C(r-1, r-q) C(N-r+1, N-r-q+1) p(N+1-r+q, r-q)
///   exact:       the four run-placement cases, each with its own split of
///                short and long spacings.
/// The result is a count-weighted probability: dividing by C(N, r) gives a
/// lower bound on connectivity given r long-range nodes in random order.
/// With TypeWeighting::printed, r = 0 maps to p(0, N+1) and r = N is not
/// special-cased, reproducing the formula exactly as printed.
double hetero_bound_given_n(long count, long r, double x1, double x2, BoundForm form = BoundForm::approximate,
                            TypeWeighting weighting = TypeWeighting::type2_count);

/// Middle-section two-range bound: Poisson(rho2) mixture over N of
/// sum_r w(r; N) Qt(r, N), with w = (1-p)^r p^(N-r) (or the printed
/// orientation).
MixtureBracket hetero_middle_bound(const HeteroRangeInputs& in);

/// Street-level two-range lower bound, clamped to [0, 1].
StreetConnectivity hetero_lower_bound_street(const HeteroRangeInputs& in);

/// Street assembly around an already computed middle-section bound.
StreetConnectivity hetero_street_from_middle(const HeteroRangeInputs& in, double middle);

/// Columns: street_id,rho1,rho2,rho3,R_or_x1,x2_or_blank,p_type1_or_blank,p_open,mode.
void write_street_csv(std::ostream& out, std::span<const StreetConnectivity> streets);

}  // namespace vanet
