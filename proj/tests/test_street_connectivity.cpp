#include <cmath>
#include <sstream>

#include "doctest.h"
#include "oracles.hpp"
#include "vanet/numeric.hpp"
#include "vanet/street_connectivity.hpp"

using namespace vanet;

TEST_CASE("one vehicle on a middle section: closed forms") {
  CHECK(p_connect_uniform(1, 1.0, 1.5) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  CHECK(std::abs(p_connect_uniform(1, 1.0, 2.0)) <= 1e-12);
  CHECK(p_connect_uniform(0, 1.0, 0.5) == 1.0);
  CHECK(p_connect_uniform(0, 1.0, 2.0) == 0.0);
  // Two points: P(all three spacings <= x) = 1 - 3(1-x)^2 + 3(1-2x)^2 for x in [1/3, 1/2].
  const double x = 0.4;
  CHECK(p_connect_uniform(2, x, 1.0) == doctest::Approx(1.0 - 3 * std::pow(1 - x, 2) + 3 * std::pow(1 - 2 * x, 2)));
  CHECK_THROWS_AS(p_connect_uniform(-1, 1.0, 1.0), Error);
  CHECK_THROWS_AS(p_connect_uniform(3, 0.0, 1.0), Error);
}

TEST_CASE("uniform connectivity stays in [0, 1] and grows with n up to 500") {
  for (double ratio : {1.0 / 8, 1.0 / 4, 0.3, 1.0 / 2}) {
    double prev = -1.0;
    for (long n = 0; n <= 500; ++n) {
      const double p = p_connect_uniform(n, ratio * 1600.0, 1600.0);
      CHECK(p >= 0.0);
      CHECK(p <= 1.0);
      CHECK(p >= prev - 1e-9);
      prev = p;
    }
    CHECK(prev > 0.5);
  }
}

TEST_CASE("uniform connectivity agrees with direct placement") {
  std::mt19937_64 gen(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (long n : {3L, 10L, 25L}) {
    for (double x : {0.15, 0.3}) {
      std::size_t hits = 0;
      const std::size_t trials = 100000;
      std::vector<double> pts(static_cast<std::size_t>(n));
      for (std::size_t t = 0; t < trials; ++t) {
        for (auto& v : pts) v = u(gen);
        hits += oracle::chain_connected(pts, 1.0, x);
      }
      const auto e = oracle::bernoulli_estimate(hits, trials);
      CHECK(std::abs(p_connect_uniform(n, x, 1.0) - e.mean) <= std::max(0.005, 3 * e.std_error));
    }
  }
}

TEST_CASE("middle section probability matches Poisson Monte-Carlo") {
  for (double rho : {1.0, 4.0, 8.0}) {
    for (double ratio : {0.25, 0.5}) {
      const auto e = oracle::mc_middle_connect(rho, ratio, 1.0, 200000, 11 + static_cast<std::uint64_t>(rho * 10));
      CHECK(std::abs(p_connect_middle(rho, ratio, 1.0) - e.mean) <= std::max(0.005, 3 * e.std_error));
    }
  }
}

TEST_CASE("middle bracket covers the neglected tail") {
  const auto b = p_connect_middle_bracket(20.0, 200.0, 1600.0);
  CHECK(b.tail < 1e-9);
  CHECK(b.value >= 0.0);
  CHECK(b.value + b.tail <= 1.0 + 1e-12);
  CHECK(b.n_max > 20);
  CHECK(p_connect_middle(0.0, 200.0, 1600.0) == 0.0);
  CHECK(p_connect_middle(3.0, 2000.0, 1600.0) == 1.0);
}

TEST_CASE("middle probability is monotone in density and range") {
  double prev = 0.0;
  for (double rho = 0.0; rho <= 80.0; rho += 2.0) {
    const double p = p_connect_middle(rho, 200.0, 1600.0);
    CHECK(p >= prev - 1e-12);
    prev = p;
  }
  prev = 0.0;
  for (double r = 50.0; r <= 1600.0; r += 50.0) {
    const double p = p_connect_middle(10.0, r, 1600.0);
    CHECK(p >= prev - 1e-12);
    prev = p;
  }
}

TEST_CASE("street probability multiplies the end factors") {
  const auto s = p_connect_street({2.0, 12.0, 3.0, 200.0, 1600.0});
  const double mid = p_connect_middle(12.0, 200.0, 1600.0);
  CHECK(s.p_open == doctest::Approx((1 - std::exp(-2.0)) * mid * (1 - std::exp(-3.0))).epsilon(1e-14));
  CHECK(s.mode == ConnectivityMode::exact_single_range);
  CHECK(p_connect_street({0.0, 12.0, 3.0, 200.0, 1600.0}).p_open == 0.0);
  CHECK_THROWS_AS(p_connect_street({-1.0, 12.0, 3.0, 200.0, 1600.0}), Error);
}

TEST_CASE("spacing probabilities match their Monte-Carlo") {
  CHECK_THROWS_AS(spacing_ie_prob(2, 2, 0.3, 0.5, 2), Error);
  const double x1 = 0.2, x2 = 0.45;
  // Same x on both sides reduces to the single-range probability.
  CHECK(spacing_ie_prob(2, 3, 0.3, 0.3, 4) == doctest::Approx(p_connect_uniform(4, 0.3, 1.0)).epsilon(1e-12));
  int point = 0;
  for (long n : {2L, 4L, 6L, 9L}) {
    for (long n1 : {0L, 1L, n / 2, n, n + 1}) {
      if (n1 > n + 1) continue;
      const long n2 = n + 1 - n1;
      const auto e = oracle::mc_spacings(n1, n2, x1, x2, 40000, 100 + point++);
      CHECK(std::abs(spacing_ie_prob(n1, n2, x1, x2, n) - e.mean) <= std::max(0.005, 3 * e.std_error));
    }
  }
  CHECK(point == 20);
}

TEST_CASE("two-range bound collapses when the ranges coincide") {
  for (auto form : {BoundForm::approximate, BoundForm::exact}) {
    for (double rho : {0.5, 3.0, 9.0}) {
      for (double p : {0.0, 0.3, 1.0}) {
        HeteroRangeInputs in;
        in.rho2 = rho;
        in.x1 = in.x2 = 300.0;
        in.p_type1 = p;
        in.form = form;
        CHECK(std::abs(hetero_middle_bound(in).value - p_connect_middle(rho, 300.0, 1600.0)) <= 1e-10);
      }
    }
  }
  // C(N, r) times the single-range value for every r.
  for (long n = 1; n <= 8; ++n) {
    for (long r = 0; r <= n; ++r) {
      for (auto form : {BoundForm::approximate, BoundForm::exact}) {
        CHECK(hetero_bound_given_n(n, r, 0.3, 0.3, form) ==
              doctest::Approx(binomial(n, r) * p_connect_uniform(n, 0.3, 1.0)).epsilon(1e-10));
      }
    }
  }
}

TEST_CASE("special-cased patterns") {
  const double x1 = 0.2, x2 = 0.45;
  for (long n = 1; n <= 6; ++n) {
    const double all_short = spacing_ie_prob(n + 1, 0, x1, x2, n);
    const double all_long = spacing_ie_prob(0, n + 1, x1, x2, n);
    CHECK(hetero_bound_given_n(n, 0, x1, x2) == doctest::Approx(all_short).epsilon(1e-14));
    CHECK(hetero_bound_given_n(n, n, x1, x2) == doctest::Approx(all_long).epsilon(1e-14));
    CHECK(hetero_bound_given_n(n, 0, x1, x2, BoundForm::approximate, TypeWeighting::printed) ==
          doctest::Approx(all_long).epsilon(1e-14));
  }
  CHECK(hetero_bound_given_n(0, 0, x1, x2) == doctest::Approx(spacing_ie_prob(0, 1, x1, x2, 0)));
  CHECK_THROWS_AS(hetero_bound_given_n(3, 4, x1, x2), Error);
}

TEST_CASE("conditional bound never exceeds the max-rule probability") {
  const double x1 = 0.125, x2 = 0.25;
  int k = 0;
  for (long n : {2L, 4L, 8L, 12L}) {
    for (long r : {1L, n / 2, n - 1}) {
      if (r < 1 || r >= n) continue;
      const auto e = oracle::mc_two_range_given_r(n, r, x1, x2, 40000, 500 + k++);
      for (auto form : {BoundForm::approximate, BoundForm::exact}) {
        const double bound = hetero_bound_given_n(n, r, x1, x2, form) / binomial(n, r);
        CHECK(bound >= -1e-12);
        CHECK(bound <= e.mean + 3 * e.std_error + 1e-12);
      }
    }
  }
  // Two nodes, one of each range: the bound is nontrivial and still below.
  const auto e = oracle::mc_two_range_given_r(2, 1, 0.4, 0.6, 200000, 99);
  const double b = hetero_bound_given_n(2, 1, 0.4, 0.6) / 2.0;
  CHECK(b > 0.0);
  CHECK(b <= e.mean + 3 * e.std_error);
}

TEST_CASE("endpoints of the short-range probability") {
  HeteroRangeInputs in;
  in.rho2 = 6.0;
  in.x1 = 200.0;
  in.x2 = 400.0;
  for (auto form : {BoundForm::approximate, BoundForm::exact}) {
    in.form = form;
    in.p_type1 = 0.0;
    CHECK(std::abs(hetero_middle_bound(in).value - p_connect_middle(6.0, 400.0, 1600.0)) <= 1e-10);
    in.p_type1 = 1.0;
    CHECK(std::abs(hetero_middle_bound(in).value - p_connect_middle(6.0, 200.0, 1600.0)) <= 1e-10);
  }
}

TEST_CASE("two-range bound stays below the all-long-range value") {
  for (double rho : {1.0, 4.0, 10.0}) {
    const double hi = p_connect_middle(rho, 400.0, 1600.0);
    for (double p : {0.25, 0.5, 0.75}) {
      HeteroRangeInputs in;
      in.rho2 = rho;
      in.p_type1 = p;
      const double b = hetero_middle_bound(in).value;
      CHECK(b <= hi + 1e-12);
      CHECK(b >= 0.0);
      in.form = BoundForm::exact;
      const double be = hetero_middle_bound(in).value;
      CHECK(be <= hi + 1e-12);
      CHECK(be >= 0.0);
    }
  }
}

TEST_CASE("two-range street probability uses the shared end factors") {
  HeteroRangeInputs in;
  in.rho1 = 1.5;
  in.rho2 = 5.0;
  in.rho3 = 2.5;
  const auto s = hetero_lower_bound_street(in);
  const double mid = hetero_middle_bound(in).value;
  CHECK(s.p_open == doctest::Approx((1 - std::exp(-1.5)) * mid * (1 - std::exp(-2.5))).epsilon(1e-13));
  CHECK(s.mode == ConnectivityMode::hetero_lower_bound);
  CHECK(s.x2.value() == 400.0);
  in.x1 = 500.0;
  CHECK_THROWS_AS(hetero_middle_bound(in), Error);
}

TEST_CASE("street CSV leaves two-range columns blank for a single range") {
  std::vector<StreetConnectivity> v{p_connect_street({1, 2, 3, 200, 1600})};
  v[0].street = 4;
  std::ostringstream out;
  write_street_csv(out, v);
  const auto text = out.str();
  CHECK(text.find("\n4,1,2,3,200,,,") != std::string::npos);
  CHECK(text.find("exact_single_range") != std::string::npos);
}
