#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "doctest.h"
#include "oracles.hpp"
#include "vanet/traffic_solver.hpp"

using namespace vanet;

namespace {

double total_rho(const TrafficSolution& s) { return std::accumulate(s.rho.begin(), s.rho.end(), 0.0); }

// Balance of every (node, class) entry against the routing matrix.
double balance_error(const RoutingMatrix& r, const TrafficSolution& s) {
  std::vector<double> in = s.lambda;
  for (std::size_t i = 0; i < r.dimension(); ++i) {
    for (const auto& [j, p] : r.rows[i]) in[j] += s.alpha[i] * p;
  }
  double worst = 0.0;
  for (std::size_t i = 0; i < in.size(); ++i) worst = std::max(worst, std::abs(in[i] - s.alpha[i]));
  return worst;
}

RunConfig random_config(std::mt19937_64& gen, std::size_t side) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  RunConfig c;
  c.grid_side = side;
  auto split = [&] {
    double a = u(gen) + 0.05, b = u(gen) + 0.05, d = u(gen) + 0.05;
    const double s = a + b + d;
    return TurnProbabilities{a / s, b / s, d / s};
  };
  c.turns = split();
  for (std::size_t i = 0; i < side * side; i += 3) c.turn_overrides.push_back({i, split()});
  c.intersection_weights.resize(side * side);
  for (auto& w : c.intersection_weights) w = 0.5 + 2.0 * u(gen);
  c.entrance_rates.resize(4 * side);
  for (auto& r : c.entrance_rates) r = 0.2 * u(gen);
  const double q = u(gen);
  c.transitions.front_to_middle = {{q, 1.0 - q, 0.0}, {0.0, 1.0 - q, q}};
  return c;
}

}  // namespace

TEST_CASE("routing rows are stochastic") {
  RunConfig c;
  c.grid_side = 5;
  const auto city = build_city(c);
  const auto r = build_routing_matrix(city, c);
  CHECK(r.dimension() == city.streets.size() * 2 * 7);
  for (std::size_t i = 0; i < r.dimension(); ++i) {
    CHECK(r.row_total(i) == doctest::Approx(1.0).epsilon(1e-13));
    CHECK(r.keys[i].node == CityTopology::node_id(r.keys[i].street, r.keys[i].direction, r.keys[i].segment));
  }
  CHECK(standard_index(1, 1, Segment::middle, 2) == 7 * 3 + 2 + 2);
}

TEST_CASE("low speed service rate is the reciprocal mean traversal time") {
  const SpeedClass low{"low", 0.3, 3.0};
  CHECK(mean_service_rate(low, 200.0) == doctest::Approx(2.7 / (200.0 * std::log(10.0))).epsilon(1e-14));
  CHECK_THROWS_AS(mean_service_rate(low, 0.0), Error);
  CHECK_THROWS_AS(mean_service_rate({"bad", 0.0, 3.0}, 200.0), Error);
}

TEST_CASE("isolated street matches hand-computed densities") {
  RunConfig c;
  const auto city = build_grid_city(1, 2, c);
  REQUIRE(city.streets.size() == 1);
  REQUIRE(city.entrances.size() == 2);
  const auto r = build_routing_matrix(city, c);
  for (std::size_t i = 0; i < r.dimension(); ++i) {
    if (r.keys[i].segment == Segment::end) CHECK(r.exit[i] == doctest::Approx(1.0));
  }
  const auto s = solve_city(city, c);
  // Per direction: 0.1 veh/s split 0.5/0.5 into the front classes, then
  // through the class transition matrices.
  const double front = 200.0 * (0.05 * std::log(10.0) / 2.7 + 0.05 * std::log(14.0 / 3.0) / 11.0);
  const double middle = 1600.0 * (0.025 * std::log(14.0 / 3.0) / 11.0 + 0.05 * std::log(22.0 / 14.0) / 8.0 +
                                  0.025 * std::log(1.5) / 11.0);
  const double end = 200.0 * (0.05 * std::log(5.0) / 1.2 + 0.05 * std::log(14.0 / 1.5) / 12.5);
  CHECK(s.node_rho(city.streets[0].nodes[0][0]) == doctest::Approx(front).epsilon(1e-12));
  CHECK(s.node_rho(city.streets[0].nodes[0][1]) == doctest::Approx(middle).epsilon(1e-12));
  CHECK(s.node_rho(city.streets[0].nodes[1][2]) == doctest::Approx(end).epsilon(1e-12));
  CHECK(segment_density(s, city, 0, Segment::front) == doctest::Approx(front + end).epsilon(1e-12));
  CHECK(segment_density(s, city, 0, Segment::middle) == doctest::Approx(2 * middle).epsilon(1e-12));
  CHECK(segment_density(s, city, 0, Segment::end) == doctest::Approx(front + end).epsilon(1e-12));
}

TEST_CASE("solver agrees with fixed-point iteration") {
  for (std::size_t side : {2, 3, 4}) {
    RunConfig c;
    c.grid_side = side;
    const auto city = build_city(c);
    const auto r = build_routing_matrix(city, c);
    const auto lambda = exogenous_rates(r, city, c);
    const auto s = solve_city(city, c);
    const auto alpha = oracle::fixed_point_alpha(r.rows, lambda, 1e-15);
    for (std::size_t i = 0; i < alpha.size(); ++i) CHECK(s.alpha[i] == doctest::Approx(alpha[i]).epsilon(1e-12));
  }
}

TEST_CASE("flow is conserved on random 7x7 configurations") {
  std::mt19937_64 gen(20240101);
  for (int rep = 0; rep < 8; ++rep) {
    const auto c = random_config(gen, 7);
    REQUIRE(validate_config(c).empty());
    const auto city = build_city(c);
    const auto r = build_routing_matrix(city, c);
    const auto s = solve_city(city, c);
    CHECK(s.residual < 1e-9);
    CHECK(balance_error(r, s) < 1e-9);
    double in = 0.0, out = 0.0;
    for (std::size_t i = 0; i < r.dimension(); ++i) {
      in += s.lambda[i];
      out += s.alpha[i] * r.exit[i];
    }
    CHECK(std::abs(in - out) < 1e-9 * std::max(1.0, in));
    for (double a : s.alpha) CHECK(a >= 0.0);
  }
}

TEST_CASE("densities scale linearly with the entrance rate") {
  RunConfig c;
  const auto city = build_city(c);
  const auto base = solve_city(city, c);
  for (double k : {0.0, 0.5, 2.0, 3.0}) {
    RunConfig scaled = c;
    scaled.entrance_rate = c.entrance_rate * k;
    const auto s = solve_city(build_city(scaled), scaled);
    for (std::size_t i = 0; i < s.rho.size(); ++i) CHECK(s.rho[i] == doctest::Approx(k * base.rho[i]).epsilon(1e-11));
  }
}

TEST_CASE("zero entrance rates give an empty city") {
  RunConfig c;
  c.entrance_rate = 0.0;
  const auto city = build_city(c);
  const auto s = solve_city(city, c);
  for (double x : s.rho) CHECK(x == 0.0);
}

TEST_CASE("uniform city densities have the grid symmetry") {
  RunConfig c;
  c.grid_side = 6;
  const auto city = build_city(c);
  const auto s = solve_city(city, c);
  // Horizontal street (r, k) mirrors vertical street (k, r) under transposition.
  const std::size_t n = 6;
  const std::size_t h = n * (n - 1);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t k = 0; k + 1 < n; ++k) {
      const std::size_t hid = r * (n - 1) + k;
      const std::size_t vid = h + k * n + r;
      REQUIRE(city.streets[vid].a == k * n + r);
      for (Segment seg : kSegments) {
        CHECK(segment_density(s, city, hid, seg) == doctest::Approx(segment_density(s, city, vid, seg)).epsilon(1e-10));
      }
      // Mirror across the vertical axis swaps the two directions.
      const std::size_t mid = r * (n - 1) + (n - 2 - k);
      CHECK(segment_density(s, city, hid, Segment::middle) ==
            doctest::Approx(segment_density(s, city, mid, Segment::middle)).epsilon(1e-10));
      CHECK(segment_density(s, city, hid, Segment::front) ==
            doctest::Approx(segment_density(s, city, mid, Segment::end)).epsilon(1e-10));
    }
  }
}

TEST_CASE("total density obeys Little's law") {
  RunConfig c;
  const auto city = build_city(c);
  const auto s = solve_city(city, c);
  double via_alpha = 0.0;
  for (std::size_t i = 0; i < s.alpha.size(); ++i) via_alpha += s.alpha[i] / s.mu[i];
  CHECK(total_rho(s) == doctest::Approx(via_alpha).epsilon(1e-13));
  CHECK(total_rho(s) > 0.0);
}

TEST_CASE("spatial distribution is a normalised product of Poisson marginals") {
  RunConfig c;
  c.grid_side = 3;
  const auto city = build_city(c);
  const auto s = solve_city(city, c);
  const std::size_t node = city.streets[2].nodes[0][1];
  REQUIRE(s.node_indices[node].size() == 3);
  double total = 0.0;
  for (long a = 0; a < 60; ++a) {
    for (long b = 0; b < 60; ++b) {
      for (long d = 0; d < 60; ++d) {
        const long counts[3] = {a, b, d};
        total += spatial_distribution_pmf(s, node, counts);
      }
    }
  }
  CHECK(total == doctest::Approx(1.0).epsilon(1e-10));
  const long zero[3] = {0, 0, 0};
  CHECK(spatial_distribution_pmf(s, node, zero) == doctest::Approx(std::exp(-s.node_rho(node))).epsilon(1e-13));
  const long wrong[2] = {0, 0};
  CHECK_THROWS_AS(spatial_distribution_pmf(s, node, wrong), Error);
}

TEST_CASE("solver rejects mismatched or negative rates") {
  RunConfig c;
  c.grid_side = 2;
  const auto city = build_city(c);
  const auto r = build_routing_matrix(city, c);
  auto lambda = exogenous_rates(r, city, c);
  const auto mu = service_rates(r, c);
  CHECK_NOTHROW(solve_traffic_equations(r, lambda, mu));
  lambda[0] = -1.0;
  CHECK_THROWS_AS(solve_traffic_equations(r, lambda, mu), Error);
  lambda.pop_back();
  CHECK_THROWS_AS(solve_traffic_equations(r, lambda, mu), Error);
}

TEST_CASE("traffic CSV has one row per node class") {
  RunConfig c;
  c.grid_side = 2;
  const auto city = build_city(c);
  const auto s = solve_city(city, c);
  std::ostringstream out;
  write_traffic_csv(out, s);
  const auto text = out.str();
  CHECK(text.rfind("street_id,direction,segment,class,alpha,mu,rho\n", 0) == 0);
  CHECK(std::count(text.begin(), text.end(), '\n') == static_cast<long>(s.keys.size() + 1));
}
