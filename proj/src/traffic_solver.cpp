#include "vanet/traffic_solver.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>

#include "vanet/csv.hpp"
#include "vanet/numeric.hpp"

namespace vanet {

namespace {

constexpr std::array<std::size_t, 3> kSegmentOffset{0, 2, 5};
constexpr std::array<int, 3> kSegmentClasses{2, 3, 2};
constexpr std::size_t kPerDirection = 7;

const StochasticMatrix& transition_out_of(const RunConfig& config, Segment s) {
  switch (s) {
    case Segment::front:
      return config.transitions.front_to_middle;
    case Segment::middle:
      return config.transitions.middle_to_end;
    case Segment::end:
      return config.transitions.end_to_front;
  }
  return config.transitions.front_to_middle;
}

double residual_of(const RoutingMatrix& routing, std::span<const double> lambda, const std::vector<double>& alpha,
                   std::vector<double>* per_index = nullptr) {
  std::vector<double> inflow(lambda.begin(), lambda.end());
  for (std::size_t i = 0; i < routing.dimension(); ++i) {
    for (const auto& [j, r] : routing.rows[i]) inflow[j] += alpha[i] * r;
  }
  double worst = 0.0;
  for (std::size_t i = 0; i < inflow.size(); ++i) {
    inflow[i] = inflow[i] - alpha[i];
    worst = std::max(worst, std::abs(inflow[i]));
  }
  if (per_index) *per_index = std::move(inflow);
  return worst;
}

}  // namespace

double RoutingMatrix::row_total(std::size_t i) const {
  CompensatedSum s;
  for (const auto& [_, r] : rows[i]) s += r;
  s += exit[i];
  return s.value();
}

std::size_t standard_index(std::size_t street, int direction, Segment segment, int cls) {
  return (street * 2 + static_cast<std::size_t>(direction)) * kPerDirection +
         kSegmentOffset[static_cast<std::size_t>(segment)] + static_cast<std::size_t>(cls);
}

RoutingMatrix build_routing_matrix(const CityTopology& topology, const RunConfig& config) {
  RoutingMatrix m;
  const std::size_t dim = topology.streets.size() * 2 * kPerDirection;
  m.keys.resize(dim);
  m.rows.resize(dim);
  m.exit.assign(dim, 0.0);

  for (const auto& street : topology.streets) {
    for (int d = 0; d < 2; ++d) {
      for (Segment seg : kSegments) {
        const auto s = static_cast<std::size_t>(seg);
        for (int u = 0; u < kSegmentClasses[s]; ++u) {
          const std::size_t i = standard_index(street.id, d, seg, u);
          m.keys[i] = QueueKey{street.nodes[d][s], street.id, d, seg, u};
          const auto& row = transition_out_of(config, seg)[static_cast<std::size_t>(u)];
          if (seg != Segment::end) {
            const Segment next = kSegments[s + 1];
            for (std::size_t v = 0; v < row.size(); ++v) {
              if (row[v] > 0.0) m.rows[i].emplace_back(standard_index(street.id, d, next, static_cast<int>(v)), row[v]);
            }
            continue;
          }
          for (const auto& choice : route_choices(topology, config, DirectedStreet{street.id, d})) {
            if (!choice.target) {
              m.exit[i] += choice.probability;
              continue;
            }
            for (std::size_t v = 0; v < row.size(); ++v) {
              const double r = choice.probability * row[v];
              if (r > 0.0) {
                m.rows[i].emplace_back(
                    standard_index(choice.target->street, choice.target->direction, Segment::front, static_cast<int>(v)), r);
              }
            }
          }
        }
      }
    }
  }
  return m;
}

double mean_service_rate(const SpeedClass& cls, double length) {
  if (!(length > 0.0)) throw Error("segment length must be positive");
  return 1.0 / (length * mean_reciprocal_speed(cls));
}

std::vector<double> exogenous_rates(const RoutingMatrix& routing, const CityTopology& topology,
                                    const RunConfig& config) {
  std::vector<double> lambda(routing.dimension(), 0.0);
  const auto& split = config.transitions.entrance;
  for (const auto& e : topology.entrances) {
    for (std::size_t u = 0; u < split.size(); ++u) {
      lambda[standard_index(e.target.street, e.target.direction, Segment::front, static_cast<int>(u))] += e.rate * split[u];
    }
  }
  return lambda;
}

std::vector<double> service_rates(const RoutingMatrix& routing, const RunConfig& config) {
  std::vector<double> mu(routing.dimension());
  for (std::size_t i = 0; i < routing.dimension(); ++i) {
    const auto& k = routing.keys[i];
    mu[i] = mean_service_rate(config.classes.of(k.segment).at(static_cast<std::size_t>(k.cls)),
                              config.geometry.length(k.segment));
  }
  return mu;
}

double TrafficSolution::node_rho(std::size_t node) const {
  if (node >= node_indices.size()) throw Error("unknown queue node " + std::to_string(node));
  double s = 0.0;
  for (std::size_t i : node_indices[node]) s += rho[i];
  return s;
}

TrafficSolution solve_traffic_equations(const RoutingMatrix& routing, std::span<const double> lambda,
                                        std::span<const double> mu) {
  const std::size_t n = routing.dimension();
  if (lambda.size() != n || mu.size() != n) throw Error("rate vectors do not match the routing dimension");
  for (double l : lambda) {
    if (!(l >= 0.0)) throw Error("exogenous rates must be nonnegative");
  }

  // (I - R^T) alpha = lambda
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(n * 4);
  for (std::size_t i = 0; i < n; ++i) {
    triplets.emplace_back(static_cast<int>(i), static_cast<int>(i), 1.0);
    for (const auto& [j, r] : routing.rows[i]) triplets.emplace_back(static_cast<int>(j), static_cast<int>(i), -r);
  }
  Eigen::SparseMatrix<double> a(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  a.setFromTriplets(triplets.begin(), triplets.end());
  a.makeCompressed();

  Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu;
  lu.analyzePattern(a);
  lu.factorize(a);
  if (lu.info() != Eigen::Success) throw Error("traffic equations are singular: " + lu.lastErrorMessage());

  Eigen::Map<const Eigen::VectorXd> rhs(lambda.data(), static_cast<Eigen::Index>(n));
  Eigen::VectorXd x = lu.solve(rhs);
  std::vector<double> alpha(x.data(), x.data() + n);

  const double scale = std::max(1.0, lambda.empty() ? 0.0 : *std::max_element(lambda.begin(), lambda.end()));
  const double tolerance = 1e-10 * scale;
  std::vector<double> defect;
  double residual = residual_of(routing, lambda, alpha, &defect);
  for (int pass = 0; pass < 4 && residual > 0.1 * tolerance; ++pass) {
    Eigen::Map<const Eigen::VectorXd> d(defect.data(), static_cast<Eigen::Index>(n));
    Eigen::VectorXd correction = lu.solve(d);
    for (std::size_t i = 0; i < n; ++i) alpha[i] += correction[static_cast<Eigen::Index>(i)];
    residual = residual_of(routing, lambda, alpha, &defect);
  }
  if (!(residual <= tolerance)) {
    throw Error("traffic equations did not converge; residual " + format_double(residual));
  }

  TrafficSolution sol;
  sol.keys = routing.keys;
  sol.lambda.assign(lambda.begin(), lambda.end());
  sol.mu.assign(mu.begin(), mu.end());
  sol.alpha = std::move(alpha);
  sol.rho.resize(n);
  std::size_t max_node = 0;
  for (std::size_t i = 0; i < n; ++i) {
    // Round-off can leave -1e-18 where the exact value is 0.
    if (sol.alpha[i] < 0.0) sol.alpha[i] = 0.0;
    sol.rho[i] = sol.alpha[i] / sol.mu[i];
    max_node = std::max(max_node, sol.keys[i].node);
  }
  sol.residual = residual;
  sol.node_indices.assign(n == 0 ? 0 : max_node + 1, {});
  for (std::size_t i = 0; i < n; ++i) sol.node_indices[sol.keys[i].node].push_back(i);
  return sol;
}

TrafficSolution solve_city(const CityTopology& topology, const RunConfig& config) {
  const auto routing = build_routing_matrix(topology, config);
  const auto lambda = exogenous_rates(routing, topology, config);
  const auto mu = service_rates(routing, config);
  return solve_traffic_equations(routing, lambda, mu);
}

double segment_density(const TrafficSolution& solution, const CityTopology& topology, std::size_t street,
                       Segment section) {
  if (street >= topology.streets.size()) throw Error("unknown street " + std::to_string(street));
  const auto& s = topology.streets[street];
  const auto idx = [](Segment seg) { return static_cast<std::size_t>(seg); };
  switch (section) {
    case Segment::front:
      return solution.node_rho(s.nodes[0][idx(Segment::front)]) + solution.node_rho(s.nodes[1][idx(Segment::end)]);
    case Segment::middle:
      return solution.node_rho(s.nodes[0][idx(Segment::middle)]) + solution.node_rho(s.nodes[1][idx(Segment::middle)]);
    case Segment::end:
      return solution.node_rho(s.nodes[0][idx(Segment::end)]) + solution.node_rho(s.nodes[1][idx(Segment::front)]);
  }
  throw Error("unknown segment");
}

double spatial_distribution_pmf(const TrafficSolution& solution, std::size_t node, std::span<const long> counts) {
  if (node >= solution.node_indices.size()) throw Error("unknown queue node " + std::to_string(node));
  const auto& idx = solution.node_indices[node];
  if (counts.size() != idx.size()) throw Error("class count mismatch for node " + std::to_string(node));
  double log_p = 0.0;
  for (std::size_t u = 0; u < idx.size(); ++u) {
    if (counts[u] < 0) throw Error("negative count");
    const double p = poisson_pmf(counts[u], solution.rho[idx[u]]);
    if (p == 0.0) return 0.0;
    log_p += std::log(p);
  }
  return std::exp(log_p);
}

void write_traffic_csv(std::ostream& out, const TrafficSolution& solution) {
  CsvWriter csv(out);
  csv.header({"street_id", "direction", "segment", "class", "alpha", "mu", "rho"});
  for (std::size_t i = 0; i < solution.keys.size(); ++i) {
    const auto& k = solution.keys[i];
    csv.cell(k.street).cell(k.direction).cell(to_string(k.segment)).cell(k.cls);
    csv.cell(solution.alpha[i]).cell(solution.mu[i]).cell(solution.rho[i]);
    csv.end_row();
  }
}

}  // namespace vanet
