#pragma once

#include <cstddef>
#include <ostream>
#include <span>
#include <utility>
#include <vector>

#include "vanet/core_model.hpp"

namespace vanet {

/// One (queue node, customer class) pair of the open network.
struct QueueKey {
  std::size_t node = 0;
  std::size_t street = 0;
  int direction = 0;
  Segment segment = Segment::front;
  int cls = 0;
};

/// Sparse routing probabilities between (node, class) pairs plus the exit
/// column. rows[i] lists (j, r[i -> j]); exit[i] is r[i -> outside].
struct RoutingMatrix {
  std::vector<QueueKey> keys;
  std::vector<std::vector<std::pair<std::size_t, double>>> rows;
  std::vector<double> exit;

  std::size_t dimension() const { return keys.size(); }
  /// Sum over targets plus the exit entry.
  double row_total(std::size_t i) const;
};

/// Index of (street, direction, segment, class) in the standard layout used
/// by build_routing_matrix: 7 entries per street direction, front classes
/// first, then middle, then end.
std::size_t standard_index(std::size_t street, int direction, Segment segment, int cls);

/// Chains front -> middle -> end within a street through the class
/// transition matrices, and splits end-node departures over the next
/// streets' front nodes by route_choices() composed with end_to_front.
RoutingMatrix build_routing_matrix(const CityTopology& topology, const RunConfig& config);

/// mu = 1 / (length * E[1/V]). Throws Error when v_min <= 0 or length <= 0.
double mean_service_rate(const SpeedClass& cls, double length);

/// Exogenous rates per index: entrance rate times the entrance class split
/// on the entrance street's front node, zero elsewhere.
std::vector<double> exogenous_rates(const RoutingMatrix& routing, const CityTopology& topology,
                                    const RunConfig& config);

std::vector<double> service_rates(const RoutingMatrix& routing, const RunConfig& config);

struct TrafficSolution {
  std::vector<QueueKey> keys;
  std::vector<double> alpha;
  std::vector<double> rho;
  std::vector<double> mu;
  std::vector<double> lambda;
  /// max_i |alpha_i - lambda_i - sum_k alpha_k r[k -> i]|
  double residual = 0.0;
  /// node id -> indices of its classes
  std::vector<std::vector<std::size_t>> node_indices;

  /// Class-summed rho of one queue node.
  double node_rho(std::size_t node) const;
};

/// Solves alpha = lambda + alpha R with a sparse direct factorisation and
/// iterative refinement. Throws Error when the residual stays above
/// 1e-10 * max(1, max lambda).
TrafficSolution solve_traffic_equations(const RoutingMatrix& routing, std::span<const double> lambda,
                                        std::span<const double> mu);

/// build_routing_matrix + exogenous_rates + service_rates + solve.
TrafficSolution solve_city(const CityTopology& topology, const RunConfig& config);

/// Class-summed density of one physical section of a street, adding both
/// travel directions. Sections are named along direction 0 (a -> b):
/// front is the section next to endpoint a, which holds the front node of
/// direction 0 and the end node of direction 1.
double segment_density(const TrafficSolution& solution, const CityTopology& topology, std::size_t street,
                       Segment section);

/// Product-form marginal of one node: exp(-rho_j) prod_u rho_ju^n_u / n_u!.
/// counts.size() must equal the node's class count.
double spatial_distribution_pmf(const TrafficSolution& solution, std::size_t node, std::span<const long> counts);

/// Columns: street_id,direction,segment,class,alpha,mu,rho.
void write_traffic_csv(std::ostream& out, const TrafficSolution& solution);

}  // namespace vanet
