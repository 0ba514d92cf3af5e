#pragma once

#include <cstdint>
#include <vector>

#include "vanet/core_model.hpp"
#include "vanet/percolation.hpp"
#include "vanet/street_connectivity.hpp"
#include "vanet/traffic_solver.hpp"

namespace vanet {

/// Per-street open probabilities from a solved city, using the physical
/// section densities (both directions added) and the configured
/// transmission model. Entry i belongs to street i.
std::vector<StreetConnectivity> street_probabilities(const CityTopology& topology, const TrafficSolution& solution,
                                                     const RunConfig& config);

std::vector<double> open_probabilities(const std::vector<StreetConnectivity>& streets);

/// Full analytic chain for one configuration: traffic solve, street
/// probabilities, then direct Bernoulli sampling of the intersection
/// lattice with those probabilities.
struct CityAnalysis {
  TrafficSolution traffic;
  std::vector<StreetConnectivity> streets;
  ObservableEstimate observables;
};

CityAnalysis analyze_city(const RunConfig& config, std::size_t iterations, std::uint64_t seed,
                          AverageSize avg = AverageSize::mean_over_clusters);

}  // namespace vanet
