#include "vanet/pipeline.hpp"

#include <map>

namespace vanet {

std::vector<StreetConnectivity> street_probabilities(const CityTopology& topology, const TrafficSolution& solution,
                                                     const RunConfig& config) {
  std::vector<StreetConnectivity> out;
  out.reserve(topology.streets.size());
  const auto& t = config.transmission;
  // The two-range middle bound depends on rho2 alone and dominates the cost;
  // symmetric streets share it.
  std::map<std::pair<double, double>, double> middle_cache;
  for (const auto& s : topology.streets) {
    const double rho1 = segment_density(solution, topology, s.id, Segment::front);
    const double rho2 = segment_density(solution, topology, s.id, Segment::middle);
    const double rho3 = segment_density(solution, topology, s.id, Segment::end);
    StreetConnectivity c;
    if (t.kind == TransmissionModel::Kind::single) {
      c = p_connect_street({rho1, rho2, rho3, t.range, s.geometry.len_middle});
    } else {
      HeteroRangeInputs in;
      in.rho1 = rho1;
      in.rho2 = rho2;
      in.rho3 = rho3;
      in.x1 = t.x1;
      in.x2 = t.x2;
      in.p_type1 = t.p_type1;
      in.length = s.geometry.len_middle;
      in.weighting = t.weighting;
      in.form = t.form;
      const auto key = std::make_pair(rho2, in.length);
      auto it = middle_cache.find(key);
      if (it == middle_cache.end()) it = middle_cache.emplace(key, hetero_middle_bound(in).value).first;
      c = hetero_street_from_middle(in, it->second);
    }
    c.street = s.id;
    out.push_back(c);
  }
  return out;
}

std::vector<double> open_probabilities(const std::vector<StreetConnectivity>& streets) {
  std::vector<double> p;
  p.reserve(streets.size());
  for (const auto& s : streets) p.push_back(s.p_open);
  return p;
}

CityAnalysis analyze_city(const RunConfig& config, std::size_t iterations, std::uint64_t seed, AverageSize avg) {
  const auto topology = build_city(config);
  CityAnalysis a;
  a.traffic = solve_city(topology, config);
  a.streets = street_probabilities(topology, a.traffic, config);
  const auto probs = open_probabilities(a.streets);
  a.observables = inhomogeneous_sample(config.grid_side, probs, iterations, seed, avg);
  return a;
}

}  // namespace vanet
