#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <ostream>
#include <span>
#include <vector>

#include "vanet/core_model.hpp"
#include "vanet/percolation.hpp"
#include "vanet/random.hpp"

namespace vanet {

struct Vehicle {
  std::uint64_t id = 0;
  DirectedStreet at;
  Segment segment = Segment::front;
  /// Distance travelled within the current segment (m).
  double offset = 0.0;
  double speed = 0.0;
  int cls = 0;
  double range = 0.0;
  /// Total distance travelled since injection.
  double odometer = 0.0;
};

/// Position of a vehicle along its street, measured from endpoint a.
double street_position(const Vehicle& v, const StreetGeometry& geometry);

struct SimulationSnapshot {
  double time = 0.0;
  std::vector<std::uint8_t> street_open;
  ObservableArray observables{};
  /// Vehicles per queue node (CityTopology::node_id order).
  std::vector<std::size_t> node_counts;
};

/// Street open rule on sorted (position, range) points spanning [0, length]:
/// every gap between neighbours must be bridged by the max (or min) of the
/// two ranges, and the gaps to both endpoints by the adjacent vehicle's range.
/// An empty street is closed.
bool street_is_open(std::span<const std::pair<double, double>> sorted_points, double length, LinkRule rule);

/// Discrete-time microscopic simulation. Vehicles never interact; each one
/// moves at a speed redrawn within its class at every segment boundary.
class Simulator {
 public:
  /// Throws Error when some entrance has rate * dt >= 0.1.
  Simulator(const CityTopology& topology, const RunConfig& config, std::uint64_t seed, std::uint64_t stream = 0);

  void step();
  void run_steps(std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) step();
  }

  /// Places a vehicle directly; cls must be valid for the segment. Counts
  /// as injected.
  std::uint64_t add_vehicle(DirectedStreet at, Segment segment, double offset, int cls, double speed, double range);

  double time() const { return time_; }
  std::size_t steps() const { return steps_; }
  double dt() const { return dt_; }
  const std::vector<Vehicle>& vehicles() const { return vehicles_; }
  std::uint64_t injected() const { return injected_; }
  std::uint64_t exited() const { return exited_; }
  /// Odometers of vehicles that left the grid, in exit order.
  const std::vector<double>& exit_odometers() const { return exit_odometers_; }
  const std::vector<std::size_t>& node_counts() const { return node_counts_; }

  SimulationSnapshot snapshot(AverageSize avg = AverageSize::mean_over_clusters) const;

 private:
  struct Route {
    std::vector<double> cumulative;
    std::vector<std::optional<DirectedStreet>> targets;
  };

  /// Moves to the next segment or street; returns false when the vehicle exits.
  bool advance_segment(Vehicle& v);
  int draw_class(std::span<const double> row);
  double draw_speed(Segment segment, int cls);
  double draw_range();
  std::size_t node_of(const Vehicle& v) const {
    return CityTopology::node_id(v.at.street, v.at.direction, v.segment);
  }

  const CityTopology& topology_;
  const RunConfig& config_;
  Rng rng_;
  double dt_;
  double time_ = 0.0;
  std::size_t steps_ = 0;
  std::vector<Vehicle> vehicles_;
  std::vector<Route> routes_;  ///< per directed street (street * 2 + direction)
  std::vector<std::size_t> node_counts_;
  std::vector<double> exit_odometers_;
  std::uint64_t next_id_ = 0;
  std::uint64_t injected_ = 0;
  std::uint64_t exited_ = 0;
};

/// Three times the sum over segments of the slowest class's expected
/// traversal time.
double street_warmup(const RunConfig& config);

/// Default warm-up: the larger of street_warmup and three mean network
/// sojourn times, the latter from the traffic solution by Little's law
/// (sum rho / sum lambda). Only the length of the warm-up uses the solver.
double default_warmup(const CityTopology& topology, const RunConfig& config);

struct Aggregate {
  double mean = 0.0;
  double std_error = 0.0;
};

struct SimulationResult {
  double warmup = 0.0;
  double duration = 0.0;
  std::size_t batches = 0;
  std::vector<SimulationSnapshot> snapshots;
  std::array<Aggregate, 3> observables{};
  /// Fraction of snapshots in which each street was open.
  std::vector<Aggregate> street_open;
  /// Time-averaged vehicle count per queue node, averaged every step.
  std::vector<Aggregate> node_mean;
  std::uint64_t injected = 0;
  std::uint64_t exited = 0;
};

struct SimulationOptions {
  AverageSize avg = AverageSize::mean_over_clusters;
  /// Keep every snapshot in the result (needed for the time-series CSV).
  bool keep_snapshots = true;
  /// Random stream of the run; replications use 0, 1, 2, ...
  std::uint64_t stream = 0;
};

/// Warm-up, then snapshots every sample interval; aggregates use batch
/// means over config.simulation.batches equal batches of the measured
/// period. Throws ConfigError on an invalid config and Error when nothing
/// is left after the warm-up.
SimulationResult run_simulation(const RunConfig& config, const SimulationOptions& options = {});
SimulationResult run_simulation(const CityTopology& topology, const RunConfig& config,
                                const SimulationOptions& options = {});

/// Independent replications (streams 0..n-1 of config.seed), each a full
/// run_simulation. Means are over replications and standard errors come
/// from the spread of the replication means, which stays valid when the
/// process is correlated over times longer than a batch.
struct ReplicatedResult {
  std::size_t replications = 0;
  std::array<Aggregate, 3> observables{};
  std::vector<Aggregate> street_open;
  std::vector<Aggregate> node_mean;
  /// Per street, the physical front/middle/end sections along direction 0,
  /// each adding both travel directions (as segment_density does).
  std::vector<std::array<Aggregate, 3>> section_mean;
};

ReplicatedResult run_replications(const CityTopology& topology, const RunConfig& config, std::size_t replications,
                                  std::size_t threads = 1, AverageSize avg = AverageSize::mean_over_clusters);

/// Columns: time,street_id,open.
void write_time_series_csv(std::ostream& out, const SimulationResult& result);
/// Columns: observable,mean,stderr. Street rows are named street_open_<id>.
void write_aggregate_csv(std::ostream& out, const SimulationResult& result);

}  // namespace vanet
