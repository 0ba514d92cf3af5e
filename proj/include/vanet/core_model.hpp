#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace vanet {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

enum class Segment : std::uint8_t { front = 0, middle = 1, end = 2 };

inline constexpr std::array<Segment, 3> kSegments{Segment::front, Segment::middle, Segment::end};

const char* to_string(Segment segment);

/// Grid headings. Rows grow southward, columns eastward.
enum class Heading : std::uint8_t { north = 0, east = 1, south = 2, west = 3 };

Heading opposite(Heading h);
Heading turn_left(Heading h);
Heading turn_right(Heading h);

/// A speed category. Speeds are drawn uniformly on [v_min, v_max];
/// v_min == v_max is accepted as a constant-speed class.
struct SpeedClass {
  std::string name;
  double v_min = 0.0;
  double v_max = 0.0;
};

/// E[1/V] for V uniform on [v_min, v_max]: ln(b/a) / (b - a), or 1/a when a == b.
double mean_reciprocal_speed(const SpeedClass& cls);

struct StreetGeometry {
  double len_front = 200.0;
  double len_middle = 1600.0;
  double len_end = 200.0;

  double total() const { return len_front + len_middle + len_end; }
  double length(Segment s) const;
  /// Distance from the origin intersection to the start of segment s.
  double start(Segment s) const;
};

/// Speed classes per segment role: front and end carry (low, medium),
/// middle carries (low, medium, fast).
struct SegmentClasses {
  std::vector<SpeedClass> front{{"low", 0.3, 3.0}, {"medium", 3.0, 14.0}};
  std::vector<SpeedClass> middle{{"low", 3.0, 14.0}, {"medium", 14.0, 22.0}, {"fast", 22.0, 33.0}};
  std::vector<SpeedClass> end{{"low", 0.3, 1.5}, {"medium", 1.5, 14.0}};

  const std::vector<SpeedClass>& of(Segment s) const;
};

using StochasticMatrix = std::vector<std::vector<double>>;

/// Class changes at segment boundaries. Rows index the class being left.
struct ClassTransitions {
  StochasticMatrix front_to_middle{{0.5, 0.5, 0.0}, {0.0, 0.5, 0.5}};
  StochasticMatrix middle_to_end{{0.5, 0.5}, {0.5, 0.5}, {0.5, 0.5}};
  StochasticMatrix end_to_front{{1.0, 0.0}, {0.0, 1.0}};
  /// Front-class split of vehicles arriving from outside the grid.
  std::vector<double> entrance{0.5, 0.5};
};

struct TurnProbabilities {
  double straight = 0.5;
  double left = 0.25;
  double right = 0.25;

  double sum() const { return straight + left + right; }
};

struct TurnOverride {
  std::size_t intersection = 0;
  TurnProbabilities turns;
};

/// When a gap between two neighbouring vehicles counts as bridged.
enum class LinkRule : std::uint8_t { max_range, min_range };

/// How the two-range bound weights a pattern with r long-range nodes.
/// type2_count: (1-p)^r p^(N-r) with p = P(short range).
/// printed: p^r (1-p)^(N-r) together with Qt(0, N) = p(0, N+1) verbatim.
enum class TypeWeighting : std::uint8_t { type2_count, printed };

/// approximate: single-term block sum. exact: four-case block sum.
enum class BoundForm : std::uint8_t { approximate, exact };

struct TransmissionModel {
  enum class Kind : std::uint8_t { single, dual };

  Kind kind = Kind::single;
  double range = 200.0;
  double x1 = 200.0;
  double x2 = 400.0;
  double p_type1 = 0.5;
  TypeWeighting weighting = TypeWeighting::type2_count;
  BoundForm form = BoundForm::approximate;
};

struct SimulationSettings {
  double dt = 0.1;
  /// Unset: the larger of three expected street traversal times (slowest
  /// class in every segment) and three mean network sojourn times.
  std::optional<double> warmup;
  /// Total simulated time, warm-up included. Unset: warm-up + measured.
  std::optional<double> duration;
  /// Measured time after the warm-up when duration is unset.
  double measured = 7200.0;
  double sample_interval = 30.0;
  std::size_t batches = 20;
  LinkRule link_rule = LinkRule::max_range;
};

/// Everything a run needs. Member defaults are the typical parameter set
/// (middle 1600 m, front/end 200 m, R = 200 m, the three middle speed
/// bands and two front/end bands).
struct RunConfig {
  std::size_t grid_side = 7;
  StreetGeometry geometry;
  SegmentClasses classes;
  ClassTransitions transitions;
  TurnProbabilities turns;
  std::vector<TurnOverride> turn_overrides;
  /// Empty means every intersection has weight 1. Otherwise grid_side^2 entries.
  std::vector<double> intersection_weights;
  /// Weight given to a missing (outside) destination at boundary intersections.
  double outside_weight = 1.0;
  /// Default exogenous rate at every entrance (vehicles/s).
  double entrance_rate = 0.1;
  /// Per-entrance override, in CityTopology::entrances order.
  std::vector<double> entrance_rates;
  TransmissionModel transmission;
  std::size_t percolation_iterations = 1000;
  SimulationSettings simulation;
  std::uint64_t seed = 1;
};

struct Violation {
  std::string field;
  std::string rule;
};

std::vector<Violation> validate_config(const RunConfig& config);

/// Throws ConfigError listing every violation, if any.
void require_valid(const RunConfig& config);

struct DirectedStreet {
  std::size_t street = 0;
  int direction = 0;

  friend bool operator==(const DirectedStreet&, const DirectedStreet&) = default;
};

struct Intersection {
  std::size_t row = 0;
  std::size_t col = 0;
  double traffic_weight = 1.0;
  /// Outgoing street direction per heading (indexed by Heading), if the
  /// neighbour exists.
  std::array<std::optional<DirectedStreet>, 4> outgoing;
};

struct Street {
  std::size_t id = 0;
  /// Endpoints with a < b. Direction 0 runs a -> b, direction 1 runs b -> a.
  std::size_t a = 0;
  std::size_t b = 0;
  Heading heading0 = Heading::east;
  /// Queue node ids per direction, in front, middle, end order.
  std::array<std::array<std::size_t, 3>, 2> nodes{};
  StreetGeometry geometry;

  std::size_t origin(int direction) const { return direction == 0 ? a : b; }
  std::size_t destination(int direction) const { return direction == 0 ? b : a; }
  Heading heading(int direction) const { return direction == 0 ? heading0 : opposite(heading0); }
};

struct Entrance {
  DirectedStreet target;
  double rate = 0.0;
};

struct CityTopology {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<Intersection> intersections;
  std::vector<Street> streets;
  std::vector<Entrance> entrances;

  std::size_t queue_node_count() const { return streets.size() * 6; }

  static constexpr std::size_t node_id(std::size_t street, int direction, Segment segment) {
    return (street * 2 + static_cast<std::size_t>(direction)) * 3 + static_cast<std::size_t>(segment);
  }
};

/// Square city from the configuration. Throws ConfigError on invalid input.
CityTopology build_city(const RunConfig& config);

/// Rectangular variant (rows, cols >= 1) used for small fixtures such as a
/// single isolated street. Everything except grid_side is taken from config.
CityTopology build_grid_city(std::size_t rows, std::size_t cols, const RunConfig& config);

/// Where a vehicle leaving the end segment of `arriving` goes next.
/// target == nullopt is the exit to the outside world.
struct RouteChoice {
  std::optional<DirectedStreet> target;
  double probability = 0.0;
};

/// Turn distribution for a vehicle reaching the destination intersection of
/// `arriving`. Base turn probabilities (straight, left, right) are scaled by
/// the destination intersection's traffic weight, or by outside_weight when
/// the turn leaves the grid, then renormalised. No U-turns.
std::vector<RouteChoice> route_choices(const CityTopology& topology, const RunConfig& config,
                                       DirectedStreet arriving);

/// Turn probabilities in force at an intersection (override or default).
const TurnProbabilities& turns_at(const RunConfig& config, std::size_t intersection);

}  // namespace vanet
