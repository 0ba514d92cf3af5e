#include "vanet/core_model.hpp"

#include <cmath>
#include <sstream>

namespace vanet {

namespace {

constexpr double kStochasticTolerance = 1e-12;

bool finite_positive(double x) { return std::isfinite(x) && x > 0.0; }

std::string format_number(double x) {
  std::ostringstream out;
  out.precision(15);
  out << x;
  return out.str();
}

void check_distribution(const std::vector<double>& row, const std::string& field,
                        std::vector<Violation>& out) {
  double sum = 0.0;
  for (double v : row) {
    if (!(v >= 0.0 && v <= 1.0)) {
      out.push_back({field, "entries must lie in [0, 1]"});
      return;
    }
    sum += v;
  }
  if (std::abs(sum - 1.0) > kStochasticTolerance) {
    out.push_back({field, "probabilities sum to " + format_number(sum) + ", expected 1"});
  }
}

void check_matrix(const StochasticMatrix& m, std::size_t rows, std::size_t cols,
                  const std::string& field, std::vector<Violation>& out) {
  if (m.size() != rows) {
    out.push_back({field, "expected " + std::to_string(rows) + " rows"});
    return;
  }
  for (std::size_t i = 0; i < rows; ++i) {
    const std::string row_field = field + "[" + std::to_string(i) + "]";
    if (m[i].size() != cols) {
      out.push_back({row_field, "expected " + std::to_string(cols) + " columns"});
      continue;
    }
    check_distribution(m[i], row_field, out);
  }
}

void check_turns(const TurnProbabilities& t, const std::string& field, std::vector<Violation>& out) {
  check_distribution({t.straight, t.left, t.right}, field, out);
}

void check_classes(const std::vector<SpeedClass>& classes, std::size_t expected,
                   const std::string& field, std::vector<Violation>& out) {
  if (classes.size() != expected) {
    out.push_back({field, "expected exactly " + std::to_string(expected) + " speed classes"});
  }
  for (std::size_t i = 0; i < classes.size(); ++i) {
    const auto& c = classes[i];
    const std::string f = field + "[" + std::to_string(i) + "]";
    if (!finite_positive(c.v_min)) {
      out.push_back({f, "v_min > 0 required"});
    } else if (!std::isfinite(c.v_max) || c.v_max < c.v_min) {
      out.push_back({f, "v_min <= v_max required"});
    }
  }
}

std::size_t expected_entrance_count(const RunConfig& config) { return 4 * config.grid_side; }

const std::array<int, 4> kRowDelta{-1, 0, 1, 0};
const std::array<int, 4> kColDelta{0, 1, 0, -1};

}  // namespace

const char* to_string(Segment segment) {
  switch (segment) {
    case Segment::front:
      return "front";
    case Segment::middle:
      return "middle";
    case Segment::end:
      return "end";
  }
  return "?";
}

Heading opposite(Heading h) { return static_cast<Heading>((static_cast<int>(h) + 2) % 4); }
Heading turn_left(Heading h) { return static_cast<Heading>((static_cast<int>(h) + 3) % 4); }
Heading turn_right(Heading h) { return static_cast<Heading>((static_cast<int>(h) + 1) % 4); }

double mean_reciprocal_speed(const SpeedClass& cls) {
  const double a = cls.v_min;
  const double b = cls.v_max;
  if (!(a > 0.0)) throw Error("speed class '" + cls.name + "': v_min must be positive");
  if (b < a) throw Error("speed class '" + cls.name + "': v_max < v_min");
  if (b == a) return 1.0 / a;
  return std::log(b / a) / (b - a);
}

double StreetGeometry::length(Segment s) const {
  switch (s) {
    case Segment::front:
      return len_front;
    case Segment::middle:
      return len_middle;
    case Segment::end:
      return len_end;
  }
  return 0.0;
}

double StreetGeometry::start(Segment s) const {
  switch (s) {
    case Segment::front:
      return 0.0;
    case Segment::middle:
      return len_front;
    case Segment::end:
      return len_front + len_middle;
  }
  return 0.0;
}

const std::vector<SpeedClass>& SegmentClasses::of(Segment s) const {
  switch (s) {
    case Segment::front:
      return front;
    case Segment::middle:
      return middle;
    case Segment::end:
      return end;
  }
  return middle;
}

std::vector<Violation> validate_config(const RunConfig& config) {
  std::vector<Violation> out;
  const std::size_t n = config.grid_side;
  if (n < 2) out.push_back({"grid_side", "grid_side >= 2 required"});

  const auto& g = config.geometry;
  if (!finite_positive(g.len_front)) out.push_back({"geometry.front", "length > 0 required"});
  if (!finite_positive(g.len_middle)) out.push_back({"geometry.middle", "length > 0 required"});
  if (!finite_positive(g.len_end)) out.push_back({"geometry.end", "length > 0 required"});

  check_classes(config.classes.front, 2, "speed_classes.front", out);
  check_classes(config.classes.middle, 3, "speed_classes.middle", out);
  check_classes(config.classes.end, 2, "speed_classes.end", out);

  const auto& t = config.transitions;
  check_matrix(t.front_to_middle, 2, 3, "class_transitions.front_to_middle", out);
  check_matrix(t.middle_to_end, 3, 2, "class_transitions.middle_to_end", out);
  check_matrix(t.end_to_front, 2, 2, "class_transitions.end_to_front", out);
  if (t.entrance.size() != 2) {
    out.push_back({"class_transitions.entrance", "expected 2 entries"});
  } else {
    check_distribution(t.entrance, "class_transitions.entrance", out);
  }

  check_turns(config.turns, "turns", out);
  for (std::size_t i = 0; i < config.turn_overrides.size(); ++i) {
    const auto& o = config.turn_overrides[i];
    const std::string field = "turns.overrides[" + std::to_string(i) + "] (intersection " +
                              std::to_string(o.intersection) + ")";
    if (o.intersection >= n * n) {
      out.push_back({field, "intersection id out of range"});
      continue;
    }
    check_turns(o.turns, field, out);
  }

  if (!config.intersection_weights.empty()) {
    if (config.intersection_weights.size() != n * n) {
      out.push_back({"intersection_weights", "expected grid_side^2 entries"});
    }
    for (std::size_t i = 0; i < config.intersection_weights.size(); ++i) {
      if (!finite_positive(config.intersection_weights[i])) {
        out.push_back({"intersection_weights[" + std::to_string(i) + "]", "traffic weight > 0 required"});
      }
    }
  }
  if (!finite_positive(config.outside_weight)) out.push_back({"turns.outside_weight", "> 0 required"});

  if (!(std::isfinite(config.entrance_rate) && config.entrance_rate >= 0.0)) {
    out.push_back({"entrances.rate", "rate >= 0 required"});
  }
  if (!config.entrance_rates.empty()) {
    if (config.entrance_rates.size() != expected_entrance_count(config)) {
      out.push_back({"entrances.rates", "expected 4 * grid_side entries"});
    }
    for (std::size_t i = 0; i < config.entrance_rates.size(); ++i) {
      const double r = config.entrance_rates[i];
      if (!(std::isfinite(r) && r >= 0.0)) {
        out.push_back({"entrances.rates[" + std::to_string(i) + "]", "rate >= 0 required"});
      }
    }
  }

  const auto& tx = config.transmission;
  if (tx.kind == TransmissionModel::Kind::single) {
    if (!finite_positive(tx.range)) out.push_back({"transmission.range", "R > 0 required"});
  } else {
    if (!finite_positive(tx.x1)) out.push_back({"transmission.x1", "x1 > 0 required"});
    if (!(std::isfinite(tx.x2) && tx.x1 < tx.x2)) out.push_back({"transmission.x2", "x1 < x2 required"});
    if (!(tx.p_type1 >= 0.0 && tx.p_type1 <= 1.0)) {
      out.push_back({"transmission.p_type1", "0 <= p <= 1 required"});
    }
  }

  if (config.percolation_iterations < 1) out.push_back({"percolation.iterations", ">= 1 required"});

  const auto& s = config.simulation;
  if (!finite_positive(s.dt)) out.push_back({"simulation.dt", "dt > 0 required"});
  if (s.duration && !finite_positive(*s.duration)) out.push_back({"simulation.duration", "duration > 0 required"});
  if (!finite_positive(s.measured)) out.push_back({"simulation.measured", "measured > 0 required"});
  if (!(std::isfinite(s.sample_interval) && s.sample_interval >= s.dt)) {
    out.push_back({"simulation.sample_interval", "sample_interval >= dt required"});
  }
  if (s.batches < 20) out.push_back({"simulation.batches", "batch count >= 20 required"});
  if (s.warmup && !(std::isfinite(*s.warmup) && *s.warmup >= 0.0)) {
    out.push_back({"simulation.warmup", "warm-up >= 0 required"});
  }
  return out;
}

void require_valid(const RunConfig& config) {
  const auto violations = validate_config(config);
  if (violations.empty()) return;
  std::string message = "invalid configuration:";
  for (const auto& v : violations) message += "\n  " + v.field + ": " + v.rule;
  throw ConfigError(message);
}

CityTopology build_grid_city(std::size_t rows, std::size_t cols, const RunConfig& config) {
  if (rows < 1 || cols < 1 || rows * cols < 2) throw ConfigError("grid needs at least two intersections");
  CityTopology city;
  city.rows = rows;
  city.cols = cols;
  city.intersections.resize(rows * cols);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      auto& x = city.intersections[r * cols + c];
      x.row = r;
      x.col = c;
      if (config.intersection_weights.size() == rows * cols) {
        x.traffic_weight = config.intersection_weights[r * cols + c];
      }
    }
  }

  // Horizontal streets first, then vertical, matching grid_bonds().
  auto add_street = [&](std::size_t a, std::size_t b, Heading heading0) {
    Street s;
    s.id = city.streets.size();
    s.a = a;
    s.b = b;
    s.heading0 = heading0;
    s.geometry = config.geometry;
    for (int d = 0; d < 2; ++d) {
      for (Segment seg : kSegments) {
        s.nodes[d][static_cast<std::size_t>(seg)] = CityTopology::node_id(s.id, d, seg);
      }
    }
    city.intersections[a].outgoing[static_cast<std::size_t>(heading0)] = DirectedStreet{s.id, 0};
    city.intersections[b].outgoing[static_cast<std::size_t>(opposite(heading0))] = DirectedStreet{s.id, 1};
    city.streets.push_back(s);
  };
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c + 1 < cols; ++c) add_street(r * cols + c, r * cols + c + 1, Heading::east);
  }
  for (std::size_t r = 0; r + 1 < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) add_street(r * cols + c, (r + 1) * cols + c, Heading::south);
  }

  // A vehicle arriving from a missing side continues straight into the grid.
  for (std::size_t id = 0; id < city.intersections.size(); ++id) {
    const auto& x = city.intersections[id];
    for (int h = 0; h < 4; ++h) {
      const long nr = static_cast<long>(x.row) + kRowDelta[h];
      const long nc = static_cast<long>(x.col) + kColDelta[h];
      const bool missing = nr < 0 || nc < 0 || nr >= static_cast<long>(rows) || nc >= static_cast<long>(cols);
      if (!missing) continue;
      const auto inward = opposite(static_cast<Heading>(h));
      if (const auto& target = x.outgoing[static_cast<std::size_t>(inward)]) {
        city.entrances.push_back({*target, config.entrance_rate});
      }
    }
  }
  if (!config.entrance_rates.empty()) {
    if (config.entrance_rates.size() != city.entrances.size()) {
      throw ConfigError("entrances.rates: expected " + std::to_string(city.entrances.size()) + " entries");
    }
    for (std::size_t i = 0; i < city.entrances.size(); ++i) city.entrances[i].rate = config.entrance_rates[i];
  }
  return city;
}

CityTopology build_city(const RunConfig& config) {
  require_valid(config);
  return build_grid_city(config.grid_side, config.grid_side, config);
}

const TurnProbabilities& turns_at(const RunConfig& config, std::size_t intersection) {
  for (const auto& o : config.turn_overrides) {
    if (o.intersection == intersection) return o.turns;
  }
  return config.turns;
}

std::vector<RouteChoice> route_choices(const CityTopology& topology, const RunConfig& config,
                                       DirectedStreet arriving) {
  const Street& street = topology.streets.at(arriving.street);
  const std::size_t at = street.destination(arriving.direction);
  const Heading heading = street.heading(arriving.direction);
  const Intersection& x = topology.intersections[at];
  const TurnProbabilities& base = turns_at(config, at);

  const std::array<std::pair<Heading, double>, 3> options{
      {{heading, base.straight}, {turn_left(heading), base.left}, {turn_right(heading), base.right}}};

  std::vector<RouteChoice> choices;
  double exit_mass = 0.0;
  double total = 0.0;
  for (const auto& [h, p] : options) {
    const auto& out = x.outgoing[static_cast<std::size_t>(h)];
    if (out) {
      const double w = p * topology.intersections[topology.streets[out->street].destination(out->direction)].traffic_weight;
      choices.push_back({out, w});
      total += w;
    } else {
      exit_mass += p * config.outside_weight;
      total += p * config.outside_weight;
    }
  }
  if (total <= 0.0) return {{std::nullopt, 1.0}};
  for (auto& c : choices) c.probability /= total;
  if (exit_mass > 0.0) choices.push_back({std::nullopt, exit_mass / total});
  return choices;
}

}  // namespace vanet
