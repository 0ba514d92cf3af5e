#include "vanet/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <thread>

#include "vanet/csv.hpp"
#include "vanet/traffic_solver.hpp"

namespace vanet {

namespace {

constexpr double kThinningLimit = 0.1;

std::size_t directed_index(DirectedStreet d) { return d.street * 2 + static_cast<std::size_t>(d.direction); }

Aggregate batch_aggregate(const std::vector<double>& batch_means, double overall_mean) {
  Aggregate a;
  a.mean = overall_mean;
  const std::size_t n = batch_means.size();
  if (n < 2) return a;
  double s = 0.0;
  for (double b : batch_means) s += b;
  const double m = s / static_cast<double>(n);
  double ss = 0.0;
  for (double b : batch_means) ss += (b - m) * (b - m);
  a.std_error = std::sqrt(ss / static_cast<double>(n - 1) / static_cast<double>(n));
  return a;
}

}  // namespace

double street_position(const Vehicle& v, const StreetGeometry& geometry) {
  const double along = geometry.start(v.segment) + v.offset;
  return v.at.direction == 0 ? along : geometry.total() - along;
}

bool street_is_open(std::span<const std::pair<double, double>> pts, double length, LinkRule rule) {
  if (pts.empty()) return false;
  if (pts.front().first > pts.front().second) return false;
  if (length - pts.back().first > pts.back().second) return false;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    const double gap = pts[i + 1].first - pts[i].first;
    const double reach = rule == LinkRule::max_range ? std::max(pts[i].second, pts[i + 1].second)
                                                     : std::min(pts[i].second, pts[i + 1].second);
    if (gap > reach) return false;
  }
  return true;
}

Simulator::Simulator(const CityTopology& topology, const RunConfig& config, std::uint64_t seed, std::uint64_t stream)
    : topology_(topology), config_(config), rng_(seed, stream), dt_(config.simulation.dt) {
  if (!(dt_ > 0.0)) throw Error("time step must be positive");
  for (const auto& e : topology.entrances) {
    if (e.rate * dt_ >= kThinningLimit) {
      throw Error("entrance rate " + format_double(e.rate) + " with dt " + format_double(dt_) +
                  " gives rate*dt >= 0.1; reduce dt");
    }
  }
  routes_.resize(topology.streets.size() * 2);
  for (const auto& s : topology.streets) {
    for (int d = 0; d < 2; ++d) {
      Route& r = routes_[directed_index({s.id, d})];
      double acc = 0.0;
      for (const auto& c : route_choices(topology, config, {s.id, d})) {
        acc += c.probability;
        r.cumulative.push_back(acc);
        r.targets.push_back(c.target);
      }
    }
  }
  node_counts_.assign(topology.queue_node_count(), 0);
}

int Simulator::draw_class(std::span<const double> row) {
  const double u = rng_.uniform();
  double acc = 0.0;
  int last = 0;
  for (std::size_t i = 0; i < row.size(); ++i) {
    if (row[i] <= 0.0) continue;
    acc += row[i];
    last = static_cast<int>(i);
    if (u < acc) return last;
  }
  return last;
}

double Simulator::draw_speed(Segment segment, int cls) {
  const auto& c = config_.classes.of(segment)[static_cast<std::size_t>(cls)];
  if (c.v_min == c.v_max) return c.v_min;
  return rng_.uniform(c.v_min, c.v_max);
}

double Simulator::draw_range() {
  const auto& t = config_.transmission;
  if (t.kind == TransmissionModel::Kind::single) return t.range;
  return rng_.uniform() < t.p_type1 ? t.x1 : t.x2;
}

std::uint64_t Simulator::add_vehicle(DirectedStreet at, Segment segment, double offset, int cls, double speed,
                                     double range) {
  if (at.street >= topology_.streets.size() || (at.direction != 0 && at.direction != 1)) {
    throw Error("unknown street direction");
  }
  const auto& classes = config_.classes.of(segment);
  if (cls < 0 || static_cast<std::size_t>(cls) >= classes.size()) throw Error("class out of range for segment");
  if (!(offset >= 0.0 && offset <= config_.geometry.length(segment))) throw Error("offset outside segment");
  if (!(speed > 0.0)) throw Error("speed must be positive");
  Vehicle v;
  v.id = next_id_++;
  v.at = at;
  v.segment = segment;
  v.offset = offset;
  v.speed = speed;
  v.cls = cls;
  v.range = range;
  vehicles_.push_back(v);
  ++node_counts_[node_of(v)];
  ++injected_;
  return v.id;
}

bool Simulator::advance_segment(Vehicle& v) {
  --node_counts_[node_of(v)];
  const auto u = static_cast<std::size_t>(v.cls);
  const auto& t = config_.transitions;
  if (v.segment == Segment::front) {
    v.segment = Segment::middle;
    v.cls = draw_class(t.front_to_middle[u]);
  } else if (v.segment == Segment::middle) {
    v.segment = Segment::end;
    v.cls = draw_class(t.middle_to_end[u]);
  } else {
    const Route& r = routes_[directed_index(v.at)];
    const double x = rng_.uniform() * r.cumulative.back();
    std::size_t k = 0;
    while (k + 1 < r.cumulative.size() && x >= r.cumulative[k]) ++k;
    if (!r.targets[k]) return false;
    v.at = *r.targets[k];
    v.segment = Segment::front;
    v.cls = draw_class(t.end_to_front[u]);
  }
  v.offset = 0.0;
  v.speed = draw_speed(v.segment, v.cls);
  ++node_counts_[node_of(v)];
  return true;
}

void Simulator::step() {
  for (std::size_t i = 0; i < vehicles_.size();) {
    Vehicle& v = vehicles_[i];
    double left = dt_;
    bool inside = true;
    while (true) {
      const double len = config_.geometry.length(v.segment);
      const double to_boundary = (len - v.offset) / v.speed;
      if (left < to_boundary) {
        v.offset += v.speed * left;
        v.odometer += v.speed * left;
        break;
      }
      v.odometer += len - v.offset;
      left -= to_boundary;
      if (!advance_segment(v)) {
        inside = false;
        break;
      }
    }
    if (inside) {
      ++i;
      continue;
    }
    exit_odometers_.push_back(v.odometer);
    ++exited_;
    v = vehicles_.back();
    vehicles_.pop_back();
  }

  for (const auto& e : topology_.entrances) {
    if (e.rate <= 0.0 || !(rng_.uniform() < e.rate * dt_)) continue;
    const int cls = draw_class(config_.transitions.entrance);
    const double speed = draw_speed(Segment::front, cls);
    const double range = draw_range();
    add_vehicle(e.target, Segment::front, 0.0, cls, speed, range);
  }
  time_ += dt_;
  ++steps_;
}

SimulationSnapshot Simulator::snapshot(AverageSize avg) const {
  SimulationSnapshot snap;
  snap.time = time_;
  snap.node_counts = node_counts_;
  const std::size_t n_streets = topology_.streets.size();
  std::vector<std::vector<std::pair<double, double>>> points(n_streets);
  for (const auto& v : vehicles_) points[v.at.street].emplace_back(street_position(v, config_.geometry), v.range);
  snap.street_open.assign(n_streets, 0);
  UnionFind uf(topology_.intersections.size());
  for (std::size_t s = 0; s < n_streets; ++s) {
    auto& p = points[s];
    std::sort(p.begin(), p.end());
    if (street_is_open(p, config_.geometry.total(), config_.simulation.link_rule)) {
      snap.street_open[s] = 1;
      uf.unite(topology_.streets[s].a, topology_.streets[s].b);
    }
  }
  snap.observables = observe(uf, avg);
  return snap;
}

double street_warmup(const RunConfig& config) {
  double total = 0.0;
  for (Segment s : kSegments) {
    double worst = 0.0;
    for (const auto& c : config.classes.of(s)) worst = std::max(worst, config.geometry.length(s) * mean_reciprocal_speed(c));
    total += worst;
  }
  return 3.0 * total;
}

double default_warmup(const CityTopology& topology, const RunConfig& config) {
  const double street = street_warmup(config);
  const auto sol = solve_city(topology, config);
  double inflow = 0.0;
  double stock = 0.0;
  for (double l : sol.lambda) inflow += l;
  for (double r : sol.rho) stock += r;
  if (!(inflow > 0.0)) return street;
  return std::max(street, 3.0 * stock / inflow);
}

SimulationResult run_simulation(const RunConfig& config, const SimulationOptions& options) {
  const auto topology = build_city(config);
  return run_simulation(topology, config, options);
}

SimulationResult run_simulation(const CityTopology& topology, const RunConfig& config,
                                const SimulationOptions& options) {
  require_valid(config);
  const auto& st = config.simulation;
  const double warmup = st.warmup ? *st.warmup : default_warmup(topology, config);
  const double duration = st.duration.value_or(warmup + st.measured);
  if (warmup >= duration) {
    throw Error("warm-up of " + format_double(warmup) + " s leaves nothing of the " + format_double(duration) +
                " s run");
  }
  const auto total_steps = static_cast<std::size_t>(std::llround(duration / st.dt));
  const auto warm_steps = static_cast<std::size_t>(std::llround(warmup / st.dt));
  const std::size_t measured = total_steps - std::min(total_steps, warm_steps);
  const std::size_t batches = st.batches;
  if (measured < batches) throw Error("measured period shorter than one step per batch");
  const auto sample_steps = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(st.sample_interval / st.dt)));

  Simulator sim(topology, config, config.seed, options.stream);
  sim.run_steps(warm_steps);

  const std::size_t nodes = topology.queue_node_count();
  const std::size_t streets = topology.streets.size();
  std::vector<std::vector<double>> node_sum(batches, std::vector<double>(nodes, 0.0));
  std::vector<std::size_t> batch_steps(batches, 0);
  std::vector<std::array<double, 3>> obs_sum(batches, {0.0, 0.0, 0.0});
  std::vector<std::vector<double>> open_sum(batches, std::vector<double>(streets, 0.0));
  std::vector<std::size_t> batch_snaps(batches, 0);

  SimulationResult result;
  result.warmup = warmup;
  result.duration = duration;
  result.batches = batches;

  for (std::size_t k = 0; k < measured; ++k) {
    sim.step();
    const std::size_t b = k * batches / measured;
    const auto& counts = sim.node_counts();
    auto& ns = node_sum[b];
    for (std::size_t j = 0; j < nodes; ++j) ns[j] += static_cast<double>(counts[j]);
    ++batch_steps[b];
    if ((k + 1) % sample_steps != 0) continue;
    auto snap = sim.snapshot(options.avg);
    for (std::size_t o = 0; o < 3; ++o) obs_sum[b][o] += snap.observables[o];
    for (std::size_t s = 0; s < streets; ++s) open_sum[b][s] += snap.street_open[s];
    ++batch_snaps[b];
    if (options.keep_snapshots) result.snapshots.push_back(std::move(snap));
  }

  auto fold = [&](auto value_of, const std::vector<std::size_t>& weights) {
    std::vector<double> means;
    double total = 0.0;
    std::size_t count = 0;
    for (std::size_t b = 0; b < batches; ++b) {
      if (weights[b] == 0) continue;
      const double v = value_of(b);
      total += v;
      count += weights[b];
      means.push_back(v / static_cast<double>(weights[b]));
    }
    return batch_aggregate(means, count ? total / static_cast<double>(count) : 0.0);
  };

  for (std::size_t o = 0; o < 3; ++o) result.observables[o] = fold([&](std::size_t b) { return obs_sum[b][o]; }, batch_snaps);
  result.street_open.resize(streets);
  for (std::size_t s = 0; s < streets; ++s) {
    result.street_open[s] = fold([&](std::size_t b) { return open_sum[b][s]; }, batch_snaps);
  }
  result.node_mean.resize(nodes);
  for (std::size_t j = 0; j < nodes; ++j) {
    result.node_mean[j] = fold([&](std::size_t b) { return node_sum[b][j]; }, batch_steps);
  }
  result.injected = sim.injected();
  result.exited = sim.exited();
  return result;
}

ReplicatedResult run_replications(const CityTopology& topology, const RunConfig& config, std::size_t replications,
                                  std::size_t threads, AverageSize avg) {
  if (replications < 2) throw Error("at least two replications required");
  std::vector<SimulationResult> runs(replications);
  auto work = [&](std::size_t r) {
    SimulationOptions o;
    o.avg = avg;
    o.keep_snapshots = false;
    o.stream = r;
    runs[r] = run_simulation(topology, config, o);
  };
  threads = std::clamp<std::size_t>(threads == 0 ? std::thread::hardware_concurrency() : threads, 1, replications);
  if (threads == 1) {
    for (std::size_t r = 0; r < replications; ++r) work(r);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) {
      pool.emplace_back([&, t] {
        for (std::size_t r = t; r < replications; r += threads) work(r);
      });
    }
    for (auto& th : pool) th.join();
  }

  auto merge = [&](auto pick) {
    std::vector<double> means;
    means.reserve(replications);
    double total = 0.0;
    for (const auto& run : runs) {
      means.push_back(pick(run));
      total += means.back();
    }
    return batch_aggregate(means, total / static_cast<double>(replications));
  };
  ReplicatedResult out;
  out.replications = replications;
  for (std::size_t o = 0; o < 3; ++o) out.observables[o] = merge([o](const SimulationResult& r) { return r.observables[o].mean; });
  out.street_open.resize(topology.streets.size());
  for (std::size_t s = 0; s < out.street_open.size(); ++s) {
    out.street_open[s] = merge([s](const SimulationResult& r) { return r.street_open[s].mean; });
  }
  out.node_mean.resize(topology.queue_node_count());
  for (std::size_t j = 0; j < out.node_mean.size(); ++j) {
    out.node_mean[j] = merge([j](const SimulationResult& r) { return r.node_mean[j].mean; });
  }
  out.section_mean.resize(topology.streets.size());
  for (const auto& st : topology.streets) {
    for (Segment sec : kSegments) {
      const auto k = static_cast<std::size_t>(sec);
      // Section k of direction 0 coincides with section 2 - k of direction 1.
      const std::size_t n0 = st.nodes[0][k];
      const std::size_t n1 = st.nodes[1][2 - k];
      out.section_mean[st.id][k] =
          merge([n0, n1](const SimulationResult& r) { return r.node_mean[n0].mean + r.node_mean[n1].mean; });
    }
  }
  return out;
}

void write_time_series_csv(std::ostream& out, const SimulationResult& result) {
  CsvWriter csv(out);
  csv.header({"time", "street_id", "open"});
  for (const auto& snap : result.snapshots) {
    for (std::size_t s = 0; s < snap.street_open.size(); ++s) {
      csv.cell(snap.time).cell(s).cell(static_cast<int>(snap.street_open[s]));
      csv.end_row();
    }
  }
}

void write_aggregate_csv(std::ostream& out, const SimulationResult& result) {
  CsvWriter csv(out);
  csv.header({"observable", "mean", "stderr"});
  for (auto o : kObservables) {
    const auto& a = result.observables[static_cast<std::size_t>(o)];
    csv.cell(to_string(o)).cell(a.mean).cell(a.std_error);
    csv.end_row();
  }
  for (std::size_t s = 0; s < result.street_open.size(); ++s) {
    csv.cell("street_open_" + std::to_string(s)).cell(result.street_open[s].mean).cell(result.street_open[s].std_error);
    csv.end_row();
  }
}

}  // namespace vanet
