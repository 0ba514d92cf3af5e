#include "vanet/scenarios.hpp"

#include <algorithm>
#include <cmath>
#include "json.hpp"

#include "vanet/config_io.hpp"
#include "vanet/csv.hpp"
#include "vanet/percolation.hpp"
#include "vanet/pipeline.hpp"
#include "vanet/random.hpp"
#include "vanet/simulator.hpp"

namespace vanet {

namespace {

constexpr std::uint64_t kWeightStream = 0x5745494748540000ULL;

std::uint64_t derive_seed(std::uint64_t seed, ScenarioKind kind, std::size_t curve, std::size_t point) {
  const std::uint64_t stream = (static_cast<std::uint64_t>(kind) << 48) | (static_cast<std::uint64_t>(curve) << 24) |
                               static_cast<std::uint64_t>(point);
  Rng rng(seed, stream);
  return rng();
}

std::string tagged(const char* var, const char* key, double value) {
  return std::string(var) + "_" + key + "_" + format_double(value);
}

double mean_of(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

struct Emitter {
  std::vector<ResultRow>& rows;
  std::string scenario;
  std::size_t side;
  std::string var;
  double value;

  void add(const std::string& observable, double mean, double err) {
    rows.push_back({scenario, side, var, value, observable, mean, err});
  }
  void add(const ObservableEstimate& est, const std::string& prefix = {}) {
    for (auto o : kObservables) add(prefix + to_string(o), est.mean_of(o), est.error_of(o));
  }
};

/// Solves the city and returns per-street probabilities.
std::vector<double> city_probabilities(const RunConfig& config) {
  const auto topology = build_city(config);
  const auto traffic = solve_city(topology, config);
  return open_probabilities(street_probabilities(topology, traffic, config));
}

void run_edge_prob(const ScenarioSpec& spec, std::vector<ResultRow>& rows) {
  SweepOptions opts;
  opts.threads = spec.threads;
  for (std::size_t side : spec.sides) {
    const auto record = accumulate_sweeps(side, spec.config.percolation_iterations, derive_seed(spec.seed, spec.kind, side, 0), opts);
    const auto curve = canonical_convolve(record, spec.grid);
    for (std::size_t i = 0; i < curve.p.size(); ++i) {
      Emitter e{rows, verb_of(spec.kind), side, "p", curve.p[i]};
      for (auto o : kObservables) e.add(to_string(o), curve.mean_of(o)[i], curve.error_of(o)[i]);
    }
  }
}

void run_entrance_rate(const ScenarioSpec& spec, std::vector<ResultRow>& rows) {
  const std::size_t side = spec.config.grid_side;
  for (std::size_t i = 0; i < spec.grid.size(); ++i) {
    RunConfig cfg = spec.config;
    cfg.entrance_rate = spec.grid[i];
    const auto probs = city_probabilities(cfg);
    const auto est = inhomogeneous_sample(side, probs, cfg.percolation_iterations, derive_seed(spec.seed, spec.kind, 0, i));
    Emitter e{rows, verb_of(spec.kind), side, "lambda", spec.grid[i]};
    e.add(est);
    e.add("street_open_mean", mean_of(probs), 0.0);
    if (!spec.simulate) continue;
    cfg.seed = derive_seed(spec.seed, spec.kind, 1, i);
    SimulationOptions sopts;
    sopts.keep_snapshots = false;
    const auto sim = run_simulation(cfg, sopts);
    for (auto o : kObservables) {
      const auto& a = sim.observables[static_cast<std::size_t>(o)];
      e.add(std::string("sim_") + to_string(o), a.mean, a.std_error);
    }
    std::vector<double> open;
    double err = 0.0;
    for (const auto& s : sim.street_open) {
      open.push_back(s.mean);
      err += s.std_error;
    }
    e.add("sim_street_open_mean", mean_of(open), sim.street_open.empty() ? 0.0 : err / static_cast<double>(open.size()));
  }
}

void run_range(const ScenarioSpec& spec, std::vector<ResultRow>& rows) {
  const std::size_t side = spec.config.grid_side;
  for (std::size_t c = 0; c < spec.lambdas.size(); ++c) {
    RunConfig base = spec.config;
    base.entrance_rate = spec.lambdas[c];
    base.transmission.kind = TransmissionModel::Kind::single;
    // Densities do not depend on the range, so solve once per curve.
    const auto topology = build_city(base);
    const auto traffic = solve_city(topology, base);
    for (std::size_t i = 0; i < spec.grid.size(); ++i) {
      RunConfig cfg = base;
      cfg.transmission.range = spec.grid[i];
      const auto probs = open_probabilities(street_probabilities(topology, traffic, cfg));
      const auto est = inhomogeneous_sample(side, probs, cfg.percolation_iterations, derive_seed(spec.seed, spec.kind, c, i));
      Emitter e{rows, verb_of(spec.kind), side, tagged("R", "lambda", spec.lambdas[c]), spec.grid[i]};
      e.add(est);
      e.add("street_open_mean", mean_of(probs), 0.0);
    }
  }
}

void run_asymmetric(const ScenarioSpec& spec, std::vector<ResultRow>& rows) {
  const std::size_t side = spec.config.grid_side;
  RunConfig base = spec.config;
  Rng wr(spec.seed, kWeightStream);
  base.intersection_weights.resize(side * side);
  for (double& w : base.intersection_weights) w = wr.uniform(1.0, 2.0);
  SweepOptions opts;
  opts.threads = spec.threads;
  const auto record = accumulate_sweeps(side, base.percolation_iterations, derive_seed(spec.seed, spec.kind, 1, 0), opts);
  for (std::size_t i = 0; i < spec.grid.size(); ++i) {
    RunConfig cfg = base;
    cfg.entrance_rate = spec.grid[i];
    const auto probs = city_probabilities(cfg);
    const auto bounds = homogeneous_bounds(record, probs);
    const auto est = inhomogeneous_sample(side, probs, cfg.percolation_iterations, derive_seed(spec.seed, spec.kind, 0, i));
    Emitter e{rows, verb_of(spec.kind), side, "lambda", spec.grid[i]};
    e.add(est);
    e.add(bounds.lower, "lower_");
    e.add(bounds.upper, "upper_");
    e.add("p_min", bounds.p_min, 0.0);
    e.add("p_max", bounds.p_max, 0.0);
  }
}

void run_dual(const ScenarioSpec& spec, std::vector<ResultRow>& rows) {
  const std::size_t side = spec.config.grid_side;
  for (std::size_t c = 0; c < spec.p_values.size(); ++c) {
    for (std::size_t i = 0; i < spec.grid.size(); ++i) {
      RunConfig cfg = spec.config;
      cfg.entrance_rate = spec.grid[i];
      cfg.transmission.kind = TransmissionModel::Kind::dual;
      cfg.transmission.p_type1 = spec.p_values[c];
      const auto probs = city_probabilities(cfg);
      const auto est = inhomogeneous_sample(side, probs, cfg.percolation_iterations, derive_seed(spec.seed, spec.kind, c, i));
      Emitter e{rows, verb_of(spec.kind), side, tagged("lambda", "p", spec.p_values[c]), spec.grid[i]};
      e.add(est);
      e.add("street_open_mean", mean_of(probs), 0.0);
    }
  }
}

}  // namespace

const char* to_string(ScenarioKind kind) {
  switch (kind) {
    case ScenarioKind::edge_prob_sweep:
      return "edge_prob_sweep";
    case ScenarioKind::entrance_rate_sweep:
      return "entrance_rate_sweep";
    case ScenarioKind::range_sweep:
      return "range_sweep";
    case ScenarioKind::asymmetric_bounds:
      return "asymmetric_bounds";
    case ScenarioKind::dual_range:
      return "dual_range";
  }
  return "?";
}

std::string verb_of(ScenarioKind kind) { return "scenario" + std::to_string(static_cast<int>(kind)); }

std::vector<double> linear_grid(double lo, double hi, double step) {
  if (!(step > 0.0) || !(hi >= lo)) throw Error("grid needs step > 0 and hi >= lo");
  std::vector<double> g;
  const auto n = static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9));
  for (std::size_t i = 0; i <= n; ++i) g.push_back(lo + static_cast<double>(i) * step);
  return g;
}

ScenarioSpec default_spec(ScenarioKind kind, const RunConfig& config) {
  ScenarioSpec s;
  s.kind = kind;
  s.config = config;
  s.seed = config.seed;
  s.sides = {config.grid_side};
  switch (kind) {
    case ScenarioKind::edge_prob_sweep:
      s.grid = linear_grid(0.0, 1.0, 0.02);
      s.sides = {4, 7, 16};
      break;
    case ScenarioKind::entrance_rate_sweep:
    case ScenarioKind::asymmetric_bounds:
      s.grid = linear_grid(0.0, 0.3, 0.025);
      break;
    case ScenarioKind::range_sweep:
      s.grid = linear_grid(100.0, 600.0, 25.0);
      s.lambdas = {0.1, 0.2, 0.3};
      break;
    case ScenarioKind::dual_range:
      s.grid = linear_grid(0.0, 0.3, 0.025);
      s.p_values = {0.0, 0.25, 0.5, 0.75, 1.0};
      s.config.transmission.kind = TransmissionModel::Kind::dual;
      break;
  }
  return s;
}

std::vector<std::string> validate_spec(const ScenarioSpec& spec) {
  std::vector<std::string> out;
  if (spec.grid.size() < 2) out.push_back("grid: at least 2 sweep points required");
  for (std::size_t i = 1; i < spec.grid.size(); ++i) {
    if (!(spec.grid[i] > spec.grid[i - 1])) {
      out.push_back("grid: values must be strictly increasing");
      break;
    }
  }
  for (double g : spec.grid) {
    if (!std::isfinite(g) || g < 0.0) {
      out.push_back("grid: values must be finite and nonnegative");
      break;
    }
  }
  if (spec.kind == ScenarioKind::edge_prob_sweep) {
    for (double g : spec.grid) {
      if (g > 1.0) {
        out.push_back("grid: edge probabilities must lie in [0, 1]");
        break;
      }
    }
    if (spec.sides.empty()) out.push_back("sides: at least one lattice side required");
    for (auto side : spec.sides) {
      if (side < 2) out.push_back("sides: every side must be at least 2");
    }
  }
  if (spec.kind == ScenarioKind::range_sweep) {
    if (spec.grid.front() <= 0.0) out.push_back("grid: ranges must be positive");
    if (spec.lambdas.empty()) out.push_back("lambdas: at least one entrance rate required");
  }
  if (spec.kind == ScenarioKind::dual_range) {
    if (spec.p_values.empty()) out.push_back("p_values: at least one probability required");
    for (double p : spec.p_values) {
      if (!(p >= 0.0 && p <= 1.0)) out.push_back("p_values: probabilities must lie in [0, 1]");
    }
  }
  for (const auto& v : validate_config(spec.config)) out.push_back(v.field + ": " + v.rule);
  return out;
}

std::vector<ResultRow> run_scenario(const ScenarioSpec& spec) {
  const auto problems = validate_spec(spec);
  if (!problems.empty()) {
    std::string msg = verb_of(spec.kind) + ": invalid scenario";
    for (const auto& p : problems) msg += "\n  " + p;
    throw ConfigError(msg);
  }
  std::vector<ResultRow> rows;
  try {
    switch (spec.kind) {
      case ScenarioKind::edge_prob_sweep:
        run_edge_prob(spec, rows);
        break;
      case ScenarioKind::entrance_rate_sweep:
        run_entrance_rate(spec, rows);
        break;
      case ScenarioKind::range_sweep:
        run_range(spec, rows);
        break;
      case ScenarioKind::asymmetric_bounds:
        run_asymmetric(spec, rows);
        break;
      case ScenarioKind::dual_range:
        run_dual(spec, rows);
        break;
    }
  } catch (const Error& e) {
    throw Error(verb_of(spec.kind) + " (" + to_string(spec.kind) + "): " + e.what());
  }
  return rows;
}

void emit_csv(std::ostream& out, const std::vector<ResultRow>& rows) {
  CsvWriter csv(out);
  csv.header({"scenario", "side", "sweep_var", "sweep_value", "observable", "mean", "stderr"});
  for (const auto& r : rows) {
    csv.cell(r.scenario).cell(r.side).cell(r.sweep_var).cell(r.sweep_value).cell(r.observable).cell(r.mean).cell(r.std_error);
    csv.end_row();
  }
}

void emit_csv(const std::string& path, const std::vector<ResultRow>& rows) {
  auto out = open_output(path);
  emit_csv(out, rows);
  out.flush();
  if (!out) throw Error("failed writing " + path);
}

std::string manifest_json(const ScenarioSpec& spec, std::size_t rows) {
  nlohmann::ordered_json j;
  j["scenario"] = verb_of(spec.kind);
  j["kind"] = to_string(spec.kind);
  j["version"] = kVersion;
  j["seed"] = spec.seed;
  j["config_hash"] = config_hash(spec.config);
  j["iterations"] = spec.config.percolation_iterations;
  j["grid"] = spec.grid;
  j["sides"] = spec.sides;
  if (!spec.lambdas.empty()) j["lambdas"] = spec.lambdas;
  if (!spec.p_values.empty()) j["p_values"] = spec.p_values;
  j["simulate"] = spec.simulate;
  j["rows"] = rows;
  j["config"] = nlohmann::ordered_json::parse(dump_config(spec.config));
  return j.dump(2) + "\n";
}

}  // namespace vanet
