#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "vanet/core_model.hpp"

namespace vanet {

inline constexpr const char* kVersion = "0.1.0";

enum class ScenarioKind : std::uint8_t {
  edge_prob_sweep = 1,
  entrance_rate_sweep = 2,
  range_sweep = 3,
  asymmetric_bounds = 4,
  dual_range = 5,
};

const char* to_string(ScenarioKind kind);
/// "scenario1".."scenario5".
std::string verb_of(ScenarioKind kind);

struct ScenarioSpec {
  ScenarioKind kind = ScenarioKind::edge_prob_sweep;
  /// Sweep values: p (1), lambda (2, 4, 5) or R in metres (3).
  std::vector<double> grid;
  /// Lattice sides; only scenario 1 uses more than config.grid_side.
  std::vector<std::size_t> sides;
  RunConfig config;
  std::uint64_t seed = 1;
  /// Scenario 3: entrance rates, one curve each.
  std::vector<double> lambdas;
  /// Scenario 5: P(short range) values, one curve each.
  std::vector<double> p_values;
  /// Scenario 2: also run the simulator at every grid point.
  bool simulate = false;
  std::size_t threads = 1;
};

/// Paper-scale defaults on top of `config`: grids, sides, curve lists.
ScenarioSpec default_spec(ScenarioKind kind, const RunConfig& config);

/// Empty when the spec is usable: grid strictly increasing with at least
/// two points, sides valid, config valid.
std::vector<std::string> validate_spec(const ScenarioSpec& spec);

struct ResultRow {
  std::string scenario;
  std::size_t side = 0;
  std::string sweep_var;
  double sweep_value = 0.0;
  std::string observable;
  double mean = 0.0;
  double std_error = 0.0;
};

/// Runs one scenario. Errors from lower layers are rethrown as Error with the
/// scenario name prefixed.
std::vector<ResultRow> run_scenario(const ScenarioSpec& spec);

/// Columns: scenario,side,sweep_var,sweep_value,observable,mean,stderr.
void emit_csv(std::ostream& out, const std::vector<ResultRow>& rows);
void emit_csv(const std::string& path, const std::vector<ResultRow>& rows);

/// JSON manifest with everything needed to regenerate the CSV.
std::string manifest_json(const ScenarioSpec& spec, std::size_t rows);

/// Evenly spaced grid lo, lo + step, ..., hi (each point computed as
/// lo + i * step, so no drift).
std::vector<double> linear_grid(double lo, double hi, double step);

}  // namespace vanet
