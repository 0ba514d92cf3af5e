// vanet_cli: command-line front end for the connectivity library.

#include "CLI11.hpp"
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "vanet/config_io.hpp"
#include "vanet/csv.hpp"
#include "vanet/percolation.hpp"
#include "vanet/pipeline.hpp"
#include "vanet/scenarios.hpp"
#include "vanet/simulator.hpp"
#include "vanet/street_connectivity.hpp"
#include "vanet/traffic_solver.hpp"

namespace {

using namespace vanet;

struct Common {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::optional<std::size_t> iterations;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config_path, "JSON configuration file");
  cmd->add_option("--seed", c.seed, "master seed (overrides the config)");
  cmd->add_option("--out", c.out, "output CSV path (default: stdout)");
  cmd->add_option("--iterations", c.iterations, "percolation sweeps or samples per point");
}

RunConfig load(const Common& c) {
  RunConfig cfg = c.config_path.empty() ? RunConfig{} : load_config(c.config_path);
  if (c.seed) cfg.seed = *c.seed;
  if (c.iterations) cfg.percolation_iterations = *c.iterations;
  return cfg;
}

template <typename Fn>
void with_output(const std::string& path, Fn&& write) {
  if (path.empty()) {
    write(std::cout);
    return;
  }
  auto out = open_output(path);
  write(out);
  out.flush();
  if (!out) throw Error("failed writing " + path);
}

struct ScenarioArgs {
  Common common;
  std::vector<double> grid;
  std::vector<std::size_t> sides;
  std::vector<double> lambdas;
  std::vector<double> p_values;
  bool simulate = false;
  std::size_t threads = 1;
  bool no_manifest = false;
};

int run_scenario_verb(ScenarioKind kind, const ScenarioArgs& a) {
  const RunConfig cfg = load(a.common);
  ScenarioSpec spec = default_spec(kind, cfg);
  if (!a.grid.empty()) spec.grid = a.grid;
  if (!a.sides.empty()) spec.sides = a.sides;
  if (!a.lambdas.empty()) spec.lambdas = a.lambdas;
  if (!a.p_values.empty()) spec.p_values = a.p_values;
  spec.simulate = a.simulate;
  spec.threads = a.threads;
  const auto rows = run_scenario(spec);
  if (a.common.out.empty()) {
    emit_csv(std::cout, rows);
    return 0;
  }
  emit_csv(a.common.out, rows);
  if (!a.no_manifest) {
    with_output(a.common.out + ".manifest.json", [&](std::ostream& o) { o << manifest_json(spec, rows.size()); });
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Grid-city vehicular network connectivity: traffic, street and lattice analysis"};
  app.require_subcommand(1);
  int status = 0;

  std::vector<ScenarioArgs> scenario_args(5);
  for (int k = 1; k <= 5; ++k) {
    auto kind = static_cast<ScenarioKind>(k);
    auto& a = scenario_args[static_cast<std::size_t>(k - 1)];
    auto* cmd = app.add_subcommand(verb_of(kind), std::string("run the ") + to_string(kind) + " scenario");
    add_common(cmd, a.common);
    cmd->add_option("--grid", a.grid, "sweep values (strictly increasing)")->delimiter(',');
    cmd->add_option("--threads", a.threads, "worker threads for percolation sweeps (0 = all cores)");
    cmd->add_flag("--no-manifest", a.no_manifest, "do not write <out>.manifest.json");
    if (kind == ScenarioKind::edge_prob_sweep) cmd->add_option("--sides", a.sides, "lattice sides")->delimiter(',');
    if (kind == ScenarioKind::entrance_rate_sweep) cmd->add_flag("--simulate", a.simulate, "add simulator estimates");
    if (kind == ScenarioKind::range_sweep) cmd->add_option("--lambdas", a.lambdas, "entrance rates")->delimiter(',');
    if (kind == ScenarioKind::dual_range) {
      cmd->add_option("--p-values", a.p_values, "probabilities of the short range")->delimiter(',');
    }
    cmd->callback([&status, kind, &a] { status = run_scenario_verb(kind, a); });
  }

  Common vc;
  auto* validate = app.add_subcommand("validate-config", "check a configuration and list every violation");
  add_common(validate, vc);
  validate->callback([&] {
    const RunConfig cfg = load(vc);
    const auto problems = validate_config(cfg);
    for (const auto& v : problems) std::cout << v.field << ": " << v.rule << "\n";
    if (problems.empty()) {
      std::cout << "ok " << config_hash(cfg) << "\n";
    } else {
      status = 1;
    }
  });

  Common tc;
  auto* traffic = app.add_subcommand("traffic", "solve the traffic equations and write per-class rates");
  add_common(traffic, tc);
  traffic->callback([&] {
    const RunConfig cfg = load(tc);
    const auto topo = build_city(cfg);
    const auto sol = solve_city(topo, cfg);
    with_output(tc.out, [&](std::ostream& o) { write_traffic_csv(o, sol); });
  });

  Common sc;
  auto* street = app.add_subcommand("street-prob", "per-street open probabilities for a configuration");
  add_common(street, sc);
  street->callback([&] {
    const RunConfig cfg = load(sc);
    const auto topo = build_city(cfg);
    const auto sol = solve_city(topo, cfg);
    const auto streets = street_probabilities(topo, sol, cfg);
    with_output(sc.out, [&](std::ostream& o) { write_street_csv(o, streets); });
  });

  Common pc;
  std::size_t side = 16;
  bool exhaustive = false;
  bool susceptibility = false;
  std::vector<double> p_grid;
  std::size_t threads = 1;
  auto* perc = app.add_subcommand("percolate", "bond percolation on a square lattice");
  add_common(perc, pc);
  perc->add_option("--side", side, "lattice side")->check(CLI::Range(2, 4096));
  perc->add_flag("--exhaustive", exhaustive, "exact enumeration of every bond subset (at most 24 bonds)");
  perc->add_flag("--susceptibility", susceptibility, "average cluster size as sum s^2 / sum s without the giant");
  perc->add_option("--p-grid", p_grid, "canonical output at these p values instead of per-m output")->delimiter(',');
  perc->add_option("--threads", threads, "worker threads (0 = all cores)");
  perc->callback([&] {
    const RunConfig cfg = load(pc);
    const AverageSize avg = susceptibility ? AverageSize::susceptibility : AverageSize::mean_over_clusters;
    MicrocanonicalRecord rec;
    if (exhaustive) {
      rec = exhaustive_microcanonical(side, avg);
    } else {
      rec = accumulate_sweeps(side, cfg.percolation_iterations, cfg.seed, {avg, threads});
    }
    if (p_grid.empty()) {
      with_output(pc.out, [&](std::ostream& o) { write_microcanonical_csv(o, rec); });
    } else {
      const auto curve = canonical_convolve(rec, p_grid);
      with_output(pc.out, [&](std::ostream& o) { write_canonical_csv(o, curve); });
    }
  });

  Common mc;
  std::string series;
  auto* sim = app.add_subcommand("simulate", "microscopic vehicle simulation of the configured city");
  add_common(sim, mc);
  sim->add_option("--series", series, "also write the time,street_id,open series here");
  sim->callback([&] {
    const RunConfig cfg = load(mc);
    SimulationOptions opts;
    opts.keep_snapshots = !series.empty();
    const auto result = run_simulation(cfg, opts);
    with_output(mc.out, [&](std::ostream& o) { write_aggregate_csv(o, result); });
    if (!series.empty()) with_output(series, [&](std::ostream& o) { write_time_series_csv(o, result); });
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return status;
}
