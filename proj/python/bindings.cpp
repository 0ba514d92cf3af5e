#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "vanet/config_io.hpp"
#include "vanet/percolation.hpp"
#include "vanet/pipeline.hpp"
#include "vanet/scenarios.hpp"
#include "vanet/simulator.hpp"
#include "vanet/street_connectivity.hpp"
#include "vanet/traffic_solver.hpp"

namespace py = pybind11;
using namespace vanet;

namespace {

RunConfig config_from(const std::optional<std::string>& text) { return text ? parse_config(*text) : RunConfig{}; }

py::dict observables_dict(const std::array<std::vector<double>, 3>& mean, const std::array<std::vector<double>, 3>& err) {
  py::dict d;
  for (auto o : kObservables) {
    const auto k = static_cast<std::size_t>(o);
    d[to_string(o)] = py::make_tuple(mean[k], err[k]);
  }
  return d;
}

py::dict estimate_dict(const ObservableEstimate& e) {
  py::dict d;
  for (auto o : kObservables) d[to_string(o)] = py::make_tuple(e.mean_of(o), e.error_of(o));
  return d;
}

BoundForm form_of(const std::string& s) {
  if (s == "approximate") return BoundForm::approximate;
  if (s == "exact") return BoundForm::exact;
  throw ConfigError("bound form must be 'approximate' or 'exact'");
}

TypeWeighting weighting_of(const std::string& s) {
  if (s == "type2_count") return TypeWeighting::type2_count;
  if (s == "printed") return TypeWeighting::printed;
  throw ConfigError("weighting must be 'type2_count' or 'printed'");
}

ScenarioSpec spec_for(int number, const std::optional<std::string>& config, std::optional<std::uint64_t> seed,
                      const std::optional<std::vector<double>>& grid,
                      const std::optional<std::vector<std::size_t>>& sides,
                      const std::optional<std::vector<double>>& lambdas,
                      const std::optional<std::vector<double>>& p_values, bool simulate, std::size_t threads) {
  if (number < 1 || number > 5) throw ConfigError("scenario number must be 1..5");
  RunConfig cfg = config_from(config);
  if (seed) cfg.seed = *seed;
  ScenarioSpec spec = default_spec(static_cast<ScenarioKind>(number), cfg);
  if (grid) spec.grid = *grid;
  if (sides) spec.sides = *sides;
  if (lambdas) spec.lambdas = *lambdas;
  if (p_values) spec.p_values = *p_values;
  spec.simulate = simulate;
  spec.threads = threads;
  return spec;
}

}  // namespace

PYBIND11_MODULE(_vanet, m) {
  m.doc() = "Grid-city vehicular connectivity core";
  m.attr("__version__") = kVersion;

  // Translators run newest first, so the derived class goes last.
  const auto& base = py::register_exception<Error>(m, "VanetError", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());

  m.def("default_config", [] { return dump_config(RunConfig{}); }, "Canonical JSON of the default configuration.");
  m.def("normalize_config", [](const std::string& text) { return dump_config(parse_config(text)); });
  m.def("config_hash", [](const std::optional<std::string>& text) { return config_hash(config_from(text)); },
        py::arg("config") = py::none());
  m.def(
      "validate_config",
      [](const std::optional<std::string>& text) {
        std::vector<std::pair<std::string, std::string>> out;
        for (const auto& v : validate_config(config_from(text))) out.emplace_back(v.field, v.rule);
        return out;
      },
      py::arg("config") = py::none());

  m.def(
      "street_densities",
      [](const std::optional<std::string>& text) {
        const auto cfg = config_from(text);
        const auto city = build_city(cfg);
        const auto sol = solve_city(city, cfg);
        std::vector<std::array<double, 3>> out;
        for (const auto& s : city.streets) {
          out.push_back({segment_density(sol, city, s.id, Segment::front), segment_density(sol, city, s.id, Segment::middle),
                         segment_density(sol, city, s.id, Segment::end)});
        }
        return out;
      },
      py::arg("config") = py::none(), "Per-street (front, middle, end) section densities, both directions added.");
  m.def(
      "street_probabilities",
      [](const std::optional<std::string>& text) {
        const auto cfg = config_from(text);
        const auto city = build_city(cfg);
        return open_probabilities(street_probabilities(city, solve_city(city, cfg), cfg));
      },
      py::arg("config") = py::none());

  m.def("p_connect_uniform", &p_connect_uniform, py::arg("n"), py::arg("range"), py::arg("length"));
  m.def("p_connect_middle", &p_connect_middle, py::arg("rho2"), py::arg("range"), py::arg("length") = 1600.0);
  m.def(
      "p_connect_street",
      [](double rho1, double rho2, double rho3, double range, double length) {
        return p_connect_street({rho1, rho2, rho3, range, length}).p_open;
      },
      py::arg("rho1"), py::arg("rho2"), py::arg("rho3"), py::arg("range") = 200.0, py::arg("length") = 1600.0);
  m.def(
      "hetero_middle_bound",
      [](double rho2, double x1, double x2, double p_type1, double length, const std::string& form,
         const std::string& weighting) {
        HeteroRangeInputs in;
        in.rho2 = rho2;
        in.x1 = x1;
        in.x2 = x2;
        in.p_type1 = p_type1;
        in.length = length;
        in.form = form_of(form);
        in.weighting = weighting_of(weighting);
        return hetero_middle_bound(in).value;
      },
      py::arg("rho2"), py::arg("x1") = 200.0, py::arg("x2") = 400.0, py::arg("p_type1") = 0.5,
      py::arg("length") = 1600.0, py::arg("form") = "approximate", py::arg("weighting") = "type2_count");

  m.def(
      "percolation_curve",
      [](std::size_t side, const std::vector<double>& p_grid, std::size_t iterations, std::uint64_t seed,
         bool exhaustive, bool susceptibility, std::size_t threads) {
        const AverageSize avg = susceptibility ? AverageSize::susceptibility : AverageSize::mean_over_clusters;
        MicrocanonicalRecord rec;
        {
          py::gil_scoped_release release;
          rec = exhaustive ? exhaustive_microcanonical(side, avg) : accumulate_sweeps(side, iterations, seed, {avg, threads});
        }
        const auto curve = canonical_convolve(rec, p_grid);
        py::dict d = observables_dict(curve.mean, curve.std_error);
        d["p"] = curve.p;
        return d;
      },
      py::arg("side"), py::arg("p_grid"), py::arg("iterations") = 1000, py::arg("seed") = 1,
      py::arg("exhaustive") = false, py::arg("susceptibility") = false, py::arg("threads") = 1,
      "Canonical observables on a side x side lattice; values are (means, stderrs) per observable.");
  m.def(
      "microcanonical",
      [](std::size_t side, std::size_t iterations, std::uint64_t seed, bool exhaustive) {
        const auto rec = exhaustive ? exhaustive_microcanonical(side) : accumulate_sweeps(side, iterations, seed);
        return observables_dict(rec.mean, rec.std_error);
      },
      py::arg("side"), py::arg("iterations") = 1000, py::arg("seed") = 1, py::arg("exhaustive") = false);
  m.def(
      "inhomogeneous_sample",
      [](std::size_t side, const std::vector<double>& probs, std::size_t iterations, std::uint64_t seed) {
        return estimate_dict(inhomogeneous_sample(side, probs, iterations, seed));
      },
      py::arg("side"), py::arg("edge_probs"), py::arg("iterations") = 1000, py::arg("seed") = 1);
  m.def(
      "analyze_city",
      [](const std::optional<std::string>& text, std::size_t iterations, std::uint64_t seed) {
        const auto a = analyze_city(config_from(text), iterations, seed);
        py::dict d = estimate_dict(a.observables);
        d["street_probabilities"] = open_probabilities(a.streets);
        return d;
      },
      py::arg("config") = py::none(), py::arg("iterations") = 1000, py::arg("seed") = 1);

  m.def(
      "simulate",
      [](const std::optional<std::string>& text, std::uint64_t stream) {
        const auto cfg = config_from(text);
        SimulationOptions o;
        o.keep_snapshots = false;
        o.stream = stream;
        SimulationResult r;
        {
          py::gil_scoped_release release;
          r = run_simulation(cfg, o);
        }
        py::dict d;
        for (auto ob : kObservables) {
          const auto& a = r.observables[static_cast<std::size_t>(ob)];
          d[to_string(ob)] = py::make_tuple(a.mean, a.std_error);
        }
        std::vector<double> open;
        for (const auto& a : r.street_open) open.push_back(a.mean);
        d["street_open"] = open;
        d["warmup"] = r.warmup;
        d["duration"] = r.duration;
        d["injected"] = r.injected;
        d["exited"] = r.exited;
        return d;
      },
      py::arg("config") = py::none(), py::arg("stream") = 0);

  m.def(
      "scenario_csv",
      [](int number, const std::optional<std::string>& config, std::optional<std::uint64_t> seed,
         const std::optional<std::vector<double>>& grid, const std::optional<std::vector<std::size_t>>& sides,
         const std::optional<std::vector<double>>& lambdas, const std::optional<std::vector<double>>& p_values,
         bool simulate, std::size_t threads) {
        const auto spec = spec_for(number, config, seed, grid, sides, lambdas, p_values, simulate, threads);
        std::vector<ResultRow> rows;
        {
          py::gil_scoped_release release;
          rows = run_scenario(spec);
        }
        std::ostringstream out;
        emit_csv(out, rows);
        return out.str();
      },
      py::arg("number"), py::arg("config") = py::none(), py::arg("seed") = py::none(), py::arg("grid") = py::none(),
      py::arg("sides") = py::none(), py::arg("lambdas") = py::none(), py::arg("p_values") = py::none(),
      py::arg("simulate") = false, py::arg("threads") = 1, "Runs scenario 1..5 and returns its CSV text.");
}
