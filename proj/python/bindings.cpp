#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "bellsim/errors.hpp"
#include "bellsim/scenario.hpp"
#include "bellsim/units.hpp"

namespace py = pybind11;
using namespace bellsim;

namespace {

Scenario resolve(const std::string& scenario) {
  if (scenario.find('\n') != std::string::npos || scenario.find(':') != std::string::npos)
    return parse_scenario(scenario);
  return preset(scenario);
}

py::dict budget_dict(const BudgetReport& b) {
  py::dict d;
  d["diosi_collapse_time_s"] = b.diosi_time;
  d["penrose_collapse_time_s"] = b.penrose_time;
  d["readout_displacement_m"] = b.readout_displacement;
  d["trigger_latency_s"] = b.budget.trigger_latency;
  d["displacement_time_s"] = b.budget.displacement_time;
  d["collapse_time_s"] = b.budget.collapse_time;
  d["measurement_time_s"] = b.budget.total;
  d["light_travel_time_s"] = b.spacelike.light_travel_time;
  d["margin_s"] = b.spacelike.margin;
  d["separated"] = b.spacelike.separated;
  return d;
}

py::dict fit_dict(const FringeFit& f) {
  py::dict d;
  d["visibility"] = f.visibility;
  d["visibility_error"] = f.visibility_error;
  d["offset"] = f.offset;
  d["amplitude"] = f.amplitude;
  d["phase0"] = f.phase0;
  d["chi2"] = f.chi2;
  d["dof"] = f.dof;
  d["clipped"] = f.clipped;
  return d;
}

FringeScan make_scan(const std::vector<double>& phases, const std::vector<std::uint64_t>& counts,
                     double bin_width) {
  if (phases.size() != counts.size()) throw InvalidValueError("phases and counts differ in length");
  FringeScan s;
  s.bin_width = bin_width;
  for (std::size_t i = 0; i < phases.size(); ++i)
    s.bins.push_back(ScanBin{static_cast<std::int64_t>(i), phases[i], 0, 0, counts[i]});
  return s;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Bell test simulation core";
  m.attr("__version__") = kVersion;

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);
  py::register_exception<UndefinedCollapseError>(m, "UndefinedCollapseError", PyExc_ArithmeticError);
  py::register_exception<InsufficientSpanError>(m, "InsufficientSpanError", PyExc_ValueError);
  py::register_exception<DegenerateFitError>(m, "DegenerateFitError", PyExc_ValueError);
  py::register_exception<UnreachableDisplacementError>(m, "UnreachableDisplacementError",
                                                       PyExc_ValueError);
  py::register_exception<InvalidValueError>(m, "InvalidValueError", PyExc_ValueError);

  m.def("diosi_collapse_time",
        [](double mass, double volume, double d) { return diosi_collapse_time({mass, volume, d}); },
        py::arg("mass"), py::arg("volume"), py::arg("displacement"));
  m.def("penrose_collapse_time",
        [](double mass, double volume, double d) { return penrose_collapse_time({mass, volume, d}); },
        py::arg("mass"), py::arg("volume"), py::arg("displacement"));
  m.def("displacement_from_fringe",
        [](double wavelength, double peak_to_peak, double change) {
          return displacement_from_fringe({wavelength, peak_to_peak, change});
        },
        py::arg("wavelength"), py::arg("peak_to_peak"), py::arg("observed_change"));

  m.def("correlation",
        [](double phase_a, double phase_b, double visibility, const std::string& convention) {
          if (convention != "sum" && convention != "difference")
            throw InvalidValueError("convention must be 'sum' or 'difference'");
          const CorrelationModel model{visibility, convention == "sum" ? PhaseConvention::Sum
                                                                      : PhaseConvention::Difference};
          return correlation_coefficient(model, {phase_a, 0.267, Station::A},
                                         {phase_b, 0.267, Station::B});
        },
        py::arg("phase_a"), py::arg("phase_b"), py::arg("visibility") = 1.0,
        py::arg("convention") = "sum");
  m.def("chsh_s", &chsh_s);
  m.def("s_from_visibility", &s_from_visibility, py::arg("visibility"));
  m.def("bell_figures",
        [](double v, double err) {
          const auto f = bell_figures({v, err});
          return py::make_tuple(f.s, f.s_err, f.sigma_violation);
        },
        py::arg("visibility"), py::arg("error"));
  m.def("subtract_accidentals",
        [](double v, double err, double total, double acc) {
          const auto r = subtract_accidentals(VisibilityEstimate{v, err}, total, acc);
          return py::make_tuple(r.value, r.error);
        },
        py::arg("visibility"), py::arg("error"), py::arg("total_rate"), py::arg("accidental_rate"));

  m.def("fit_fringe",
        [](const std::vector<double>& phases, const std::vector<double>& counts) {
          return fit_dict(fit_fringe(phases, counts));
        },
        py::arg("phases"), py::arg("counts"));
  m.def("analyze",
        [](const std::vector<double>& phases, const std::vector<std::uint64_t>& counts,
           double accidental_rate, double bin_width) {
          return bell_to_json(analyze(make_scan(phases, counts, bin_width), accidental_rate).bell);
        },
        py::arg("phases"), py::arg("counts"), py::arg("accidental_rate"),
        py::arg("bin_width") = 60.0, "BellResult as a JSON document.");

  m.def("presets", &preset_names);
  m.def("scenario_text", [](const std::string& s) { return serialize(resolve(s)); },
        py::arg("scenario"), "Preset name or scenario text, normalised to SI units.");
  m.def("budget", [](const std::string& s) { return budget_dict(run_budget(resolve(s))); },
        py::arg("scenario") = "paper-2008");
  m.def("simulate",
        [](const std::string& scenario, std::optional<std::uint64_t> seed,
           std::optional<double> duration, unsigned workers) {
          Scenario s = resolve(scenario);
          if (seed) s.seed = *seed;
          if (duration) s.duration = *duration;
          RunOptions opt;
          opt.workers = workers;
          PipelineResult r;
          {
            py::gil_scoped_release release;
            r = run_pipeline(s, opt);
          }
          py::dict d;
          d["scan_csv"] = scan_to_csv(r.simulation.scan);
          d["report_json"] = report_to_json(r.report);
          d["analysis_ok"] = r.analysis_ok;
          d["analysis_error"] = r.analysis_error;
          return d;
        },
        py::arg("scenario") = "paper-2008", py::arg("seed") = py::none(),
        py::arg("duration") = py::none(), py::arg("workers") = 1);
  m.def("parse_quantity",
        [](const std::string& text, const std::string& dim) {
          static const std::pair<const char*, units::Dimension> dims[] = {
              {"dimensionless", units::Dimension::Dimensionless}, {"time", units::Dimension::Time},
              {"length", units::Dimension::Length}, {"mass", units::Dimension::Mass},
              {"volume", units::Dimension::Volume}, {"frequency", units::Dimension::Frequency},
              {"voltage", units::Dimension::Voltage}, {"decibel", units::Dimension::Decibel},
              {"angle", units::Dimension::Angle}, {"temperature", units::Dimension::Temperature}};
          for (const auto& [n, d] : dims)
            if (dim == n) return units::parse_quantity(text, d, "value");
          throw InvalidValueError("unknown dimension '" + dim + "'");
        },
        py::arg("text"), py::arg("dimension"));
}
