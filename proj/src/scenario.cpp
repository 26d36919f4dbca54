#include "bellsim/scenario.hpp"

#include <yaml-cpp/yaml.h>

#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include "bellsim/errors.hpp"
#include "bellsim/units.hpp"
#include "json.hpp"

namespace bellsim {

using units::Dimension;

PhaseSchedule Scenario::schedule() const {
  if (scan.mode == ScanMode::Constant)
    return constant_phase_schedule(duration, bin_width, scan.phase);
  return thermal_scan_schedule(duration, bin_width, scan.temp_start, scan.temp_end,
                               apparatus.interferometer_b.temperature_to_phase);
}

void validate(const Scenario& s) {
  if (s.name.empty()) throw ConfigError("name", "must not be empty");
  if (!(s.duration >= 0.0) || !std::isfinite(s.duration))
    throw ConfigError("duration", "must be >= 0");
  if (!(s.bin_width > 0.0) || !std::isfinite(s.bin_width))
    throw ConfigError("bin_width", "must be > 0");
  validate(s.apparatus);
  auto wrap = [](const char* field, auto&& check) {
    try {
      check();
    } catch (const InvalidValueError& e) {
      throw ConfigError(field, e.what());
    } catch (const UndefinedCollapseError&) {
      // Reported when the budget is evaluated.
    }
  };
  wrap("collapse.mass", [&] { validate(s.collapse.mass); });
  wrap("collapse.readout", [&] { validate(s.collapse.readout); });
  wrap("collapse.step_response", [&] { validate(s.collapse.step_response); });
  wrap("collapse.geometry", [&] { validate(s.collapse.geometry); });
  if (!(s.collapse.trigger_latency >= 0.0))
    throw ConfigError("collapse.trigger_latency", "must be >= 0");
}

// --- Presets -------------------------------------------------------------------

namespace {

Scenario reference_2008() {
  Scenario s;
  s.name = "paper-2008";
  s.seed = 2008;
  s.duration = 6000.0;
  s.bin_width = 60.0;

  ApparatusConfig& a = s.apparatus;
  a.source = SourceConfig{0.07, 600e-12, 1573.0e-9, 1567.8e-9, 100.0, 2.5e-3};
  a.link_a = FiberLink{8.0, 8.2e3, 0.0};
  a.link_b = FiberLink{8.0, 10.7e3, 0.0};
  a.detector_a = DetectorConfig{0.10, 0.7e3, 10e-6, 100e-9, 1e6, 0.0};
  a.detector_b = DetectorConfig{0.10, 1.1e3, 10e-6, 100e-9, 1e6, 0.0};
  // 6.5 fringes over the 40 C -> 21 C ramp of the scanned interferometer.
  const double rad_per_kelvin = 2.0 * std::numbers::pi * 6.5 / 19.0;
  a.interferometer_a = InterferometerConfig{1.3e-9, 267e-3, 1.468, 0.0, 0.0, 0.0};
  a.interferometer_b = InterferometerConfig{1.3e-9, 267e-3, 1.468, 0.0, rad_per_kelvin, 0.0};
  a.correlation = CorrelationModel{0.967, PhaseConvention::Sum};
  a.coherence_envelope = false;
  a.discriminator_window = 600e-12;
  a.tac_start = Station::A;
  a.tac_stop_delay = 5e-9;
  // Observed singles include dark counts; 33 coincidences per minute on average.
  calibrate(a, 5.0e3, 4.1e3, 33.0);

  s.scan = ScanPlan{ScanMode::Thermal, 313.15, 294.15, 0.0};
  s.collapse = CollapseSetup{};
  return s;
}

}  // namespace

std::vector<std::string> preset_names() {
  return {"paper-2008", "paper-2008-piezo", "short-baseline", "ideal-detectors"};
}

Scenario preset(const std::string& name) {
  if (name == "paper-2008") return reference_2008();
  if (name == "paper-2008-piezo") {
    Scenario s = reference_2008();
    s.name = name;
    s.collapse.mass = presets::mirror_and_piezo();
    return s;
  }
  if (name == "short-baseline") {
    Scenario s = reference_2008();
    s.name = name;
    s.collapse.geometry.direct_distance = 3.0e3;
    return s;
  }
  if (name == "ideal-detectors") {
    Scenario s = reference_2008();
    s.name = name;
    s.duration = 600.0;
    auto& a = s.apparatus;
    a.source.pairs_per_window = 1e-4;
    for (FiberLink* l : {&a.link_a, &a.link_b}) *l = FiberLink{0.0, l->length, 0.0};
    for (DetectorConfig* d : {&a.detector_a, &a.detector_b}) {
      d->efficiency = 1.0;
      d->dark_rate = 0.0;
      d->dead_time = 0.0;
      d->jitter_sigma = 0.0;
    }
    a.correlation.intrinsic_visibility = 1.0;
    return s;
  }
  throw ConfigError("scenario", "unknown preset '" + name + "'");
}

// --- YAML ---------------------------------------------------------------------

namespace {

class Reader {
 public:
  Reader(YAML::Node node, std::string path) : node_(std::move(node)), path_(std::move(path)) {
    if (!node_.IsMap()) throw ConfigError(path_.empty() ? "scenario" : path_, "expected a mapping");
  }

  ~Reader() = default;

  std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  bool has(const std::string& key) const { return static_cast<bool>(node_[key]); }

  std::string scalar(const std::string& key) {
    used_.insert(key);
    const YAML::Node n = node_[key];
    if (!n.IsScalar()) throw ConfigError(field(key), "expected a scalar value");
    return n.Scalar();
  }

  void quantity(const std::string& key, Dimension d, double& out) {
    if (!has(key)) return;
    out = units::parse_quantity(scalar(key), d, field(key));
  }

  void boolean(const std::string& key, bool& out) {
    if (!has(key)) return;
    const std::string v = scalar(key);
    if (v == "true") out = true;
    else if (v == "false") out = false;
    else throw ConfigError(field(key), "expected true or false, got '" + v + "'");
  }

  void text(const std::string& key, std::string& out) {
    if (has(key)) out = scalar(key);
  }

  void unsigned64(const std::string& key, std::uint64_t& out) {
    if (!has(key)) return;
    const std::string v = scalar(key);
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc{} || ptr != v.data() + v.size())
      throw ConfigError(field(key), "expected an unsigned 64-bit integer, got '" + v + "'");
  }

  template <typename F>
  void child(const std::string& key, F&& read) {
    if (!has(key)) return;
    used_.insert(key);
    Reader r(node_[key], field(key));
    read(r);
    r.finish();
  }

  YAML::Node raw(const std::string& key) {
    used_.insert(key);
    return node_[key];
  }

  void finish() const {
    for (const auto& kv : node_) {
      const std::string key = kv.first.as<std::string>();
      if (!used_.count(key)) throw ConfigError(field(key), "unknown key");
    }
  }

 private:
  YAML::Node node_;
  std::string path_;
  std::set<std::string> used_;
};

void read_link(Reader& r, FiberLink& l) {
  r.quantity("loss", Dimension::Decibel, l.loss_db);
  r.quantity("length", Dimension::Length, l.length);
  r.quantity("excess_loss", Dimension::Decibel, l.excess_loss_db);
}

void read_detector(Reader& r, DetectorConfig& d) {
  r.quantity("efficiency", Dimension::Dimensionless, d.efficiency);
  r.quantity("dark_rate", Dimension::Frequency, d.dark_rate);
  r.quantity("dead_time", Dimension::Time, d.dead_time);
  r.quantity("gate_width", Dimension::Time, d.gate_width);
  r.quantity("gate_rate", Dimension::Frequency, d.gate_rate);
  r.quantity("jitter_sigma", Dimension::Time, d.jitter_sigma);
}

void read_interferometer(Reader& r, InterferometerConfig& i) {
  r.quantity("path_delay", Dimension::Time, i.path_delay);
  r.quantity("path_length_difference", Dimension::Length, i.path_length_difference);
  r.quantity("group_index", Dimension::Dimensionless, i.group_index);
  r.quantity("phase", Dimension::Angle, i.phase);
  r.quantity("temperature_to_phase", Dimension::AnglePerTemperature, i.temperature_to_phase);
  r.quantity("insertion_loss", Dimension::Decibel, i.insertion_loss_db);
}

Station parse_station(const std::string& v, const std::string& field) {
  if (v == "A") return Station::A;
  if (v == "B") return Station::B;
  throw ConfigError(field, "expected A or B, got '" + v + "'");
}

}  // namespace

Scenario parse_scenario(const std::string& text) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::Exception& e) {
    throw ParseError(static_cast<std::size_t>(e.mark.line + 1), e.msg);
  }
  if (!root || root.IsNull()) throw ConfigError("scenario", "empty document");

  Scenario s;
  Reader top(root, "");
  if (top.has("base")) s = preset(top.scalar("base"));
  top.text("name", s.name);
  top.unsigned64("seed", s.seed);
  top.quantity("duration", Dimension::Time, s.duration);
  top.quantity("bin_width", Dimension::Time, s.bin_width);

  ApparatusConfig& a = s.apparatus;
  top.child("source", [&](Reader& r) {
    r.quantity("pairs_per_window", Dimension::Dimensionless, a.source.pairs_per_window);
    r.quantity("window", Dimension::Time, a.source.window);
    r.quantity("signal_wavelength", Dimension::Length, a.source.signal_wavelength);
    r.quantity("idler_wavelength", Dimension::Length, a.source.idler_wavelength);
    r.quantity("pump_coherence_length", Dimension::Length, a.source.pump_coherence_length);
    r.quantity("photon_coherence_length", Dimension::Length, a.source.photon_coherence_length);
  });
  top.child("links", [&](Reader& r) {
    r.child("a", [&](Reader& x) { read_link(x, a.link_a); });
    r.child("b", [&](Reader& x) { read_link(x, a.link_b); });
  });
  top.child("detectors", [&](Reader& r) {
    r.child("a", [&](Reader& x) { read_detector(x, a.detector_a); });
    r.child("b", [&](Reader& x) { read_detector(x, a.detector_b); });
  });
  top.child("interferometers", [&](Reader& r) {
    r.child("a", [&](Reader& x) { read_interferometer(x, a.interferometer_a); });
    r.child("b", [&](Reader& x) { read_interferometer(x, a.interferometer_b); });
  });
  top.child("correlation", [&](Reader& r) {
    r.quantity("visibility", Dimension::Dimensionless, a.correlation.intrinsic_visibility);
    if (r.has("phase_convention")) {
      const std::string v = r.scalar("phase_convention");
      if (v == "sum") a.correlation.phase_convention = PhaseConvention::Sum;
      else if (v == "difference") a.correlation.phase_convention = PhaseConvention::Difference;
      else throw ConfigError(r.field("phase_convention"), "expected sum or difference");
    }
    r.boolean("coherence_envelope", a.coherence_envelope);
  });
  top.child("coincidence", [&](Reader& r) {
    r.quantity("window", Dimension::Time, a.discriminator_window);
    r.quantity("stop_delay", Dimension::Time, a.tac_stop_delay);
    if (r.has("tac_start")) a.tac_start = parse_station(r.scalar("tac_start"), r.field("tac_start"));
  });
  top.child("scan", [&](Reader& r) {
    if (r.has("mode")) {
      const std::string v = r.scalar("mode");
      if (v == "thermal") s.scan.mode = ScanMode::Thermal;
      else if (v == "constant") s.scan.mode = ScanMode::Constant;
      else throw ConfigError(r.field("mode"), "expected thermal or constant");
    }
    r.quantity("temp_start", Dimension::Temperature, s.scan.temp_start);
    r.quantity("temp_end", Dimension::Temperature, s.scan.temp_end);
    r.quantity("phase", Dimension::Angle, s.scan.phase);
  });
  top.child("collapse", [&](Reader& r) {
    CollapseSetup& c = s.collapse;
    r.child("mass", [&](Reader& x) {
      x.quantity("mass", Dimension::Mass, c.mass.mass);
      x.quantity("volume", Dimension::Volume, c.mass.volume);
      x.quantity("displacement", Dimension::Length, c.mass.displacement);
    });
    r.child("readout", [&](Reader& x) {
      x.quantity("wavelength", Dimension::Length, c.readout.laser_wavelength);
      x.quantity("peak_to_peak", Dimension::Voltage, c.readout.peak_to_peak_signal);
      x.quantity("observed_change", Dimension::Voltage, c.readout.observed_change);
    });
    r.child("step_response", [&](Reader& x) {
      x.quantity("step_voltage", Dimension::Voltage, c.step_response.step_voltage);
      if (x.has("samples")) {
        const YAML::Node samples = x.raw("samples");
        const std::string field = x.field("samples");
        if (!samples.IsSequence()) throw ConfigError(field, "expected a list of [time, displacement]");
        c.step_response.samples.clear();
        for (std::size_t i = 0; i < samples.size(); ++i) {
          const YAML::Node p = samples[i];
          const std::string f = field + "[" + std::to_string(i) + "]";
          if (!p.IsSequence() || p.size() != 2 || !p[0].IsScalar() || !p[1].IsScalar())
            throw ConfigError(f, "expected [time, displacement]");
          c.step_response.samples.emplace_back(
              units::parse_quantity(p[0].Scalar(), Dimension::Time, f),
              units::parse_quantity(p[1].Scalar(), Dimension::Length, f));
        }
      }
    });
    r.quantity("trigger_latency", Dimension::Time, c.trigger_latency);
    r.child("geometry", [&](Reader& x) {
      x.quantity("fiber_length_a", Dimension::Length, c.geometry.fiber_length_a);
      x.quantity("fiber_length_b", Dimension::Length, c.geometry.fiber_length_b);
      x.quantity("direct_distance", Dimension::Length, c.geometry.direct_distance);
      x.quantity("refractive_index", Dimension::Dimensionless, c.geometry.fiber_refractive_index);
    });
  });
  top.finish();
  validate(s);
  return s;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("scenario", "cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_scenario(ss.str());
}

std::string serialize(const Scenario& s) {
  using units::format_quantity;
  std::ostringstream o;
  auto q = [](double v, Dimension d) { return format_quantity(v, d); };
  const ApparatusConfig& a = s.apparatus;
  o << "name: " << s.name << "\n";
  o << "seed: " << s.seed << "\n";
  o << "duration: " << q(s.duration, Dimension::Time) << "\n";
  o << "bin_width: " << q(s.bin_width, Dimension::Time) << "\n";
  o << "source:\n";
  o << "  pairs_per_window: " << q(a.source.pairs_per_window, Dimension::Dimensionless) << "\n";
  o << "  window: " << q(a.source.window, Dimension::Time) << "\n";
  o << "  signal_wavelength: " << q(a.source.signal_wavelength, Dimension::Length) << "\n";
  o << "  idler_wavelength: " << q(a.source.idler_wavelength, Dimension::Length) << "\n";
  o << "  pump_coherence_length: " << q(a.source.pump_coherence_length, Dimension::Length) << "\n";
  o << "  photon_coherence_length: " << q(a.source.photon_coherence_length, Dimension::Length)
    << "\n";
  o << "links:\n";
  for (const auto& [key, l] : {std::pair{"a", &a.link_a}, std::pair{"b", &a.link_b}}) {
    o << "  " << key << ":\n";
    o << "    loss: " << q(l->loss_db, Dimension::Decibel) << "\n";
    o << "    length: " << q(l->length, Dimension::Length) << "\n";
    o << "    excess_loss: " << q(l->excess_loss_db, Dimension::Decibel) << "\n";
  }
  o << "detectors:\n";
  for (const auto& [key, d] : {std::pair{"a", &a.detector_a}, std::pair{"b", &a.detector_b}}) {
    o << "  " << key << ":\n";
    o << "    efficiency: " << q(d->efficiency, Dimension::Dimensionless) << "\n";
    o << "    dark_rate: " << q(d->dark_rate, Dimension::Frequency) << "\n";
    o << "    dead_time: " << q(d->dead_time, Dimension::Time) << "\n";
    o << "    gate_width: " << q(d->gate_width, Dimension::Time) << "\n";
    o << "    gate_rate: " << q(d->gate_rate, Dimension::Frequency) << "\n";
    o << "    jitter_sigma: " << q(d->jitter_sigma, Dimension::Time) << "\n";
  }
  o << "interferometers:\n";
  for (const auto& [key, i] :
       {std::pair{"a", &a.interferometer_a}, std::pair{"b", &a.interferometer_b}}) {
    o << "  " << key << ":\n";
    o << "    path_delay: " << q(i->path_delay, Dimension::Time) << "\n";
    o << "    path_length_difference: " << q(i->path_length_difference, Dimension::Length) << "\n";
    o << "    group_index: " << q(i->group_index, Dimension::Dimensionless) << "\n";
    o << "    phase: " << q(i->phase, Dimension::Angle) << "\n";
    o << "    temperature_to_phase: "
      << q(i->temperature_to_phase, Dimension::AnglePerTemperature) << "\n";
    o << "    insertion_loss: " << q(i->insertion_loss_db, Dimension::Decibel) << "\n";
  }
  o << "correlation:\n";
  o << "  visibility: " << q(a.correlation.intrinsic_visibility, Dimension::Dimensionless) << "\n";
  o << "  phase_convention: "
    << (a.correlation.phase_convention == PhaseConvention::Sum ? "sum" : "difference") << "\n";
  o << "  coherence_envelope: " << (a.coherence_envelope ? "true" : "false") << "\n";
  o << "coincidence:\n";
  o << "  window: " << q(a.discriminator_window, Dimension::Time) << "\n";
  o << "  stop_delay: " << q(a.tac_stop_delay, Dimension::Time) << "\n";
  o << "  tac_start: " << to_string(a.tac_start) << "\n";
  o << "scan:\n";
  o << "  mode: " << (s.scan.mode == ScanMode::Thermal ? "thermal" : "constant") << "\n";
  o << "  temp_start: " << q(s.scan.temp_start, Dimension::Temperature) << "\n";
  o << "  temp_end: " << q(s.scan.temp_end, Dimension::Temperature) << "\n";
  o << "  phase: " << q(s.scan.phase, Dimension::Angle) << "\n";
  const CollapseSetup& c = s.collapse;
  o << "collapse:\n";
  o << "  mass:\n";
  o << "    mass: " << q(c.mass.mass, Dimension::Mass) << "\n";
  o << "    volume: " << q(c.mass.volume, Dimension::Volume) << "\n";
  o << "    displacement: " << q(c.mass.displacement, Dimension::Length) << "\n";
  o << "  readout:\n";
  o << "    wavelength: " << q(c.readout.laser_wavelength, Dimension::Length) << "\n";
  o << "    peak_to_peak: " << q(c.readout.peak_to_peak_signal, Dimension::Voltage) << "\n";
  o << "    observed_change: " << q(c.readout.observed_change, Dimension::Voltage) << "\n";
  o << "  step_response:\n";
  o << "    step_voltage: " << q(c.step_response.step_voltage, Dimension::Voltage) << "\n";
  o << "    samples:\n";
  for (const auto& [t, d] : c.step_response.samples)
    o << "      - [" << q(t, Dimension::Time) << ", " << q(d, Dimension::Length) << "]\n";
  o << "  trigger_latency: " << q(c.trigger_latency, Dimension::Time) << "\n";
  o << "  geometry:\n";
  o << "    fiber_length_a: " << q(c.geometry.fiber_length_a, Dimension::Length) << "\n";
  o << "    fiber_length_b: " << q(c.geometry.fiber_length_b, Dimension::Length) << "\n";
  o << "    direct_distance: " << q(c.geometry.direct_distance, Dimension::Length) << "\n";
  o << "    refractive_index: " << q(c.geometry.fiber_refractive_index, Dimension::Dimensionless)
    << "\n";
  return o.str();
}

// --- Pipelines -------------------------------------------------------------------

BudgetReport run_budget(const Scenario& s) {
  const CollapseSetup& c = s.collapse;
  BudgetReport r;
  r.diosi_time = diosi_collapse_time(c.mass);
  r.penrose_time = penrose_collapse_time(c.mass);
  r.readout_displacement = displacement_from_fringe(c.readout);
  r.budget = measurement_time(c.trigger_latency, c.step_response, c.mass.displacement, c.mass);
  r.spacelike = spacelike_check(r.budget, c.geometry);
  return r;
}

PipelineResult run_pipeline(const Scenario& s, const RunOptions& options) {
  validate(s);
  PipelineResult out;
  out.simulation = simulate(s.seed, s.apparatus, s.schedule(), s.bin_width, options);
  const SimulationResult& sim = out.simulation;
  RunReport& r = out.report;
  r.scenario_name = s.name;
  r.seed = s.seed;
  r.config = serialize(s);
  r.budget = run_budget(s);
  r.bins = sim.scan.bins.size();

  const double minutes = s.bin_width / 60.0;
  if (r.bins > 0) {
    const double n = static_cast<double>(r.bins);
    std::uint64_t sa = 0, sb = 0;
    for (const auto& b : sim.scan.bins) {
      sa += b.singles_a;
      sb += b.singles_b;
    }
    r.mean_singles_a = static_cast<double>(sa) / (n * s.bin_width);
    r.mean_singles_b = static_cast<double>(sb) / (n * s.bin_width);
    r.dark_accidental_rate = static_cast<double>(sim.truth.total.accidental) / (n * minutes);
    r.multi_pair_rate = static_cast<double>(sim.truth.total.multi_pair) / (n * minutes);
    r.interfering_rate = static_cast<double>(sim.truth.total.interfering) / (n * minutes);
    r.flat_background_rate = sim.truth.flat_background_per_bin / minutes;
  }
  try {
    r.bell = analyze(sim.scan, r.flat_background_rate).bell;
    out.analysis_ok = true;
  } catch (const Error& e) {
    out.analysis_error = e.what();
  }
  return out;
}

// --- Files -----------------------------------------------------------------------

std::string scan_to_csv(const FringeScan& scan) {
  std::string out = "bin_index,phase_rad,singles_a,singles_b,coincidences\n";
  for (const auto& b : scan.bins) {
    out += std::to_string(b.index) + ',' + units::format_double(b.phase) + ',' +
           std::to_string(b.singles_a) + ',' + std::to_string(b.singles_b) + ',' +
           std::to_string(b.coincidences) + '\n';
  }
  return out;
}

namespace {

template <typename T>
T parse_field(std::string_view text, std::size_t line, const char* what) {
  T value{};
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size() || text.empty())
    throw ParseError(line, std::string("invalid ") + what + " '" + std::string(text) + "'");
  return value;
}

}  // namespace

FringeScan scan_from_csv(const std::string& text, double bin_width) {
  FringeScan scan;
  scan.bin_width = bin_width;
  std::istringstream in(text);
  std::string line;
  std::size_t n = 0;
  bool header = false;
  while (std::getline(in, line)) {
    ++n;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (!header) {
      if (line != "bin_index,phase_rad,singles_a,singles_b,coincidences")
        throw ParseError(n, "expected header 'bin_index,phase_rad,singles_a,singles_b,coincidences'");
      header = true;
      continue;
    }
    std::vector<std::string_view> cols;
    std::string_view rest(line);
    while (true) {
      const auto comma = rest.find(',');
      cols.push_back(rest.substr(0, comma));
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    if (cols.size() != 5)
      throw ParseError(n, "expected 5 columns, got " + std::to_string(cols.size()));
    ScanBin b;
    b.index = parse_field<std::int64_t>(cols[0], n, "bin_index");
    b.phase = parse_field<double>(cols[1], n, "phase_rad");
    if (!std::isfinite(b.phase)) throw ParseError(n, "phase_rad must be finite");
    b.singles_a = parse_field<std::uint64_t>(cols[2], n, "singles_a");
    b.singles_b = parse_field<std::uint64_t>(cols[3], n, "singles_b");
    b.coincidences = parse_field<std::uint64_t>(cols[4], n, "coincidences");
    scan.bins.push_back(b);
  }
  if (!header) throw ParseError(n == 0 ? 1 : n, "missing header");
  return scan;
}

std::string budget_to_text(const BudgetReport& b) {
  using units::format_double;
  std::ostringstream o;
  o << "diosi_collapse_time_s=" << format_double(b.diosi_time) << "\n";
  o << "penrose_collapse_time_s=" << format_double(b.penrose_time) << "\n";
  o << "readout_displacement_m=" << format_double(b.readout_displacement) << "\n";
  o << "trigger_latency_s=" << format_double(b.budget.trigger_latency) << "\n";
  o << "displacement_time_s=" << format_double(b.budget.displacement_time) << "\n";
  o << "collapse_time_s=" << format_double(b.budget.collapse_time) << "\n";
  o << "measurement_time_s=" << format_double(b.budget.total) << "\n";
  o << "light_travel_time_s=" << format_double(b.spacelike.light_travel_time) << "\n";
  o << "margin_s=" << format_double(b.spacelike.margin) << "\n";
  o << "separated=" << (b.spacelike.separated ? "true" : "false") << "\n";
  return o.str();
}

namespace {

nlohmann::ordered_json bell_json(const BellResult& b) {
  nlohmann::ordered_json j;
  j["v_raw"] = b.v_raw;
  j["v_raw_err"] = b.v_raw_err;
  j["v_net"] = b.v_net;
  j["v_net_err"] = b.v_net_err;
  j["v_net_ratio"] = b.v_net_ratio;
  j["v_net_ratio_err"] = b.v_net_ratio_err;
  j["s_raw"] = b.s_raw;
  j["s_raw_err"] = b.s_raw_err;
  j["s_net"] = b.s_net;
  j["s_net_err"] = b.s_net_err;
  j["sigma_violation_raw"] = b.sigma_violation_raw;
  j["sigma_violation_net"] = b.sigma_violation_net;
  j["total_rate_per_min"] = b.total_rate;
  j["accidental_rate_per_min"] = b.accidental_rate;
  return j;
}

}  // namespace

std::string bell_to_json(const BellResult& b) { return bell_json(b).dump(2) + "\n"; }

std::string report_to_json(const RunReport& r) {
  nlohmann::ordered_json j;
  j["software"] = "bellsim";
  j["version"] = r.version;
  j["scenario"] = r.scenario_name;
  j["seed"] = r.seed;
  j["bins"] = r.bins;
  j["bell"] = bell_json(r.bell);
  nlohmann::ordered_json rates;
  rates["singles_a_hz"] = r.mean_singles_a;
  rates["singles_b_hz"] = r.mean_singles_b;
  rates["interfering_per_min"] = r.interfering_rate;
  rates["multi_pair_per_min"] = r.multi_pair_rate;
  rates["dark_accidental_per_min"] = r.dark_accidental_rate;
  rates["flat_background_per_min"] = r.flat_background_rate;
  j["rates"] = rates;
  nlohmann::ordered_json budget;
  budget["diosi_collapse_time_s"] = r.budget.diosi_time;
  budget["penrose_collapse_time_s"] = r.budget.penrose_time;
  budget["readout_displacement_m"] = r.budget.readout_displacement;
  budget["trigger_latency_s"] = r.budget.budget.trigger_latency;
  budget["displacement_time_s"] = r.budget.budget.displacement_time;
  budget["collapse_time_s"] = r.budget.budget.collapse_time;
  budget["measurement_time_s"] = r.budget.budget.total;
  budget["light_travel_time_s"] = r.budget.spacelike.light_travel_time;
  budget["margin_s"] = r.budget.spacelike.margin;
  budget["separated"] = r.budget.spacelike.separated;
  j["timing"] = budget;
  j["config"] = r.config;
  return j.dump(2) + "\n";
}

ReportAnalysisInputs analysis_inputs_from_json(const std::string& json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(1, std::string("report is not valid JSON: ") + e.what());
  }
  ReportAnalysisInputs in;
  try {
    in.accidental_rate = j.at("bell").at("accidental_rate_per_min").get<double>();
    const Scenario s = parse_scenario(j.at("config").get<std::string>());
    in.bin_width = s.bin_width;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(1, std::string("report is missing fields: ") + e.what());
  }
  return in;
}

std::string event_line(const DetectionEvent& e, double gate_rate) {
  const auto period_ps = static_cast<std::int64_t>(std::llround(1e12 / gate_rate));
  const std::int64_t t_ps = e.gate_index * period_ps + std::llround(e.offset * 1e12);
  return std::string(to_string(e.station)) + ',' + std::to_string(t_ps) + ',' +
         std::to_string(e.gate_index) + ',' + to_string(e.origin);
}

}  // namespace bellsim
