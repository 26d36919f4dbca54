#include "bellsim/apparatus.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numbers>
#include <thread>

#include "bellsim/constants.hpp"
#include "bellsim/errors.hpp"

namespace bellsim {

Rng make_rng(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32),
                    0x9e3779b9u};
  return Rng(seq);
}

namespace {

bool nonneg(double x) { return std::isfinite(x) && x >= 0.0; }
bool positive(double x) { return std::isfinite(x) && x > 0.0; }

double db_to_transmission(double db) { return std::pow(10.0, -db / 10.0); }

// Seconds from event a to event b on a shared gate clock.
double elapsed(std::int64_t gate_a, double offset_a, std::int64_t gate_b, double offset_b,
               double gate_rate) {
  return static_cast<double>(gate_b - gate_a) / gate_rate + (offset_b - offset_a);
}

struct Candidate {
  double offset;
  Origin origin;
  std::uint64_t pair_id;
};

// Tracks the last click of one detector for dead-time suppression.
struct DeadTimeState {
  bool fired = false;
  std::int64_t gate = 0;
  double offset = 0.0;
};

void resolve_clicks(std::vector<Candidate>& candidates, std::int64_t gate, Station station,
                    const DetectorConfig& det, DeadTimeState& dead,
                    std::vector<DetectionEvent>& out) {
  std::sort(candidates.begin(), candidates.end(),
            [](const Candidate& x, const Candidate& y) { return x.offset < y.offset; });
  for (const auto& c : candidates) {
    if (dead.fired && elapsed(dead.gate, dead.offset, gate, c.offset, det.gate_rate) < det.dead_time)
      continue;
    out.push_back(DetectionEvent{station, gate, c.offset, c.origin, c.pair_id});
    dead = DeadTimeState{true, gate, c.offset};
  }
  candidates.clear();
}

// Number of gates after a click's gate that it blocks, weighted by the
// blocked fraction of each gate, for a click in the middle of its gate.
double blocked_gates(const DetectorConfig& det) {
  const double period = 1.0 / det.gate_rate;
  const double until = det.gate_width / 2.0 + det.dead_time;
  double k = 0.0;
  for (int m = 1; m * period < until; ++m)
    k += std::clamp((until - m * period) / det.gate_width, 0.0, 1.0);
  return k;
}

// Poisson(lambda) conditioned on >= 1, by CDF inversion.
std::uint64_t zero_truncated_poisson(double lambda, Rng& rng) {
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  const double u = u01(rng);
  double p = lambda * std::exp(-lambda) / -std::expm1(-lambda);
  double cdf = p;
  std::uint64_t k = 1;
  while (u > cdf && k < 10000) {
    ++k;
    p *= lambda / static_cast<double>(k);
    cdf += p;
  }
  return k;
}

Origin photon_origin(Arm arm) { return arm == Arm::Short ? Origin::PhotonShort : Origin::PhotonLong; }

}  // namespace

void validate(const SourceConfig& c) {
  if (!nonneg(c.pairs_per_window)) throw ConfigError("source.pairs_per_window", "must be >= 0");
  if (!positive(c.window)) throw ConfigError("source.window", "must be > 0");
  if (!positive(c.signal_wavelength) || !positive(c.idler_wavelength))
    throw ConfigError("source.wavelength", "must be > 0");
  if (!positive(c.pump_coherence_length) || !positive(c.photon_coherence_length))
    throw ConfigError("source.coherence_length", "must be > 0");
}

void validate(const FiberLink& c) {
  if (!(c.loss_db >= 0.0)) throw ConfigError("link.loss", "must be >= 0 dB");
  if (!(c.excess_loss_db >= 0.0)) throw ConfigError("link.excess_loss", "must be >= 0 dB");
  if (!nonneg(c.length)) throw ConfigError("link.length", "must be >= 0");
}

void validate(const DetectorConfig& c) {
  if (!(c.efficiency >= 0.0 && c.efficiency <= 1.0))
    throw ConfigError("detector.efficiency", "must lie in [0, 1]");
  if (!nonneg(c.dark_rate)) throw ConfigError("detector.dark_rate", "must be >= 0");
  if (!nonneg(c.dead_time)) throw ConfigError("detector.dead_time", "must be >= 0");
  if (!positive(c.gate_width)) throw ConfigError("detector.gate_width", "must be > 0");
  if (!positive(c.gate_rate)) throw ConfigError("detector.gate_rate", "must be > 0");
  if (c.gate_width * c.gate_rate > 1.0)
    throw ConfigError("detector.gate_width", "gate_width * gate_rate must be <= 1");
  if (!nonneg(c.jitter_sigma)) throw ConfigError("detector.jitter_sigma", "must be >= 0");
}

void validate(const InterferometerConfig& c) {
  if (!positive(c.path_delay)) throw ConfigError("interferometer.path_delay", "must be > 0");
  if (!positive(c.path_length_difference))
    throw ConfigError("interferometer.path_length_difference", "must be > 0");
  if (!(c.group_index >= 1.0)) throw ConfigError("interferometer.group_index", "must be >= 1");
  if (!std::isfinite(c.phase)) throw ConfigError("interferometer.phase", "must be finite");
  if (!std::isfinite(c.temperature_to_phase))
    throw ConfigError("interferometer.temperature_to_phase", "must be finite");
  if (!(c.insertion_loss_db >= 0.0))
    throw ConfigError("interferometer.insertion_loss", "must be >= 0 dB");
  const double expected = c.path_length_difference * c.group_index / kCodata2018.c;
  if (std::abs(c.path_delay - expected) > 0.1 * expected)
    throw ConfigError("interferometer.path_delay",
                      "inconsistent with path_length_difference / (c / group_index) by > 10%");
}

namespace {

// Re-roots "detector.x" style fields at the station's path, e.g. "detectors.a.x".
template <typename T>
void validate_at(const T& part, const std::string& path) {
  try {
    validate(part);
  } catch (const ConfigError& e) {
    const std::string& f = e.field();
    const auto dot = f.find('.');
    throw ConfigError(dot == std::string::npos ? path : path + f.substr(dot), e.message());
  }
}

}  // namespace

void validate(const ApparatusConfig& c) {
  validate(c.source);
  validate_at(c.link_a, "links.a");
  validate_at(c.link_b, "links.b");
  validate_at(c.detector_a, "detectors.a");
  validate_at(c.detector_b, "detectors.b");
  validate_at(c.interferometer_a, "interferometers.a");
  validate_at(c.interferometer_b, "interferometers.b");
  try {
    validate(c.correlation);
  } catch (const InvalidValueError& e) {
    throw ConfigError("correlation.visibility", e.what());
  }
  if (c.detector_a.gate_rate != c.detector_b.gate_rate ||
      c.detector_a.gate_width != c.detector_b.gate_width)
    throw ConfigError("detectors", "both stations must share the gate clock and width");
  if (!positive(c.discriminator_window))
    throw ConfigError("coincidence.window", "must be > 0");
  if (!nonneg(c.tac_stop_delay)) throw ConfigError("coincidence.stop_delay", "must be >= 0");
}

double two_photon_visibility(const ApparatusConfig& c) {
  double v = c.correlation.intrinsic_visibility;
  if (c.coherence_envelope) {
    const double mismatch = c.interferometer_a.path_length_difference -
                            c.interferometer_b.path_length_difference;
    const double lc = c.source.pump_coherence_length;
    v *= std::exp(-(mismatch * mismatch) / (lc * lc));
  }
  return v;
}

double transmission(const FiberLink& link, const InterferometerConfig& ifm) {
  return db_to_transmission(link.loss_db + link.excess_loss_db + ifm.insertion_loss_db);
}

const char* to_string(Origin o) {
  switch (o) {
    case Origin::PhotonShort: return "photon_short";
    case Origin::PhotonLong: return "photon_long";
    case Origin::Dark: return "dark";
  }
  return "?";
}

const char* to_string(Station s) { return s == Station::A ? "A" : "B"; }

std::vector<PairEmission> generate_pair_events(std::uint64_t seed, const SourceConfig& source,
                                               const GateRange& gates) {
  validate(source);
  std::vector<PairEmission> out;
  if (source.pairs_per_window == 0.0) return out;
  Rng rng = make_rng(seed, 0x70616972);
  const double full = std::floor(gates.gate_width / source.window);
  const auto n_full = static_cast<std::int64_t>(full);
  const double rest = gates.gate_width - full * source.window;
  std::poisson_distribution<int> window_count(source.pairs_per_window);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::uint64_t next_id = 1;
  for (std::int64_t g = gates.first; g < gates.first + gates.count; ++g) {
    for (std::int64_t w = 0; w <= n_full; ++w) {
      const double len = w < n_full ? source.window : rest;
      if (len <= 0.0) continue;
      int n = 0;
      if (w < n_full) {
        n = window_count(rng);
      } else {
        std::poisson_distribution<int> partial(source.pairs_per_window * len / source.window);
        n = partial(rng);
      }
      for (int i = 0; i < n; ++i)
        out.push_back({g, static_cast<double>(w) * source.window + u01(rng) * len, next_id++});
    }
  }
  std::sort(out.begin(), out.end(), [](const PairEmission& x, const PairEmission& y) {
    return x.gate_index != y.gate_index ? x.gate_index < y.gate_index : x.offset < y.offset;
  });
  return out;
}

InterferometerDraw draw_interferometers(double p_same_interfering, Rng& rng) {
  std::bernoulli_distribution coin(0.5);
  InterferometerDraw d{};
  d.arm_a = coin(rng) ? Arm::Long : Arm::Short;
  d.arm_b = coin(rng) ? Arm::Long : Arm::Short;
  d.plus_a = coin(rng);
  if (d.arm_a == d.arm_b) {
    const bool same = std::bernoulli_distribution(p_same_interfering)(rng);
    d.plus_b = same ? d.plus_a : !d.plus_a;
  } else {
    d.plus_b = coin(rng);
  }
  return d;
}

namespace {

double same_port_probability(const ApparatusConfig& c, double phase_a, double phase_b) {
  CorrelationModel model = c.correlation;
  model.intrinsic_visibility = two_photon_visibility(c);
  return coincidence_probability(
      model,
      AnalyzerSetting{phase_a, c.interferometer_a.path_length_difference, Station::A},
      AnalyzerSetting{phase_b, c.interferometer_b.path_length_difference, Station::B},
      PortPair::Same);
}

}  // namespace

PairOutcome propagate_and_analyze(const PairEmission& pair, const ApparatusConfig& config,
                                  double phase_a, double phase_b, Rng& rng) {
  const double ta = transmission(config.link_a, config.interferometer_a);
  const double tb = transmission(config.link_b, config.interferometer_b);
  PairOutcome out;
  out.survived_a = std::bernoulli_distribution(ta)(rng);
  out.survived_b = std::bernoulli_distribution(tb)(rng);
  const auto d = draw_interferometers(same_port_probability(config, phase_a, phase_b), rng);
  out.arm_a = d.arm_a;
  out.arm_b = d.arm_b;
  out.plus_a = d.plus_a;
  out.plus_b = d.plus_b;
  auto arrival = [&](Station s, Arm arm, double delay) {
    return Arrival{s, pair.gate_index, pair.offset + (arm == Arm::Long ? delay : 0.0), arm,
                   pair.pair_id};
  };
  if (out.survived_a && out.plus_a)
    out.arrival_a = arrival(Station::A, d.arm_a, config.interferometer_a.path_delay);
  if (out.survived_b && out.plus_b)
    out.arrival_b = arrival(Station::B, d.arm_b, config.interferometer_b.path_delay);
  return out;
}

std::vector<DetectionEvent> detect(std::span<const Arrival> arrivals, const DetectorConfig& det,
                                   const GateRange& gates, Station station, Rng& rng) {
  validate(det);
  std::vector<DetectionEvent> out;
  const double dark_mean = det.dark_rate / det.gate_rate;
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::normal_distribution<double> jitter(0.0, 1.0);
  std::bernoulli_distribution clicks(det.efficiency);
  const std::int64_t end = gates.first + gates.count;

  // Next gate holding a dark count, by geometric skip-ahead.
  const double p_dark_gate = -std::expm1(-dark_mean);
  auto next_dark_gate = [&](std::int64_t from) -> std::int64_t {
    if (p_dark_gate <= 0.0) return end;
    if (p_dark_gate >= 1.0) return from;
    const double skip = std::floor(std::log(1.0 - u01(rng)) / std::log1p(-p_dark_gate));
    if (skip >= static_cast<double>(end - from)) return end;
    return from + static_cast<std::int64_t>(skip);
  };

  std::vector<Candidate> candidates;
  DeadTimeState dead;
  std::size_t ai = 0;
  while (ai < arrivals.size() && arrivals[ai].gate_index < gates.first) ++ai;
  std::int64_t dark_gate = next_dark_gate(gates.first);
  while (true) {
    const std::int64_t arrival_gate =
        ai < arrivals.size() ? arrivals[ai].gate_index : std::numeric_limits<std::int64_t>::max();
    const std::int64_t gate = std::min(arrival_gate, dark_gate);
    if (gate >= end) break;
    if (gate == dark_gate) {
      const auto n = zero_truncated_poisson(dark_mean, rng);
      for (std::uint64_t i = 0; i < n; ++i)
        candidates.push_back({u01(rng) * det.gate_width, Origin::Dark, 0});
      dark_gate = next_dark_gate(gate + 1);
    }
    for (; ai < arrivals.size() && arrivals[ai].gate_index == gate; ++ai) {
      const Arrival& a = arrivals[ai];
      if (a.offset < 0.0 || a.offset >= det.gate_width) continue;
      if (!clicks(rng)) continue;
      const double t = a.offset + det.jitter_sigma * jitter(rng);
      if (t < 0.0 || t >= det.gate_width) continue;
      candidates.push_back({t, photon_origin(a.arm), a.pair_id});
    }
    resolve_clicks(candidates, gate, station, det, dead, out);
  }
  return out;
}

CoincidenceCounts& CoincidenceCounts::operator+=(const CoincidenceCounts& o) {
  coincidences += o.coincidences;
  interfering += o.interfering;
  sidepeak += o.sidepeak;
  accidental += o.accidental;
  multi_pair += o.multi_pair;
  background += o.background;
  records += o.records;
  return *this;
}

CoincidenceResult coincide(std::span<const DetectionEvent> events_a,
                           std::span<const DetectionEvent> events_b,
                           const CoincidenceSettings& s, bool keep_records) {
  const auto starts = s.start == Station::A ? events_a : events_b;
  const auto stops = s.start == Station::A ? events_b : events_a;
  CoincidenceResult result;
  std::size_t j = 0;
  for (const auto& start : starts) {
    auto delta = [&](const DetectionEvent& stop) {
      return elapsed(start.gate_index, start.offset, stop.gate_index, stop.offset, s.gate_rate) +
             s.stop_delay;
    };
    while (j < stops.size() && delta(stops[j]) < 0.0) ++j;
    if (j == stops.size()) break;
    const DetectionEvent& stop = stops[j];
    const double dt = delta(stop);
    if (dt >= s.range) continue;

    CoincidenceRecord rec{dt, start.gate_index, CoincidenceClass::AccidentalTruth};
    if (start.origin != Origin::Dark && stop.origin != Origin::Dark) {
      if (start.pair_id == stop.pair_id)
        rec.classification = start.origin == stop.origin ? CoincidenceClass::Interfering
                                                         : CoincidenceClass::Sidepeak;
      else
        rec.classification = CoincidenceClass::MultiPair;
    }
    auto& c = result.counts;
    ++c.records;
    const double from_peak = dt - s.stop_delay;
    if (std::abs(from_peak) <= s.window / 2.0) {
      ++c.coincidences;
      switch (rec.classification) {
        case CoincidenceClass::Interfering: ++c.interfering; break;
        case CoincidenceClass::Sidepeak: ++c.sidepeak; break;
        case CoincidenceClass::AccidentalTruth: ++c.accidental; break;
        case CoincidenceClass::MultiPair: ++c.multi_pair; break;
      }
    } else if (from_peak >= s.background_lo && from_peak < s.background_hi) {
      ++c.background;
    }
    if (keep_records) result.records.push_back(rec);
  }
  return result;
}

double estimate_flat_background(std::uint64_t background, const CoincidenceSettings& s,
                                double gate_width) {
  const double g = gate_width;
  const double in_window = s.window - s.window * s.window / (4.0 * g);
  const double in_region = (s.background_hi - s.background_lo) -
                           (s.background_hi * s.background_hi - s.background_lo * s.background_lo) /
                               (2.0 * g);
  return static_cast<double>(background) * in_window / in_region;
}

CoincidenceSettings coincidence_settings(const ApparatusConfig& c) {
  CoincidenceSettings s;
  s.window = c.discriminator_window;
  s.stop_delay = c.tac_stop_delay;
  s.range = c.detector_a.gate_width;
  s.gate_rate = c.detector_a.gate_rate;
  s.start = c.tac_start;
  return s;
}

PhaseSchedule thermal_scan_schedule(double duration, double bin_width, double temp_start,
                                    double temp_end, double temperature_to_phase) {
  if (!(bin_width > 0.0)) throw ConfigError("scenario.bin_width", "must be > 0");
  if (!(duration >= 0.0)) throw ConfigError("scenario.duration", "must be >= 0");
  PhaseSchedule s;
  const auto n = static_cast<std::int64_t>(std::floor(duration / bin_width + 1e-9));
  for (std::int64_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) * bin_width;
    // Phase at the bin centre.
    const double frac = duration > 0.0 ? (t + bin_width / 2.0) / duration : 0.0;
    const double temp = temp_start + (temp_end - temp_start) * frac;
    s.push_back({t, temperature_to_phase * (temp - temp_start)});
  }
  return s;
}

PhaseSchedule constant_phase_schedule(double duration, double bin_width, double phase) {
  PhaseSchedule s = thermal_scan_schedule(duration, bin_width, 0.0, 0.0, 0.0);
  for (auto& b : s) b.phase = phase;
  return s;
}

namespace {

struct BinOutput {
  ScanBin bin;
  CoincidenceCounts counts;
  std::uint64_t dark_a = 0, dark_b = 0;
  std::vector<DetectionEvent> events;  // only when exporting
};

struct StationModel {
  double survival;   // fiber, excess, insertion and detector efficiency
  double dark_mean;  // per gate
  double path_delay;
  const DetectorConfig* det;
};

BinOutput simulate_bin(std::uint64_t seed, const ApparatusConfig& c, std::int64_t bin_index,
                       const PhaseBin& pb, double bin_width, bool keep_events) {
  Rng rng = make_rng(seed, static_cast<std::uint64_t>(bin_index));
  const DetectorConfig& da = c.detector_a;
  const double g = da.gate_width;
  const GateRange gates{static_cast<std::int64_t>(std::llround(pb.start * da.gate_rate)),
                        static_cast<std::int64_t>(std::llround(bin_width * da.gate_rate)), g,
                        da.gate_rate};

  const StationModel sa{transmission(c.link_a, c.interferometer_a) * c.detector_a.efficiency,
                        c.detector_a.dark_rate / da.gate_rate, c.interferometer_a.path_delay,
                        &c.detector_a};
  const StationModel sb{transmission(c.link_b, c.interferometer_b) * c.detector_b.efficiency,
                        c.detector_b.dark_rate / da.gate_rate, c.interferometer_b.path_delay,
                        &c.detector_b};
  const double pairs_per_gate = c.source.pairs_per_window * g / c.source.window;
  // Only pairs with at least one surviving photon are generated.
  const double relevant = 1.0 - (1.0 - sa.survival) * (1.0 - sb.survival);
  const double lambda_pairs = pairs_per_gate * relevant;
  const double lambda = lambda_pairs + sa.dark_mean + sb.dark_mean;
  const double p_both = relevant > 0.0 ? sa.survival * sb.survival / relevant : 0.0;
  const double p_a_only = relevant > 0.0 ? sa.survival * (1.0 - sb.survival) / relevant : 0.0;

  const double phase_a = c.interferometer_a.phase;
  const double phase_b = c.interferometer_b.phase + pb.phase;
  const double p_same = same_port_probability(c, phase_a, phase_b);

  BinOutput out;
  out.bin.index = bin_index;
  out.bin.phase = pb.phase;

  std::vector<DetectionEvent> ev_a, ev_b;
  std::vector<Candidate> cand_a, cand_b;
  DeadTimeState dead_a, dead_b;
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);

  auto photon = [&](const StationModel& st, std::vector<Candidate>& cand, double emission, Arm arm,
                    std::uint64_t id) {
    const double t = emission + (arm == Arm::Long ? st.path_delay : 0.0);
    if (t >= g) return;
    const double click = t + st.det->jitter_sigma * normal(rng);
    if (click < 0.0 || click >= g) return;
    cand.push_back({click, photon_origin(arm), id});
  };

  auto process_gate = [&](std::int64_t gate, std::uint64_t units) {
    std::uint64_t serial = 0;
    for (std::uint64_t k = 0; k < units; ++k) {
      const double pick = u01(rng) * lambda;
      if (pick < lambda_pairs) {
        const double emission = u01(rng) * g;
        const double r = u01(rng);
        const bool a = r < p_both + p_a_only;
        const bool b = r < p_both || r >= p_both + p_a_only;
        const auto d = draw_interferometers(p_same, rng);
        const std::uint64_t id = static_cast<std::uint64_t>(gate) * 1024u + (++serial);
        if (a && d.plus_a) photon(sa, cand_a, emission, d.arm_a, id);
        if (b && d.plus_b) photon(sb, cand_b, emission, d.arm_b, id);
      } else if (pick < lambda_pairs + sa.dark_mean) {
        cand_a.push_back({u01(rng) * g, Origin::Dark, 0});
      } else {
        cand_b.push_back({u01(rng) * g, Origin::Dark, 0});
      }
    }
    resolve_clicks(cand_a, gate, Station::A, da, dead_a, ev_a);
    resolve_clicks(cand_b, gate, Station::B, c.detector_b, dead_b, ev_b);
  };

  const std::int64_t end = gates.first + gates.count;
  if (lambda > 0.3) {
    std::poisson_distribution<std::uint64_t> units(lambda);
    for (std::int64_t gate = gates.first; gate < end; ++gate) process_gate(gate, units(rng));
  } else if (lambda > 0.0) {
    const double log_empty = -lambda;  // log P(gate empty)
    std::int64_t gate = gates.first;
    while (true) {
      const double skip = std::floor(std::log(1.0 - u01(rng)) / log_empty);
      if (skip >= static_cast<double>(end - gate)) break;
      gate += static_cast<std::int64_t>(skip);
      process_gate(gate, zero_truncated_poisson(lambda, rng));
      ++gate;
    }
  }

  const auto result = coincide(ev_a, ev_b, coincidence_settings(c), false);
  out.counts = result.counts;
  out.bin.singles_a = ev_a.size();
  out.bin.singles_b = ev_b.size();
  out.bin.coincidences = result.counts.coincidences;
  for (const auto& e : ev_a) out.dark_a += e.origin == Origin::Dark;
  for (const auto& e : ev_b) out.dark_b += e.origin == Origin::Dark;
  if (keep_events) {
    out.events.reserve(ev_a.size() + ev_b.size());
    std::merge(ev_a.begin(), ev_a.end(), ev_b.begin(), ev_b.end(), std::back_inserter(out.events),
               [&](const DetectionEvent& x, const DetectionEvent& y) {
                 return elapsed(y.gate_index, y.offset, x.gate_index, x.offset, da.gate_rate) < 0.0;
               });
  }
  return out;
}

}  // namespace

SimulationResult simulate(std::uint64_t seed, const ApparatusConfig& config,
                          const PhaseSchedule& schedule, double bin_width,
                          const RunOptions& options) {
  validate(config);
  if (!(bin_width > 0.0)) throw ConfigError("scenario.bin_width", "must be > 0");
  for (std::size_t i = 1; i < schedule.size(); ++i) {
    if (!(schedule[i].start >= schedule[i - 1].start + bin_width * (1.0 - 1e-9)))
      throw ConfigError("schedule", "bin starts must increase by at least bin_width");
  }
  for (const auto& b : schedule) {
    if (!std::isfinite(b.phase) || !(b.start >= 0.0))
      throw ConfigError("schedule", "bins need finite phase and start >= 0");
  }

  const bool keep_events = static_cast<bool>(options.event_sink);
  std::vector<BinOutput> bins(schedule.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < schedule.size(); i = next++)
      bins[i] = simulate_bin(seed, config, static_cast<std::int64_t>(i), schedule[i], bin_width,
                             keep_events);
  };
  const unsigned n_workers =
      std::max(1u, std::min<unsigned>(options.workers, static_cast<unsigned>(schedule.size())));
  if (n_workers == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < n_workers; ++w) pool.emplace_back(worker);
  }

  SimulationResult r;
  r.scan.bin_width = bin_width;
  for (auto& b : bins) {
    r.scan.bins.push_back(b.bin);
    r.truth.per_bin.push_back(b.counts);
    r.truth.total += b.counts;
    r.truth.dark_clicks_a += b.dark_a;
    r.truth.dark_clicks_b += b.dark_b;
    if (keep_events) options.event_sink(b.events);
  }
  if (!bins.empty()) {
    r.truth.flat_background_per_bin =
        estimate_flat_background(r.truth.total.background, coincidence_settings(config),
                                 config.detector_a.gate_width) /
        static_cast<double>(bins.size());
  }
  return r;
}

FringeScan run_scan(std::uint64_t seed, const ApparatusConfig& config,
                    const PhaseSchedule& schedule, double bin_width) {
  return simulate(seed, config, schedule, bin_width).scan;
}

ExpectedRates expected_rates(const ApparatusConfig& c, double phase_b) {
  validate(c);
  const DetectorConfig& da = c.detector_a;
  const DetectorConfig& db = c.detector_b;
  const double g = da.gate_width;
  const double pairs = c.source.pairs_per_window * g / c.source.window;
  const double ta = transmission(c.link_a, c.interferometer_a) * da.efficiency;
  const double tb = transmission(c.link_b, c.interferometer_b) * db.efficiency;
  // Long-arm photons emitted in the last path_delay of the gate miss it.
  const double edge_a = 1.0 - c.interferometer_a.path_delay / (2.0 * g);
  const double edge_b = 1.0 - c.interferometer_b.path_delay / (2.0 * g);
  const double photons_a = pairs * ta * 0.5 * edge_a;
  const double photons_b = pairs * tb * 0.5 * edge_b;
  const double dark_a = da.dark_rate / da.gate_rate;
  const double dark_b = db.dark_rate / db.gate_rate;

  const double click_a = -std::expm1(-(photons_a + dark_a));
  const double click_b = -std::expm1(-(photons_b + dark_b));
  const double live_a = 1.0 / (1.0 + blocked_gates(da) * click_a);
  const double live_b = 1.0 / (1.0 + blocked_gates(db) * click_b);

  ExpectedRates r;
  r.singles_a = click_a * live_a * da.gate_rate;
  r.singles_b = click_b * live_b * db.gate_rate;

  const double w = c.discriminator_window;
  const double sigma = std::hypot(da.jitter_sigma, db.jitter_sigma);
  const double in_window = sigma > 0.0 ? std::erf(w / 2.0 / (std::numbers::sqrt2 * sigma)) : 1.0;
  const double p_same = same_port_probability(c, c.interferometer_a.phase,
                                              c.interferometer_b.phase + phase_b);
  // Short-short always fits in the gate; long-long loses the gate tail.
  const double edge_c =
      1.0 - std::max(c.interferometer_a.path_delay, c.interferometer_b.path_delay) / (2.0 * g);
  const double interfering = pairs * ta * tb * 0.5 * edge_c * (p_same / 2.0) * in_window;
  const double uniform_window = w / g - w * w / (4.0 * g * g);
  const double multi = photons_a * photons_b * uniform_window;
  const double accidental = (dark_a * (photons_b + dark_b) + photons_a * dark_b) * uniform_window;

  const double per_min = da.gate_rate * 60.0 * live_a * live_b;
  r.interfering = interfering * per_min;
  r.multi_pair = multi * per_min;
  r.accidental = accidental * per_min;
  return r;
}

void calibrate(ApparatusConfig& c, double singles_a, double singles_b,
               double coincidences_per_min) {
  validate(c);
  auto solve_excess = [&](FiberLink& link, double target, auto singles) {
    double lo = 0.0, hi = 80.0;
    link.excess_loss_db = lo;
    if (singles(expected_rates(c, 0.0)) < target)
      throw ConfigError("calibration", "singles target above the lossless rate");
    link.excess_loss_db = hi;
    if (singles(expected_rates(c, 0.0)) > target)
      throw ConfigError("calibration", "singles target below the dark-count rate");
    for (int i = 0; i < 200; ++i) {
      link.excess_loss_db = 0.5 * (lo + hi);
      (singles(expected_rates(c, 0.0)) > target ? lo : hi) = link.excess_loss_db;
    }
    link.excess_loss_db = 0.5 * (lo + hi);
  };
  // Station rates are nearly independent; alternate until both settle.
  for (int pass = 0; pass < 3; ++pass) {
    solve_excess(c.link_a, singles_a, [](const ExpectedRates& r) { return r.singles_a; });
    solve_excess(c.link_b, singles_b, [](const ExpectedRates& r) { return r.singles_b; });
  }
  if (coincidences_per_min <= 0.0) return;

  // Phase-averaged coincidences: the fringe term cancels between phases pi apart.
  auto mean_total = [&] {
    return 0.5 * (expected_rates(c, 0.0).total() + expected_rates(c, std::numbers::pi).total());
  };
  double lo = 0.0, hi = 2e-9;
  c.detector_a.jitter_sigma = c.detector_b.jitter_sigma = 0.0;
  if (mean_total() <= coincidences_per_min) return;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    c.detector_a.jitter_sigma = c.detector_b.jitter_sigma = mid;
    (mean_total() > coincidences_per_min ? lo : hi) = mid;
  }
  c.detector_a.jitter_sigma = c.detector_b.jitter_sigma = 0.5 * (lo + hi);
}

}  // namespace bellsim
