#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "bellsim/quantum.hpp"

namespace bellsim {

using Rng = std::mt19937_64;

/// Deterministic per-stream generator: identical (seed, stream) gives an
/// identical sequence on every run and for any worker count.
Rng make_rng(std::uint64_t seed, std::uint64_t stream);

struct SourceConfig {
  double pairs_per_window = 0.07;          // mean pairs per `window`
  double window = 600e-12;                 // s
  double signal_wavelength = 1573.0e-9;    // m
  double idler_wavelength = 1567.8e-9;     // m
  double pump_coherence_length = 100.0;    // m
  double photon_coherence_length = 2.5e-3; // m

  bool operator==(const SourceConfig&) const = default;
};

struct FiberLink {
  double loss_db = 8.0;
  double length = 0.0;         // m
  double excess_loss_db = 0.0; // calibration term for the unreported loss budget

  bool operator==(const FiberLink&) const = default;
};

struct DetectorConfig {
  double efficiency = 0.10;
  double dark_rate = 0.0;      // Hz, observed dark click rate
  double dead_time = 10e-6;    // s
  double gate_width = 100e-9;  // s
  double gate_rate = 1e6;      // Hz
  double jitter_sigma = 0.0;   // s, Gaussian timing jitter of photon clicks

  bool operator==(const DetectorConfig&) const = default;
};

struct InterferometerConfig {
  double path_delay = 1.3e-9;               // s, long minus short arm
  double path_length_difference = 0.267;    // m
  double group_index = 1.468;
  double phase = 0.0;                       // rad, static offset
  double temperature_to_phase = 0.0;        // rad/K
  double insertion_loss_db = 0.0;

  bool operator==(const InterferometerConfig&) const = default;
};

void validate(const SourceConfig& c);
void validate(const FiberLink& c);
void validate(const DetectorConfig& c);
void validate(const InterferometerConfig& c);

/// Whole two-station apparatus. Station B's interferometer is the scanned one.
struct ApparatusConfig {
  SourceConfig source;
  FiberLink link_a, link_b;
  DetectorConfig detector_a, detector_b;
  InterferometerConfig interferometer_a, interferometer_b;
  CorrelationModel correlation{0.967, PhaseConvention::Sum};
  bool coherence_envelope = false;
  double discriminator_window = 600e-12;  // s, full width around the peak
  Station tac_start = Station::A;
  double tac_stop_delay = 5e-9;           // s, fixed delay on the stop line

  bool operator==(const ApparatusConfig&) const = default;
};

void validate(const ApparatusConfig& c);

/// Visibility after the optional Gaussian two-photon coherence envelope
/// exp(-(dL_A - dL_B)^2 / L_c^2) with L_c the pump coherence length.
double two_photon_visibility(const ApparatusConfig& c);

/// Combined survival of fiber, excess and insertion losses for one station.
double transmission(const FiberLink& link, const InterferometerConfig& ifm);

/// A contiguous run of synchronised detector gates.
struct GateRange {
  std::int64_t first = 0;
  std::int64_t count = 0;
  double gate_width = 100e-9;
  double gate_rate = 1e6;
};

enum class Arm : std::uint8_t { Short, Long };
enum class Origin : std::uint8_t { PhotonShort, PhotonLong, Dark };

const char* to_string(Origin o);
const char* to_string(Station s);

/// A pair emitted `offset` seconds after its gate opened.
struct PairEmission {
  std::int64_t gate_index = 0;
  double offset = 0.0;
  std::uint64_t pair_id = 0;
};

/// Poisson(pairs_per_window) pairs in every elementary window tiling each
/// gate; emission times are uniform within the window.
std::vector<PairEmission> generate_pair_events(std::uint64_t seed, const SourceConfig& source,
                                               const GateRange& gates);

/// A photon reaching the monitored output port of its interferometer.
struct Arrival {
  Station station = Station::A;
  std::int64_t gate_index = 0;
  double offset = 0.0;  // s after gate open, before detector jitter
  Arm arm = Arm::Short;
  std::uint64_t pair_id = 0;
};

struct PairOutcome {
  Arm arm_a = Arm::Short, arm_b = Arm::Short;
  bool plus_a = false, plus_b = false;  // exited through the monitored port
  bool survived_a = false, survived_b = false;
  std::optional<Arrival> arrival_a, arrival_b;
};

/// Arm choice is 1/2 each. Equal arms (short-short, long-long) interfere and
/// leave through the same ports with coincidence_probability(Same); unequal
/// arms choose ports independently. Only monitored-port photons arrive.
struct InterferometerDraw {
  Arm arm_a, arm_b;
  bool plus_a, plus_b;
};
InterferometerDraw draw_interferometers(double p_same_interfering, Rng& rng);

/// Fiber survival, arm and port for both photons of one pair.
PairOutcome propagate_and_analyze(const PairEmission& pair, const ApparatusConfig& config,
                                  double phase_a, double phase_b, Rng& rng);

struct DetectionEvent {
  Station station = Station::A;
  std::int64_t gate_index = 0;
  double offset = 0.0;  // s after gate open
  Origin origin = Origin::Dark;
  std::uint64_t pair_id = 0;  // 0 for dark clicks

  double time(double gate_rate) const {
    return static_cast<double>(gate_index) / gate_rate + offset;
  }
};

/// Gated detection of one station's arrivals (sorted by time). Dark clicks
/// are Poisson per gate with mean dark_rate / gate_rate and uniform over the
/// gate; clicks within dead_time of the previous click are suppressed.
std::vector<DetectionEvent> detect(std::span<const Arrival> arrivals, const DetectorConfig& det,
                                   const GateRange& gates, Station station, Rng& rng);

enum class CoincidenceClass : std::uint8_t { Interfering, Sidepeak, AccidentalTruth, MultiPair };

struct CoincidenceRecord {
  double delta_t = 0.0;  // stop - start + stop_delay
  std::int64_t gate_index = 0;
  CoincidenceClass classification = CoincidenceClass::AccidentalTruth;
};

struct CoincidenceSettings {
  double window = 600e-12;
  double stop_delay = 5e-9;  // also the peak centre
  double range = 100e-9;     // TAC full scale
  double gate_rate = 1e6;
  Station start = Station::A;
  // Off-peak region (relative to the peak centre) used to estimate the flat
  // background under the discriminator window.
  double background_lo = 3e-9;
  double background_hi = 30e-9;
};

struct CoincidenceCounts {
  std::uint64_t coincidences = 0;
  std::uint64_t interfering = 0;
  std::uint64_t sidepeak = 0;
  std::uint64_t accidental = 0;  // at least one dark click
  std::uint64_t multi_pair = 0;  // photons from different pairs
  std::uint64_t background = 0;  // records in the off-peak region
  std::uint64_t records = 0;

  CoincidenceCounts& operator+=(const CoincidenceCounts& o);
};

struct CoincidenceResult {
  std::vector<CoincidenceRecord> records;
  CoincidenceCounts counts;
};

/// TAC + discriminator. Each start click is paired with the next stop click
/// (stop line delayed by stop_delay) inside the TAC range. Records within
/// window/2 of the peak centre count as coincidences; the side peaks at
/// +/- path_delay fall outside.
CoincidenceResult coincide(std::span<const DetectionEvent> events_a,
                           std::span<const DetectionEvent> events_b,
                           const CoincidenceSettings& settings, bool keep_records = true);

/// Expected flat counts under the window from `background` off-peak records,
/// assuming uncorrelated clicks uniform over the gate (triangular delta_t).
double estimate_flat_background(std::uint64_t background, const CoincidenceSettings& settings,
                                double gate_width);

CoincidenceSettings coincidence_settings(const ApparatusConfig& c);

// --- Scans -----------------------------------------------------------------

struct PhaseBin {
  double start = 0.0;  // s
  double phase = 0.0;  // rad, applied to the scanned (B) interferometer

  bool operator==(const PhaseBin&) const = default;
};

using PhaseSchedule = std::vector<PhaseBin>;

/// One bin per bin_width; phase follows a linear temperature ramp mapped
/// through temperature_to_phase.
PhaseSchedule thermal_scan_schedule(double duration, double bin_width, double temp_start,
                                    double temp_end, double temperature_to_phase);

PhaseSchedule constant_phase_schedule(double duration, double bin_width, double phase);

struct ScanBin {
  std::int64_t index = 0;
  double phase = 0.0;
  std::uint64_t singles_a = 0;
  std::uint64_t singles_b = 0;
  std::uint64_t coincidences = 0;

  bool operator==(const ScanBin&) const = default;
};

struct FringeScan {
  std::vector<ScanBin> bins;
  double bin_width = 60.0;  // s

  bool operator==(const FringeScan&) const = default;
};

struct ScanTruth {
  std::vector<CoincidenceCounts> per_bin;
  CoincidenceCounts total;
  std::uint64_t dark_clicks_a = 0, dark_clicks_b = 0;
  double flat_background_per_bin = 0.0;  // estimated from off-peak TAC records
};

struct SimulationResult {
  FringeScan scan;
  ScanTruth truth;
};

/// Receives each bin's events (in bin order) when event export is requested.
using EventSink = std::function<void(std::span<const DetectionEvent>)>;

struct RunOptions {
  unsigned workers = 1;
  EventSink event_sink;
};

/// Discrete-event Monte Carlo of the full chain. Only gates holding at least
/// one surviving photon or dark count are generated. Bins are independent
/// streams, so results do not depend on the worker count.
SimulationResult simulate(std::uint64_t seed, const ApparatusConfig& config,
                          const PhaseSchedule& schedule, double bin_width,
                          const RunOptions& options = {});

FringeScan run_scan(std::uint64_t seed, const ApparatusConfig& config,
                    const PhaseSchedule& schedule, double bin_width = 60.0);

// --- Closed-form expectations ----------------------------------------------

/// Mean rates per minute from the independent-click model, used to
/// calibrate presets and as an oracle for the Monte Carlo.
struct ExpectedRates {
  double singles_a = 0.0, singles_b = 0.0;  // per second
  double interfering = 0.0;                 // per minute, at the given phase
  double multi_pair = 0.0;
  double accidental = 0.0;
  double total() const { return interfering + multi_pair + accidental; }
};

ExpectedRates expected_rates(const ApparatusConfig& c, double phase_b);

/// Solves for per-link excess losses reproducing the observed singles rates,
/// then for the jitter that reproduces the phase-averaged coincidence rate
/// (per minute). A non-positive coincidence target leaves the jitter alone.
void calibrate(ApparatusConfig& c, double singles_a, double singles_b,
               double coincidences_per_min);

}  // namespace bellsim
