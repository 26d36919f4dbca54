#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bellsim/analysis.hpp"
#include "bellsim/apparatus.hpp"
#include "bellsim/collapse.hpp"

namespace bellsim {

inline constexpr const char* kVersion = "0.3.0";

enum class ScanMode : std::uint8_t { Thermal, Constant };

struct ScanPlan {
  ScanMode mode = ScanMode::Thermal;
  double temp_start = 313.15;  // K
  double temp_end = 294.15;    // K
  double phase = 0.0;          // rad, Constant mode only

  bool operator==(const ScanPlan&) const = default;
};

struct CollapseSetup {
  MovingMass mass = presets::gold_mirror();
  FringeReadout readout = presets::mirror_readout();
  PiezoStepResponse step_response = presets::measured_step_response();
  double trigger_latency = presets::kTriggerLatency;
  GeometryLayout geometry = presets::geneva_geometry();

  bool operator==(const CollapseSetup&) const = default;
};

struct Scenario {
  std::string name;
  std::uint64_t seed = 0;
  double duration = 0.0;    // s
  double bin_width = 60.0;  // s
  ApparatusConfig apparatus;
  ScanPlan scan;
  CollapseSetup collapse;

  PhaseSchedule schedule() const;
  bool operator==(const Scenario&) const = default;
};

void validate(const Scenario& s);

/// Names accepted by preset(): paper-2008, paper-2008-piezo, short-baseline,
/// ideal-detectors.
std::vector<std::string> preset_names();
Scenario preset(const std::string& name);

/// Nested key-value text (YAML) with explicit units on every quantity.
Scenario parse_scenario(const std::string& text);
Scenario load_scenario(const std::string& path);
std::string serialize(const Scenario& s);

// --- Pipelines ---------------------------------------------------------------

struct BudgetReport {
  double diosi_time = 0.0;
  double penrose_time = 0.0;
  double readout_displacement = 0.0;  // lower bound from the fringe readout
  TimingBudget budget;
  SpacelikeResult spacelike;
};

BudgetReport run_budget(const Scenario& s);

struct RunReport {
  std::string scenario_name;
  std::uint64_t seed = 0;
  std::string version = kVersion;
  std::string config;  // serialized scenario
  BellResult bell;
  BudgetReport budget;
  double mean_singles_a = 0.0, mean_singles_b = 0.0;  // Hz
  double dark_accidental_rate = 0.0;                  // per min, truth label
  double multi_pair_rate = 0.0;                       // per min, truth label
  double interfering_rate = 0.0;                      // per min, truth label
  double flat_background_rate = 0.0;                  // per min, TAC estimate
  std::size_t bins = 0;
};

struct PipelineResult {
  SimulationResult simulation;
  RunReport report;
  bool analysis_ok = false;
  std::string analysis_error;
};

PipelineResult run_pipeline(const Scenario& s, const RunOptions& options = {});

// --- Files ---------------------------------------------------------------------

/// Header: bin_index,phase_rad,singles_a,singles_b,coincidences
std::string scan_to_csv(const FringeScan& scan);
FringeScan scan_from_csv(const std::string& text, double bin_width);

std::string budget_to_text(const BudgetReport& b);
std::string report_to_json(const RunReport& r);
/// Accidental rate (per min) and bin width recorded in a report.
struct ReportAnalysisInputs {
  double accidental_rate = 0.0;
  double bin_width = 60.0;
};
ReportAnalysisInputs analysis_inputs_from_json(const std::string& json_text);
std::string bell_to_json(const BellResult& b);

/// `station,time_ps,gate_index,origin`
std::string event_line(const DetectionEvent& e, double gate_rate);

}  // namespace bellsim
