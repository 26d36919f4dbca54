// bellsim command-line runner: budget, simulate, analyze, presets.
#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "bellsim/errors.hpp"
#include "bellsim/scenario.hpp"

namespace fs = std::filesystem;
using namespace bellsim;

namespace {

enum Exit { kOk = 0, kConfig = 1, kRuntime = 2, kDegenerate = 3 };

struct Common {
  std::string scenario = "paper-2008";
  std::optional<std::uint64_t> seed;
  std::optional<double> duration;
  std::string out;
};

Scenario resolve(const Common& c) {
  Scenario s;
  if (fs::exists(c.scenario)) {
    s = load_scenario(c.scenario);
  } else if (c.scenario.find('.') != std::string::npos || c.scenario.find('/') != std::string::npos) {
    throw ConfigError("scenario", "cannot open '" + c.scenario + "'");
  } else {
    s = preset(c.scenario);
  }
  if (c.seed) s.seed = *c.seed;
  if (c.duration) {
    if (!(*c.duration >= 0.0)) throw ConfigError("duration", "must be >= 0");
    s.duration = *c.duration;
  }
  validate(s);
  return s;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << text;
  if (!out.flush()) throw std::runtime_error("write failed for '" + path.string() + "'");
}

int cmd_budget(const Common& c) {
  const BudgetReport b = run_budget(resolve(c));
  const std::string text = budget_to_text(b);
  if (c.out.empty()) std::cout << text;
  else write_file(c.out, text);
  return kOk;
}

int cmd_simulate(const Common& c, unsigned workers, bool emit_events) {
  const Scenario s = resolve(c);
  const fs::path dir = c.out.empty() ? fs::path("out") : fs::path(c.out);
  fs::create_directories(dir);

  RunOptions options;
  options.workers = workers;
  std::ofstream events;
  if (emit_events) {
    events.open(dir / "events.csv", std::ios::binary);
    if (!events) throw std::runtime_error("cannot write '" + (dir / "events.csv").string() + "'");
    events << "station,time_ps,gate_index,origin\n";
    const double rate = s.apparatus.detector_a.gate_rate;
    options.event_sink = [&events, rate](std::span<const DetectionEvent> evs) {
      for (const auto& e : evs) events << event_line(e, rate) << '\n';
    };
  }
  const PipelineResult r = run_pipeline(s, options);
  write_file(dir / "scan.csv", scan_to_csv(r.simulation.scan));
  write_file(dir / "report.json", report_to_json(r.report));
  if (emit_events && !events.flush()) throw std::runtime_error("event export failed");

  std::cout << "scenario=" << s.name << " seed=" << s.seed << " bins=" << r.report.bins << "\n";
  if (!r.analysis_ok) {
    std::cerr << "bellsim: analysis skipped: " << r.analysis_error << "\n";
    return kOk;
  }
  const BellResult& b = r.report.bell;
  std::cout << "V_raw=" << b.v_raw << " +- " << b.v_raw_err << "  S_raw=" << b.s_raw << " +- "
            << b.s_raw_err << "  (" << b.sigma_violation_raw << " sigma)\n";
  std::cout << "V_net=" << b.v_net << " +- " << b.v_net_err << "  S_net=" << b.s_net << " +- "
            << b.s_net_err << "  (" << b.sigma_violation_net << " sigma)\n";
  std::cout << "coincidences/min=" << b.total_rate << " accidentals/min=" << b.accidental_rate
            << "\n";
  return kOk;
}

int cmd_analyze(const std::string& scan_path, const std::string& report_path,
                std::optional<double> accidentals, std::optional<double> bin_width,
                const std::string& out) {
  ReportAnalysisInputs in;
  if (!report_path.empty()) in = analysis_inputs_from_json(read_file(report_path));
  if (accidentals) in.accidental_rate = *accidentals;
  if (bin_width) in.bin_width = *bin_width;
  if (!(in.bin_width > 0.0)) throw ConfigError("bin-width", "must be > 0");
  if (!(in.accidental_rate >= 0.0)) throw ConfigError("accidentals", "must be >= 0");
  const FringeScan scan = scan_from_csv(read_file(scan_path), in.bin_width);
  const AnalysisResult a = analyze(scan, in.accidental_rate);
  const std::string json = bell_to_json(a.bell);
  if (out.empty()) std::cout << json;
  else write_file(out, json);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Simulation and analysis of a space-like separated Bell test"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  Common common;
  unsigned workers = 1;
  bool emit_events = false;
  std::string scan_path, report_path;
  std::optional<double> accidentals, bin_width;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--scenario", common.scenario, "Preset name or scenario file")
        ->capture_default_str();
    sub->add_option("--seed", common.seed, "Override the scenario seed");
    sub->add_option("--duration", common.duration, "Override the run duration in seconds");
  };

  CLI::App* budget = app.add_subcommand("budget", "Collapse timing budget and light-cone check");
  add_common(budget);
  budget->add_option("--out", common.out, "Write the report here instead of stdout");

  CLI::App* simulate = app.add_subcommand("simulate", "Run the Monte Carlo and analysis");
  add_common(simulate);
  simulate->add_option("--out", common.out, "Output directory")->default_str("out");
  simulate->add_option("--workers", workers, "Worker threads")->check(CLI::Range(1u, 256u));
  simulate->add_flag("--emit-events", emit_events, "Also write events.csv");

  CLI::App* analyze_cmd = app.add_subcommand("analyze", "Re-analyse a stored scan");
  analyze_cmd->add_option("scan", scan_path, "Scan CSV")->required();
  analyze_cmd->add_option("--report", report_path, "Report JSON supplying accidentals and bin width");
  analyze_cmd->add_option("--accidentals", accidentals, "Flat accidental rate per minute");
  analyze_cmd->add_option("--bin-width", bin_width, "Bin width in seconds");
  analyze_cmd->add_option("--out", common.out, "Write the result here instead of stdout");

  CLI::App* presets_cmd = app.add_subcommand("presets", "List or print scenario presets");
  std::string show;
  presets_cmd->add_option("name", show, "Print this preset as a scenario file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }

  try {
    if (*budget) return cmd_budget(common);
    if (*simulate) return cmd_simulate(common, workers, emit_events);
    if (*analyze_cmd)
      return cmd_analyze(scan_path, report_path, accidentals, bin_width, common.out);
    if (show.empty()) {
      for (const auto& n : preset_names()) std::cout << n << "\n";
    } else {
      std::cout << serialize(preset(show));
    }
    return kOk;
  } catch (const ConfigError& e) {
    std::cerr << "bellsim: config error: " << e.what() << "\n";
    return kConfig;
  } catch (const ParseError& e) {
    std::cerr << "bellsim: parse error: " << e.what() << "\n";
    return kConfig;
  } catch (const InsufficientSpanError& e) {
    std::cerr << "bellsim: analysis error: " << e.what() << "\n";
    return kDegenerate;
  } catch (const DegenerateFitError& e) {
    std::cerr << "bellsim: analysis error: " << e.what() << "\n";
    return kDegenerate;
  } catch (const std::exception& e) {
    std::cerr << "bellsim: error: " << e.what() << "\n";
    return kRuntime;
  }
}
