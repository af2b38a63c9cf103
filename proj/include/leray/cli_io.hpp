#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "leray/scheme.hpp"

namespace leray {

enum class RunMode { navier_stokes_controls_on, navier_stokes_controls_off, burgers, boundary_bench };
enum class InitialPreset { taylor_green, gaussian_bump, cole_hopf_1d, file };

struct RunConfig {
  int dim = 2;
  int points = 64;
  double extent = 3.141592653589793;
  Topology topology = Topology::torus;
  RunMode mode = RunMode::navier_stokes_controls_off;
  StepSchedule schedule;
  double nu = 0.1;
  double T = 1.0;
  InitialPreset initial = InitialPreset::taylor_green;
  double amplitude = 1.0;
  double bump_width = 0.5;
  std::string initial_file;
  Backend backend;
  /// Iteration tolerance relative to C_{1,2}.
  double tol_rel = 1e-8;
  int kmax = 25;
  int max_retries = 6;
  int max_steps = 1000000;
  PhiModulation modulation = PhiModulation::constant;
  bool paper_faithful = true;
  std::vector<double> dump_times;
  bool svg = true;
  std::string output_dir = "out";
  std::uint64_t seed = 0;
  /// Defaults that were filled in, one line each.
  std::vector<std::string> log;
};

/// key = value lines, '#' comments, optional [section] headers that are
/// ignored for lookup. Throws ParseError listing every bad line, or
/// ValidationError listing every bad field.
RunConfig parse_config_text(const std::string& text, const std::string& origin = "<config>");
RunConfig parse_config(const std::string& path);

std::string to_string(RunMode m);
std::string to_string(InitialPreset p);

/// Samples the configured initial data.
VField initial_field(const RunConfig& c);

/// LERAY_OUTPUT_DIR when set, else the configured directory.
std::string resolve_output_dir(const RunConfig& c);

/// Shortest round-trip decimal form of a double.
std::string format_double(double x);

void write_field_dump(const std::string& path, const VField& v, double t);
/// Returns the field and its time stamp; checks the header.
std::pair<VField, double> read_field_dump(const std::string& path);

/// Two heatmaps side by side: |v| and div v on the midplane (x_n = 0 slice
/// for n = 3; the line itself for n = 1 is drawn as a strip).
void write_svg_slice(const std::string& path, const VField& v, const std::string& title);

std::string steps_csv_header();
std::string steps_csv_row(const StepReport& r, double oracle_error, bool has_oracle);
std::string ledger_csv_header();
std::string ledger_csv_row(const LedgerRow& r);

struct RunOutcome {
  int exit_code = 0;
  std::string error_kind;
  std::string message;
  std::string output_dir;
  std::size_t steps = 0;
  double t = 0.0;
  double oracle_error = -1.0;
};

/// Runs the configured mode and writes steps.csv, ledger.csv, field dumps,
/// SVG slices and summary.json into the output directory.
RunOutcome run(const RunConfig& c);

struct ValidateOptions {
  /// Empty means every suite.
  std::string filter;
  /// Perturbs one engine to check that the harness catches it.
  bool inject_fault = false;
  std::uint64_t seed = 0;
};

struct CheckResult {
  std::string suite;
  std::string name;
  double value = 0.0;
  double threshold = 0.0;
  bool pass = false;
  std::string error;
};

std::vector<std::string> validate_suites();

/// Runs the oracle and property suites at small grids; prints one tab
/// separated line per check to `out` and returns every result.
std::vector<CheckResult> validate(const ValidateOptions& opt, std::ostream& out);

}  // namespace leray
