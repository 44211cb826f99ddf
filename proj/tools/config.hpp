#pragma once

// Experiment configuration: JSON <-> ExperimentConfig, plus the runner shared
// by the CLI and the tests.

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "obsent/lawsuite.hpp"
#include "obsent/models.hpp"

namespace obsent::cli {

enum class RunType { Isolated, Open, OpenGeneralized, Multibath, Particle, Fluctuation };
enum class AssertionMode { Strict, ReportOnly };

std::string to_string(RunType r);

/// Isolated runs: coarse_gibbs (block-uniform, in the equilibrium set),
/// gibbs, or counterexample (coarse_gibbs plus a coherence across windows).
enum class IsolatedStart { CoarseGibbs, Gibbs, Counterexample };

struct ExperimentConfig {
  ModelSpec model;
  RunType run = RunType::Open;
  RunSettings settings;
  std::vector<double> system_populations;  // computational basis; empty → ground state |0⟩
  double system_coherence = 0.0;           // real ⟨0|ρ_S|1⟩
  std::vector<double> initial_joint;       // open_generalized; empty → product with Gibbs bath bins
  IsolatedStart isolated_start = IsolatedStart::CoarseGibbs;
  std::size_t ft_bins = 0;
  AssertionMode assertions = AssertionMode::Strict;
  std::string csv_path = "ledger.csv";
  std::string summary_path = "summary.json";
  std::string ft_csv_path = "ft.csv";
};

/// Throws Error(ConfigInvalid) naming the offending field.
ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::filesystem::path& path);
/// Every field with its default value, pretty-printed.
std::string defaults_json();
std::string to_json(const ExperimentConfig& config);

/// Physics checks that need the model but not a run: dimensions, list
/// lengths, conservation and commutation for particle runs, grid alignment.
void validate(const ExperimentConfig& config);

struct RunOutcome {
  int exit_code = 0;                 // 0 ok, 2 assertion failure in strict mode
  std::vector<Violation> violations;
  std::vector<std::string> failed;   // failed assertion names (fluctuation runs)
};

struct OutputPaths {
  std::filesystem::path csv;
  std::filesystem::path summary;
  std::filesystem::path ft_csv;
};
OutputPaths output_paths(const ExperimentConfig& config, const std::optional<std::filesystem::path>& out_dir,
                         const std::string& stem);

/// The ledger of a non-fluctuation run, without writing anything.
ThermoLedger run_ledger(const ExperimentConfig& config, const BuiltModel& model);

/// Runs the experiment and writes its artifacts.
RunOutcome execute(const ExperimentConfig& config, const OutputPaths& paths);

}  // namespace obsent::cli
