#pragma once

// Batch front end: experiment configuration and the gamma-scan, find, verify
// and spectrum commands.  Every command writes fixed file names into one
// output directory together with MANIFEST.json, which records the fully
// materialized configuration and whether the run completed.

#include "cylgeo/io.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace cylgeo {

struct ExperimentConfig {
  int n = 2;
  Json perturbation = Json{{"builtin", "odd_decay_anisotropic"}};
  std::vector<double> eps_list = {0.02};
  bool eps_is_list = false;
  int nodes = 256;       // M
  int quad_nodes = 128;  // M_q
  int starts = 64;
  std::uint64_t seed = 1;
  double r_max = 20.0;
  double grad_tol = 1e-9;
  double kernel_tol = 1e-7;
  double dedup_tol = 0.0;  // <= 0 before materialization: 1e-4 sqrt(M)
  double eps_max = 0.05;
  int verify_samples = 10;
  double verify_r_range = 3.0;
  std::vector<double> decay_r = {5.0, 10.0, 20.0};
  double cylinder_radius = 1.0;
  std::optional<CircleParam> circle;  // spectrum command; standard circle by default
  std::string output = "out";
  int threads = 1;

  /// First entry of the eps list (the scalar eps when given as a number).
  double eps() const { return eps_list.front(); }
  PerturbationForm form() const;
};

/// Parses and validates; throws ConfigError naming the offending field.
ExperimentConfig config_from_json(const Json& j);
/// All fields, defaults included.
Json config_to_json(const ExperimentConfig& config);

struct CommandResult {
  std::vector<std::string> files;  // written, relative to the output directory
  Json summary;
};

/// Each command writes its files into config.output and returns their names.
/// Errors propagate; run_command turns them into a partial MANIFEST.
CommandResult cmd_gamma_scan(const ExperimentConfig& config);
CommandResult cmd_find(const ExperimentConfig& config);
CommandResult cmd_verify(const ExperimentConfig& config);
CommandResult cmd_spectrum(const ExperimentConfig& config);

/// Runs a command by name and writes MANIFEST.json.  Returns the exit code:
/// 0 on success, 1 when the command raised (partial results are kept).
int run_command(const std::string& name, const ExperimentConfig& config);

/// Entry point of the executable: flags --config, --out, --seed, --threads and
/// one of the subcommands.  Usage and configuration errors return 2.
int run_cli(int argc, char** argv);

}  // namespace cylgeo
