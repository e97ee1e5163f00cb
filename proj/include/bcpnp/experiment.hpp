#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "bcpnp/denoisers.hpp"
#include "bcpnp/forward_models.hpp"
#include "bcpnp/solver.hpp"

namespace bcpnp {

/// Bad or inconsistent experiment configuration. The message names the JSON
/// field (or the line for syntax errors).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TheoryCheckConfig {
  bool enabled = false;
  int reference_factor = 10;      // reference run length for f*, in multiples of max_iterations
  int ensemble_seeds = 50;        // random-iid schedules
  double convergence_ratio = 1e-4;
};

/// Parsed experiment file. Problem and denoiser sections are validated on
/// load but kept as JSON; build_problem turns them into objects.
struct ExperimentConfig {
  nlohmann::json problem;
  nlohmann::json denoisers;
  SolverConfig solver;
  std::vector<SolverMode> modes;
  TheoryCheckConfig theory;
  std::string output_dir;
  std::string base_dir;  // directory of the config file; input paths are relative to it
  std::uint64_t seed = 0;  // problem seed (noise, theta0 perturbations)
};

ExperimentConfig parse_config(const nlohmann::json& doc, const std::string& base_dir = ".");
ExperimentConfig load_config(const std::string& path);

/// Synthesized or loaded problem instance.
struct Problem {
  std::string kind;  // blind-deconvolution, multi-coil, deconvolution
  std::unique_ptr<DataFidelity> fidelity;
  BlockVector truth;
  std::optional<Vector> theta0;  // parameter-block start (block coordinates)
  int height = 0;
  int width = 0;
  bool complex_image = false;
  double kernel_scale = 1.0;
  int kernel_height = 0;
  int kernel_width = 0;
  int coils = 0;

  int parameter_block() const { return fidelity->parameter_block(); }
};

Problem build_problem(const ExperimentConfig& config);

/// Per-block denoisers; seed feeds the inexactness perturbations.
std::vector<Denoiser> build_denoisers(const ExperimentConfig& config, const Problem& problem,
                                      std::uint64_t seed);

struct RunOptions {
  std::optional<std::uint64_t> seed_override;
  std::optional<std::string> output_dir;
  bool strict_checks = false;
};

/// Exit codes of run_experiment.
enum ExitCode : int { kExitOk = 0, kExitConfig = 1, kExitRuntime = 2, kExitStrict = 3 };

/// Runs every configured mode and writes traces, reports, metrics and final
/// iterates below the output directory. Diagnostics go to log.
int run_experiment(const std::string& config_path, const RunOptions& options, std::ostream& log);

/// Static checks of a config (parsing, shapes, files, step size versus the
/// certified 1/L_max, schedule compatibility). Never runs the solver; an
/// empty list means the config is well formed.
std::vector<std::string> validate_experiment(const std::string& config_path,
                                             const RunOptions& options = {});

}  // namespace bcpnp
