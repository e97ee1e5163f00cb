#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "bcpnp/block.hpp"
#include "bcpnp/denoisers.hpp"
#include "bcpnp/forward_models.hpp"
#include "bcpnp/trace.hpp"

namespace bcpnp {

/// bc-pnp: one block per iteration, each with its own denoiser.
/// pnp-ista: all non-parameter blocks updated together; theta frozen at x0.
/// pnp-gd-theta: as bc-pnp, but the theta block takes a bare gradient step.
/// pnp-oracle-theta: as pnp-ista; the caller initializes theta with the truth.
enum class SolverMode { bc_pnp, pnp_ista, pnp_gd_theta, pnp_oracle_theta };

SolverMode parse_solver_mode(const std::string& name);
std::string to_string(SolverMode mode);

struct SolverConfig {
  std::optional<double> step;   // gamma; defaults to step_factor / L_max
  double step_factor = 0.9;
  ScheduleKind schedule = ScheduleKind::sequential;
  std::uint64_t seed = 0;
  int max_iterations = 500;
  double stop_tolerance = 1e-5;  // on ||x^k - x^{k-1}|| / ||x^{k-1}||
  SolverMode mode = SolverMode::bc_pnp;
  double ball_radius_factor = 10.0;
  int recertify_every = 0;       // 0: certify Lipschitz constants once at x0
  bool record_objective = true;  // f, g, h, ||grad f||^2 when computable

  void validate() const;
};

enum class Termination { tolerance, max_iterations };
std::string to_string(Termination t);

struct SolveResult {
  BlockVector x;
  IterateTrace trace;
  Termination termination = Termination::max_iterations;
  double step = 0.0;
  LipschitzEstimate lipschitz;
  bool left_ball = false;
  std::int64_t left_ball_iteration = 0;
  bool power_iteration_warning = false;
};

/// Non-finite iterate; names the first offending block and iteration.
class NonFiniteIterate : public std::runtime_error {
 public:
  NonFiniteIterate(int block, std::int64_t iteration);
  int block() const { return block_; }
  std::int64_t iteration() const { return iteration_; }

 private:
  int block_;
  std::int64_t iteration_;
};

/// G(x) = (1/gamma)(x - D_sigma(x - gamma grad g(x))), denoisers applied block
/// by block. With exact = true the inexactness perturbation is left out;
/// otherwise the deployed denoisers are evaluated at iteration k.
BlockVector g_operator(const DataFidelity& fidelity, const std::vector<Denoiser>& denoisers,
                       double gamma, const BlockVector& x, bool exact = true,
                       std::int64_t k = 1);

struct StepOutcome {
  BlockVector x;
  int block = 0;               // updated block; 0 if several
  std::vector<int> updated;    // all blocks that moved this iteration
  std::vector<Vector> pre_denoise;  // z_i = x_i - gamma grad_i g(x), per updated block
  double epsilon = 0.0;
};

/// Algorithm driver. Holds references; the fidelity and denoisers must
/// outlive the solver.
class Solver {
 public:
  Solver(const DataFidelity& fidelity, const std::vector<Denoiser>& denoisers,
         SolverConfig config);

  const SolverConfig& config() const { return config_; }

  /// Step size used for x0 (certifies Lipschitz constants at x0 when the
  /// config leaves gamma unset).
  double resolve_step(const BlockVector& x0, LipschitzEstimate* estimate = nullptr) const;

  /// One iteration k >= 1 at step gamma.
  StepOutcome step(const BlockVector& x, std::int64_t k, double gamma) const;

  /// Runs until the relative change drops below the tolerance or the
  /// iteration cap is reached. truth, when given, feeds the RMSE columns.
  SolveResult solve(const BlockVector& x0, const BlockVector* truth = nullptr) const;

 private:
  const DataFidelity& fidelity_;
  const std::vector<Denoiser>& denoisers_;
  SolverConfig config_;
  BlockSchedule schedule_;
};

/// x0 = (A(theta0)^H y, theta0); theta0 is required for blind fidelities.
BlockVector initialize(const DataFidelity& fidelity, const std::optional<Vector>& theta0);

}  // namespace bcpnp
