#include "bcpnp/solver.hpp"

#include <algorithm>
#include <cmath>

#include "bcpnp/metrics.hpp"
#include "bcpnp/objective.hpp"

namespace bcpnp {

SolverMode parse_solver_mode(const std::string& name) {
  if (name == "bc-pnp") return SolverMode::bc_pnp;
  if (name == "pnp-ista" || name == "pnp") return SolverMode::pnp_ista;
  if (name == "pnp-gd-theta") return SolverMode::pnp_gd_theta;
  if (name == "pnp-oracle-theta") return SolverMode::pnp_oracle_theta;
  throw std::invalid_argument("unknown solver mode '" + name + "'");
}

std::string to_string(SolverMode mode) {
  switch (mode) {
    case SolverMode::bc_pnp: return "bc-pnp";
    case SolverMode::pnp_ista: return "pnp-ista";
    case SolverMode::pnp_gd_theta: return "pnp-gd-theta";
    case SolverMode::pnp_oracle_theta: return "pnp-oracle-theta";
  }
  return "unknown";
}

std::string to_string(Termination t) {
  return t == Termination::tolerance ? "tolerance" : "max-iterations";
}

void SolverConfig::validate() const {
  if (step && !(*step > 0.0)) throw std::invalid_argument("step size must be positive");
  if (!(step_factor > 0.0)) throw std::invalid_argument("step factor must be positive");
  if (max_iterations < 1) throw std::invalid_argument("max iterations must be >= 1");
  if (!(stop_tolerance > 0.0)) throw std::invalid_argument("stop tolerance must be positive");
  if (!(ball_radius_factor >= 1.0)) throw std::invalid_argument("ball radius factor must be >= 1");
  if (recertify_every < 0) throw std::invalid_argument("recertify interval must be >= 0");
}

NonFiniteIterate::NonFiniteIterate(int block, std::int64_t iteration)
    : std::runtime_error("non-finite values in block " + std::to_string(block) +
                         " at iteration " + std::to_string(iteration)),
      block_(block),
      iteration_(iteration) {}

BlockVector g_operator(const DataFidelity& fidelity, const std::vector<Denoiser>& denoisers,
                       double gamma, const BlockVector& x, bool exact, std::int64_t k) {
  if (!(gamma > 0.0)) throw std::invalid_argument("G operator: gamma must be positive");
  if (static_cast<int>(denoisers.size()) != x.num_blocks()) {
    throw std::invalid_argument("G operator: need one denoiser per block");
  }
  Vector data(x.layout().total());
  for (int i = 1; i <= x.num_blocks(); ++i) {
    const Vector xi = x.block(i);
    const Vector z = xi - gamma * fidelity.block_gradient(x, i);
    const Denoiser& d = denoisers[i - 1];
    const Vector out = exact ? d.apply_exact(z) : d.apply(z, k, i);
    data.segment(x.layout().offset(i), x.layout().size(i)) = (xi - out) / gamma;
  }
  return {x.layout(), std::move(data)};
}

Solver::Solver(const DataFidelity& fidelity, const std::vector<Denoiser>& denoisers,
               SolverConfig config)
    : fidelity_(fidelity),
      denoisers_(denoisers),
      config_(std::move(config)),
      schedule_(config_.schedule, fidelity.layout().num_blocks(), config_.seed) {
  config_.validate();
  if (static_cast<int>(denoisers_.size()) != fidelity_.layout().num_blocks()) {
    throw std::invalid_argument("solver: need one denoiser per block (" +
                                std::to_string(fidelity_.layout().num_blocks()) + "), got " +
                                std::to_string(denoisers_.size()));
  }
  const bool freezes = config_.mode == SolverMode::pnp_ista ||
                       config_.mode == SolverMode::pnp_oracle_theta;
  if (freezes && fidelity_.parameter_block() != 0 && fidelity_.layout().num_blocks() == 1) {
    throw std::invalid_argument("solver: nothing left to update with theta frozen");
  }
}

double Solver::resolve_step(const BlockVector& x0, LipschitzEstimate* estimate) const {
  LipschitzEstimate est = fidelity_.estimate_lipschitz(x0, config_.ball_radius_factor);
  const double gamma = config_.step ? *config_.step : config_.step_factor / est.max;
  if (estimate != nullptr) *estimate = std::move(est);
  return gamma;
}

StepOutcome Solver::step(const BlockVector& x, std::int64_t k, double gamma) const {
  if (k < 1) throw std::invalid_argument("solver: iteration counter starts at 1");
  const int theta = fidelity_.parameter_block();
  StepOutcome out;
  switch (config_.mode) {
    case SolverMode::bc_pnp:
    case SolverMode::pnp_gd_theta: {
      const int i = schedule_.next_index(k);
      const Vector z = x.block(i) - gamma * fidelity_.block_gradient(x, i);
      const bool bare_gradient = config_.mode == SolverMode::pnp_gd_theta && i == theta;
      const Vector xi = bare_gradient ? z : denoisers_[i - 1].apply(z, k, i);
      out.x = x.with_block(i, xi);
      out.block = i;
      out.updated = {i};
      out.pre_denoise = {z};
      out.epsilon = bare_gradient ? 0.0 : denoisers_[i - 1].error_bound(k);
      break;
    }
    case SolverMode::pnp_ista:
    case SolverMode::pnp_oracle_theta: {
      Vector data = x.data();
      for (int i = 1; i <= x.num_blocks(); ++i) {
        if (i == theta) continue;
        const Vector z = x.block(i) - gamma * fidelity_.block_gradient(x, i);
        data.segment(x.layout().offset(i), x.layout().size(i)) = denoisers_[i - 1].apply(z, k, i);
        out.updated.push_back(i);
        out.pre_denoise.push_back(z);
        out.epsilon = std::max(out.epsilon, denoisers_[i - 1].error_bound(k));
      }
      out.x = BlockVector(x.layout(), std::move(data));
      out.block = out.updated.size() == 1 ? out.updated.front() : 0;
      break;
    }
  }
  for (int i : out.updated) {
    if (!out.x.block_view(i).allFinite()) throw NonFiniteIterate(i, k);
  }
  return out;
}

namespace {

Vector image_part(const BlockVector& x, int theta) {
  std::vector<Vector> parts;
  Index n = 0;
  for (int i = 1; i <= x.num_blocks(); ++i) {
    if (i == theta) continue;
    parts.push_back(x.block(i));
    n += parts.back().size();
  }
  Vector out(n);
  Index at = 0;
  for (const auto& p : parts) {
    out.segment(at, p.size()) = p;
    at += p.size();
  }
  return out;
}

}  // namespace

SolveResult Solver::solve(const BlockVector& x0, const BlockVector* truth) const {
  if (!(x0.layout() == fidelity_.layout())) {
    throw std::invalid_argument("solver: x0 layout does not match the fidelity");
  }
  if (truth != nullptr && !(truth->layout() == x0.layout())) {
    throw std::invalid_argument("solver: ground truth layout does not match x0");
  }
  for (int i = 1; i <= x0.num_blocks(); ++i) {
    if (!x0.block_view(i).allFinite()) throw NonFiniteIterate(i, 0);
  }

  SolveResult result;
  double gamma = resolve_step(x0, &result.lipschitz);
  result.power_iteration_warning = result.lipschitz.warning;

  const int theta = fidelity_.parameter_block();
  const bool objective = config_.record_objective && objective_computable(denoisers_);
  Vector truth_image, truth_theta;
  if (truth != nullptr) {
    truth_image = image_part(*truth, theta);
    if (theta != 0) truth_theta = truth->block(theta);
  }

  auto describe = [&](const BlockVector& x, TraceEntry& row) {
    if (objective) {
      const ObjectiveValue v = eval_objective(fidelity_, denoisers_, gamma, x);
      row.f = v.f;
      row.g = v.g;
      row.h = v.h;
      row.grad_f_norm2 = eval_grad_f(fidelity_, denoisers_, gamma, x).squared_norm();
    } else {
      row.g = fidelity_.value(x);
    }
    if (truth != nullptr) {
      row.rmse_image = rmse(image_part(x, theta), truth_image);
      if (theta != 0) row.rmse_parameter = rmse(x.block(theta), truth_theta);
    }
  };

  auto check_ball = [&](const BlockVector& x, std::int64_t k) {
    if (result.left_ball) return;
    for (int i = 1; i <= x.num_blocks(); ++i) {
      if (static_cast<std::size_t>(i) <= result.lipschitz.radius.size() &&
          x.block_view(i).norm() > result.lipschitz.radius[i - 1]) {
        result.left_ball = true;
        result.left_ball_iteration = k;
        return;
      }
    }
  };

  TraceEntry first;
  describe(x0, first);
  result.trace.rows.push_back(first);

  BlockVector x = x0;
  for (std::int64_t k = 1; k <= config_.max_iterations; ++k) {
    if (config_.recertify_every > 0 && k > 1 && (k - 1) % config_.recertify_every == 0) {
      result.lipschitz = fidelity_.estimate_lipschitz(x, config_.ball_radius_factor);
      result.power_iteration_warning = result.power_iteration_warning || result.lipschitz.warning;
      if (!config_.step) gamma = config_.step_factor / result.lipschitz.max;
    }

    TraceEntry row;
    row.iteration = k;
    row.residual_norm2 = g_operator(fidelity_, denoisers_, gamma, x).squared_norm();

    StepOutcome next = step(x, k, gamma);
    const double change = (next.x.data() - x.data()).norm();
    const double scale = x.norm();
    row.block = next.block;
    row.step_norm = change;
    row.epsilon = next.epsilon;
    describe(next.x, row);
    result.trace.rows.push_back(row);

    x = std::move(next.x);
    check_ball(x, k);
    const double relative = scale > 0.0 ? change / scale : change;
    if (relative < config_.stop_tolerance) {
      result.termination = Termination::tolerance;
      break;
    }
  }

  result.trace.final_residual_norm2 = g_operator(fidelity_, denoisers_, gamma, x).squared_norm();
  result.step = gamma;
  result.x = std::move(x);
  return result;
}

BlockVector initialize(const DataFidelity& fidelity, const std::optional<Vector>& theta0) {
  const int theta = fidelity.parameter_block();
  if (theta == 0) return fidelity.adjoint_initialization(Vector());
  if (!theta0) throw std::invalid_argument("initialize: blind fidelity needs an initial theta0");
  if (theta0->size() != fidelity.layout().size(theta)) {
    throw std::invalid_argument("initialize: theta0 length does not match the parameter block");
  }
  return fidelity.adjoint_initialization(*theta0);
}

}  // namespace bcpnp
