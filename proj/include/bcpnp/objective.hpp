#pragma once

#include <vector>

#include "bcpnp/block.hpp"
#include "bcpnp/denoisers.hpp"
#include "bcpnp/forward_models.hpp"

namespace bcpnp {

struct ObjectiveValue {
  double f = 0.0;
  double g = 0.0;
  double h = 0.0;
};

/// True when every block denoiser is a (possibly inexact) Gaussian MMSE
/// denoiser, i.e. when the implicit regularizer has a closed form.
bool objective_computable(const std::vector<Denoiser>& denoisers);

/// f = g + sum_i h_i with h_i the implicit regularizer of block i at step gamma.
/// Throws UnsupportedPrior unless objective_computable(denoisers).
ObjectiveValue eval_objective(const DataFidelity& fidelity, const std::vector<Denoiser>& denoisers,
                              double gamma, const BlockVector& x);

/// grad f = (grad_1 g + grad h_1, ..., grad_b g + grad h_b).
BlockVector eval_grad_f(const DataFidelity& fidelity, const std::vector<Denoiser>& denoisers,
                        double gamma, const BlockVector& x);

/// M_max = max_i sigma_i^2 / (gamma tau_i^2).
double implicit_reg_lipschitz_max(const std::vector<Denoiser>& denoisers, double gamma);

}  // namespace bcpnp
