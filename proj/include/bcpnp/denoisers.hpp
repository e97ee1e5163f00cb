#pragma once

#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Core>

#include "bcpnp/block.hpp"

namespace bcpnp {

/// Isotropic Gaussian prior N(mean, variance * I).
struct GaussianPrior {
  Vector mean;
  double variance = 1.0;
};

/// Mixture of isotropic Gaussians. Weights sum to one; all variances > 0.
struct GmmPrior {
  std::vector<double> weights;
  std::vector<Vector> means;
  std::vector<double> variances;
};

using Prior = std::variant<GaussianPrior, GmmPrior>;

/// Raised when a quantity needs a closed-form inverse of the MMSE map that a
/// prior does not have (mixtures).
class UnsupportedPrior : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

void validate(const Prior& prior);
Index dimension(const Prior& prior);

/// Posterior mean E[x | z] for z = x + n, n ~ N(0, sigma^2 I).
Vector mmse_denoise(const Prior& prior, double sigma, const Vector& z);

/// Score of the noisy marginal, grad h_sigma(z) = -grad log p_z(z), where
/// p_z = p_x convolved with N(0, sigma^2 I).
Vector tweedie_gradient(const Prior& prior, double sigma, const Vector& z);

/// h_sigma(z) = -log p_z(z), including normalization constants.
double noisy_neg_log_density(const Prior& prior, double sigma, const Vector& z);

/// Posterior component probabilities of a mixture at z (log-sum-exp stabilized).
Vector responsibilities(const GmmPrior& prior, double sigma, const Vector& z);

/// (D*)^{-1}(x) for the Gaussian prior: mean + ((tau^2 + sigma^2) / tau^2)(x - mean).
Vector inverse_mmse(const GaussianPrior& prior, double sigma, const Vector& x);

/// Implicit regularizer h_i whose proximal map with step gamma is the MMSE
/// denoiser:
///   h_i(x) = -(1/2 gamma)||x - (D*)^{-1}(x)||^2 + (sigma^2/gamma) h_sigma((D*)^{-1}(x)).
/// Only the Gaussian prior has an explicit inverse; mixtures throw UnsupportedPrior.
double implicit_reg_value(const Prior& prior, double sigma, double gamma, const Vector& x);
Vector implicit_reg_gradient(const Prior& prior, double sigma, double gamma, const Vector& x);

/// Lipschitz constant of grad h_i for the Gaussian prior, sigma^2 / (gamma tau^2).
double implicit_reg_lipschitz(const Prior& prior, double sigma, double gamma);

/// Smallest eigenvalue of the symmetrized finite-difference Jacobian of D* at z.
/// Dense check, limited to dimension 64.
double jacobian_min_eigenvalue(const Prior& prior, double sigma, const Vector& z,
                               double step = 1e-5);

Vector soft_threshold(const Vector& z, double threshold);

/// Proximal map of weight * TV (isotropic, Neumann boundary) on a row-major
/// height x width image, via Chambolle's dual projection iteration.
Vector tv_prox(const Vector& z, int height, int width, double weight, int inner_iterations = 30);

/// Inexactness levels eps_k of the deployed denoiser, k >= 1.
struct ErrorSchedule {
  enum class Kind { zero, constant, square_summable, custom };

  Kind kind = Kind::zero;
  double eps0 = 0.0;
  std::vector<double> values;  // custom: eps_k = values[k - 1], 0 past the end
  std::uint64_t seed = 0;

  static ErrorSchedule zero() { return {}; }
  static ErrorSchedule constant(double eps0, std::uint64_t seed = 0);
  static ErrorSchedule square_summable(double eps0, std::uint64_t seed = 0);
  static ErrorSchedule custom(std::vector<double> values, std::uint64_t seed = 0);

  double epsilon(std::int64_t k) const;
  void validate() const;
};

/// A per-block denoiser D_{sigma_i}. Immutable; evaluation is a pure function
/// of (denoiser, z, k, block).
class Denoiser {
 public:
  enum class Kind { mmse, identity, soft_threshold, tv_prox, inexact };

  static Denoiser mmse(Prior prior, double sigma);
  static Denoiser identity();
  static Denoiser soft_threshold(double threshold);
  static Denoiser tv_prox(double weight, int height, int width, int inner_iterations = 30);
  /// base(z) + eps_k u with u a random unit vector drawn from (seed, k, block).
  static Denoiser inexact(Denoiser base, ErrorSchedule schedule);

  Kind kind() const;
  std::string kind_name() const;

  Vector apply(const Vector& z, std::int64_t k = 1, int block = 1) const;
  /// Output of the wrapped denoiser without the inexactness perturbation.
  Vector apply_exact(const Vector& z) const;

  double error_bound(std::int64_t k) const;

  /// Prior of the underlying MMSE denoiser (looking through an inexact
  /// wrapper), or nullptr.
  const Prior* prior() const;
  /// Gaussian prior if the underlying denoiser is an exact Gaussian MMSE one.
  const GaussianPrior* gaussian_prior() const;
  double sigma() const;

  const Denoiser& base() const;

 private:
  struct Mmse {
    Prior prior;
    double sigma;
  };
  struct Identity {};
  struct SoftThreshold {
    double threshold;
  };
  struct TvProx {
    double weight;
    int height;
    int width;
    int inner_iterations;
  };
  struct Inexact {
    std::shared_ptr<const Denoiser> base;
    ErrorSchedule schedule;
  };
  using Impl = std::variant<Mmse, Identity, SoftThreshold, TvProx, Inexact>;

  explicit Denoiser(Impl impl) : impl_(std::move(impl)) {}

  Impl impl_;
};

}  // namespace bcpnp
