#include "bcpnp/denoisers.hpp"

#include <cmath>
#include <numbers>

#include <Eigen/Eigenvalues>

#include "bcpnp/random.hpp"

namespace bcpnp {
namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

void check_sigma(double sigma) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) {
    throw std::invalid_argument("noise level sigma must be positive and finite");
  }
}

void check_dim(const Prior& prior, const Vector& z) {
  if (z.size() != dimension(prior)) {
    throw std::invalid_argument("prior dimension " + std::to_string(dimension(prior)) +
                                " does not match input length " + std::to_string(z.size()));
  }
}

/// log N(z; mean, s I)
double log_isotropic_normal(const Vector& z, const Vector& mean, double s) {
  const double n = static_cast<double>(z.size());
  return -0.5 * (z - mean).squaredNorm() / s - 0.5 * n * std::log(2.0 * std::numbers::pi * s);
}

Vector log_joint(const GmmPrior& prior, double sigma, const Vector& z) {
  const auto k = static_cast<Index>(prior.weights.size());
  Vector out(k);
  for (Index c = 0; c < k; ++c) {
    const double s = prior.variances[c] + sigma * sigma;
    out[c] = std::log(prior.weights[c]) + log_isotropic_normal(z, prior.means[c], s);
  }
  return out;
}

double log_sum_exp(const Vector& a) {
  const double m = a.maxCoeff();
  return m + std::log((a.array() - m).exp().sum());
}

const GaussianPrior& require_gaussian(const Prior& prior) {
  const auto* g = std::get_if<GaussianPrior>(&prior);
  if (g == nullptr) {
    throw UnsupportedPrior(
        "implicit regularizer needs an explicit inverse MMSE map; only the Gaussian prior "
        "provides one");
  }
  return *g;
}

}  // namespace

void validate(const Prior& prior) {
  std::visit(Overloaded{
                 [](const GaussianPrior& p) {
                   if (p.mean.size() < 1) throw std::invalid_argument("GaussianPrior: empty mean");
                   if (!(p.variance > 0.0)) {
                     throw std::invalid_argument("GaussianPrior: variance must be positive");
                   }
                 },
                 [](const GmmPrior& p) {
                   const auto k = p.weights.size();
                   if (k < 1) throw std::invalid_argument("GmmPrior: need at least one component");
                   if (p.means.size() != k || p.variances.size() != k) {
                     throw std::invalid_argument("GmmPrior: component arrays differ in length");
                   }
                   double total = 0.0;
                   for (std::size_t c = 0; c < k; ++c) {
                     if (!(p.weights[c] > 0.0)) {
                       throw std::invalid_argument("GmmPrior: weights must be positive");
                     }
                     if (!(p.variances[c] > 0.0)) {
                       throw std::invalid_argument("GmmPrior: variances must be positive");
                     }
                     if (p.means[c].size() != p.means[0].size() || p.means[c].size() < 1) {
                       throw std::invalid_argument("GmmPrior: inconsistent mean dimensions");
                     }
                     total += p.weights[c];
                   }
                   if (std::abs(total - 1.0) > 1e-9) {
                     throw std::invalid_argument("GmmPrior: weights must sum to 1");
                   }
                 },
             },
             prior);
}

Index dimension(const Prior& prior) {
  return std::visit(Overloaded{
                        [](const GaussianPrior& p) { return p.mean.size(); },
                        [](const GmmPrior& p) { return p.means.empty() ? Index{0} : p.means[0].size(); },
                    },
                    prior);
}

Vector responsibilities(const GmmPrior& prior, double sigma, const Vector& z) {
  check_sigma(sigma);
  const Vector lj = log_joint(prior, sigma, z);
  const double lse = log_sum_exp(lj);
  return (lj.array() - lse).exp().matrix();
}

Vector mmse_denoise(const Prior& prior, double sigma, const Vector& z) {
  check_sigma(sigma);
  check_dim(prior, z);
  const double s2 = sigma * sigma;
  return std::visit(
      Overloaded{
          [&](const GaussianPrior& p) -> Vector {
            const double shrink = p.variance / (p.variance + s2);
            return p.mean + shrink * (z - p.mean);
          },
          [&](const GmmPrior& p) -> Vector {
            const Vector r = responsibilities(p, sigma, z);
            Vector out = Vector::Zero(z.size());
            for (Index c = 0; c < r.size(); ++c) {
              const double shrink = p.variances[c] / (p.variances[c] + s2);
              out += r[c] * (p.means[c] + shrink * (z - p.means[c]));
            }
            return out;
          },
      },
      prior);
}

Vector tweedie_gradient(const Prior& prior, double sigma, const Vector& z) {
  check_sigma(sigma);
  check_dim(prior, z);
  const double s2 = sigma * sigma;
  return std::visit(Overloaded{
                        [&](const GaussianPrior& p) -> Vector {
                          return (z - p.mean) / (p.variance + s2);
                        },
                        [&](const GmmPrior& p) -> Vector {
                          const Vector r = responsibilities(p, sigma, z);
                          Vector out = Vector::Zero(z.size());
                          for (Index c = 0; c < r.size(); ++c) {
                            out += (r[c] / (p.variances[c] + s2)) * (z - p.means[c]);
                          }
                          return out;
                        },
                    },
                    prior);
}

double noisy_neg_log_density(const Prior& prior, double sigma, const Vector& z) {
  check_sigma(sigma);
  check_dim(prior, z);
  return std::visit(Overloaded{
                        [&](const GaussianPrior& p) {
                          return -log_isotropic_normal(z, p.mean, p.variance + sigma * sigma);
                        },
                        [&](const GmmPrior& p) { return -log_sum_exp(log_joint(p, sigma, z)); },
                    },
                    prior);
}

Vector inverse_mmse(const GaussianPrior& prior, double sigma, const Vector& x) {
  check_sigma(sigma);
  const double expand = (prior.variance + sigma * sigma) / prior.variance;
  return prior.mean + expand * (x - prior.mean);
}

double implicit_reg_value(const Prior& prior, double sigma, double gamma, const Vector& x) {
  const GaussianPrior& p = require_gaussian(prior);
  check_dim(prior, x);
  if (!(gamma > 0.0)) throw std::invalid_argument("step size gamma must be positive");
  const Vector u = inverse_mmse(p, sigma, x);
  return -0.5 / gamma * (x - u).squaredNorm() +
         sigma * sigma / gamma * noisy_neg_log_density(prior, sigma, u);
}

Vector implicit_reg_gradient(const Prior& prior, double sigma, double gamma, const Vector& x) {
  const GaussianPrior& p = require_gaussian(prior);
  check_dim(prior, x);
  if (!(gamma > 0.0)) throw std::invalid_argument("step size gamma must be positive");
  return (inverse_mmse(p, sigma, x) - x) / gamma;
}

double implicit_reg_lipschitz(const Prior& prior, double sigma, double gamma) {
  const GaussianPrior& p = require_gaussian(prior);
  check_sigma(sigma);
  return sigma * sigma / (gamma * p.variance);
}

double jacobian_min_eigenvalue(const Prior& prior, double sigma, const Vector& z, double step) {
  check_sigma(sigma);
  check_dim(prior, z);
  const Index n = z.size();
  if (n > 64) throw std::invalid_argument("jacobian check limited to dimension <= 64");
  Eigen::MatrixXd jac(n, n);
  for (Index j = 0; j < n; ++j) {
    Vector zp = z, zm = z;
    zp[j] += step;
    zm[j] -= step;
    jac.col(j) = (mmse_denoise(prior, sigma, zp) - mmse_denoise(prior, sigma, zm)) / (2.0 * step);
  }
  const Eigen::MatrixXd sym = 0.5 * (jac + jac.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sym, Eigen::EigenvaluesOnly);
  return eig.eigenvalues().minCoeff();
}

Vector soft_threshold(const Vector& z, double threshold) {
  if (threshold < 0.0) throw std::invalid_argument("soft threshold must be nonnegative");
  return z.unaryExpr([threshold](double v) {
    const double mag = std::abs(v) - threshold;
    return mag > 0.0 ? std::copysign(mag, v) : 0.0;
  });
}

ErrorSchedule ErrorSchedule::constant(double eps0, std::uint64_t seed) {
  ErrorSchedule s;
  s.kind = Kind::constant;
  s.eps0 = eps0;
  s.seed = seed;
  s.validate();
  return s;
}

ErrorSchedule ErrorSchedule::square_summable(double eps0, std::uint64_t seed) {
  ErrorSchedule s;
  s.kind = Kind::square_summable;
  s.eps0 = eps0;
  s.seed = seed;
  s.validate();
  return s;
}

ErrorSchedule ErrorSchedule::custom(std::vector<double> values, std::uint64_t seed) {
  ErrorSchedule s;
  s.kind = Kind::custom;
  s.values = std::move(values);
  s.seed = seed;
  s.validate();
  return s;
}

void ErrorSchedule::validate() const {
  if (eps0 < 0.0 || !std::isfinite(eps0)) {
    throw std::invalid_argument("error schedule: eps0 must be finite and >= 0");
  }
  for (double v : values) {
    if (v < 0.0 || !std::isfinite(v)) {
      throw std::invalid_argument("error schedule: values must be finite and >= 0");
    }
  }
}

double ErrorSchedule::epsilon(std::int64_t k) const {
  if (k < 1) throw std::invalid_argument("error schedule: k starts at 1");
  switch (kind) {
    case Kind::zero: return 0.0;
    case Kind::constant: return eps0;
    case Kind::square_summable: return eps0 / static_cast<double>(k);
    case Kind::custom:
      return static_cast<std::size_t>(k) <= values.size() ? values[k - 1] : 0.0;
  }
  return 0.0;
}

Denoiser Denoiser::mmse(Prior prior, double sigma) {
  validate(prior);
  check_sigma(sigma);
  return Denoiser(Mmse{std::move(prior), sigma});
}

Denoiser Denoiser::identity() { return Denoiser(Identity{}); }

Denoiser Denoiser::soft_threshold(double threshold) {
  if (threshold < 0.0) throw std::invalid_argument("soft threshold must be nonnegative");
  return Denoiser(SoftThreshold{threshold});
}

Denoiser Denoiser::tv_prox(double weight, int height, int width, int inner_iterations) {
  if (!(weight > 0.0)) throw std::invalid_argument("tv-prox weight must be positive");
  if (height < 1 || width < 1) throw std::invalid_argument("tv-prox: bad image shape");
  if (inner_iterations < 1) throw std::invalid_argument("tv-prox: inner iterations >= 1");
  return Denoiser(TvProx{weight, height, width, inner_iterations});
}

Denoiser Denoiser::inexact(Denoiser base, ErrorSchedule schedule) {
  schedule.validate();
  return Denoiser(Inexact{std::make_shared<const Denoiser>(std::move(base)), std::move(schedule)});
}

Denoiser::Kind Denoiser::kind() const {
  return std::visit(Overloaded{
                        [](const Mmse&) { return Kind::mmse; },
                        [](const Identity&) { return Kind::identity; },
                        [](const SoftThreshold&) { return Kind::soft_threshold; },
                        [](const TvProx&) { return Kind::tv_prox; },
                        [](const Inexact&) { return Kind::inexact; },
                    },
                    impl_);
}

std::string Denoiser::kind_name() const {
  return std::visit(
      Overloaded{
          [](const Mmse& m) -> std::string {
            return std::holds_alternative<GaussianPrior>(m.prior) ? "gaussian-mmse" : "gmm-mmse";
          },
          [](const Identity&) -> std::string { return "identity"; },
          [](const SoftThreshold&) -> std::string { return "soft-threshold"; },
          [](const TvProx&) -> std::string { return "tv-prox"; },
          [](const Inexact& in) -> std::string { return "inexact(" + in.base->kind_name() + ")"; },
      },
      impl_);
}

Vector Denoiser::apply_exact(const Vector& z) const {
  return std::visit(
      Overloaded{
          [&](const Mmse& m) -> Vector { return mmse_denoise(m.prior, m.sigma, z); },
          [&](const Identity&) -> Vector { return z; },
          [&](const SoftThreshold& s) -> Vector { return bcpnp::soft_threshold(z, s.threshold); },
          [&](const TvProx& t) -> Vector {
            if (z.size() != static_cast<Index>(t.height) * t.width) {
              throw std::invalid_argument("tv-prox: input length does not match image shape");
            }
            return bcpnp::tv_prox(z, t.height, t.width, t.weight, t.inner_iterations);
          },
          [&](const Inexact& in) -> Vector { return in.base->apply_exact(z); },
      },
      impl_);
}

Vector Denoiser::apply(const Vector& z, std::int64_t k, int block) const {
  const auto* in = std::get_if<Inexact>(&impl_);
  if (in == nullptr) return apply_exact(z);
  Vector out = in->base->apply(z, k, block);
  const double eps = in->schedule.epsilon(k);
  if (eps == 0.0) return out;
  Rng rng(derive_seed(in->schedule.seed, static_cast<std::uint64_t>(k),
                      static_cast<std::uint64_t>(block)));
  out += eps * random_unit_vector(out.size(), rng);
  return out;
}

double Denoiser::error_bound(std::int64_t k) const {
  const auto* in = std::get_if<Inexact>(&impl_);
  return in == nullptr ? 0.0 : in->schedule.epsilon(k) + in->base->error_bound(k);
}

const Prior* Denoiser::prior() const {
  if (const auto* m = std::get_if<Mmse>(&impl_)) return &m->prior;
  if (const auto* in = std::get_if<Inexact>(&impl_)) return in->base->prior();
  return nullptr;
}

const GaussianPrior* Denoiser::gaussian_prior() const {
  const Prior* p = prior();
  return p == nullptr ? nullptr : std::get_if<GaussianPrior>(p);
}

double Denoiser::sigma() const {
  if (const auto* m = std::get_if<Mmse>(&impl_)) return m->sigma;
  if (const auto* in = std::get_if<Inexact>(&impl_)) return in->base->sigma();
  return 0.0;
}

const Denoiser& Denoiser::base() const {
  if (const auto* in = std::get_if<Inexact>(&impl_)) return in->base->base();
  return *this;
}

}  // namespace bcpnp
