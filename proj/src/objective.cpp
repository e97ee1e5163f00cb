#include "bcpnp/objective.hpp"

#include <algorithm>

namespace bcpnp {
namespace {

void check_arity(const DataFidelity& fidelity, const std::vector<Denoiser>& denoisers,
                 const BlockVector& x) {
  if (static_cast<int>(denoisers.size()) != fidelity.layout().num_blocks()) {
    throw std::invalid_argument("need one denoiser per block");
  }
  if (!(x.layout() == fidelity.layout())) {
    throw std::invalid_argument("iterate layout does not match the fidelity");
  }
}

const Prior& gaussian_or_throw(const Denoiser& d, int block) {
  if (d.gaussian_prior() == nullptr) {
    throw UnsupportedPrior("block " + std::to_string(block) + " uses a " + d.kind_name() +
                           " denoiser; the implicit objective needs Gaussian MMSE priors");
  }
  return *d.prior();
}

}  // namespace

bool objective_computable(const std::vector<Denoiser>& denoisers) {
  return !denoisers.empty() && std::all_of(denoisers.begin(), denoisers.end(), [](const auto& d) {
    return d.gaussian_prior() != nullptr;
  });
}

ObjectiveValue eval_objective(const DataFidelity& fidelity, const std::vector<Denoiser>& denoisers,
                              double gamma, const BlockVector& x) {
  check_arity(fidelity, denoisers, x);
  ObjectiveValue out;
  for (int i = 1; i <= x.num_blocks(); ++i) {
    const Denoiser& d = denoisers[i - 1];
    out.h += implicit_reg_value(gaussian_or_throw(d, i), d.sigma(), gamma, x.block(i));
  }
  out.g = fidelity.value(x);
  out.f = out.g + out.h;
  return out;
}

BlockVector eval_grad_f(const DataFidelity& fidelity, const std::vector<Denoiser>& denoisers,
                        double gamma, const BlockVector& x) {
  check_arity(fidelity, denoisers, x);
  Vector data(x.layout().total());
  for (int i = 1; i <= x.num_blocks(); ++i) {
    const Denoiser& d = denoisers[i - 1];
    const Prior& prior = gaussian_or_throw(d, i);
    data.segment(x.layout().offset(i), x.layout().size(i)) =
        fidelity.block_gradient(x, i) + implicit_reg_gradient(prior, d.sigma(), gamma, x.block(i));
  }
  return {x.layout(), std::move(data)};
}

double implicit_reg_lipschitz_max(const std::vector<Denoiser>& denoisers, double gamma) {
  double m = 0.0;
  for (std::size_t i = 0; i < denoisers.size(); ++i) {
    const Denoiser& d = denoisers[i];
    m = std::max(m, implicit_reg_lipschitz(gaussian_or_throw(d, static_cast<int>(i) + 1),
                                           d.sigma(), gamma));
  }
  return m;
}

}  // namespace bcpnp
