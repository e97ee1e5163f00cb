#include "bcpnp/random.hpp"

#include <stdexcept>

namespace bcpnp {

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  return mix64(mix64(mix64(seed) ^ a) ^ (b * 0xd1b54a32d192ed03ULL));
}

std::uint64_t bounded(std::uint64_t draw, std::uint64_t n) {
  return static_cast<std::uint64_t>((static_cast<unsigned __int128>(draw) * n) >> 64);
}

Eigen::VectorXd gaussian_vector(Eigen::Index n, Rng& rng, double stddev) {
  std::normal_distribution<double> normal(0.0, stddev);
  Eigen::VectorXd out(n);
  for (Eigen::Index i = 0; i < n; ++i) out[i] = normal(rng);
  return out;
}

Eigen::VectorXd random_unit_vector(Eigen::Index n, Rng& rng) {
  if (n < 1) throw std::invalid_argument("random_unit_vector: empty dimension");
  for (;;) {
    Eigen::VectorXd u = gaussian_vector(n, rng);
    const double norm = u.norm();
    if (norm > 1e-300) return u / norm;
  }
}

}  // namespace bcpnp
