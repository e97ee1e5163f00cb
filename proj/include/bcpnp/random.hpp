#pragma once

#include <cstdint>
#include <random>

#include <Eigen/Core>

namespace bcpnp {

/// Stateless 64-bit mixer (splitmix64 finalizer).
std::uint64_t mix64(std::uint64_t x);

/// Derives a child seed from a parent seed and up to two stream identifiers.
/// Used wherever a value must depend only on (seed, counter) and not on
/// evaluation order.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0);

/// Uniform integer in [0, n) from a 64-bit draw (multiply-high mapping).
std::uint64_t bounded(std::uint64_t draw, std::uint64_t n);

using Rng = std::mt19937_64;

Eigen::VectorXd gaussian_vector(Eigen::Index n, Rng& rng, double stddev = 1.0);

/// Uniformly distributed point on the unit sphere in R^n.
Eigen::VectorXd random_unit_vector(Eigen::Index n, Rng& rng);

}  // namespace bcpnp
