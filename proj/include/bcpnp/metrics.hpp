#pragma once

#include "bcpnp/block.hpp"

namespace bcpnp {

/// Relative error ||estimate - truth|| / ||truth||.
double rmse(const Vector& estimate, const Vector& truth);

struct SsimOptions {
  int window = 11;
  double window_sigma = 1.5;
  double k1 = 0.01;
  double k2 = 0.03;
  double dynamic_range = 1.0;
};

/// Mean SSIM over all fully contained windows of two row-major images,
/// Gaussian-weighted window.
double ssim(const Vector& estimate, const Vector& truth, int height, int width,
            const SsimOptions& options = {});

}  // namespace bcpnp
