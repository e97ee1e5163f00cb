#include <cmath>
#include <stdexcept>

#include "bcpnp/denoisers.hpp"

namespace bcpnp {
namespace {

// Divergence, the negative adjoint of the forward-difference gradient.
void divergence(const Vector& px, const Vector& py, int h, int w, Vector& out) {
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      const Index i = static_cast<Index>(r) * w + c;
      double d = 0.0;
      if (c < w - 1) d += px[i];
      if (c > 0) d -= px[i - 1];
      if (r < h - 1) d += py[i];
      if (r > 0) d -= py[i - w];
      out[i] = d;
    }
  }
}

}  // namespace

Vector tv_prox(const Vector& z, int height, int width, double weight, int inner_iterations) {
  const Index n = static_cast<Index>(height) * width;
  if (z.size() != n) throw std::invalid_argument("tv_prox: input does not match image shape");
  if (!(weight > 0.0)) return z;

  constexpr double tau = 0.125;
  Vector px = Vector::Zero(n), py = Vector::Zero(n), div = Vector::Zero(n);
  for (int it = 0; it < inner_iterations; ++it) {
    divergence(px, py, height, width, div);
    const Vector t = div - z / weight;
    for (int r = 0; r < height; ++r) {
      for (int c = 0; c < width; ++c) {
        const Index i = static_cast<Index>(r) * width + c;
        const double gx = c < width - 1 ? t[i + 1] - t[i] : 0.0;
        const double gy = r < height - 1 ? t[i + width] - t[i] : 0.0;
        const double mag = std::sqrt(gx * gx + gy * gy);
        px[i] = (px[i] + tau * gx) / (1.0 + tau * mag);
        py[i] = (py[i] + tau * gy) / (1.0 + tau * mag);
      }
    }
  }
  divergence(px, py, height, width, div);
  return z - weight * div;
}

}  // namespace bcpnp
