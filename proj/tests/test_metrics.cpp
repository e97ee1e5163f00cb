#include "doctest.h"

#include <cmath>
#include <filesystem>

#include "bcpnp/image_io.hpp"
#include "bcpnp/metrics.hpp"
#include "bcpnp/random.hpp"

using namespace bcpnp;

namespace {

// SSIM by explicit windowed sums at every valid window position.
double direct_ssim(const Vector& x, const Vector& y, int h, int w) {
  const int win = 11, rad = 5;
  double kernel[11][11], total = 0.0;
  for (int a = 0; a < win; ++a)
    for (int b = 0; b < win; ++b) {
      kernel[a][b] = std::exp(-((a - rad) * (a - rad) + (b - rad) * (b - rad)) / (2 * 1.5 * 1.5));
      total += kernel[a][b];
    }
  const double c1 = 0.01 * 0.01, c2 = 0.03 * 0.03;
  double acc = 0.0;
  int count = 0;
  for (int r = 0; r + win <= h; ++r)
    for (int c = 0; c + win <= w; ++c) {
      double mx = 0, my = 0, sxx = 0, syy = 0, sxy = 0;
      for (int a = 0; a < win; ++a)
        for (int b = 0; b < win; ++b) {
          const double k = kernel[a][b] / total;
          const double xv = x[(r + a) * w + c + b], yv = y[(r + a) * w + c + b];
          mx += k * xv;
          my += k * yv;
          sxx += k * xv * xv;
          syy += k * yv * yv;
          sxy += k * xv * yv;
        }
      const double vx = sxx - mx * mx, vy = syy - my * my, cov = sxy - mx * my;
      acc += ((2 * mx * my + c1) * (2 * cov + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2));
      ++count;
    }
  return acc / count;
}

}  // namespace

TEST_CASE("rmse identities") {
  const Vector z{{1.0, -2.0, 0.5}};
  CHECK(rmse(z, z) == 0.0);
  CHECK(rmse(2 * z, z) == doctest::Approx(1.0));
  CHECK_THROWS(rmse(z, Vector::Zero(3)));
  CHECK_THROWS(rmse(z, Vector::Zero(2)));
}

TEST_CASE("ssim matches a direct windowed computation") {
  const int n = 64;
  Vector ramp(n * n);
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c) ramp[r * n + c] = static_cast<double>(r + c) / (2 * (n - 1));
  CHECK(ssim(ramp, ramp, n, n) == doctest::Approx(1.0).epsilon(1e-14));
  Rng rng(1);
  const Vector noisy = ramp + gaussian_vector(n * n, rng, 0.1);
  const double got = ssim(noisy, ramp, n, n);
  CHECK(std::abs(got - direct_ssim(noisy, ramp, n, n)) < 1e-6);
  CHECK(got < 0.9);
  CHECK_THROWS(ssim(ramp, ramp, 8, 8));
}

TEST_CASE("PGM and CSV round trips") {
  const auto dir = std::filesystem::temp_directory_path() / "bcpnp_metrics_test";
  std::filesystem::create_directories(dir);
  Image img{3, 4, Vector(12)};
  for (int i = 0; i < 12; ++i) img.pixels[i] = i / 11.0;
  write_pgm((dir / "a.pgm").string(), img, 16);
  const Image back = read_pgm((dir / "a.pgm").string());
  CHECK(back.height == 3);
  CHECK(back.width == 4);
  CHECK((back.pixels - img.pixels).cwiseAbs().maxCoeff() <= 0.5 / 65535 + 1e-15);

  write_pgm((dir / "b.pgm").string(), img, 8);
  CHECK((read_pgm((dir / "b.pgm").string()).pixels - img.pixels).cwiseAbs().maxCoeff() <=
        0.5 / 255 + 1e-15);

  write_csv_matrix((dir / "m.csv").string(), img);
  const Image m = read_csv_matrix((dir / "m.csv").string());
  CHECK(m.pixels == img.pixels);
  CHECK(m.width == 4);
  CHECK_THROWS(read_pgm((dir / "missing.pgm").string()));
  std::filesystem::remove_all(dir);
}
