#include "doctest.h"

#include <cmath>
#include <functional>

#include <Eigen/SVD>

#include "bcpnp/fft.hpp"
#include "bcpnp/forward_models.hpp"
#include "bcpnp/random.hpp"

using namespace bcpnp;

namespace {

// Direct circular convolution sum, kernel centred at (kh/2, kw/2).
Vector naive_convolution(const Vector& image, int h, int w, const Vector& kernel, int kh, int kw) {
  Vector out = Vector::Zero(h * w);
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c)
      for (int a = 0; a < kh; ++a)
        for (int b = 0; b < kw; ++b) {
          const int rr = ((r - (a - kh / 2)) % h + h) % h;
          const int cc = ((c - (b - kw / 2)) % w + w) % w;
          out[r * w + c] += kernel[a * kw + b] * image[rr * w + cc];
        }
  return out;
}

// Transpose of naive_convolution built column by column.
Eigen::MatrixXd convolution_matrix(int h, int w, const Vector& kernel, int kh, int kw) {
  Eigen::MatrixXd m(h * w, h * w);
  for (int j = 0; j < h * w; ++j) {
    Vector e = Vector::Zero(h * w);
    e[j] = 1.0;
    m.col(j) = naive_convolution(e, h, w, kernel, kh, kw);
  }
  return m;
}

Vector fd_gradient(const DataFidelity& g, const BlockVector& x, int block, double step) {
  const Vector xi = x.block(block);
  Vector out(xi.size());
  for (Index j = 0; j < xi.size(); ++j) {
    Vector p = xi, m = xi;
    p[j] += step;
    m[j] -= step;
    out[j] = (g.value(x.with_block(block, p)) - g.value(x.with_block(block, m))) / (2 * step);
  }
  return out;
}

Vector delta_kernel(int kh, int kw) {
  Vector k = Vector::Zero(kh * kw);
  k[(kh / 2) * kw + kw / 2] = 1.0;
  return k;
}

std::vector<bool> full_mask(int n) { return std::vector<bool>(static_cast<std::size_t>(n), true); }

}  // namespace

TEST_CASE("FFT round trip and Parseval") {
  Rng rng(4);
  const CVector x = to_complex(gaussian_vector(2 * 35, rng));
  CHECK((inverse_dft2(dft2(x, 5, 7), 5, 7) - x).norm() < 1e-12);
  CHECK(unitary_dft2(x, 5, 7).norm() == doctest::Approx(x.norm()).epsilon(1e-13));
  CHECK((to_complex(to_real_pairs(x)) - x).norm() == 0.0);
}

TEST_CASE("convolution matches the naive sum") {
  Rng rng(11);
  BlindConvolutionModel model(4, 4, 3, 3);
  const Vector image = gaussian_vector(16, rng), kernel = gaussian_vector(9, rng);
  CHECK((model.forward(kernel, image) - naive_convolution(image, 4, 4, kernel, 3, 3)).norm() <
        1e-10);
  BlindConvolutionModel rect(6, 5, 3, 5);
  const Vector im2 = gaussian_vector(30, rng), k2 = gaussian_vector(15, rng);
  CHECK((rect.forward(k2, im2) - naive_convolution(im2, 6, 5, k2, 3, 5)).norm() < 1e-10);
}

TEST_CASE("delta kernel is the identity") {
  Rng rng(12);
  BlindConvolutionModel model(8, 8, 3, 3);
  const Vector image = gaussian_vector(64, rng);
  CHECK((model.forward(delta_kernel(3, 3), image) - image).norm() < 1e-12);
}

TEST_CASE("convolution model shape errors") {
  CHECK_THROWS(BlindConvolutionModel(8, 8, 9, 3));
  CHECK_THROWS(BlindConvolutionModel(8, 8, 2, 3));
  BlindConvolutionModel model(8, 8, 3, 3);
  CHECK_THROWS(model.forward(Vector::Zero(8), Vector::Zero(64)));
}

TEST_CASE("adjoints satisfy the dot-product test") {
  Rng rng(13);
  BlindConvolutionModel model(6, 7, 3, 5, 0.7);
  const Vector v = gaussian_vector(42, rng), k = gaussian_vector(15, rng);
  const Vector r = gaussian_vector(42, rng);
  const double lhs = model.forward(k, v).dot(r);
  CHECK(v.dot(model.adjoint_image(k, r)) == doctest::Approx(lhs).epsilon(1e-12));
  CHECK(k.dot(model.adjoint_kernel(v, r)) == doctest::Approx(lhs).epsilon(1e-12));

  MultiCoilModel mc(4, 6, 2, [] {
    std::vector<bool> m(24, false);
    for (int i = 0; i < 24; i += 3) m[i] = true;
    m[5] = true;
    return m;
  }());
  const CVector img = to_complex(gaussian_vector(48, rng));
  const CVector maps = to_complex(gaussian_vector(96, rng));
  const CVector res = to_complex(gaussian_vector(2 * 2 * mc.sampled(), rng));
  const Complex fwd = res.dot(mc.forward(maps, img));  // <res, A v>, conjugate-linear in res
  CHECK(std::abs(mc.adjoint_image(maps, res).dot(img) - fwd) < 1e-12);
  CHECK(std::abs(mc.adjoint_maps(img, res).dot(maps) - fwd) < 1e-12);
}

TEST_CASE("single-coil full-mask model is unitary") {
  Rng rng(14);
  MultiCoilModel mc(8, 8, 1, full_mask(64));
  const CVector ones = CVector::Ones(64);
  const CVector v = to_complex(gaussian_vector(128, rng));
  CHECK(mc.forward(ones, v).norm() == doctest::Approx(v.norm()).epsilon(1e-13));

  // x0 image block = F^H y
  const CVector y = synthesize(mc, ones, v, 0.0, 0);
  MultiCoilFidelity fid(mc, y);
  const BlockVector x0 = fid.adjoint_initialization(to_real_pairs(ones));
  CHECK((to_complex(x0.block(1)) - unitary_inverse_dft2(y, 8, 8)).norm() < 1e-12);
  CHECK((to_complex(x0.block(1)) - v).norm() < 1e-12);

  const LipschitzEstimate est = fid.estimate_lipschitz(x0, 1.0);
  CHECK(est.block[0] == doctest::Approx(1.0).epsilon(1e-4));
}

TEST_CASE("consistent pairs have zero gradient") {
  Rng rng(15);
  BlindConvolutionModel model(8, 8, 3, 3);
  const Vector v = gaussian_vector(64, rng), k = gaussian_vector(9, rng);
  BlindConvolutionFidelity fid(model, model.forward(k, v));
  const BlockVector x = BlockVector::from_blocks({v, k});
  CHECK(fid.block_gradient(x, 1).norm() < 1e-12);
  CHECK(fid.block_gradient(x, 2).norm() < 1e-12);
  CHECK(fid.value(x) < 1e-24);
}

TEST_CASE("blind deconvolution gradients match finite differences") {
  Rng rng(16);
  BlindConvolutionModel model(8, 8, 3, 3, 0.5);
  BlindConvolutionFidelity fid(model, gaussian_vector(64, rng));
  for (int trial = 0; trial < 5; ++trial) {
    const BlockVector x = BlockVector::from_blocks({gaussian_vector(64, rng), gaussian_vector(9, rng)});
    for (int i : {1, 2}) {
      const Vector g = fid.block_gradient(x, i);
      CHECK((g - fd_gradient(fid, x, i, 1e-6)).norm() <= 1e-5 * g.norm());
    }
  }
}

TEST_CASE("bilinear scaling symmetry") {
  Rng rng(17);
  BlindConvolutionModel model(8, 8, 3, 3);
  BlindConvolutionFidelity fid(model, gaussian_vector(64, rng));
  const Vector v = gaussian_vector(64, rng), k = gaussian_vector(9, rng);
  const BlockVector x = BlockVector::from_blocks({v, k});
  CHECK(fid.value(BlockVector::from_blocks({2.5 * v, k / 2.5})) ==
        doctest::Approx(fid.value(x)).epsilon(1e-12));
  // derivative along (v, -theta) vanishes
  const double dir = fid.block_gradient(x, 1).dot(v) - fid.block_gradient(x, 2).dot(k);
  CHECK(std::abs(dir) < 1e-9 * (1 + fid.value(x)));
}

TEST_CASE("multi-coil gradients match finite differences") {
  Rng rng(18);
  std::vector<bool> mask(64, false);
  for (int r = 0; r < 8; ++r)
    for (int c = 0; c < 8; ++c) mask[r * 8 + c] = (r % 2 == 0) || r == 3;
  MultiCoilModel mc(8, 8, 2, mask);
  MultiCoilFidelity fid(mc, to_complex(gaussian_vector(2 * 2 * mc.sampled(), rng)));
  for (int trial = 0; trial < 5; ++trial) {
    const BlockVector x =
        BlockVector::from_blocks({gaussian_vector(128, rng), gaussian_vector(256, rng)});
    for (int i : {1, 2}) {
      const Vector g = fid.block_gradient(x, i);
      CHECK((g - fd_gradient(fid, x, i, 1e-6)).norm() <= 1e-5 * g.norm());
    }
  }
}

TEST_CASE("power iteration and linear Lipschitz constants match a dense SVD") {
  Rng rng(19);
  const Eigen::MatrixXd a = Eigen::MatrixXd::NullaryExpr(8, 8, [&] { return gaussian_vector(1, rng)[0]; });
  const double s = Eigen::JacobiSVD<Eigen::MatrixXd>(a).singularValues()[0];
  auto op = std::make_shared<DenseOperator>(a);
  LinearFidelity fid(op, Vector::Zero(8));
  const LipschitzEstimate est = fid.estimate_lipschitz(BlockVector(fid.layout()), 10.0);
  CHECK(est.max == doctest::Approx(s * s).epsilon(1e-3));
  CHECK(std::isinf(est.radius[0]));

  // convolution operator on 8x8 against the explicit matrix
  BlindConvolutionModel model(8, 8, 3, 3);
  const Vector k = gaussian_vector(9, rng);
  const Eigen::MatrixXd m = convolution_matrix(8, 8, k, 3, 3);
  const double sc = Eigen::JacobiSVD<Eigen::MatrixXd>(m).singularValues()[0];
  auto conv = std::make_shared<ConvolutionOperator>(model, k);
  LinearFidelity cf(conv, Vector::Zero(64));
  CHECK(cf.estimate_lipschitz(BlockVector(cf.layout()), 1.0).max ==
        doctest::Approx(sc * sc).epsilon(1e-3));

  LinearFidelity delta(std::make_shared<ConvolutionOperator>(model, delta_kernel(3, 3)),
                       Vector::Zero(64));
  CHECK(delta.estimate_lipschitz(BlockVector(delta.layout()), 1.0).max ==
        doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("blind Lipschitz constants scale with the ball and bound the block Hessians") {
  Rng rng(20);
  BlindConvolutionModel model(8, 8, 3, 3);
  const Vector v = gaussian_vector(64, rng), k = gaussian_vector(9, rng);
  BlindConvolutionFidelity fid(model, model.forward(k, v));
  const BlockVector x = BlockVector::from_blocks({v, k});
  const LipschitzEstimate one = fid.estimate_lipschitz(x, 1.0);
  const LipschitzEstimate two = fid.estimate_lipschitz(x, 2.0);
  CHECK(two.block[0] == doctest::Approx(4 * one.block[0]));
  CHECK(two.radius[1] == doctest::Approx(2 * k.norm()));
  CHECK(one.full >= one.max);

  // dense oracle for the image block at x: A(k)^T A(k)
  const Eigen::MatrixXd m = convolution_matrix(8, 8, k, 3, 3);
  const double s = Eigen::JacobiSVD<Eigen::MatrixXd>(m).singularValues()[0];
  CHECK(one.block[0] == doctest::Approx(s * s).epsilon(1e-3));

  CHECK_THROWS(fid.estimate_lipschitz(BlockVector::from_blocks({v, Vector::Zero(9)}), 1.0));
}

TEST_CASE("adjoint initialization matches the naive adjoint") {
  Rng rng(21);
  BlindConvolutionModel model(8, 8, 3, 3);
  const Vector y = gaussian_vector(64, rng), k0 = gaussian_vector(9, rng);
  BlindConvolutionFidelity fid(model, y);
  const BlockVector x0 = fid.adjoint_initialization(k0);
  const Vector naive = convolution_matrix(8, 8, k0, 3, 3).transpose() * y;
  CHECK((x0.block(1) - naive).norm() < 1e-10);
  CHECK(x0.block(2) == k0);
  CHECK((fid.adjoint_initialization(delta_kernel(3, 3)).block(1) - y).norm() < 1e-12);
}

TEST_CASE("synthesis is deterministic with the right noise level") {
  Rng rng(22);
  BlindConvolutionModel model(100, 100, 3, 3);
  const Vector v = gaussian_vector(10000, rng), k = gaussian_vector(9, rng);
  const Vector clean = model.forward(k, v);
  CHECK(synthesize(model, k, v, 0.0, 1) == clean);
  const Vector y1 = synthesize(model, k, v, 0.3, 7);
  CHECK(y1 == synthesize(model, k, v, 0.3, 7));
  CHECK(y1 != synthesize(model, k, v, 0.3, 8));
  const double var = (y1 - clean).squaredNorm() / 10000.0;
  CHECK(std::abs(var / 0.09 - 1.0) < 0.05);
  CHECK_THROWS(synthesize(model, k, v, -1.0, 1));
}
