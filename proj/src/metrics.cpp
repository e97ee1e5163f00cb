#include "bcpnp/metrics.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace bcpnp {

double rmse(const Vector& estimate, const Vector& truth) {
  if (estimate.size() != truth.size()) throw std::invalid_argument("rmse: length mismatch");
  const double denom = truth.norm();
  if (!(denom > 0.0)) throw std::invalid_argument("rmse: reference has zero norm");
  return (estimate - truth).norm() / denom;
}

namespace {

// Separable weighted filter, "valid" region only: output is
// (height - w + 1) x (width - w + 1).
Eigen::MatrixXd filter_valid(const Eigen::MatrixXd& img, const std::vector<double>& taps) {
  const int w = static_cast<int>(taps.size());
  const Index oh = img.rows() - w + 1, ow = img.cols() - w + 1;
  Eigen::MatrixXd rows_pass(img.rows(), ow);
  for (Index r = 0; r < img.rows(); ++r) {
    for (Index c = 0; c < ow; ++c) {
      double s = 0.0;
      for (int t = 0; t < w; ++t) s += taps[t] * img(r, c + t);
      rows_pass(r, c) = s;
    }
  }
  Eigen::MatrixXd out(oh, ow);
  for (Index r = 0; r < oh; ++r) {
    for (Index c = 0; c < ow; ++c) {
      double s = 0.0;
      for (int t = 0; t < w; ++t) s += taps[t] * rows_pass(r + t, c);
      out(r, c) = s;
    }
  }
  return out;
}

}  // namespace

double ssim(const Vector& estimate, const Vector& truth, int height, int width,
            const SsimOptions& options) {
  const Index n = static_cast<Index>(height) * width;
  if (estimate.size() != n || truth.size() != n) throw std::invalid_argument("ssim: shape mismatch");
  if (options.window < 1 || options.window > height || options.window > width) {
    throw std::invalid_argument("ssim: window larger than image");
  }
  std::vector<double> taps(options.window);
  const double center = 0.5 * (options.window - 1);
  double total = 0.0;
  for (int t = 0; t < options.window; ++t) {
    const double d = t - center;
    taps[t] = std::exp(-d * d / (2.0 * options.window_sigma * options.window_sigma));
    total += taps[t];
  }
  for (double& t : taps) t /= total;

  using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  const Eigen::MatrixXd x = Eigen::Map<const RowMajor>(estimate.data(), height, width);
  const Eigen::MatrixXd y = Eigen::Map<const RowMajor>(truth.data(), height, width);

  const Eigen::MatrixXd mx = filter_valid(x, taps);
  const Eigen::MatrixXd my = filter_valid(y, taps);
  const Eigen::MatrixXd sxx = filter_valid(x.cwiseProduct(x), taps) - mx.cwiseProduct(mx);
  const Eigen::MatrixXd syy = filter_valid(y.cwiseProduct(y), taps) - my.cwiseProduct(my);
  const Eigen::MatrixXd sxy = filter_valid(x.cwiseProduct(y), taps) - mx.cwiseProduct(my);

  const double c1 = std::pow(options.k1 * options.dynamic_range, 2);
  const double c2 = std::pow(options.k2 * options.dynamic_range, 2);
  const Eigen::ArrayXXd num = (2.0 * mx.cwiseProduct(my).array() + c1) * (2.0 * sxy.array() + c2);
  const Eigen::ArrayXXd den = (mx.array().square() + my.array().square() + c1) *
                              (sxx.array() + syy.array() + c2);
  return (num / den).mean();
}

}  // namespace bcpnp
