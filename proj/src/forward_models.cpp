#include "bcpnp/forward_models.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>

#include "bcpnp/random.hpp"

namespace bcpnp {
namespace {

CVector as_complex(const Vector& x) { return x.cast<Complex>(); }

void require(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument(what);
}

}  // namespace

// ---------------------------------------------------------------------------
// BlindConvolutionModel

BlindConvolutionModel::BlindConvolutionModel(int height, int width, int kernel_height,
                                             int kernel_width, double kernel_scale)
    : height_(height),
      width_(width),
      kernel_height_(kernel_height),
      kernel_width_(kernel_width),
      kernel_scale_(kernel_scale) {
  require(height >= 1 && width >= 1, "convolution: image shape must be positive");
  require(kernel_height >= 1 && kernel_width >= 1, "convolution: kernel shape must be positive");
  require(kernel_height % 2 == 1 && kernel_width % 2 == 1,
          "convolution: kernel dimensions must be odd");
  require(kernel_height <= height && kernel_width <= width,
          "convolution: kernel larger than image");
  require(kernel_scale > 0.0 && std::isfinite(kernel_scale),
          "convolution: kernel scale must be positive");
}

void BlindConvolutionModel::check_kernel(const Vector& kernel) const {
  require(kernel.size() == kernel_size(), "convolution: kernel length " +
                                              std::to_string(kernel.size()) + " != " +
                                              std::to_string(kernel_size()));
}

void BlindConvolutionModel::check_image(const Vector& image) const {
  require(image.size() == image_size(), "convolution: image length " +
                                            std::to_string(image.size()) + " != " +
                                            std::to_string(image_size()));
}

Vector BlindConvolutionModel::embed_kernel(const Vector& kernel) const {
  check_kernel(kernel);
  Vector grid = Vector::Zero(image_size());
  const int ch = kernel_height_ / 2, cw = kernel_width_ / 2;
  for (int a = 0; a < kernel_height_; ++a) {
    for (int b = 0; b < kernel_width_; ++b) {
      const int r = ((a - ch) % height_ + height_) % height_;
      const int c = ((b - cw) % width_ + width_) % width_;
      grid[static_cast<Index>(r) * width_ + c] +=
          kernel_scale_ * kernel[static_cast<Index>(a) * kernel_width_ + b];
    }
  }
  return grid;
}

namespace {

// Weight of a kernel that is a multiple of the centred delta, or nullopt.
std::optional<double> delta_weight(const Vector& kernel, int kh, int kw) {
  const Index centre = static_cast<Index>(kh / 2) * kw + kw / 2;
  for (Index i = 0; i < kernel.size(); ++i) {
    if (i != centre && kernel[i] != 0.0) return std::nullopt;
  }
  return kernel[centre];
}

}  // namespace

Vector BlindConvolutionModel::forward(const Vector& kernel, const Vector& image) const {
  check_image(image);
  check_kernel(kernel);
  // exact path for (scaled) identity kernels, which the FFT only reproduces to round-off
  if (const auto w = delta_weight(kernel, kernel_height_, kernel_width_)) {
    return (kernel_scale_ * *w) * image;
  }
  const CVector k_hat = dft2(as_complex(embed_kernel(kernel)), height_, width_);
  const CVector v_hat = dft2(as_complex(image), height_, width_);
  return inverse_dft2(k_hat.cwiseProduct(v_hat), height_, width_).real();
}

Vector BlindConvolutionModel::adjoint_image(const Vector& kernel, const Vector& residual) const {
  check_image(residual);
  check_kernel(kernel);
  if (const auto w = delta_weight(kernel, kernel_height_, kernel_width_)) {
    return (kernel_scale_ * *w) * residual;
  }
  const CVector k_hat = dft2(as_complex(embed_kernel(kernel)), height_, width_);
  const CVector r_hat = dft2(as_complex(residual), height_, width_);
  return inverse_dft2(k_hat.conjugate().cwiseProduct(r_hat), height_, width_).real();
}

Vector BlindConvolutionModel::adjoint_kernel(const Vector& image, const Vector& residual) const {
  check_image(image);
  check_image(residual);
  const CVector v_hat = dft2(as_complex(image), height_, width_);
  const CVector r_hat = dft2(as_complex(residual), height_, width_);
  const Vector corr = inverse_dft2(v_hat.conjugate().cwiseProduct(r_hat), height_, width_).real();
  Vector out(kernel_size());
  const int ch = kernel_height_ / 2, cw = kernel_width_ / 2;
  for (int a = 0; a < kernel_height_; ++a) {
    for (int b = 0; b < kernel_width_; ++b) {
      const int r = ((a - ch) % height_ + height_) % height_;
      const int c = ((b - cw) % width_ + width_) % width_;
      out[static_cast<Index>(a) * kernel_width_ + b] =
          kernel_scale_ * corr[static_cast<Index>(r) * width_ + c];
    }
  }
  return out;
}

double BlindConvolutionModel::coupling_bound() const {
  // max |DFT(d)| <= ||d||_1 <= sqrt(support) ||d||_2
  return kernel_scale_ * std::sqrt(static_cast<double>(kernel_size()));
}

// ---------------------------------------------------------------------------
// MultiCoilModel

MultiCoilModel::MultiCoilModel(int height, int width, int coils, std::vector<bool> mask)
    : height_(height), width_(width), coils_(coils), mask_(std::move(mask)) {
  require(height >= 1 && width >= 1, "multi-coil: image shape must be positive");
  require(coils >= 1, "multi-coil: need at least one coil");
  require(static_cast<Index>(mask_.size()) == image_size(),
          "multi-coil: mask size does not match image shape");
  for (Index i = 0; i < image_size(); ++i) {
    if (mask_[static_cast<std::size_t>(i)]) sampled_index_.push_back(i);
  }
  require(!sampled_index_.empty(), "multi-coil: mask selects no frequencies");
}

void MultiCoilModel::check_image(const CVector& image) const {
  require(image.size() == image_size(), "multi-coil: image length mismatch");
}

void MultiCoilModel::check_maps(const CVector& maps) const {
  require(maps.size() == coils_ * image_size(), "multi-coil: coil map length mismatch");
}

void MultiCoilModel::check_measurement(const CVector& y) const {
  require(y.size() == coils_ * sampled(), "multi-coil: measurement length mismatch");
}

CVector MultiCoilModel::zero_fill(const CVector& coil_measurement) const {
  CVector full = CVector::Zero(image_size());
  for (Index j = 0; j < sampled(); ++j) full[sampled_index_[j]] = coil_measurement[j];
  return full;
}

CVector MultiCoilModel::forward(const CVector& maps, const CVector& image) const {
  check_maps(maps);
  check_image(image);
  const Index n = image_size(), m = sampled();
  CVector out(coils_ * m);
  for (int c = 0; c < coils_; ++c) {
    const CVector k = unitary_dft2(maps.segment(c * n, n).cwiseProduct(image), height_, width_);
    for (Index j = 0; j < m; ++j) out[c * m + j] = k[sampled_index_[j]];
  }
  return out;
}

CVector MultiCoilModel::adjoint_image(const CVector& maps, const CVector& residual) const {
  check_maps(maps);
  check_measurement(residual);
  const Index n = image_size(), m = sampled();
  CVector out = CVector::Zero(n);
  for (int c = 0; c < coils_; ++c) {
    const CVector back =
        unitary_inverse_dft2(zero_fill(residual.segment(c * m, m)), height_, width_);
    out += maps.segment(c * n, n).conjugate().cwiseProduct(back);
  }
  return out;
}

CVector MultiCoilModel::adjoint_maps(const CVector& image, const CVector& residual) const {
  check_image(image);
  check_measurement(residual);
  const Index n = image_size(), m = sampled();
  CVector out(coils_ * n);
  for (int c = 0; c < coils_; ++c) {
    const CVector back =
        unitary_inverse_dft2(zero_fill(residual.segment(c * m, m)), height_, width_);
    out.segment(c * n, n) = image.conjugate().cwiseProduct(back);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Linear operators

Vector DenseOperator::apply(const Vector& x) const {
  require(x.size() == cols(), "dense operator: input length mismatch");
  return matrix_ * x;
}

Vector DenseOperator::adjoint(const Vector& y) const {
  require(y.size() == rows(), "dense operator: adjoint input length mismatch");
  return matrix_.transpose() * y;
}

ConvolutionOperator::ConvolutionOperator(BlindConvolutionModel model, Vector kernel)
    : model_(std::move(model)), kernel_(std::move(kernel)) {
  require(kernel_.size() == model_.kernel_size(), "convolution operator: kernel length mismatch");
}

Vector ConvolutionOperator::apply(const Vector& x) const { return model_.forward(kernel_, x); }

Vector ConvolutionOperator::adjoint(const Vector& y) const {
  return model_.adjoint_image(kernel_, y);
}

// ---------------------------------------------------------------------------
// Power iteration

PowerIterationResult power_iteration(const std::function<Vector(const Vector&)>& op, Index n,
                                     std::uint64_t seed, double rel_tol, int max_iterations) {
  Rng rng(seed);
  Vector u = random_unit_vector(n, rng);
  PowerIterationResult result;
  double previous = 0.0;
  for (int it = 1; it <= max_iterations; ++it) {
    const Vector w = op(u);
    const double rayleigh = u.dot(w);
    const double norm = w.norm();
    result.value = rayleigh;
    result.iterations = it;
    if (norm == 0.0) {
      result.converged = true;
      result.value = 0.0;
      return result;
    }
    if (it > 1 && std::abs(rayleigh - previous) <= rel_tol * std::abs(rayleigh)) {
      result.converged = true;
      return result;
    }
    previous = rayleigh;
    u = w / norm;
  }
  return result;
}

// ---------------------------------------------------------------------------
// Fidelities

BlockVector DataFidelity::gradient(const BlockVector& x) const {
  Vector data(x.layout().total());
  for (int i = 1; i <= x.num_blocks(); ++i) {
    data.segment(x.layout().offset(i), x.layout().size(i)) = block_gradient(x, i);
  }
  return {x.layout(), std::move(data)};
}

LinearFidelity::LinearFidelity(std::shared_ptr<const LinearOperator> op, Vector measurement,
                               BlockLayout layout)
    : op_(std::move(op)), y_(std::move(measurement)), layout_(std::move(layout)) {
  require(op_ != nullptr, "linear fidelity: null operator");
  require(y_.size() == op_->rows(), "linear fidelity: measurement length mismatch");
  require(layout_.total() == op_->cols(), "linear fidelity: layout does not match operator");
}

LinearFidelity::LinearFidelity(std::shared_ptr<const LinearOperator> op, Vector measurement)
    : LinearFidelity(op, std::move(measurement), BlockLayout({op ? op->cols() : 0})) {}

double LinearFidelity::value(const BlockVector& x) const {
  return 0.5 * (op_->apply(x.data()) - y_).squaredNorm();
}

Vector LinearFidelity::block_gradient(const BlockVector& x, int block) const {
  const Vector full = op_->adjoint(op_->apply(x.data()) - y_);
  return full.segment(layout_.offset(block), layout_.size(block));
}

Vector LinearFidelity::block_normal(const BlockVector&, int block, const Vector& u) const {
  Vector embedded = Vector::Zero(layout_.total());
  embedded.segment(layout_.offset(block), layout_.size(block)) = u;
  return op_->adjoint(op_->apply(embedded)).segment(layout_.offset(block), layout_.size(block));
}

LipschitzEstimate LinearFidelity::estimate_lipschitz(const BlockVector& x, double) const {
  LipschitzEstimate est;
  for (int i = 1; i <= layout_.num_blocks(); ++i) {
    const auto r = power_iteration([&](const Vector& u) { return block_normal(x, i, u); },
                                   layout_.size(i), derive_seed(0x51ed, i));
    est.block.push_back(r.value);
    est.warning = est.warning || !r.converged;
    est.radius.push_back(std::numeric_limits<double>::infinity());
  }
  const auto full = power_iteration(
      [&](const Vector& u) { return op_->adjoint(op_->apply(u)); }, layout_.total(), 0x51ed);
  est.warning = est.warning || !full.converged;
  est.max = *std::max_element(est.block.begin(), est.block.end());
  est.full = std::max(full.value, est.max);
  return est;
}

BlockVector LinearFidelity::adjoint_initialization(const Vector&) const {
  return {layout_, op_->adjoint(y_)};
}

BlindConvolutionFidelity::BlindConvolutionFidelity(BlindConvolutionModel model, Vector measurement)
    : model_(std::move(model)),
      y_(std::move(measurement)),
      layout_({model_.image_size(), model_.kernel_size()}) {
  require(y_.size() == model_.image_size(), "blind deconvolution: measurement length mismatch");
}

double BlindConvolutionFidelity::value(const BlockVector& x) const {
  return 0.5 * (model_.forward(x.block(2), x.block(1)) - y_).squaredNorm();
}

Vector BlindConvolutionFidelity::grad_image(const Vector& image, const Vector& kernel) const {
  return model_.adjoint_image(kernel, model_.forward(kernel, image) - y_);
}

Vector BlindConvolutionFidelity::grad_kernel(const Vector& image, const Vector& kernel) const {
  return model_.adjoint_kernel(image, model_.forward(kernel, image) - y_);
}

Vector BlindConvolutionFidelity::block_gradient(const BlockVector& x, int block) const {
  layout_.check_index(block);
  return block == 1 ? grad_image(x.block(1), x.block(2)) : grad_kernel(x.block(1), x.block(2));
}

Vector BlindConvolutionFidelity::block_normal(const BlockVector& x, int block,
                                              const Vector& u) const {
  layout_.check_index(block);
  if (block == 1) {
    const Vector kernel = x.block(2);
    return model_.adjoint_image(kernel, model_.forward(kernel, u));
  }
  const Vector image = x.block(1);
  return model_.adjoint_kernel(image, model_.forward(u, image));
}

namespace {

// Ball-restricted constants for a bilinear fidelity: each block's constant is
// evaluated with the other block scaled out to the ball boundary, and the
// full constant bounds the joint Hessian by its diagonal blocks plus the
// cross term ||A(d)^H r|| + ||A(theta)|| ||B(v)||.
LipschitzEstimate bilinear_estimate(const DataFidelity& fidelity, const BlockVector& x,
                                    double radius_factor, double coupling, double measurement_norm) {
  require(radius_factor >= 1.0, "Lipschitz certification: radius factor must be >= 1");
  LipschitzEstimate est;
  for (int i = 1; i <= 2; ++i) {
    const double norm = x.block_view(i).norm();
    if (!(norm > 0.0)) {
      throw std::invalid_argument("Lipschitz certification: block " + std::to_string(i) +
                                  " is zero, ball radius undefined");
    }
    est.radius.push_back(radius_factor * norm);
  }
  for (int i = 1; i <= 2; ++i) {
    const auto r = power_iteration([&](const Vector& u) { return fidelity.block_normal(x, i, u); },
                                   x.layout().size(i), derive_seed(0x51ed, i));
    est.block.push_back(radius_factor * radius_factor * r.value);
    est.warning = est.warning || !r.converged;
  }
  const double lv = est.block[0], lt = est.block[1];
  est.max = std::max(lv, lt);
  const double residual_bound = measurement_norm + std::sqrt(lv) * est.radius[0];
  est.full = est.max + coupling * residual_bound + std::sqrt(lv * lt);
  return est;
}

}  // namespace

LipschitzEstimate BlindConvolutionFidelity::estimate_lipschitz(const BlockVector& x,
                                                               double radius_factor) const {
  return bilinear_estimate(*this, x, radius_factor, model_.coupling_bound(), y_.norm());
}

BlockVector BlindConvolutionFidelity::adjoint_initialization(const Vector& theta0) const {
  return BlockVector::from_blocks({model_.adjoint_image(theta0, y_), theta0});
}

MultiCoilFidelity::MultiCoilFidelity(MultiCoilModel model, CVector measurement)
    : model_(std::move(model)),
      y_(std::move(measurement)),
      layout_({2 * model_.image_size(), 2 * model_.coils() * model_.image_size()}) {
  require(y_.size() == model_.coils() * model_.sampled(),
          "multi-coil: measurement length mismatch");
}

double MultiCoilFidelity::value(const BlockVector& x) const {
  return 0.5 * (model_.forward(to_complex(x.block(2)), to_complex(x.block(1))) - y_).squaredNorm();
}

CVector MultiCoilFidelity::grad_image(const CVector& image, const CVector& maps) const {
  return model_.adjoint_image(maps, model_.forward(maps, image) - y_);
}

CVector MultiCoilFidelity::grad_maps(const CVector& image, const CVector& maps) const {
  return model_.adjoint_maps(image, model_.forward(maps, image) - y_);
}

Vector MultiCoilFidelity::block_gradient(const BlockVector& x, int block) const {
  layout_.check_index(block);
  const CVector image = to_complex(x.block(1));
  const CVector maps = to_complex(x.block(2));
  return to_real_pairs(block == 1 ? grad_image(image, maps) : grad_maps(image, maps));
}

Vector MultiCoilFidelity::block_normal(const BlockVector& x, int block, const Vector& u) const {
  layout_.check_index(block);
  const CVector image = to_complex(x.block(1));
  const CVector maps = to_complex(x.block(2));
  const CVector uc = to_complex(u);
  if (block == 1) return to_real_pairs(model_.adjoint_image(maps, model_.forward(maps, uc)));
  return to_real_pairs(model_.adjoint_maps(image, model_.forward(uc, image)));
}

LipschitzEstimate MultiCoilFidelity::estimate_lipschitz(const BlockVector& x,
                                                        double radius_factor) const {
  // ||A(d)|| <= max_p (sum_c |d_c(p)|^2)^(1/2) <= ||d||
  return bilinear_estimate(*this, x, radius_factor, 1.0, y_.norm());
}

BlockVector MultiCoilFidelity::adjoint_initialization(const Vector& theta0) const {
  const CVector maps = to_complex(theta0);
  return BlockVector::from_blocks({to_real_pairs(model_.adjoint_image(maps, y_)), theta0});
}

// ---------------------------------------------------------------------------
// Synthesis

Vector synthesize(const BlindConvolutionModel& model, const Vector& kernel, const Vector& image,
                  double noise_sigma, std::uint64_t seed) {
  require(noise_sigma >= 0.0, "synthesize: noise level must be >= 0");
  Vector y = model.forward(kernel, image);
  if (noise_sigma > 0.0) {
    Rng rng(seed);
    y += gaussian_vector(y.size(), rng, noise_sigma);
  }
  return y;
}

CVector synthesize(const MultiCoilModel& model, const CVector& maps, const CVector& image,
                   double noise_sigma, std::uint64_t seed) {
  require(noise_sigma >= 0.0, "synthesize: noise level must be >= 0");
  CVector y = model.forward(maps, image);
  if (noise_sigma > 0.0) {
    Rng rng(seed);
    y += to_complex(gaussian_vector(2 * y.size(), rng, noise_sigma));
  }
  return y;
}

Vector synthesize(const LinearOperator& op, const Vector& x, double noise_sigma,
                  std::uint64_t seed) {
  require(noise_sigma >= 0.0, "synthesize: noise level must be >= 0");
  Vector y = op.apply(x);
  if (noise_sigma > 0.0) {
    Rng rng(seed);
    y += gaussian_vector(y.size(), rng, noise_sigma);
  }
  return y;
}

}  // namespace bcpnp
