#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "bcpnp/block.hpp"
#include "bcpnp/fft.hpp"

namespace bcpnp {

/// A(theta) v = (s * theta) * v: circular 2-D convolution of a row-major
/// height x width image with a centered kernel_height x kernel_width kernel.
/// The kernel scale s rescales the parameter block so that the image and
/// kernel blocks have comparable Lipschitz constants; the physical kernel is
/// s * theta.
class BlindConvolutionModel {
 public:
  BlindConvolutionModel(int height, int width, int kernel_height, int kernel_width,
                        double kernel_scale = 1.0);

  int height() const { return height_; }
  int width() const { return width_; }
  int kernel_height() const { return kernel_height_; }
  int kernel_width() const { return kernel_width_; }
  double kernel_scale() const { return kernel_scale_; }
  Index image_size() const { return static_cast<Index>(height_) * width_; }
  Index kernel_size() const { return static_cast<Index>(kernel_height_) * kernel_width_; }

  Vector forward(const Vector& kernel, const Vector& image) const;
  /// A(theta)^T r (circular correlation with the kernel).
  Vector adjoint_image(const Vector& kernel, const Vector& residual) const;
  /// Adjoint of theta -> A(theta) v, restricted to the kernel support.
  Vector adjoint_kernel(const Vector& image, const Vector& residual) const;

  /// Scaled kernel placed on the height x width grid with its center at (0, 0).
  Vector embed_kernel(const Vector& kernel) const;

  /// sup ||A(d)|| over unit-norm kernel perturbations d.
  double coupling_bound() const;

 private:
  void check_kernel(const Vector& kernel) const;
  void check_image(const Vector& image) const;

  int height_, width_, kernel_height_, kernel_width_;
  double kernel_scale_;
};

/// Cartesian parallel-MRI model: coil c measures P F (theta_c .* v) with F the
/// unitary 2-D DFT and P the row-major sampling mask. Measurements are the
/// sampled frequencies of each coil, concatenated coil by coil.
class MultiCoilModel {
 public:
  MultiCoilModel(int height, int width, int coils, std::vector<bool> mask);

  int height() const { return height_; }
  int width() const { return width_; }
  int coils() const { return coils_; }
  Index image_size() const { return static_cast<Index>(height_) * width_; }
  Index sampled() const { return static_cast<Index>(sampled_index_.size()); }
  const std::vector<bool>& mask() const { return mask_; }

  CVector forward(const CVector& maps, const CVector& image) const;
  CVector adjoint_image(const CVector& maps, const CVector& residual) const;
  CVector adjoint_maps(const CVector& image, const CVector& residual) const;

  /// P^T: scatter one coil's sampled values onto the full frequency grid.
  CVector zero_fill(const CVector& coil_measurement) const;

 private:
  void check_image(const CVector& image) const;
  void check_maps(const CVector& maps) const;
  void check_measurement(const CVector& y) const;

  int height_, width_, coils_;
  std::vector<bool> mask_;
  std::vector<Index> sampled_index_;
};

/// Fixed real linear operator.
class LinearOperator {
 public:
  virtual ~LinearOperator() = default;
  virtual Index rows() const = 0;
  virtual Index cols() const = 0;
  virtual Vector apply(const Vector& x) const = 0;
  virtual Vector adjoint(const Vector& y) const = 0;
};

class DenseOperator final : public LinearOperator {
 public:
  explicit DenseOperator(Eigen::MatrixXd matrix) : matrix_(std::move(matrix)) {}
  Index rows() const override { return matrix_.rows(); }
  Index cols() const override { return matrix_.cols(); }
  Vector apply(const Vector& x) const override;
  Vector adjoint(const Vector& y) const override;
  const Eigen::MatrixXd& matrix() const { return matrix_; }

 private:
  Eigen::MatrixXd matrix_;
};

/// Convolution with a known kernel.
class ConvolutionOperator final : public LinearOperator {
 public:
  ConvolutionOperator(BlindConvolutionModel model, Vector kernel);
  Index rows() const override { return model_.image_size(); }
  Index cols() const override { return model_.image_size(); }
  Vector apply(const Vector& x) const override;
  Vector adjoint(const Vector& y) const override;

 private:
  BlindConvolutionModel model_;
  Vector kernel_;
};

struct PowerIterationResult {
  double value = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Largest eigenvalue of a symmetric positive semidefinite operator, from a
/// seeded random start; stops at relative change rel_tol or max_iterations.
PowerIterationResult power_iteration(const std::function<Vector(const Vector&)>& op, Index n,
                                     std::uint64_t seed = 0x51ed, double rel_tol = 1e-4,
                                     int max_iterations = 100);

/// Certified smoothness constants of grad g around an iterate.
struct LipschitzEstimate {
  std::vector<double> block;   // L_1 ... L_b
  double max = 0.0;            // L_max
  double full = 0.0;           // L, bound for the full gradient
  std::vector<double> radius;  // per-block ball radius, +inf when unconstrained
  bool warning = false;        // some power iteration did not converge
};

/// Data fidelity g(x) = 1/2 ||y - A(theta) v||^2 over a block layout.
class DataFidelity {
 public:
  virtual ~DataFidelity() = default;

  virtual std::string kind() const = 0;
  virtual const BlockLayout& layout() const = 0;
  virtual double value(const BlockVector& x) const = 0;
  virtual Vector block_gradient(const BlockVector& x, int block) const = 0;
  /// J_i^T J_i u: the (exact) Hessian of g restricted to block i, for a
  /// fidelity that is quadratic in each block separately.
  virtual Vector block_normal(const BlockVector& x, int block, const Vector& u) const = 0;

  /// Block holding operator parameters theta, 0 when the operator is known.
  virtual int parameter_block() const { return 0; }

  /// Block Lipschitz constants over the ball of radius radius_factor * ||x_i||
  /// around the origin (blind models) or globally (known operators).
  virtual LipschitzEstimate estimate_lipschitz(const BlockVector& x,
                                               double radius_factor) const = 0;

  /// Adjoint initialization (A(theta0)^H y, theta0). theta0 is ignored by
  /// known-operator fidelities.
  virtual BlockVector adjoint_initialization(const Vector& theta0) const = 0;

  BlockVector gradient(const BlockVector& x) const;
};

class LinearFidelity final : public DataFidelity {
 public:
  /// layout partitions the operator's domain; every block is an image block.
  LinearFidelity(std::shared_ptr<const LinearOperator> op, Vector measurement, BlockLayout layout);
  LinearFidelity(std::shared_ptr<const LinearOperator> op, Vector measurement);

  std::string kind() const override { return "linear"; }
  const BlockLayout& layout() const override { return layout_; }
  double value(const BlockVector& x) const override;
  Vector block_gradient(const BlockVector& x, int block) const override;
  Vector block_normal(const BlockVector& x, int block, const Vector& u) const override;
  LipschitzEstimate estimate_lipschitz(const BlockVector& x, double radius_factor) const override;
  BlockVector adjoint_initialization(const Vector& theta0) const override;

  const LinearOperator& op() const { return *op_; }
  const Vector& measurement() const { return y_; }

 private:
  std::shared_ptr<const LinearOperator> op_;
  Vector y_;
  BlockLayout layout_;
};

/// Blocks: 1 = image (height * width), 2 = kernel (kernel_height * kernel_width).
class BlindConvolutionFidelity final : public DataFidelity {
 public:
  BlindConvolutionFidelity(BlindConvolutionModel model, Vector measurement);

  std::string kind() const override { return "blind-deconvolution"; }
  const BlockLayout& layout() const override { return layout_; }
  double value(const BlockVector& x) const override;
  Vector block_gradient(const BlockVector& x, int block) const override;
  Vector block_normal(const BlockVector& x, int block, const Vector& u) const override;
  int parameter_block() const override { return 2; }
  LipschitzEstimate estimate_lipschitz(const BlockVector& x, double radius_factor) const override;
  BlockVector adjoint_initialization(const Vector& theta0) const override;

  const BlindConvolutionModel& model() const { return model_; }
  const Vector& measurement() const { return y_; }

  Vector grad_image(const Vector& image, const Vector& kernel) const;
  Vector grad_kernel(const Vector& image, const Vector& kernel) const;

 private:
  BlindConvolutionModel model_;
  Vector y_;
  BlockLayout layout_;
};

/// Blocks: 1 = complex image (2 * height * width reals), 2 = complex coil maps
/// (2 * coils * height * width reals). Gradients are with respect to the
/// real-pair coordinates, so they equal the real packing of A^H r.
class MultiCoilFidelity final : public DataFidelity {
 public:
  MultiCoilFidelity(MultiCoilModel model, CVector measurement);

  std::string kind() const override { return "multi-coil"; }
  const BlockLayout& layout() const override { return layout_; }
  double value(const BlockVector& x) const override;
  Vector block_gradient(const BlockVector& x, int block) const override;
  Vector block_normal(const BlockVector& x, int block, const Vector& u) const override;
  int parameter_block() const override { return 2; }
  LipschitzEstimate estimate_lipschitz(const BlockVector& x, double radius_factor) const override;
  BlockVector adjoint_initialization(const Vector& theta0) const override;

  const MultiCoilModel& model() const { return model_; }
  const CVector& measurement() const { return y_; }

  CVector grad_image(const CVector& image, const CVector& maps) const;
  CVector grad_maps(const CVector& image, const CVector& maps) const;

 private:
  MultiCoilModel model_;
  CVector y_;
  BlockLayout layout_;
};

/// y = A(theta*) v* + e with e ~ N(0, noise_sigma^2 I) (per real coordinate).
Vector synthesize(const BlindConvolutionModel& model, const Vector& kernel, const Vector& image,
                  double noise_sigma, std::uint64_t seed);
CVector synthesize(const MultiCoilModel& model, const CVector& maps, const CVector& image,
                   double noise_sigma, std::uint64_t seed);
Vector synthesize(const LinearOperator& op, const Vector& x, double noise_sigma,
                  std::uint64_t seed);

}  // namespace bcpnp
