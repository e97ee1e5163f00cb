#pragma once

#include <complex>

#include <Eigen/Core>

namespace bcpnp {

using Complex = std::complex<double>;
using CVector = Eigen::VectorXcd;

/// 2-D DFT of a row-major height x width array. The forward transform is
/// unnormalized; inverse_dft2 divides by height * width, so the pair is an
/// exact inverse.
CVector dft2(const CVector& x, int height, int width);
CVector inverse_dft2(const CVector& x, int height, int width);

/// Unitary 2-D DFT (both directions scaled by 1/sqrt(height * width)).
CVector unitary_dft2(const CVector& x, int height, int width);
CVector unitary_inverse_dft2(const CVector& x, int height, int width);

/// Interleaved (re, im) real-pair packing of complex vectors.
CVector to_complex(const Eigen::VectorXd& pairs);
Eigen::VectorXd to_real_pairs(const CVector& z);

}  // namespace bcpnp
