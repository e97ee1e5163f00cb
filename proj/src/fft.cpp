#include "bcpnp/fft.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <stdexcept>
#include <tuple>
#include <vector>

#include <fftw3.h>

namespace bcpnp {
namespace {

// FFTW planning is not thread-safe, execution with the new-array interface is.
// Plans are created once per (shape, direction) under a lock and kept for the
// lifetime of the process.
fftw_plan plan_for(int height, int width, int sign) {
  static std::mutex mutex;
  static std::map<std::tuple<int, int, int>, fftw_plan> plans;
  std::lock_guard<std::mutex> lock(mutex);
  const auto key = std::make_tuple(height, width, sign);
  auto it = plans.find(key);
  if (it != plans.end()) return it->second;
  std::vector<Complex> in(static_cast<std::size_t>(height) * width);
  std::vector<Complex> out(in.size());
  fftw_plan plan = fftw_plan_dft_2d(height, width, reinterpret_cast<fftw_complex*>(in.data()),
                                    reinterpret_cast<fftw_complex*>(out.data()), sign,
                                    FFTW_ESTIMATE | FFTW_UNALIGNED);
  if (plan == nullptr) throw std::runtime_error("FFTW failed to create a plan");
  plans.emplace(key, plan);
  return plan;
}

CVector transform(const CVector& x, int height, int width, int sign) {
  if (height < 1 || width < 1 || x.size() != static_cast<Eigen::Index>(height) * width) {
    throw std::invalid_argument("dft2: array length does not match shape");
  }
  CVector in = x;
  CVector out(x.size());
  fftw_execute_dft(plan_for(height, width, sign), reinterpret_cast<fftw_complex*>(in.data()),
                   reinterpret_cast<fftw_complex*>(out.data()));
  return out;
}

}  // namespace

CVector dft2(const CVector& x, int height, int width) {
  return transform(x, height, width, FFTW_FORWARD);
}

CVector inverse_dft2(const CVector& x, int height, int width) {
  return transform(x, height, width, FFTW_BACKWARD) / static_cast<double>(height * width);
}

CVector unitary_dft2(const CVector& x, int height, int width) {
  return transform(x, height, width, FFTW_FORWARD) / std::sqrt(static_cast<double>(height * width));
}

CVector unitary_inverse_dft2(const CVector& x, int height, int width) {
  return transform(x, height, width, FFTW_BACKWARD) /
         std::sqrt(static_cast<double>(height * width));
}

CVector to_complex(const Eigen::VectorXd& pairs) {
  if (pairs.size() % 2 != 0) throw std::invalid_argument("to_complex: odd real-pair length");
  CVector out(pairs.size() / 2);
  for (Eigen::Index i = 0; i < out.size(); ++i) out[i] = Complex(pairs[2 * i], pairs[2 * i + 1]);
  return out;
}

Eigen::VectorXd to_real_pairs(const CVector& z) {
  Eigen::VectorXd out(2 * z.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    out[2 * i] = z[i].real();
    out[2 * i + 1] = z[i].imag();
  }
  return out;
}

}  // namespace bcpnp
