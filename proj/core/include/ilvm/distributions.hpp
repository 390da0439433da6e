#pragma once

#include <array>
#include <cstddef>

#include "ilvm/rng.hpp"
#include "ilvm/tensor.hpp"

namespace ilvm::ad {

/// Diagonal Gaussian with sigma = exp(log_sigma). Rows index actors.
struct DiagGaussian {
  Tensor mu;
  Tensor log_sigma;

  std::size_t dim() const { return mu.cols(); }
};

DiagGaussian standard_normal_like(const DiagGaussian& like);

/// Closed-form KL(q || p) summed over every element.
Tensor kl_diag_gaussian(const DiagGaussian& q, const DiagGaussian& p);

/// z = mu + exp(log_sigma) * eps for a caller-supplied eps of the same shape.
Tensor reparam_sample(const DiagGaussian& d, const Tensor& eps);
Tensor reparam_sample(const DiagGaussian& d, Rng& rng);

/// Raw per-waypoint outputs (mx, my, a, b, c) map to a mean and a lower
/// Cholesky factor L = [[softplus(a)+floor, 0], [c, softplus(b)+floor]].
inline constexpr std::size_t kGaussianParams = 5;
inline constexpr double kCholeskyFloor = 1e-4;

struct Gaussian2 {
  std::array<double, 2> mu;
  // Row-major lower-triangular factor: {l11, 0, l21, l22}.
  std::array<double, 4> chol;

  std::array<double, 2> sample(double e1, double e2) const {
    return {mu[0] + chol[0] * e1, mu[1] + chol[2] * e1 + chol[3] * e2};
  }
  std::array<double, 4> covariance() const {
    const double c01 = chol[0] * chol[2];
    return {chol[0] * chol[0], c01, c01, chol[2] * chol[2] + chol[3] * chol[3]};
  }
};

Gaussian2 gaussian_from_raw(const double* raw, double floor = kCholeskyFloor);

/// Negative log-likelihood of target [R x 2K] under raw Gaussian params
/// [R x 5K], summed over rows and waypoints.
Tensor gaussian2d_nll(const Tensor& raw, const Tensor& target, double floor = kCholeskyFloor);

}  // namespace ilvm::ad
