#include "ilvm/distributions.hpp"

#include <cmath>
#include <numbers>

#include "ilvm/ops.hpp"
#include "node.hpp"

namespace ilvm::ad {
namespace {

using detail::Node;
using detail::node_of;

double softplus_value(double v) { return v > 0.0 ? v + std::log1p(std::exp(-v)) : std::log1p(std::exp(v)); }
double logistic(double v) { return 1.0 / (1.0 + std::exp(-v)); }

}  // namespace

DiagGaussian standard_normal_like(const DiagGaussian& like) {
  return {Tensor::zeros(like.mu.shape()), Tensor::zeros(like.log_sigma.shape())};
}

Tensor kl_diag_gaussian(const DiagGaussian& q, const DiagGaussian& p) {
  const auto& s = q.mu.shape();
  if (q.log_sigma.shape() != s || p.mu.shape() != s || p.log_sigma.shape() != s) {
    throw ShapeError("kl_diag_gaussian: shape mismatch " + to_string(s) + " vs " + to_string(p.mu.shape()));
  }
  const auto& mq = node_of(q.mu).value;
  const auto& lq = node_of(q.log_sigma).value;
  const auto& mp = node_of(p.mu).value;
  const auto& lp = node_of(p.log_sigma).value;
  double total = 0.0;
  for (std::size_t i = 0; i < mq.size(); ++i) {
    const double d = mq[i] - mp[i];
    total += lp[i] - lq[i] + (std::exp(2.0 * (lq[i] - lp[i])) + d * d * std::exp(-2.0 * lp[i])) * 0.5 - 0.5;
  }
  return detail::make_result(
      "kl_diag_gaussian", Shape{}, {total}, {q.mu, q.log_sigma, p.mu, p.log_sigma}, [](Node& self) {
        const double g = self.grad[0];
        Node& nmq = *self.parents[0];
        Node& nlq = *self.parents[1];
        Node& nmp = *self.parents[2];
        Node& nlp = *self.parents[3];
        const std::size_t n = nmq.value.size();
        for (std::size_t i = 0; i < n; ++i) {
          const double d = nmq.value[i] - nmp.value[i];
          const double inv_vp = std::exp(-2.0 * nlp.value[i]);
          const double ratio = std::exp(2.0 * (nlq.value[i] - nlp.value[i]));
          if (nmq.requires_grad) nmq.ensure_grad()[i] += g * d * inv_vp;
          if (nmp.requires_grad) nmp.ensure_grad()[i] -= g * d * inv_vp;
          if (nlq.requires_grad) nlq.ensure_grad()[i] += g * (ratio - 1.0);
          if (nlp.requires_grad) nlp.ensure_grad()[i] += g * (1.0 - ratio - d * d * inv_vp);
        }
      });
}

Tensor reparam_sample(const DiagGaussian& d, const Tensor& eps) {
  return add(d.mu, mul(exp(d.log_sigma), eps));
}

Tensor reparam_sample(const DiagGaussian& d, Rng& rng) {
  std::vector<double> e(d.mu.numel());
  for (double& v : e) v = standard_normal(rng);
  return reparam_sample(d, Tensor::from(d.mu.shape(), std::move(e)));
}

Gaussian2 gaussian_from_raw(const double* raw, double floor) {
  return Gaussian2{{raw[0], raw[1]}, {softplus_value(raw[2]) + floor, 0.0, raw[4], softplus_value(raw[3]) + floor}};
}

Tensor gaussian2d_nll(const Tensor& raw, const Tensor& target, double floor) {
  const std::size_t rows = raw.rows();
  const std::size_t k = target.cols() / 2;
  if (target.cols() != 2 * k || raw.cols() != kGaussianParams * k || target.rows() != rows) {
    throw ShapeError("gaussian2d_nll: raw " + to_string(raw.shape()) + " vs target " + to_string(target.shape()));
  }
  const auto& rv = node_of(raw).value;
  const auto& tv = node_of(target).value;
  const double log2pi = std::log(2.0 * std::numbers::pi);
  double total = 0.0;
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t w = 0; w < k; ++w) {
      const double* p = rv.data() + (r * k + w) * kGaussianParams;
      const double* y = tv.data() + (r * k + w) * 2;
      const double d1 = softplus_value(p[2]) + floor;
      const double d2 = softplus_value(p[3]) + floor;
      const double e1 = (y[0] - p[0]) / d1;
      const double e2 = (y[1] - p[1] - p[4] * e1) / d2;
      total += log2pi + std::log(d1) + std::log(d2) + 0.5 * (e1 * e1 + e2 * e2);
    }
  }
  return detail::make_result(
      "gaussian2d_nll", Shape{}, {total}, {raw, target}, [rows, k, floor](Node& self) {
        const double g = self.grad[0];
        Node& praw = *self.parents[0];
        Node& ptgt = *self.parents[1];
        for (std::size_t r = 0; r < rows; ++r) {
          for (std::size_t w = 0; w < k; ++w) {
            const std::size_t pi = (r * k + w) * kGaussianParams;
            const std::size_t yi = (r * k + w) * 2;
            const double* p = praw.value.data() + pi;
            const double* y = ptgt.value.data() + yi;
            const double d1 = softplus_value(p[2]) + floor;
            const double d2 = softplus_value(p[3]) + floor;
            const double c = p[4];
            const double e1 = (y[0] - p[0]) / d1;
            const double e2 = (y[1] - p[1] - c * e1) / d2;
            const double de2 = e2;
            const double de1 = e1 - e2 * c / d2;
            const double dr1 = de1 / d1;  // d/d(y0 - mx)
            const double dr2 = de2 / d2;  // d/d(y1 - my)
            const double dd1 = 1.0 / d1 - de1 * e1 / d1;
            const double dd2 = 1.0 / d2 - de2 * e2 / d2;
            const double dc = -de2 * e1 / d2;
            if (praw.requires_grad) {
              auto& gr = praw.ensure_grad();
              gr[pi + 0] -= g * dr1;
              gr[pi + 1] -= g * dr2;
              gr[pi + 2] += g * dd1 * logistic(p[2]);
              gr[pi + 3] += g * dd2 * logistic(p[3]);
              gr[pi + 4] += g * dc;
            }
            if (ptgt.requires_grad) {
              auto& gt = ptgt.ensure_grad();
              gt[yi + 0] += g * dr1;
              gt[yi + 1] += g * dr2;
            }
          }
        }
      });
}

}  // namespace ilvm::ad
