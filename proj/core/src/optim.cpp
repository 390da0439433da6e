#include "ilvm/optim.hpp"

#include <cmath>
#include <stdexcept>

#include "node.hpp"

namespace ilvm::optim {

Adam::Adam(nn::ParameterSet& params, AdamOptions options) : params_(&params), options_(options) {
  for (const auto& [name, t] : params.items()) {
    state_[name] = Moments{std::vector<double>(t.numel(), 0.0), std::vector<double>(t.numel(), 0.0)};
  }
}

void Adam::step() {
  ++t_;
  const double bc1 = 1.0 - std::pow(options_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(options_.beta2, static_cast<double>(t_));
  for (const auto& [name, param] : params_->items()) {
    auto& node = *ad::detail::Access::node(param);
    if (node.grad.empty()) continue;
    auto& st = state_.at(name);
    for (std::size_t i = 0; i < node.value.size(); ++i) {
      const double g = node.grad[i];
      st.m[i] = options_.beta1 * st.m[i] + (1.0 - options_.beta1) * g;
      st.v[i] = options_.beta2 * st.v[i] + (1.0 - options_.beta2) * g * g;
      const double mhat = st.m[i] / bc1;
      const double vhat = st.v[i] / bc2;
      node.value[i] -= options_.lr * mhat / (std::sqrt(vhat) + options_.eps);
      if (!std::isfinite(node.value[i])) {
        throw ad::NonFiniteError("adam produced a non-finite value in '" + name + "'");
      }
    }
  }
}

double clip_grad_norm(nn::ParameterSet& params, double max_norm) {
  double sq = 0.0;
  for (const auto& [_, p] : params.items())
    for (double g : p.grad()) sq += g * g;
  const double norm = std::sqrt(sq);
  if (!std::isfinite(norm)) throw ad::NonFiniteError("non-finite gradient norm");
  if (max_norm > 0.0 && norm > max_norm) {
    const double f = max_norm / norm;
    for (const auto& [_, p] : params.items()) {
      auto& g = ad::detail::Access::node(p)->grad;
      for (double& e : g) e *= f;
    }
  }
  return norm;
}

}  // namespace ilvm::optim
