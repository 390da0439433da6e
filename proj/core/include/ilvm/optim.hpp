#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "ilvm/nn.hpp"

namespace ilvm::optim {

struct AdamOptions {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Adam with bias-corrected moments. Moment buffers start at zero.
class Adam {
 public:
  Adam(nn::ParameterSet& params, AdamOptions options);

  /// Applies one update from the gradients currently stored on the parameters.
  /// Parameters without a gradient are treated as having a zero gradient.
  void step();
  std::int64_t steps_taken() const { return t_; }
  const AdamOptions& options() const { return options_; }
  void set_lr(double lr) { options_.lr = lr; }

 private:
  struct Moments {
    std::vector<double> m;
    std::vector<double> v;
  };
  nn::ParameterSet* params_;
  AdamOptions options_;
  std::map<std::string, Moments> state_;
  std::int64_t t_ = 0;
};

/// Scales all gradients so their global L2 norm is at most max_norm.
/// Returns the norm before clipping.
double clip_grad_norm(nn::ParameterSet& params, double max_norm);

}  // namespace ilvm::optim
