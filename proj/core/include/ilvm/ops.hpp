#pragma once

// Differentiable primitives. Matrix ops treat rank-1 tensors as one row and
// keep the caller's rank on the result. No broadcasting beyond the affine bias.

#include <cstddef>
#include <span>
#include <vector>

#include "ilvm/tensor.hpp"

namespace ilvm::ad {

/// x W + b with x [R x I], W [I x O], b [O]. Pass an undefined bias to skip it.
Tensor affine(const Tensor& x, const Tensor& weight, const Tensor& bias = {});

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& x, double factor);

Tensor relu(const Tensor& x);
Tensor tanh(const Tensor& x);
Tensor sigmoid(const Tensor& x);
Tensor exp(const Tensor& x);
Tensor softplus(const Tensor& x);

/// Column-wise concatenation of tensors sharing a row count.
Tensor concat_cols(std::span<const Tensor> parts);
Tensor concat_cols(std::initializer_list<Tensor> parts);
Tensor slice_cols(const Tensor& x, std::size_t begin, std::size_t end);
Tensor gather_rows(const Tensor& x, std::span<const std::size_t> rows);
Tensor reshape(const Tensor& x, Shape shape);

/// Feature-wise max of the rows of x grouped by segment id. Segments with no
/// rows yield zeros. The gradient goes to the first maximal row.
Tensor segment_max(const Tensor& x, std::span<const std::size_t> segment, std::size_t segments);
/// Feature-wise max over all rows.
Tensor max_rows(const Tensor& x);

Tensor sum(const Tensor& x);

/// Elementwise Huber penalty summed to a scalar.
Tensor huber(const Tensor& residual, double delta);

}  // namespace ilvm::ad
