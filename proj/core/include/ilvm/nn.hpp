#pragma once

// Parameter registry and the layers built from the primitives: affine layers,
// ReLU MLPs and the gated recurrent cell.

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "ilvm/ops.hpp"
#include "ilvm/rng.hpp"
#include "ilvm/tensor.hpp"

namespace ilvm::nn {

using ad::Tensor;

/// Named trainable tensors, iterated in lexicographic name order.
class ParameterSet {
 public:
  Tensor add(const std::string& name, Tensor value);
  Tensor zeros(const std::string& name, ad::Shape shape);
  /// Glorot-uniform [fan_in x fan_out] matrix.
  Tensor xavier(const std::string& name, std::size_t fan_in, std::size_t fan_out, Rng& rng);

  const std::map<std::string, Tensor>& items() const { return params_; }
  const Tensor& at(const std::string& name) const;
  bool contains(const std::string& name) const { return params_.count(name) != 0; }
  std::size_t size() const { return params_.size(); }
  std::size_t scalar_count() const;

  void zero_grad();
  /// Sets every value to zero (used by tests for the degenerate-weight cases).
  void fill(double value);

 private:
  std::map<std::string, Tensor> params_;
};

class Linear {
 public:
  Linear() = default;
  Linear(ParameterSet& params, const std::string& prefix, std::size_t in, std::size_t out, Rng& rng);

  Tensor operator()(const Tensor& x) const { return ad::affine(x, weight_, bias_); }
  std::size_t in_dim() const { return in_; }
  std::size_t out_dim() const { return out_; }
  const Tensor& weight() const { return weight_; }
  const Tensor& bias() const { return bias_; }

 private:
  Tensor weight_;
  Tensor bias_;
  std::size_t in_ = 0;
  std::size_t out_ = 0;
};

/// Affine layers with ReLU between them; the last layer is linear.
class Mlp {
 public:
  Mlp() = default;
  /// widths = {in, hidden..., out}; needs at least two entries.
  Mlp(ParameterSet& params, const std::string& prefix, const std::vector<std::size_t>& widths, Rng& rng);

  Tensor operator()(const Tensor& x) const;
  std::size_t in_dim() const { return layers_.front().in_dim(); }
  std::size_t out_dim() const { return layers_.back().out_dim(); }
  std::size_t depth() const { return layers_.size(); }

 private:
  std::vector<Linear> layers_;
};

/// Gated recurrent unit, reset applied to the hidden state before the
/// candidate projection:
///   r  = sigmoid(a Wr + h Ur + br)
///   z  = sigmoid(a Wz + h Uz + bz)
///   n~ = tanh(a Wn + (r * h) Un + bn)
///   h' = (1 - z) * n~ + z * h
/// Input weights are packed as [A x 3H] in (r, z, n) column blocks, hidden gate
/// weights as [H x 2H] in (r, z) blocks, and the candidate weight as [H x H].
class GruCell {
 public:
  GruCell() = default;
  GruCell(ParameterSet& params, const std::string& prefix, std::size_t input_dim,
          std::size_t hidden_dim, Rng& rng);

  Tensor operator()(const Tensor& h, const Tensor& a) const;
  std::size_t input_dim() const { return input_dim_; }
  std::size_t hidden_dim() const { return hidden_dim_; }

  const Tensor& input_weight() const { return input_weight_; }
  const Tensor& input_bias() const { return input_bias_; }
  const Tensor& hidden_gate_weight() const { return hidden_gate_weight_; }
  const Tensor& hidden_candidate_weight() const { return hidden_candidate_weight_; }

 private:
  Tensor input_weight_;
  Tensor input_bias_;
  Tensor hidden_gate_weight_;
  Tensor hidden_candidate_weight_;
  std::size_t input_dim_ = 0;
  std::size_t hidden_dim_ = 0;
};

Tensor gru_cell(const Tensor& h, const Tensor& a, const GruCell& cell);

/// Runs the cell over a sequence of [R x A] inputs from a zero state and
/// returns the final hidden state [R x H].
Tensor gru_rollout(const GruCell& cell, const std::vector<Tensor>& inputs, std::size_t rows);

}  // namespace ilvm::nn
