#include "ilvm/nn.hpp"

#include <cmath>
#include <stdexcept>

namespace ilvm::nn {

Tensor ParameterSet::add(const std::string& name, Tensor value) {
  if (!params_.emplace(name, value).second) {
    throw std::invalid_argument("duplicate parameter name '" + name + "'");
  }
  return value;
}

Tensor ParameterSet::zeros(const std::string& name, ad::Shape shape) {
  return add(name, Tensor::zeros(std::move(shape), true));
}

Tensor ParameterSet::xavier(const std::string& name, std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::uniform_real_distribution<double> dist(-limit, limit);
  std::vector<double> v(fan_in * fan_out);
  for (double& e : v) e = dist(rng);
  return add(name, Tensor::matrix(fan_in, fan_out, std::move(v), true));
}

const Tensor& ParameterSet::at(const std::string& name) const {
  auto it = params_.find(name);
  if (it == params_.end()) throw std::out_of_range("unknown parameter '" + name + "'");
  return it->second;
}

std::size_t ParameterSet::scalar_count() const {
  std::size_t n = 0;
  for (const auto& [_, t] : params_) n += t.numel();
  return n;
}

void ParameterSet::zero_grad() {
  for (auto& [_, t] : params_) t.zero_grad();
}

void ParameterSet::fill(double value) {
  for (auto& [_, t] : params_) {
    auto v = t.mutable_values();
    std::fill(v.begin(), v.end(), value);
  }
}

Linear::Linear(ParameterSet& params, const std::string& prefix, std::size_t in, std::size_t out, Rng& rng)
    : in_(in), out_(out) {
  weight_ = params.xavier(prefix + ".weight", in, out, rng);
  bias_ = params.zeros(prefix + ".bias", {out});
}

Mlp::Mlp(ParameterSet& params, const std::string& prefix, const std::vector<std::size_t>& widths, Rng& rng) {
  if (widths.size() < 2) throw std::invalid_argument("Mlp needs at least input and output widths");
  for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
    layers_.emplace_back(params, prefix + "." + std::to_string(i), widths[i], widths[i + 1], rng);
  }
}

Tensor Mlp::operator()(const Tensor& x) const {
  Tensor h = x;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    h = layers_[i](h);
    if (i + 1 < layers_.size()) h = ad::relu(h);
  }
  return h;
}

GruCell::GruCell(ParameterSet& params, const std::string& prefix, std::size_t input_dim,
                 std::size_t hidden_dim, Rng& rng)
    : input_dim_(input_dim), hidden_dim_(hidden_dim) {
  input_weight_ = params.xavier(prefix + ".input_weight", input_dim, 3 * hidden_dim, rng);
  input_bias_ = params.zeros(prefix + ".input_bias", {3 * hidden_dim});
  hidden_gate_weight_ = params.xavier(prefix + ".hidden_gate_weight", hidden_dim, 2 * hidden_dim, rng);
  hidden_candidate_weight_ = params.xavier(prefix + ".hidden_candidate_weight", hidden_dim, hidden_dim, rng);
}

Tensor GruCell::operator()(const Tensor& h, const Tensor& a) const { return gru_cell(h, a, *this); }

Tensor gru_cell(const Tensor& h, const Tensor& a, const GruCell& cell) {
  const std::size_t H = cell.hidden_dim();
  if (h.cols() != H || a.cols() != cell.input_dim() || h.rows() != a.rows()) {
    throw ad::ShapeError("gru_cell: h " + ad::to_string(h.shape()) + " / a " + ad::to_string(a.shape()) +
                         " incompatible with cell (" + std::to_string(cell.input_dim()) + " -> " +
                         std::to_string(H) + ")");
  }
  const Tensor gx = ad::affine(a, cell.input_weight(), cell.input_bias());
  const Tensor gh = ad::affine(h, cell.hidden_gate_weight());
  const Tensor r = ad::sigmoid(ad::add(ad::slice_cols(gx, 0, H), ad::slice_cols(gh, 0, H)));
  const Tensor z = ad::sigmoid(ad::add(ad::slice_cols(gx, H, 2 * H), ad::slice_cols(gh, H, 2 * H)));
  const Tensor cand = ad::tanh(
      ad::add(ad::slice_cols(gx, 2 * H, 3 * H), ad::affine(ad::mul(r, h), cell.hidden_candidate_weight())));
  // (1 - z) * n + z * h == n + z * (h - n)
  return ad::add(cand, ad::mul(z, ad::sub(h, cand)));
}

Tensor gru_rollout(const GruCell& cell, const std::vector<Tensor>& inputs, std::size_t rows) {
  Tensor h = Tensor::zeros({rows, cell.hidden_dim()});
  for (const auto& x : inputs) h = gru_cell(h, x, cell);
  return h;
}

}  // namespace ilvm::nn
