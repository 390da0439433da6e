#pragma once

// Scene interaction module: spatially aware message passing over a fully
// connected actor graph.
//
//   m_uv = EdgeMLP(h_u ++ h_v ++ rel(u, v))      3 layers
//   a_v  = feature-wise max over incoming m_uv   (zero without neighbours)
//   h_v' = GRU(h_v, a_v)
//   o_v  = OutMLP(h_v')                          2 layers

#include <cstddef>
#include <string>

#include "ilvm/batch.hpp"
#include "ilvm/nn.hpp"

namespace ilvm::model {

struct SimConfig {
  std::size_t hidden_dim = 64;
  std::size_t edge_dim = 64;  // width of every edge-MLP layer, also the message size
  std::size_t out_hidden = 64;
  std::size_t output_dim = 8;
  std::size_t rounds = 1;
};

class Sim {
 public:
  Sim() = default;
  Sim(nn::ParameterSet& params, const std::string& prefix, const SimConfig& cfg, Rng& rng);

  /// hidden [N x hidden_dim] -> [N x output_dim]
  Tensor operator()(const Tensor& hidden, const ActorGraph& graph) const;
  /// Hidden states after the message-passing rounds, before OutMLP.
  Tensor propagate(const Tensor& hidden, const ActorGraph& graph) const;

  const SimConfig& config() const { return cfg_; }
  const nn::Mlp& edge_mlp() const { return edge_; }
  const nn::GruCell& gru() const { return gru_; }
  const nn::Mlp& out_mlp() const { return out_; }

 private:
  SimConfig cfg_;
  nn::Mlp edge_;
  nn::GruCell gru_;
  nn::Mlp out_;
};

}  // namespace ilvm::model
