#include "ilvm/sim.hpp"

#include <stdexcept>

namespace ilvm::model {

Sim::Sim(nn::ParameterSet& params, const std::string& prefix, const SimConfig& cfg, Rng& rng) : cfg_(cfg) {
  if (cfg.hidden_dim == 0 || cfg.edge_dim == 0 || cfg.out_hidden == 0 || cfg.output_dim == 0 || cfg.rounds == 0) {
    throw std::invalid_argument("SIM dimensions must be positive");
  }
  const std::size_t h = cfg.hidden_dim;
  edge_ = nn::Mlp(params, prefix + ".edge_mlp", {2 * h + 4, cfg.edge_dim, cfg.edge_dim, cfg.edge_dim}, rng);
  gru_ = nn::GruCell(params, prefix + ".gru", cfg.edge_dim, h, rng);
  out_ = nn::Mlp(params, prefix + ".out_mlp", {h, cfg.out_hidden, cfg.output_dim}, rng);
}

Tensor Sim::propagate(const Tensor& hidden, const ActorGraph& graph) const {
  if (hidden.cols() != cfg_.hidden_dim || hidden.rows() != graph.nodes) {
    throw ad::ShapeError("SIM input " + ad::to_string(hidden.shape()) + " does not match graph of " +
                         std::to_string(graph.nodes) + " nodes, hidden " + std::to_string(cfg_.hidden_dim));
  }
  Tensor h = hidden;
  for (std::size_t round = 0; round < cfg_.rounds; ++round) {
    Tensor agg;
    if (graph.edges() == 0) {
      agg = Tensor::zeros({graph.nodes, cfg_.edge_dim});
    } else {
      const Tensor hu = ad::gather_rows(h, graph.src);
      const Tensor hv = ad::gather_rows(h, graph.dst);
      const Tensor messages = edge_(ad::concat_cols({hu, hv, graph.relative}));
      agg = ad::segment_max(messages, graph.dst, graph.nodes);
    }
    h = gru_(h, agg);
  }
  return h;
}

Tensor Sim::operator()(const Tensor& hidden, const ActorGraph& graph) const {
  return out_(propagate(hidden, graph));
}

}  // namespace ilvm::model
