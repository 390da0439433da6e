#pragma once

#include <functional>
#include <memory>
#include <string_view>
#include <vector>

#include "ilvm/tensor.hpp"

namespace ilvm::ad::detail {

struct Node {
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;
  bool requires_grad = false;
  bool leaf = true;
  // Set once the node's history has been released by backward().
  bool released = false;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward;

  std::vector<double>& ensure_grad() {
    if (grad.empty()) grad.assign(value.size(), 0.0);
    return grad;
  }
};

struct Access {
  static const std::shared_ptr<Node>& node(const Tensor& t) { return t.node_; }
  static Tensor wrap(std::shared_ptr<Node> n) { return Tensor(std::move(n)); }
};

inline const Node& node_of(const Tensor& t) {
  const auto& n = Access::node(t);
  if (!n) throw ShapeError("undefined tensor");
  return *n;
}

// Builds an op result. Values are checked for finiteness; the graph edge is
// recorded only when grad mode is on and some parent requires grad.
Tensor make_result(std::string_view op, Shape shape, std::vector<double> value,
                   std::vector<Tensor> parents, std::function<void(Node&)> backward);

}  // namespace ilvm::ad::detail
