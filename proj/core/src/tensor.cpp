#include "ilvm/tensor.hpp"

#include <cmath>
#include <numeric>
#include <sstream>
#include <unordered_set>

#include "node.hpp"

namespace ilvm::ad {
namespace {

thread_local bool g_grad_enabled = true;

std::shared_ptr<detail::Node> make_leaf(Shape shape, std::vector<double> values,
                                        bool requires_grad) {
  if (values.size() != numel(shape)) {
    throw ShapeError("data length " + std::to_string(values.size()) +
                     " does not match shape " + to_string(shape));
  }
  for (double v : values) {
    if (!std::isfinite(v)) throw NonFiniteError("non-finite value in tensor constructor");
  }
  auto n = std::make_shared<detail::Node>();
  n->shape = std::move(shape);
  n->value = std::move(values);
  n->requires_grad = requires_grad;
  return n;
}

}  // namespace

std::size_t numel(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         [](std::size_t a, std::size_t b) { return a * b; });
}

std::string to_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "," : "") << shape[i];
  os << ']';
  return os.str();
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  std::vector<double> v(ad::numel(shape), 0.0);
  return Tensor(make_leaf(std::move(shape), std::move(v), requires_grad));
}

Tensor Tensor::from(Shape shape, std::vector<double> values, bool requires_grad) {
  return Tensor(make_leaf(std::move(shape), std::move(values), requires_grad));
}

Tensor Tensor::scalar(double value, bool requires_grad) {
  return from({}, {value}, requires_grad);
}

Tensor Tensor::vector(std::vector<double> values, bool requires_grad) {
  const std::size_t n = values.size();
  return from({n}, std::move(values), requires_grad);
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols, std::vector<double> values,
                      bool requires_grad) {
  return from({rows, cols}, std::move(values), requires_grad);
}

const Shape& Tensor::shape() const { return detail::node_of(*this).shape; }
std::size_t Tensor::numel() const { return detail::node_of(*this).value.size(); }

std::size_t Tensor::rows() const {
  const auto& s = shape();
  if (s.size() == 2) return s[0];
  if (s.size() <= 1) return 1;
  throw ShapeError("rows() on tensor of rank " + std::to_string(s.size()));
}

std::size_t Tensor::cols() const {
  const auto& s = shape();
  if (s.size() == 2) return s[1];
  if (s.size() == 1) return s[0];
  if (s.empty()) return 1;
  throw ShapeError("cols() on tensor of rank " + std::to_string(s.size()));
}

std::span<const double> Tensor::values() const { return detail::node_of(*this).value; }

std::span<double> Tensor::mutable_values() {
  auto& n = *detail::Access::node(*this);
  if (!n.leaf) throw GraphError("cannot mutate an interior graph node");
  return n.value;
}

double Tensor::item() const {
  const auto& n = detail::node_of(*this);
  if (n.value.size() != 1) throw ShapeError("item() on tensor of shape " + to_string(n.shape));
  return n.value[0];
}

double Tensor::at(std::size_t r, std::size_t c) const {
  return values()[r * cols() + c];
}

bool Tensor::requires_grad() const { return detail::node_of(*this).requires_grad; }
bool Tensor::has_grad() const { return !detail::node_of(*this).grad.empty(); }
std::span<const double> Tensor::grad() const { return detail::node_of(*this).grad; }

void Tensor::zero_grad() {
  auto& n = *detail::Access::node(*this);
  if (!n.grad.empty()) std::fill(n.grad.begin(), n.grad.end(), 0.0);
}

Tensor Tensor::detach() const {
  const auto& n = detail::node_of(*this);
  return Tensor(make_leaf(n.shape, n.value, false));
}

void Tensor::backward() const {
  using detail::Node;
  const auto& root = detail::Access::node(*this);
  if (!root) throw ShapeError("backward() on undefined tensor");
  if (root->value.size() != 1) {
    throw ShapeError("backward() requires a scalar loss, got shape " + to_string(root->shape));
  }
  if (root->released) throw GraphError("backward() called twice; re-run the forward pass");
  if (!root->requires_grad) throw GraphError("loss does not depend on any tensor requiring grad");

  // Iterative post-order DFS gives a topological order.
  std::vector<Node*> order;
  std::unordered_set<Node*> visited;
  std::vector<std::pair<Node*, std::size_t>> stack{{root.get(), 0}};
  visited.insert(root.get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (node->released) throw GraphError("graph already released; re-run the forward pass");
    if (next < node->parents.size()) {
      Node* p = node->parents[next++].get();
      if (p->requires_grad && !p->leaf && visited.insert(p).second) stack.emplace_back(p, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  root->ensure_grad()[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (n->backward && !n->grad.empty()) n->backward(*n);
  }
  for (Node* n : order) {
    if (n->leaf) continue;
    n->parents.clear();
    n->backward = nullptr;
    n->grad.clear();
    n->grad.shrink_to_fit();
    n->released = true;
  }
}

bool grad_enabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

namespace detail {

Tensor make_result(std::string_view op, Shape shape, std::vector<double> value,
                   std::vector<Tensor> parents, std::function<void(Node&)> backward) {
  for (double v : value) {
    if (!std::isfinite(v)) throw NonFiniteError("non-finite result in op '" + std::string(op) + "'");
  }
  auto n = std::make_shared<Node>();
  n->shape = std::move(shape);
  n->value = std::move(value);
  n->leaf = false;
  if (g_grad_enabled) {
    bool any = false;
    for (const auto& p : parents) any = any || node_of(p).requires_grad;
    if (any) {
      n->requires_grad = true;
      n->parents.reserve(parents.size());
      for (const auto& p : parents) n->parents.push_back(Access::node(p));
      n->backward = std::move(backward);
    }
  }
  return Access::wrap(std::move(n));
}

}  // namespace detail
}  // namespace ilvm::ad
