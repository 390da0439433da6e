#include "ilvm/ops.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "node.hpp"

namespace ilvm::ad {
namespace {

using detail::make_result;
using detail::Node;
using detail::node_of;

struct Dims {
  std::size_t rows;
  std::size_t cols;
};

Dims matrix_dims(const Tensor& t, const char* op) {
  const auto& s = t.shape();
  if (s.size() == 2) return {s[0], s[1]};
  if (s.size() == 1) return {1, s[0]};
  if (s.empty()) return {1, 1};
  throw ShapeError(std::string(op) + ": expected rank <= 2, got " + to_string(s));
}

Shape matrix_shape_like(const Tensor& x, std::size_t rows, std::size_t cols) {
  if (x.shape().size() == 1 && rows == 1) return {cols};
  return {rows, cols};
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + ": shape mismatch " + to_string(a.shape()) + " vs " +
                     to_string(b.shape()));
  }
}

template <typename F, typename D>
Tensor unary(const char* op, const Tensor& x, F f, D dfdx) {
  const auto& xv = node_of(x).value;
  std::vector<double> out(xv.size());
  for (std::size_t i = 0; i < xv.size(); ++i) out[i] = f(xv[i]);
  return make_result(op, x.shape(), std::move(out), {x}, [dfdx](Node& self) {
    Node& p = *self.parents[0];
    auto& g = p.ensure_grad();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * dfdx(p.value[i], self.value[i]);
  });
}

// c[m x n] += a[m x k] b[k x n]. Every entry accumulates its k terms in
// increasing order whatever its row, so a row's result never depends on its
// position in the batch.
void gemm_acc(const double* __restrict a, const double* __restrict b, double* __restrict c, std::size_t m,
              std::size_t k, std::size_t n) {
  std::size_t r = 0;
  for (; r + 4 <= m; r += 4) {
    const double* a0 = a + r * k;
    const double* a1 = a0 + k;
    const double* a2 = a1 + k;
    const double* a3 = a2 + k;
    double* c0 = c + r * n;
    double* c1 = c0 + n;
    double* c2 = c1 + n;
    double* c3 = c2 + n;
    std::size_t i = 0;
    for (; i + 4 <= k; i += 4) {
      const double* b0 = b + i * n;
      const double* b1 = b0 + n;
      const double* b2 = b1 + n;
      const double* b3 = b2 + n;
      for (std::size_t o = 0; o < n; ++o) {
        double v0 = c0[o], v1 = c1[o], v2 = c2[o], v3 = c3[o];
        v0 += a0[i] * b0[o];
        v1 += a1[i] * b0[o];
        v2 += a2[i] * b0[o];
        v3 += a3[i] * b0[o];
        v0 += a0[i + 1] * b1[o];
        v1 += a1[i + 1] * b1[o];
        v2 += a2[i + 1] * b1[o];
        v3 += a3[i + 1] * b1[o];
        v0 += a0[i + 2] * b2[o];
        v1 += a1[i + 2] * b2[o];
        v2 += a2[i + 2] * b2[o];
        v3 += a3[i + 2] * b2[o];
        v0 += a0[i + 3] * b3[o];
        v1 += a1[i + 3] * b3[o];
        v2 += a2[i + 3] * b3[o];
        v3 += a3[i + 3] * b3[o];
        c0[o] = v0;
        c1[o] = v1;
        c2[o] = v2;
        c3[o] = v3;
      }
    }
    for (; i < k; ++i) {
      const double* bi = b + i * n;
      for (std::size_t o = 0; o < n; ++o) {
        c0[o] += a0[i] * bi[o];
        c1[o] += a1[i] * bi[o];
        c2[o] += a2[i] * bi[o];
        c3[o] += a3[i] * bi[o];
      }
    }
  }
  for (; r < m; ++r) {
    const double* ar = a + r * k;
    double* cr = c + r * n;
    for (std::size_t i = 0; i < k; ++i) {
      const double* bi = b + i * n;
      for (std::size_t o = 0; o < n; ++o) cr[o] += ar[i] * bi[o];
    }
  }
}

std::vector<double> transpose(const std::vector<double>& v, std::size_t rows, std::size_t cols) {
  std::vector<double> t(v.size());
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) t[c * rows + r] = v[r * cols + c];
  return t;
}

}  // namespace

Tensor affine(const Tensor& x, const Tensor& weight, const Tensor& bias) {
  const auto [rows, in] = matrix_dims(x, "affine");
  if (weight.shape().size() != 2 || weight.shape()[0] != in) {
    throw ShapeError("affine: input " + to_string(x.shape()) + " incompatible with weight " +
                     to_string(weight.shape()));
  }
  const std::size_t out_dim = weight.shape()[1];
  const bool has_bias = bias.defined();
  if (has_bias && bias.shape() != Shape{out_dim}) {
    throw ShapeError("affine: bias " + to_string(bias.shape()) + " for output width " +
                     std::to_string(out_dim));
  }
  const auto& xv = node_of(x).value;
  const auto& wv = node_of(weight).value;
  std::vector<double> out(rows * out_dim, 0.0);
  if (has_bias) {
    const auto& bv = node_of(bias).value;
    for (std::size_t r = 0; r < rows; ++r)
      std::copy(bv.begin(), bv.end(), out.begin() + static_cast<std::ptrdiff_t>(r * out_dim));
  }
  gemm_acc(xv.data(), wv.data(), out.data(), rows, in, out_dim);
  std::vector<Tensor> parents{x, weight};
  if (has_bias) parents.push_back(bias);
  return make_result(
      "affine", matrix_shape_like(x, rows, out_dim), std::move(out), std::move(parents),
      [rows = rows, in = in, out_dim](Node& self) {
        Node& px = *self.parents[0];
        Node& pw = *self.parents[1];
        const auto& g = self.grad;
        if (px.requires_grad) {
          auto& gx = px.ensure_grad();
          const auto wt = transpose(pw.value, in, out_dim);
          gemm_acc(g.data(), wt.data(), gx.data(), rows, out_dim, in);
        }
        if (pw.requires_grad) {
          auto& gw = pw.ensure_grad();
          const auto xt = transpose(px.value, rows, in);
          gemm_acc(xt.data(), g.data(), gw.data(), in, rows, out_dim);
        }
        if (self.parents.size() > 2 && self.parents[2]->requires_grad) {
          auto& gb = self.parents[2]->ensure_grad();
          for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t o = 0; o < out_dim; ++o) gb[o] += g[r * out_dim + o];
        }
      });
}

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  const auto& av = node_of(a).value;
  const auto& bv = node_of(b).value;
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] + bv[i];
  return make_result("add", a.shape(), std::move(out), {a, b}, [](Node& self) {
    for (auto& p : self.parents) {
      if (!p->requires_grad) continue;
      auto& g = p->ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    }
  });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "sub");
  const auto& av = node_of(a).value;
  const auto& bv = node_of(b).value;
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] - bv[i];
  return make_result("sub", a.shape(), std::move(out), {a, b}, [](Node& self) {
    if (self.parents[0]->requires_grad) {
      auto& g = self.parents[0]->ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    }
    if (self.parents[1]->requires_grad) {
      auto& g = self.parents[1]->ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] -= self.grad[i];
    }
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mul");
  const auto& av = node_of(a).value;
  const auto& bv = node_of(b).value;
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * bv[i];
  return make_result("mul", a.shape(), std::move(out), {a, b}, [](Node& self) {
    Node& pa = *self.parents[0];
    Node& pb = *self.parents[1];
    if (pa.requires_grad) {
      auto& g = pa.ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * pb.value[i];
    }
    if (pb.requires_grad) {
      auto& g = pb.ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * pa.value[i];
    }
  });
}

Tensor scale(const Tensor& x, double factor) {
  return unary(
      "scale", x, [factor](double v) { return v * factor; },
      [factor](double, double) { return factor; });
}

Tensor relu(const Tensor& x) {
  return unary(
      "relu", x, [](double v) { return v > 0.0 ? v : 0.0; },
      [](double v, double) { return v > 0.0 ? 1.0 : 0.0; });
}

Tensor tanh(const Tensor& x) {
  return unary(
      "tanh", x, [](double v) { return std::tanh(v); },
      [](double, double y) { return 1.0 - y * y; });
}

Tensor sigmoid(const Tensor& x) {
  return unary(
      "sigmoid", x, [](double v) { return 1.0 / (1.0 + std::exp(-v)); },
      [](double, double y) { return y * (1.0 - y); });
}

Tensor exp(const Tensor& x) {
  return unary(
      "exp", x, [](double v) { return std::exp(v); }, [](double, double y) { return y; });
}

Tensor softplus(const Tensor& x) {
  return unary(
      "softplus", x,
      [](double v) { return v > 0.0 ? v + std::log1p(std::exp(-v)) : std::log1p(std::exp(v)); },
      [](double v, double) { return 1.0 / (1.0 + std::exp(-v)); });
}

Tensor concat_cols(std::span<const Tensor> parts) {
  if (parts.empty()) throw ShapeError("concat_cols: no inputs");
  const std::size_t rows = matrix_dims(parts[0], "concat_cols").rows;
  std::vector<std::size_t> widths;
  std::size_t total = 0;
  for (const auto& p : parts) {
    const auto d = matrix_dims(p, "concat_cols");
    if (d.rows != rows) {
      throw ShapeError("concat_cols: row mismatch " + to_string(p.shape()) + " vs " +
                       std::to_string(rows) + " rows");
    }
    widths.push_back(d.cols);
    total += d.cols;
  }
  std::vector<double> out(rows * total);
  std::size_t offset = 0;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const auto& v = node_of(parts[k]).value;
    for (std::size_t r = 0; r < rows; ++r)
      std::copy_n(v.data() + r * widths[k], widths[k], out.data() + r * total + offset);
    offset += widths[k];
  }
  return make_result("concat_cols", matrix_shape_like(parts[0], rows, total), std::move(out),
                     std::vector<Tensor>(parts.begin(), parts.end()),
                     [rows, total, widths](Node& self) {
                       std::size_t off = 0;
                       for (std::size_t k = 0; k < widths.size(); ++k) {
                         Node& p = *self.parents[k];
                         if (p.requires_grad) {
                           auto& g = p.ensure_grad();
                           for (std::size_t r = 0; r < rows; ++r)
                             for (std::size_t c = 0; c < widths[k]; ++c)
                               g[r * widths[k] + c] += self.grad[r * total + off + c];
                         }
                         off += widths[k];
                       }
                     });
}

Tensor concat_cols(std::initializer_list<Tensor> parts) {
  return concat_cols(std::span<const Tensor>(parts.begin(), parts.size()));
}

Tensor slice_cols(const Tensor& x, std::size_t begin, std::size_t end) {
  const auto [rows, cols] = matrix_dims(x, "slice_cols");
  if (begin >= end || end > cols) {
    throw ShapeError("slice_cols: range [" + std::to_string(begin) + "," + std::to_string(end) +
                     ") out of " + std::to_string(cols) + " columns");
  }
  const std::size_t w = end - begin;
  const auto& v = node_of(x).value;
  std::vector<double> out(rows * w);
  for (std::size_t r = 0; r < rows; ++r) std::copy_n(v.data() + r * cols + begin, w, out.data() + r * w);
  return make_result("slice_cols", matrix_shape_like(x, rows, w), std::move(out), {x},
                     [rows = rows, cols = cols, begin, w](Node& self) {
                       auto& g = self.parents[0]->ensure_grad();
                       for (std::size_t r = 0; r < rows; ++r)
                         for (std::size_t c = 0; c < w; ++c) g[r * cols + begin + c] += self.grad[r * w + c];
                     });
}

Tensor gather_rows(const Tensor& x, std::span<const std::size_t> rows) {
  const auto [n, cols] = matrix_dims(x, "gather_rows");
  const auto& v = node_of(x).value;
  std::vector<double> out(rows.size() * cols);
  for (std::size_t k = 0; k < rows.size(); ++k) {
    if (rows[k] >= n) throw ShapeError("gather_rows: index " + std::to_string(rows[k]) + " out of range");
    std::copy_n(v.data() + rows[k] * cols, cols, out.data() + k * cols);
  }
  return make_result("gather_rows", Shape{rows.size(), cols}, std::move(out), {x},
                     [idx = std::vector<std::size_t>(rows.begin(), rows.end()), cols = cols](Node& self) {
                       auto& g = self.parents[0]->ensure_grad();
                       for (std::size_t k = 0; k < idx.size(); ++k)
                         for (std::size_t c = 0; c < cols; ++c) g[idx[k] * cols + c] += self.grad[k * cols + c];
                     });
}

Tensor reshape(const Tensor& x, Shape shape) {
  if (numel(shape) != x.numel()) {
    throw ShapeError("reshape: " + to_string(x.shape()) + " to " + to_string(shape));
  }
  return make_result("reshape", std::move(shape), node_of(x).value, {x}, [](Node& self) {
    auto& g = self.parents[0]->ensure_grad();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
  });
}

Tensor segment_max(const Tensor& x, std::span<const std::size_t> segment, std::size_t segments) {
  const auto [n, cols] = matrix_dims(x, "segment_max");
  if (segment.size() != n) {
    throw ShapeError("segment_max: " + std::to_string(segment.size()) + " segment ids for " +
                     std::to_string(n) + " rows");
  }
  const auto& v = node_of(x).value;
  constexpr std::size_t kNone = static_cast<std::size_t>(-1);
  std::vector<double> out(segments * cols, 0.0);
  std::vector<std::size_t> argmax(segments * cols, kNone);
  for (std::size_t r = 0; r < n; ++r) {
    const std::size_t s = segment[r];
    if (s >= segments) throw ShapeError("segment_max: segment id out of range");
    for (std::size_t c = 0; c < cols; ++c) {
      const std::size_t k = s * cols + c;
      const double val = v[r * cols + c];
      if (argmax[k] == kNone || val > out[k]) {
        out[k] = val;
        argmax[k] = r;
      }
    }
  }
  return make_result("segment_max", Shape{segments, cols}, std::move(out), {x},
                     [argmax = std::move(argmax), cols = cols](Node& self) {
                       auto& g = self.parents[0]->ensure_grad();
                       for (std::size_t k = 0; k < argmax.size(); ++k)
                         if (argmax[k] != kNone) g[argmax[k] * cols + k % cols] += self.grad[k];
                     });
}

Tensor max_rows(const Tensor& x) {
  const auto d = matrix_dims(x, "max_rows");
  if (d.rows == 0) throw ShapeError("max_rows: empty set");
  std::vector<std::size_t> seg(d.rows, 0);
  return reshape(segment_max(x, seg, 1), {d.cols});
}

Tensor sum(const Tensor& x) {
  const auto& v = node_of(x).value;
  double s = 0.0;
  for (double e : v) s += e;
  return make_result("sum", Shape{}, {s}, {x}, [](Node& self) {
    auto& g = self.parents[0]->ensure_grad();
    for (double& e : g) e += self.grad[0];
  });
}

Tensor huber(const Tensor& residual, double delta) {
  if (!(delta > 0.0)) throw std::invalid_argument("huber: delta must be positive");
  const auto& v = node_of(residual).value;
  double s = 0.0;
  for (double r : v) {
    const double a = std::abs(r);
    s += a <= delta ? 0.5 * r * r : delta * (a - 0.5 * delta);
  }
  return make_result("huber", Shape{}, {s}, {residual}, [delta](Node& self) {
    Node& p = *self.parents[0];
    auto& g = p.ensure_grad();
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double r = p.value[i];
      const double d = std::abs(r) <= delta ? r : (r > 0.0 ? delta : -delta);
      g[i] += self.grad[0] * d;
    }
  });
}

}  // namespace ilvm::ad
