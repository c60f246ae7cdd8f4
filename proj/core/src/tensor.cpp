#include "sgt/tensor.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_set>

#include "sgt/error.hpp"

namespace sgt {
namespace {

constexpr const char* kModule = "tensor_engine";

[[noreturn]] void fail(const std::string& message) {
  throw Error(kModule, message, Error::Kind::kUsage);
}

using NodePtr = std::shared_ptr<detail::Node>;

void require_matrix(const Tensor& t, const char* op, const char* what) {
  if (!t.defined()) fail(fmt::format("{}: {} is undefined", op, what));
  if (t.rank() != 2) {
    fail(fmt::format("{}: {} must be rank 2, got {}", op, what, shape_string(t.shape())));
  }
}

void require_vector(const Tensor& t, std::size_t n, const char* op, const char* what) {
  if (!t.defined()) fail(fmt::format("{}: {} is undefined", op, what));
  if (t.rank() != 1 || t.shape()[0] != n) {
    fail(fmt::format("{}: {} must have shape [{}], got {}", op, what, n, shape_string(t.shape())));
  }
}

// Builds an operation output. The graph edge is recorded only when some input
// needs a gradient.
Tensor make_result(const char* op, Shape shape, std::vector<double> data,
                   std::vector<Tensor> inputs, std::function<void(detail::Node&)> backward_fn) {
  auto node = std::make_shared<detail::Node>();
  node->shape = std::move(shape);
  node->data = std::move(data);
  node->op = op;
  bool needs_grad = false;
  for (const auto& in : inputs) needs_grad = needs_grad || in.requires_grad();
  if (needs_grad) {
    node->requires_grad = true;
    node->inputs.reserve(inputs.size());
    for (const auto& in : inputs) node->inputs.push_back(in.node());
    node->backward_fn = std::move(backward_fn);
  }
  return Tensor(std::move(node));
}

bool wants_grad(const NodePtr& n) { return n->requires_grad; }

}  // namespace

std::size_t shape_size(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_string(const Shape& shape) {
  return fmt::format("[{}]", fmt::join(shape, " x "));
}

// ---------------------------------------------------------------------------
// Tensor

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  const auto n = shape_size(shape);
  return from(std::move(shape), std::vector<double>(n, 0.0), requires_grad);
}

Tensor Tensor::from(Shape shape, std::vector<double> data, bool requires_grad) {
  for (auto d : shape) {
    if (d == 0) fail(fmt::format("dimension sizes must be positive, got {}", shape_string(shape)));
  }
  if (shape.empty()) fail("rank-0 shapes are not supported; use [1] for scalars");
  if (shape_size(shape) != data.size()) {
    fail(fmt::format("shape {} needs {} values, got {}", shape_string(shape), shape_size(shape),
                     data.size()));
  }
  auto node = std::make_shared<detail::Node>();
  node->shape = std::move(shape);
  node->data = std::move(data);
  node->requires_grad = requires_grad;
  if (requires_grad) node->grad.assign(node->data.size(), 0.0);
  return Tensor(std::move(node));
}

Tensor Tensor::scalar(double value, bool requires_grad) { return from({1}, {value}, requires_grad); }

Tensor Tensor::row(std::vector<double> values, bool requires_grad) {
  const auto n = values.size();
  return from({1, n}, std::move(values), requires_grad);
}

const Shape& Tensor::shape() const {
  if (!node_) fail("use of undefined tensor");
  return node_->shape;
}

std::size_t Tensor::size() const { return shape_size(shape()); }

std::size_t Tensor::rows() const {
  const auto& s = shape();
  if (s.size() == 1) return 1;
  if (s.size() == 2) return s[0];
  fail(fmt::format("rows() needs rank 1 or 2, got {}", shape_string(s)));
}

std::size_t Tensor::cols() const {
  const auto& s = shape();
  if (s.size() == 1) return s[0];
  if (s.size() == 2) return s[1];
  fail(fmt::format("cols() needs rank 1 or 2, got {}", shape_string(s)));
}

std::span<const double> Tensor::data() const {
  if (!node_) fail("use of undefined tensor");
  return node_->data;
}

std::span<double> Tensor::mutable_data() {
  if (!node_) fail("use of undefined tensor");
  if (!node_->inputs.empty()) fail("mutable_data() is only available on leaf tensors");
  return node_->data;
}

std::span<const double> Tensor::grad() const {
  if (!node_) fail("use of undefined tensor");
  return node_->grad;
}

std::span<double> Tensor::mutable_grad() {
  if (!node_) fail("use of undefined tensor");
  return node_->grad;
}

double Tensor::at(std::size_t r, std::size_t c) const {
  const auto nc = cols();
  if (r >= rows() || c >= nc) fail(fmt::format("index ({}, {}) out of range for {}", r, c, shape_string(shape())));
  return node_->data[r * nc + c];
}

double Tensor::item() const {
  if (size() != 1) fail(fmt::format("item() needs a single element, got {}", shape_string(shape())));
  return node_->data[0];
}

bool Tensor::requires_grad() const { return node_ && node_->requires_grad; }
bool Tensor::is_leaf() const { return node_ && node_->inputs.empty(); }
const char* Tensor::op_name() const { return node_ ? node_->op : "undefined"; }

void Tensor::zero_grad() {
  if (node_) std::fill(node_->grad.begin(), node_->grad.end(), 0.0);
}

Tensor Tensor::clone() const { return from(shape(), node_->data, requires_grad()); }

// ---------------------------------------------------------------------------
// Backward

namespace {

struct BackwardFault {
  std::string op;
  double factor = 1.0;
};

BackwardFault& backward_fault() {
  static BackwardFault fault;
  return fault;
}

}  // namespace

namespace testing {

void set_backward_fault(const std::string& op, double factor) { backward_fault() = {op, factor}; }
void clear_backward_fault() { backward_fault() = {}; }

}  // namespace testing

void backward(const Tensor& loss) {
  if (!loss.defined()) fail("backward() on undefined tensor");
  if (loss.size() != 1) {
    fail(fmt::format("backward() needs a scalar loss, got {}", shape_string(loss.shape())));
  }
  if (!loss.requires_grad()) return;

  // Iterative post-order DFS gives a topological order (inputs before outputs).
  std::vector<detail::Node*> order;
  std::unordered_set<detail::Node*> visited;
  std::vector<std::pair<detail::Node*, std::size_t>> stack;
  stack.emplace_back(loss.node().get(), 0);
  visited.insert(loss.node().get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->inputs.size()) {
      detail::Node* child = node->inputs[next++].get();
      if (child->requires_grad && visited.insert(child).second) stack.emplace_back(child, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  for (auto* node : order) {
    if (!node->inputs.empty()) node->grad.assign(node->data.size(), 0.0);
  }
  loss.node()->grad[0] += 1.0;
  const auto& fault = backward_fault();
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    if (!(*it)->backward_fn) continue;
    if (!fault.op.empty() && fault.op == (*it)->op) {
      for (auto& g : (*it)->grad) g *= fault.factor;
    }
    (*it)->backward_fn(**it);
  }
}

// ---------------------------------------------------------------------------
// Linear algebra

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_matrix(a, "matmul", "lhs");
  require_matrix(b, "matmul", "rhs");
  const auto n = a.rows(), k = a.cols(), m = b.cols();
  if (b.rows() != k) {
    fail(fmt::format("matmul: inner dimensions differ: {} vs {}", shape_string(a.shape()),
                     shape_string(b.shape())));
  }
  std::vector<double> out(n * m, 0.0);
  const auto A = a.data();
  const auto B = b.data();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t p = 0; p < k; ++p) {
      const double av = A[i * k + p];
      for (std::size_t j = 0; j < m; ++j) out[i * m + j] += av * B[p * m + j];
    }
  return make_result("matmul", {n, m}, std::move(out), {a, b}, [n, k, m](detail::Node& self) {
    const auto& ga = self.grad;
    auto& an = *self.inputs[0];
    auto& bn = *self.inputs[1];
    if (wants_grad(self.inputs[0])) {
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t p = 0; p < k; ++p) {
          double acc = 0.0;
          for (std::size_t j = 0; j < m; ++j) acc += ga[i * m + j] * bn.data[p * m + j];
          an.grad[i * k + p] += acc;
        }
    }
    if (wants_grad(self.inputs[1])) {
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t p = 0; p < k; ++p) {
          const double av = an.data[i * k + p];
          for (std::size_t j = 0; j < m; ++j) bn.grad[p * m + j] += av * ga[i * m + j];
        }
    }
  });
}

Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias) {
  require_matrix(x, "linear", "input");
  require_matrix(weight, "linear", "weight");
  const auto n = x.rows(), in = x.cols(), out_w = weight.rows();
  if (weight.cols() != in) {
    fail(fmt::format("linear: input {} does not match weight {}", shape_string(x.shape()),
                     shape_string(weight.shape())));
  }
  const bool has_bias = bias.defined();
  if (has_bias) require_vector(bias, out_w, "linear", "bias");

  std::vector<double> out(n * out_w, 0.0);
  const auto X = x.data();
  const auto W = weight.data();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < out_w; ++j) {
      double acc = has_bias ? bias.data()[j] : 0.0;
      for (std::size_t p = 0; p < in; ++p) acc += X[i * in + p] * W[j * in + p];
      out[i * out_w + j] = acc;
    }
  std::vector<Tensor> inputs{x, weight};
  if (has_bias) inputs.push_back(bias);
  return make_result("linear", {n, out_w}, std::move(out), std::move(inputs),
                     [n, in, out_w, has_bias](detail::Node& self) {
                       const auto& gy = self.grad;
                       auto& xn = *self.inputs[0];
                       auto& wn = *self.inputs[1];
                       if (wants_grad(self.inputs[0])) {
                         for (std::size_t i = 0; i < n; ++i)
                           for (std::size_t j = 0; j < out_w; ++j) {
                             const double g = gy[i * out_w + j];
                             if (g == 0.0) continue;
                             for (std::size_t p = 0; p < in; ++p) xn.grad[i * in + p] += g * wn.data[j * in + p];
                           }
                       }
                       if (wants_grad(self.inputs[1])) {
                         for (std::size_t i = 0; i < n; ++i)
                           for (std::size_t j = 0; j < out_w; ++j) {
                             const double g = gy[i * out_w + j];
                             if (g == 0.0) continue;
                             for (std::size_t p = 0; p < in; ++p) wn.grad[j * in + p] += g * xn.data[i * in + p];
                           }
                       }
                       if (has_bias && wants_grad(self.inputs[2])) {
                         auto& bn = *self.inputs[2];
                         for (std::size_t i = 0; i < n; ++i)
                           for (std::size_t j = 0; j < out_w; ++j) bn.grad[j] += gy[i * out_w + j];
                       }
                     });
}

Tensor add(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) {
    fail(fmt::format("add: shapes differ: {} vs {}", shape_string(a.shape()), shape_string(b.shape())));
  }
  std::vector<double> out(a.size());
  const auto A = a.data();
  const auto B = b.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = A[i] + B[i];
  return make_result("add", a.shape(), std::move(out), {a, b}, [](detail::Node& self) {
    for (auto& in : self.inputs) {
      if (!wants_grad(in)) continue;
      for (std::size_t i = 0; i < self.grad.size(); ++i) in->grad[i] += self.grad[i];
    }
  });
}

Tensor scale(const Tensor& x, double factor) {
  std::vector<double> out(x.data().begin(), x.data().end());
  for (auto& v : out) v *= factor;
  return make_result("scale", x.shape(), std::move(out), {x}, [factor](detail::Node& self) {
    auto& xn = *self.inputs[0];
    for (std::size_t i = 0; i < self.grad.size(); ++i) xn.grad[i] += factor * self.grad[i];
  });
}

Tensor sum(const Tensor& x) {
  const auto X = x.data();
  const double total = std::accumulate(X.begin(), X.end(), 0.0);
  return make_result("sum", {1}, {total}, {x}, [](detail::Node& self) {
    auto& xn = *self.inputs[0];
    for (auto& g : xn.grad) g += self.grad[0];
  });
}

// ---------------------------------------------------------------------------
// Shape manipulation

Tensor concat_cols(const std::vector<Tensor>& parts) {
  if (parts.empty()) fail("concat_cols: no inputs");
  const auto n = parts.front().rows();
  std::vector<std::size_t> widths;
  std::size_t total = 0;
  for (const auto& p : parts) {
    require_matrix(p, "concat_cols", "part");
    if (p.rows() != n) fail(fmt::format("concat_cols: row counts differ ({} vs {})", p.rows(), n));
    widths.push_back(p.cols());
    total += p.cols();
  }
  std::vector<double> out(n * total);
  std::size_t offset = 0;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const auto P = parts[k].data();
    for (std::size_t i = 0; i < n; ++i)
      std::copy_n(P.begin() + i * widths[k], widths[k], out.begin() + i * total + offset);
    offset += widths[k];
  }
  return make_result("concat_cols", {n, total}, std::move(out), parts,
                     [n, total, widths](detail::Node& self) {
                       std::size_t off = 0;
                       for (std::size_t k = 0; k < widths.size(); ++k) {
                         if (wants_grad(self.inputs[k])) {
                           auto& g = self.inputs[k]->grad;
                           for (std::size_t i = 0; i < n; ++i)
                             for (std::size_t j = 0; j < widths[k]; ++j)
                               g[i * widths[k] + j] += self.grad[i * total + off + j];
                         }
                         off += widths[k];
                       }
                     });
}

Tensor concat_rows(const std::vector<Tensor>& parts) {
  if (parts.empty()) fail("concat_rows: no inputs");
  const auto m = parts.front().cols();
  std::vector<std::size_t> sizes;
  std::vector<double> out;
  std::size_t rows = 0;
  for (const auto& p : parts) {
    require_matrix(p, "concat_rows", "part");
    if (p.cols() != m) fail(fmt::format("concat_rows: column counts differ ({} vs {})", p.cols(), m));
    out.insert(out.end(), p.data().begin(), p.data().end());
    sizes.push_back(p.size());
    rows += p.rows();
  }
  return make_result("concat_rows", {rows, m}, std::move(out), parts, [sizes](detail::Node& self) {
    std::size_t off = 0;
    for (std::size_t k = 0; k < sizes.size(); ++k) {
      if (wants_grad(self.inputs[k])) {
        auto& g = self.inputs[k]->grad;
        for (std::size_t i = 0; i < sizes[k]; ++i) g[i] += self.grad[off + i];
      }
      off += sizes[k];
    }
  });
}

Tensor gather_rows(const Tensor& x, std::span<const std::size_t> rows) {
  require_matrix(x, "gather_rows", "input");
  if (rows.empty()) fail("gather_rows: empty index list");
  const auto n = x.rows(), m = x.cols();
  std::vector<double> out(rows.size() * m);
  const auto X = x.data();
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r] >= n) fail(fmt::format("gather_rows: row {} out of range for {}", rows[r], shape_string(x.shape())));
    std::copy_n(X.begin() + rows[r] * m, m, out.begin() + r * m);
  }
  std::vector<std::size_t> idx(rows.begin(), rows.end());
  return make_result("gather_rows", {rows.size(), m}, std::move(out), {x},
                     [idx = std::move(idx), m](detail::Node& self) {
                       auto& g = self.inputs[0]->grad;
                       for (std::size_t r = 0; r < idx.size(); ++r)
                         for (std::size_t j = 0; j < m; ++j) g[idx[r] * m + j] += self.grad[r * m + j];
                     });
}

Tensor slice_cols(const Tensor& x, std::size_t begin, std::size_t count) {
  require_matrix(x, "slice_cols", "input");
  const auto n = x.rows(), m = x.cols();
  if (count == 0 || begin + count > m) {
    fail(fmt::format("slice_cols: [{}, {}) out of range for {}", begin, begin + count, shape_string(x.shape())));
  }
  std::vector<double> out(n * count);
  const auto X = x.data();
  for (std::size_t i = 0; i < n; ++i) std::copy_n(X.begin() + i * m + begin, count, out.begin() + i * count);
  return make_result("slice_cols", {n, count}, std::move(out), {x}, [n, m, begin, count](detail::Node& self) {
    auto& g = self.inputs[0]->grad;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < count; ++j) g[i * m + begin + j] += self.grad[i * count + j];
  });
}

// ---------------------------------------------------------------------------
// Normalization and losses

Tensor softmax_rows(const Tensor& x) {
  require_matrix(x, "softmax_rows", "input");
  const auto n = x.rows(), k = x.cols();
  const auto X = x.data();
  std::vector<double> out(n * k);
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = X.subspan(i * k, k);
    if (!std::all_of(row.begin(), row.end(), [](double v) { return std::isfinite(v); })) {
      throw Error(kModule, fmt::format("softmax_rows: row {} contains a non-finite value", i));
    }
    const double mx = *std::max_element(row.begin(), row.end());
    double z = 0.0;
    for (std::size_t j = 0; j < k; ++j) z += out[i * k + j] = std::exp(row[j] - mx);
    for (std::size_t j = 0; j < k; ++j) out[i * k + j] /= z;
  }
  return make_result("softmax_rows", {n, k}, std::move(out), {x}, [n, k](detail::Node& self) {
    auto& g = self.inputs[0]->grad;
    for (std::size_t i = 0; i < n; ++i) {
      double dot = 0.0;
      for (std::size_t j = 0; j < k; ++j) dot += self.grad[i * k + j] * self.data[i * k + j];
      for (std::size_t j = 0; j < k; ++j) g[i * k + j] += self.data[i * k + j] * (self.grad[i * k + j] - dot);
    }
  });
}

Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias, double eps) {
  require_matrix(x, "layer_norm", "input");
  const auto n = x.rows(), d = x.cols();
  require_vector(gain, d, "layer_norm", "gain");
  require_vector(bias, d, "layer_norm", "bias");
  if (!(eps > 0.0)) fail("layer_norm: eps must be positive");

  const auto X = x.data();
  const auto G = gain.data();
  const auto B = bias.data();
  std::vector<double> out(n * d), normalized(n * d), inv_std(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = X.subspan(i * d, d);
    const double mean = std::accumulate(row.begin(), row.end(), 0.0) / static_cast<double>(d);
    double var = 0.0;
    for (double v : row) var += (v - mean) * (v - mean);
    var /= static_cast<double>(d);
    inv_std[i] = 1.0 / std::sqrt(var + eps);
    for (std::size_t j = 0; j < d; ++j) {
      normalized[i * d + j] = (row[j] - mean) * inv_std[i];
      out[i * d + j] = G[j] * normalized[i * d + j] + B[j];
    }
  }
  return make_result(
      "layer_norm", {n, d}, std::move(out), {x, gain, bias},
      [n, d, normalized = std::move(normalized), inv_std = std::move(inv_std)](detail::Node& self) {
        auto& xn = *self.inputs[0];
        auto& gn = *self.inputs[1];
        auto& bn = *self.inputs[2];
        const auto& gy = self.grad;
        if (wants_grad(self.inputs[1]))
          for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < d; ++j) gn.grad[j] += gy[i * d + j] * normalized[i * d + j];
        if (wants_grad(self.inputs[2]))
          for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < d; ++j) bn.grad[j] += gy[i * d + j];
        if (wants_grad(self.inputs[0])) {
          const double dd = static_cast<double>(d);
          for (std::size_t i = 0; i < n; ++i) {
            double sum_g = 0.0, sum_gx = 0.0;
            for (std::size_t j = 0; j < d; ++j) {
              const double gxhat = gy[i * d + j] * gn.data[j];
              sum_g += gxhat;
              sum_gx += gxhat * normalized[i * d + j];
            }
            for (std::size_t j = 0; j < d; ++j) {
              const double gxhat = gy[i * d + j] * gn.data[j];
              xn.grad[i * d + j] += inv_std[i] / dd * (dd * gxhat - sum_g - normalized[i * d + j] * sum_gx);
            }
          }
        }
      });
}

Tensor weighted_cross_entropy(const Tensor& probs, std::span<const std::size_t> gold, const Tensor& weights) {
  require_matrix(probs, "weighted_cross_entropy", "probs");
  const auto n = probs.rows(), k = probs.cols();
  require_vector(weights, k, "weighted_cross_entropy", "weights");
  if (gold.size() != n) fail(fmt::format("weighted_cross_entropy: {} gold labels for {} rows", gold.size(), n));
  const auto P = probs.data();
  const auto W = weights.data();
  double loss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (gold[i] >= k) {
      fail(fmt::format("weighted_cross_entropy: gold index {} out of range for {} classes (row {})", gold[i], k, i));
    }
    loss -= W[gold[i]] * std::log(P[i * k + gold[i]]);
  }
  std::vector<std::size_t> labels(gold.begin(), gold.end());
  return make_result("weighted_cross_entropy", {1}, {loss}, {probs, weights},
                     [labels = std::move(labels), k](detail::Node& self) {
                       auto& pn = *self.inputs[0];
                       auto& wn = *self.inputs[1];
                       const double g = self.grad[0];
                       for (std::size_t i = 0; i < labels.size(); ++i) {
                         const auto idx = i * k + labels[i];
                         if (wants_grad(self.inputs[0])) pn.grad[idx] -= g * wn.data[labels[i]] / pn.data[idx];
                         if (wants_grad(self.inputs[1])) wn.grad[labels[i]] -= g * std::log(pn.data[idx]);
                       }
                     });
}

// ---------------------------------------------------------------------------
// Attention

AttentionResult segment_attention(const Tensor& queries, const Tensor& keys, const Tensor& values,
                                  const std::vector<std::vector<std::size_t>>& keys_per_query,
                                  double scale_factor) {
  require_matrix(queries, "segment_attention", "queries");
  require_matrix(keys, "segment_attention", "keys");
  require_matrix(values, "segment_attention", "values");
  const auto nq = queries.rows(), dk = queries.cols(), nk = keys.rows(), dv = values.cols();
  if (keys.cols() != dk) fail("segment_attention: query and key widths differ");
  if (values.rows() != nk) fail("segment_attention: key and value counts differ");
  if (keys_per_query.size() != nq) {
    fail(fmt::format("segment_attention: {} key lists for {} queries", keys_per_query.size(), nq));
  }

  const auto Q = queries.data();
  const auto K = keys.data();
  const auto V = values.data();
  std::vector<std::vector<double>> weights(nq);
  std::vector<double> out(nq * dv, 0.0);
  for (std::size_t i = 0; i < nq; ++i) {
    const auto& seg = keys_per_query[i];
    if (seg.empty()) fail(fmt::format("segment_attention: query {} has no keys", i));
    std::vector<std::size_t> sorted(seg);
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
      fail(fmt::format("segment_attention: query {} lists a key more than once", i));
    }
    if (sorted.back() >= nk) fail(fmt::format("segment_attention: key {} out of range", sorted.back()));

    auto& w = weights[i];
    w.resize(seg.size());
    for (std::size_t a = 0; a < seg.size(); ++a) {
      double dot = 0.0;
      for (std::size_t c = 0; c < dk; ++c) dot += Q[i * dk + c] * K[seg[a] * dk + c];
      w[a] = dot * scale_factor;
    }
    const double mx = *std::max_element(w.begin(), w.end());
    if (!std::isfinite(mx)) throw Error(kModule, fmt::format("segment_attention: non-finite score for query {}", i));
    double z = 0.0;
    for (auto& v : w) z += v = std::exp(v - mx);
    for (auto& v : w) v /= z;
    for (std::size_t a = 0; a < seg.size(); ++a)
      for (std::size_t c = 0; c < dv; ++c) out[i * dv + c] += w[a] * V[seg[a] * dv + c];
  }

  auto shared_weights = std::make_shared<const std::vector<std::vector<double>>>(weights);
  auto output = make_result(
      "segment_attention", {nq, dv}, std::move(out), {queries, keys, values},
      [segs = keys_per_query, shared_weights, dk, dv, scale_factor](detail::Node& self) {
        auto& qn = *self.inputs[0];
        auto& kn = *self.inputs[1];
        auto& vn = *self.inputs[2];
        const bool gq = wants_grad(self.inputs[0]);
        const bool gk = wants_grad(self.inputs[1]);
        const bool gv = wants_grad(self.inputs[2]);
        std::vector<double> dw;
        for (std::size_t i = 0; i < segs.size(); ++i) {
          const auto& seg = segs[i];
          const auto& w = (*shared_weights)[i];
          const double* go = &self.grad[i * dv];
          dw.assign(seg.size(), 0.0);
          double weighted = 0.0;
          for (std::size_t a = 0; a < seg.size(); ++a) {
            for (std::size_t c = 0; c < dv; ++c) {
              dw[a] += go[c] * vn.data[seg[a] * dv + c];
              if (gv) vn.grad[seg[a] * dv + c] += w[a] * go[c];
            }
            weighted += w[a] * dw[a];
          }
          for (std::size_t a = 0; a < seg.size(); ++a) {
            const double ds = w[a] * (dw[a] - weighted) * scale_factor;
            for (std::size_t c = 0; c < dk; ++c) {
              if (gq) qn.grad[i * dk + c] += ds * kn.data[seg[a] * dk + c];
              if (gk) kn.grad[seg[a] * dk + c] += ds * qn.data[i * dk + c];
            }
          }
        }
      });
  return {std::move(output), std::move(weights)};
}

}  // namespace sgt
