#pragma once

// Dense double-precision tensors with a recorded computation graph for
// reverse-mode differentiation.
//
// A Tensor is a cheap handle; copies share storage. Leaf tensors created with
// requires_grad=true are parameters: their grad buffer persists and
// accumulates across backward() calls until zero_grad() is called. Tensors
// produced by operations record their inputs only when at least one input
// requires a gradient, so computations over constants build no graph.

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace sgt {

using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& shape);
std::string shape_string(const Shape& shape);

namespace detail {

struct Node {
  Shape shape;
  std::vector<double> data;
  std::vector<double> grad;  // empty unless requires_grad
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> inputs;
  std::function<void(Node&)> backward_fn;  // reads this->grad, accumulates into inputs
  const char* op = "leaf";
};

}  // namespace detail

class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor from(Shape shape, std::vector<double> data, bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);
  /// Row vector [1 x n].
  static Tensor row(std::vector<double> values, bool requires_grad = false);

  bool defined() const noexcept { return node_ != nullptr; }
  const Shape& shape() const;
  std::size_t rank() const { return shape().size(); }
  std::size_t size() const;
  /// Rows/cols of a rank-1 or rank-2 tensor; a rank-1 tensor reads as one row.
  std::size_t rows() const;
  std::size_t cols() const;

  std::span<const double> data() const;
  /// Writable view of a leaf's storage. Throws for operation outputs.
  std::span<double> mutable_data();
  std::span<const double> grad() const;
  std::span<double> mutable_grad();

  double at(std::size_t r, std::size_t c) const;
  double item() const;

  bool requires_grad() const;
  bool is_leaf() const;
  const char* op_name() const;
  void zero_grad();

  /// Deep copy of data into a fresh leaf (no graph, same requires_grad).
  Tensor clone() const;

  bool same_node(const Tensor& other) const noexcept { return node_ == other.node_; }

  // Internal: used by operation implementations.
  explicit Tensor(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}
  const std::shared_ptr<detail::Node>& node() const { return node_; }

 private:
  std::shared_ptr<detail::Node> node_;
};

/// Backpropagate from a scalar loss. Parameter (leaf) grads accumulate; grads
/// of intermediate tensors are reset at the start of each call.
void backward(const Tensor& loss);

namespace testing {

/// Scales the incoming gradient of every node produced by operation `op`
/// before its backward step, to verify that gradient checks catch faults.
void set_backward_fault(const std::string& op, double factor);
void clear_backward_fault();

}  // namespace testing

// ---------------------------------------------------------------------------
// Operations. Matrices are rank-2 [rows x cols]; biases and gains are rank-1.

Tensor matmul(const Tensor& a, const Tensor& b);
/// x W^T + b for x [n x in], W [out x in], optional b [out].
Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias = Tensor());
Tensor add(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& x, double factor);
Tensor sum(const Tensor& x);
Tensor concat_cols(const std::vector<Tensor>& parts);
Tensor concat_rows(const std::vector<Tensor>& parts);
Tensor gather_rows(const Tensor& x, std::span<const std::size_t> rows);
Tensor slice_cols(const Tensor& x, std::size_t begin, std::size_t count);

Tensor softmax_rows(const Tensor& x);
Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias, double eps);

/// -sum_i weights[gold_i] * log(probs[i, gold_i]) as a [1] tensor.
Tensor weighted_cross_entropy(const Tensor& probs, std::span<const std::size_t> gold,
                              const Tensor& weights);

struct AttentionResult {
  Tensor output;                              // [queries x value width]
  std::vector<std::vector<double>> weights;   // per query, aligned to its key list
};

/// Scaled dot-product attention where query i attends only to the keys listed
/// in keys_per_query[i]. Each list must be nonempty and duplicate-free.
AttentionResult segment_attention(const Tensor& queries, const Tensor& keys, const Tensor& values,
                                  const std::vector<std::vector<std::size_t>>& keys_per_query,
                                  double scale);

}  // namespace sgt
