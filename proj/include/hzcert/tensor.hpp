#pragma once

#include <functional>
#include <memory>
#include <span>
#include <utility>
#include <vector>

#include "hzcert/common.hpp"

namespace hzcert {

namespace detail {

// One entry of the computation record. Nodes are created in program order and
// carry a monotonically increasing sequence number; backward() replays the
// reachable subgraph in reverse sequence order, which is a valid reverse
// topological order by construction.
struct TapeNode {
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;  // sized lazily, same length as value
  bool requires_grad = false;
  std::uint64_t seq = 0;
  std::vector<std::shared_ptr<TapeNode>> parents;
  std::function<void(TapeNode&)> backprop;  // pulls this->grad into parents

  void ensure_grad() {
    if (grad.size() != value.size()) grad.assign(value.size(), 0.0);
  }
};

}  // namespace detail

// Dense n-dimensional tensor of doubles with reverse-mode autodiff.
// Copying a Tensor copies a handle to the shared tape node.
class Tensor {
 public:
  Tensor() = default;

  static Tensor from_data(Shape shape, std::vector<double> data,
                          bool requires_grad = false);
  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double v, bool requires_grad = false);
  static Tensor scalar(double v, bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const;
  std::size_t size() const;
  std::size_t dim(std::size_t i) const { return shape().at(i); }

  std::span<const double> data() const;
  std::span<double> mutable_data();  // leaves only (optimizer updates)
  double item() const;               // scalar tensors
  double at(std::size_t i) const { return data()[i]; }

  bool requires_grad() const;
  Tensor& set_requires_grad(bool v);
  std::span<const double> grad() const;  // empty until backward touched it
  void zero_grad();

  // Accumulates gradients into every requires_grad leaf reachable from this
  // scalar. Repeated calls accumulate additively.
  void backward() const;

  // Same values, cut from the tape.
  Tensor detach() const;

  std::shared_ptr<detail::TapeNode> node() const { return node_; }

 private:
  explicit Tensor(std::shared_ptr<detail::TapeNode> n) : node_(std::move(n)) {}
  std::shared_ptr<detail::TapeNode> node_;

  friend Tensor make_tensor_op(Shape, std::vector<double>, std::vector<Tensor>,
                               std::function<void(std::span<const double>,
                                                  std::span<double*>)>);
};

// Building block for all differentiable operations. `backward` receives the
// output gradient and one writable gradient buffer per input (nullptr when
// that input does not require grad); it must accumulate, not overwrite.
Tensor make_tensor_op(
    Shape out_shape, std::vector<double> out_value, std::vector<Tensor> inputs,
    std::function<void(std::span<const double> out_grad,
                       std::span<double*> input_grads)>
        backward);

// Scoped switch that makes all ops produce constants (no tape growth).
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool prev_;
};
bool grad_enabled();
bool set_grad_enabled(bool v);  // returns the previous mode

// ---- elementwise ----
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor div(const Tensor& a, const Tensor& b);
Tensor add(const Tensor& a, double c);
Tensor mul(const Tensor& a, double c);
Tensor neg(const Tensor& a);
Tensor abs(const Tensor& a);
Tensor relu(const Tensor& a);
// Subgradient convention for ties: routed to `a`.
Tensor maximum(const Tensor& a, const Tensor& b);
Tensor minimum(const Tensor& a, const Tensor& b);

// ---- linear algebra ----
Tensor matmul(const Tensor& a, const Tensor& b);  // [n,k] x [k,m]
// x:[N,in], weight:[out,in], bias:[out] (optional) -> [N,out]
Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias = {});
// x:[N,Cin,H,W], kernel:[Cout,Cin,K,K], bias:[Cout] (optional).
// Cross-correlation, realized as im2col + matmul.
Tensor conv2d(const Tensor& x, const Tensor& kernel, const Tensor& bias,
              std::size_t stride, std::size_t padding);

// ---- reductions / structure ----
Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);
Tensor reshape(const Tensor& a, Shape shape);
// t:[m,rest...] -> [rest...]
Tensor sum_axis0(const Tensor& t);
// t:[m,rest...] * f:[rest...] broadcast over the leading axis
Tensor broadcast_mul_axis0(const Tensor& t, const Tensor& f);
// inputs [mi,rest...] stacked along axis 0
Tensor concat_axis0(const std::vector<Tensor>& parts);
// select slices of the leading axis
Tensor take_axis0(const Tensor& t, const std::vector<std::size_t>& idx);
Tensor gather(const Tensor& x, const std::vector<std::size_t>& idx);  // 1-D

// ---- nn primitives ----
// logits:[N,k]; mean over rows of -log softmax(logits)[target], max-stabilized.
Tensor softmax_cross_entropy(const Tensor& logits, const std::vector<int>& targets);
// x:[n]; descending values plus the permutation (perm[r] = source index of
// rank r). Ties broken by lowest source index. Gradient routes through perm.
std::pair<Tensor, std::vector<std::size_t>> sort_desc(const Tensor& x);
Tensor maxpool1d(const Tensor& x, std::size_t k, std::size_t stride);
inline Tensor maxpool1d(const Tensor& x, std::size_t k) { return maxpool1d(x, k, k); }

}  // namespace hzcert
