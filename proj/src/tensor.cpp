#include "hzcert/tensor.hpp"

#include <algorithm>
#include <atomic>
#include <cblas.h>
#include <cmath>
#include <numeric>
#include <unordered_set>

namespace hzcert {

using detail::TapeNode;

namespace {

std::atomic<std::uint64_t> g_seq{0};
thread_local bool g_grad_enabled = true;

std::shared_ptr<TapeNode> new_node(Shape shape, std::vector<double> value) {
  if (shape_numel(shape) != value.size())
    throw ShapeError("tensor: shape " + shape_str(shape) + " does not match data length " +
                     std::to_string(value.size()));
  auto n = std::make_shared<TapeNode>();
  n->shape = std::move(shape);
  n->value = std::move(value);
  n->seq = ++g_seq;
  return n;
}

void check_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape())
    throw ShapeError(std::string(op) + ": shape mismatch " + shape_str(a.shape()) + " vs " +
                     shape_str(b.shape()));
}

}  // namespace

NoGradGuard::NoGradGuard() : prev_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = prev_; }
bool grad_enabled() { return g_grad_enabled; }
bool set_grad_enabled(bool v) {
  bool prev = g_grad_enabled;
  g_grad_enabled = v;
  return prev;
}

Tensor Tensor::from_data(Shape shape, std::vector<double> data, bool requires_grad) {
  auto n = new_node(std::move(shape), std::move(data));
  n->requires_grad = requires_grad && g_grad_enabled;
  return Tensor(std::move(n));
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  std::size_t n = shape_numel(shape);
  return from_data(std::move(shape), std::vector<double>(n, 0.0), requires_grad);
}

Tensor Tensor::full(Shape shape, double v, bool requires_grad) {
  std::size_t n = shape_numel(shape);
  return from_data(std::move(shape), std::vector<double>(n, v), requires_grad);
}

Tensor Tensor::scalar(double v, bool requires_grad) {
  return from_data({1}, {v}, requires_grad);
}

const Shape& Tensor::shape() const {
  if (!node_) throw ValueError("tensor: undefined");
  return node_->shape;
}

std::size_t Tensor::size() const { return node_ ? node_->value.size() : 0; }

std::span<const double> Tensor::data() const {
  if (!node_) throw ValueError("tensor: undefined");
  return node_->value;
}

std::span<double> Tensor::mutable_data() {
  if (!node_) throw ValueError("tensor: undefined");
  if (node_->backprop)
    throw ValueError("tensor: in-place mutation is only allowed on leaves");
  return node_->value;
}

double Tensor::item() const {
  if (size() != 1) throw ShapeError("tensor: item() requires a scalar, got " + shape_str(shape()));
  return node_->value[0];
}

bool Tensor::requires_grad() const { return node_ && node_->requires_grad; }

Tensor& Tensor::set_requires_grad(bool v) {
  if (!node_) throw ValueError("tensor: undefined");
  if (node_->backprop) throw ValueError("tensor: requires_grad can only be toggled on leaves");
  node_->requires_grad = v;
  return *this;
}

std::span<const double> Tensor::grad() const {
  if (!node_) throw ValueError("tensor: undefined");
  return node_->grad;
}

void Tensor::zero_grad() {
  if (node_) node_->grad.assign(node_->value.size(), 0.0);
}

Tensor Tensor::detach() const {
  if (!node_) return Tensor();
  return from_data(node_->shape, node_->value, false);
}

void Tensor::backward() const {
  if (size() != 1) throw ValueError("backward: loss must be scalar, got " + shape_str(shape()));
  if (!node_->requires_grad) return;

  // Reachable requires_grad subgraph, reverse insertion order.
  std::vector<TapeNode*> order;
  std::unordered_set<TapeNode*> seen;
  std::vector<TapeNode*> stack{node_.get()};
  seen.insert(node_.get());
  while (!stack.empty()) {
    TapeNode* n = stack.back();
    stack.pop_back();
    order.push_back(n);
    for (auto& p : n->parents)
      if (p->requires_grad && seen.insert(p.get()).second) stack.push_back(p.get());
  }
  std::sort(order.begin(), order.end(),
            [](const TapeNode* a, const TapeNode* b) { return a->seq > b->seq; });

  // Interior gradients are scratch for this pass; leaf gradients accumulate
  // across passes.
  for (TapeNode* n : order)
    if (n->backprop) n->grad.assign(n->value.size(), 0.0);
  node_->ensure_grad();
  node_->grad[0] += 1.0;
  for (TapeNode* n : order)
    if (n->backprop) n->backprop(*n);
}

Tensor make_tensor_op(Shape out_shape, std::vector<double> out_value, std::vector<Tensor> inputs,
                      std::function<void(std::span<const double>, std::span<double*>)> backward) {
  auto n = new_node(std::move(out_shape), std::move(out_value));
  bool rg = false;
  if (g_grad_enabled)
    for (const auto& in : inputs)
      if (in.requires_grad()) rg = true;
  n->requires_grad = rg;
  if (rg && backward) {
    for (const auto& in : inputs) n->parents.push_back(in.node());
    n->backprop = [inputs = std::move(inputs),
                   backward = std::move(backward)](TapeNode& self) {
      std::vector<double*> gptrs(inputs.size(), nullptr);
      for (std::size_t i = 0; i < inputs.size(); ++i) {
        if (inputs[i].requires_grad()) {
          inputs[i].node()->ensure_grad();
          gptrs[i] = inputs[i].node()->grad.data();
        }
      }
      backward(self.grad, gptrs);
    };
  }
  return Tensor(std::move(n));
}

// ---------------------------------------------------------------------------
// elementwise
// ---------------------------------------------------------------------------

Tensor add(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "add");
  std::vector<double> v(a.size());
  auto da = a.data(), db = b.data();
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = da[i] + db[i];
  return make_tensor_op(a.shape(), std::move(v), {a, b},
                        [](std::span<const double> g, std::span<double*> gi) {
                          for (std::size_t i = 0; i < g.size(); ++i) {
                            if (gi[0]) gi[0][i] += g[i];
                            if (gi[1]) gi[1][i] += g[i];
                          }
                        });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "sub");
  std::vector<double> v(a.size());
  auto da = a.data(), db = b.data();
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = da[i] - db[i];
  return make_tensor_op(a.shape(), std::move(v), {a, b},
                        [](std::span<const double> g, std::span<double*> gi) {
                          for (std::size_t i = 0; i < g.size(); ++i) {
                            if (gi[0]) gi[0][i] += g[i];
                            if (gi[1]) gi[1][i] -= g[i];
                          }
                        });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "mul");
  std::vector<double> v(a.size());
  auto da = a.data(), db = b.data();
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = da[i] * db[i];
  return make_tensor_op(a.shape(), std::move(v), {a, b},
                        [a, b](std::span<const double> g, std::span<double*> gi) {
                          auto da = a.data(), db = b.data();
                          for (std::size_t i = 0; i < g.size(); ++i) {
                            if (gi[0]) gi[0][i] += g[i] * db[i];
                            if (gi[1]) gi[1][i] += g[i] * da[i];
                          }
                        });
}

Tensor div(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "div");
  std::vector<double> v(a.size());
  auto da = a.data(), db = b.data();
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = da[i] / db[i];
  return make_tensor_op(a.shape(), std::move(v), {a, b},
                        [a, b](std::span<const double> g, std::span<double*> gi) {
                          auto da = a.data(), db = b.data();
                          for (std::size_t i = 0; i < g.size(); ++i) {
                            if (gi[0]) gi[0][i] += g[i] / db[i];
                            if (gi[1]) gi[1][i] -= g[i] * da[i] / (db[i] * db[i]);
                          }
                        });
}

Tensor add(const Tensor& a, double c) {
  std::vector<double> v(a.data().begin(), a.data().end());
  for (double& x : v) x += c;
  return make_tensor_op(a.shape(), std::move(v), {a},
                        [](std::span<const double> g, std::span<double*> gi) {
                          if (gi[0])
                            for (std::size_t i = 0; i < g.size(); ++i) gi[0][i] += g[i];
                        });
}

Tensor mul(const Tensor& a, double c) {
  std::vector<double> v(a.data().begin(), a.data().end());
  for (double& x : v) x *= c;
  return make_tensor_op(a.shape(), std::move(v), {a},
                        [c](std::span<const double> g, std::span<double*> gi) {
                          if (gi[0])
                            for (std::size_t i = 0; i < g.size(); ++i) gi[0][i] += g[i] * c;
                        });
}

Tensor neg(const Tensor& a) { return mul(a, -1.0); }

Tensor abs(const Tensor& a) {
  std::vector<double> v(a.size());
  auto da = a.data();
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = std::abs(da[i]);
  return make_tensor_op(a.shape(), std::move(v), {a},
                        [a](std::span<const double> g, std::span<double*> gi) {
                          if (!gi[0]) return;
                          auto da = a.data();
                          for (std::size_t i = 0; i < g.size(); ++i) {
                            double s = da[i] > 0 ? 1.0 : (da[i] < 0 ? -1.0 : 0.0);
                            gi[0][i] += g[i] * s;
                          }
                        });
}

Tensor relu(const Tensor& a) {
  std::vector<double> v(a.size());
  auto da = a.data();
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = da[i] > 0 ? da[i] : 0.0;
  return make_tensor_op(a.shape(), std::move(v), {a},
                        [a](std::span<const double> g, std::span<double*> gi) {
                          if (!gi[0]) return;
                          auto da = a.data();
                          for (std::size_t i = 0; i < g.size(); ++i)
                            if (da[i] > 0) gi[0][i] += g[i];
                        });
}

Tensor maximum(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "maximum");
  std::vector<double> v(a.size());
  auto da = a.data(), db = b.data();
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = da[i] >= db[i] ? da[i] : db[i];
  return make_tensor_op(a.shape(), std::move(v), {a, b},
                        [a, b](std::span<const double> g, std::span<double*> gi) {
                          auto da = a.data(), db = b.data();
                          for (std::size_t i = 0; i < g.size(); ++i) {
                            if (da[i] >= db[i]) {
                              if (gi[0]) gi[0][i] += g[i];
                            } else if (gi[1]) {
                              gi[1][i] += g[i];
                            }
                          }
                        });
}

Tensor minimum(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "minimum");
  std::vector<double> v(a.size());
  auto da = a.data(), db = b.data();
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = da[i] <= db[i] ? da[i] : db[i];
  return make_tensor_op(a.shape(), std::move(v), {a, b},
                        [a, b](std::span<const double> g, std::span<double*> gi) {
                          auto da = a.data(), db = b.data();
                          for (std::size_t i = 0; i < g.size(); ++i) {
                            if (da[i] <= db[i]) {
                              if (gi[0]) gi[0][i] += g[i];
                            } else if (gi[1]) {
                              gi[1][i] += g[i];
                            }
                          }
                        });
}

// ---------------------------------------------------------------------------
// linear algebra
// ---------------------------------------------------------------------------

namespace {
// C[n,m] (+)= A[n,k] * B[k,m], with optional transposes on logical A/B.
void dgemm(bool ta, bool tb, std::size_t n, std::size_t m, std::size_t k, const double* A,
           const double* B, double* C, double beta) {
  cblas_dgemm(CblasRowMajor, ta ? CblasTrans : CblasNoTrans, tb ? CblasTrans : CblasNoTrans,
              static_cast<int>(n), static_cast<int>(m), static_cast<int>(k), 1.0, A,
              static_cast<int>(ta ? n : k), B, static_cast<int>(tb ? k : m), beta, C,
              static_cast<int>(m));
}
}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.shape().size() != 2 || b.shape().size() != 2 || a.dim(1) != b.dim(0))
    throw ShapeError("matmul: incompatible shapes " + shape_str(a.shape()) + " x " +
                     shape_str(b.shape()));
  std::size_t n = a.dim(0), k = a.dim(1), m = b.dim(1);
  std::vector<double> v(n * m, 0.0);
  dgemm(false, false, n, m, k, a.data().data(), b.data().data(), v.data(), 0.0);
  return make_tensor_op(
      {n, m}, std::move(v), {a, b},
      [a, b, n, k, m](std::span<const double> g, std::span<double*> gi) {
        if (gi[0]) dgemm(false, true, n, k, m, g.data(), b.data().data(), gi[0], 1.0);
        if (gi[1]) dgemm(true, false, k, m, n, a.data().data(), g.data(), gi[1], 1.0);
      });
}

Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias) {
  if (x.shape().size() != 2 || weight.shape().size() != 2 || x.dim(1) != weight.dim(1))
    throw ShapeError("linear: incompatible shapes x=" + shape_str(x.shape()) +
                     " weight=" + shape_str(weight.shape()));
  std::size_t n = x.dim(0), in = x.dim(1), out = weight.dim(0);
  if (bias.defined() && (bias.shape().size() != 1 || bias.dim(0) != out))
    throw ShapeError("linear: bias shape " + shape_str(bias.shape()) + " does not match out=" +
                     std::to_string(out));
  std::vector<double> v(n * out, 0.0);
  dgemm(false, true, n, out, in, x.data().data(), weight.data().data(), v.data(), 0.0);
  if (bias.defined()) {
    auto bb = bias.data();
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t c = 0; c < out; ++c) v[r * out + c] += bb[c];
  }
  std::vector<Tensor> inputs{x, weight};
  if (bias.defined()) inputs.push_back(bias);
  return make_tensor_op(
      {n, out}, std::move(v), std::move(inputs),
      [x, weight, n, in, out](std::span<const double> g, std::span<double*> gi) {
        if (gi[0]) dgemm(false, false, n, in, out, g.data(), weight.data().data(), gi[0], 1.0);
        if (gi[1]) dgemm(true, false, out, in, n, g.data(), x.data().data(), gi[1], 1.0);
        if (gi.size() > 2 && gi[2]) {
          for (std::size_t r = 0; r < n; ++r)
            for (std::size_t c = 0; c < out; ++c) gi[2][c] += g[r * out + c];
        }
      });
}

namespace {

struct ConvDims {
  std::size_t N, Cin, H, W, Cout, K, stride, pad, Ho, Wo;
};

// col: [Cin*K*K, Ho*Wo]
void im2col(const double* x, const ConvDims& d, double* col) {
  std::size_t idx = 0;
  for (std::size_t c = 0; c < d.Cin; ++c)
    for (std::size_t ky = 0; ky < d.K; ++ky)
      for (std::size_t kx = 0; kx < d.K; ++kx)
        for (std::size_t oy = 0; oy < d.Ho; ++oy)
          for (std::size_t ox = 0; ox < d.Wo; ++ox) {
            std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * d.stride + ky) -
                                static_cast<std::ptrdiff_t>(d.pad);
            std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox * d.stride + kx) -
                                static_cast<std::ptrdiff_t>(d.pad);
            double val = 0.0;
            if (iy >= 0 && ix >= 0 && iy < static_cast<std::ptrdiff_t>(d.H) &&
                ix < static_cast<std::ptrdiff_t>(d.W))
              val = x[(c * d.H + static_cast<std::size_t>(iy)) * d.W + static_cast<std::size_t>(ix)];
            col[idx++] = val;
          }
}

void col2im_add(const double* col, const ConvDims& d, double* gx) {
  std::size_t idx = 0;
  for (std::size_t c = 0; c < d.Cin; ++c)
    for (std::size_t ky = 0; ky < d.K; ++ky)
      for (std::size_t kx = 0; kx < d.K; ++kx)
        for (std::size_t oy = 0; oy < d.Ho; ++oy)
          for (std::size_t ox = 0; ox < d.Wo; ++ox) {
            std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * d.stride + ky) -
                                static_cast<std::ptrdiff_t>(d.pad);
            std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox * d.stride + kx) -
                                static_cast<std::ptrdiff_t>(d.pad);
            if (iy >= 0 && ix >= 0 && iy < static_cast<std::ptrdiff_t>(d.H) &&
                ix < static_cast<std::ptrdiff_t>(d.W))
              gx[(c * d.H + static_cast<std::size_t>(iy)) * d.W + static_cast<std::size_t>(ix)] +=
                  col[idx];
            ++idx;
          }
}

}  // namespace

Tensor conv2d(const Tensor& x, const Tensor& kernel, const Tensor& bias, std::size_t stride,
              std::size_t padding) {
  if (x.shape().size() != 4 || kernel.shape().size() != 4)
    throw ShapeError("conv2d: expected x [N,Cin,H,W] and kernel [Cout,Cin,K,K], got " +
                     shape_str(x.shape()) + " and " + shape_str(kernel.shape()));
  ConvDims d{x.dim(0), x.dim(1), x.dim(2), x.dim(3),
             kernel.dim(0), kernel.dim(2), stride, padding, 0, 0};
  if (kernel.dim(1) != d.Cin)
    throw ShapeError("conv2d: kernel input channels " + std::to_string(kernel.dim(1)) +
                     " do not match input channels " + std::to_string(d.Cin));
  if (kernel.dim(2) != kernel.dim(3)) throw ShapeError("conv2d: kernel must be square");
  if (stride == 0) throw ValueError("conv2d: stride must be positive");
  std::size_t hp = d.H + 2 * padding, wp = d.W + 2 * padding;
  if (hp < d.K || wp < d.K || (hp - d.K) % stride != 0 || (wp - d.K) % stride != 0)
    throw ValueError("conv2d: output size is not a positive integer for input " +
                     shape_str(x.shape()) + ", k=" + std::to_string(d.K) + ", s=" +
                     std::to_string(stride) + ", p=" + std::to_string(padding));
  d.Ho = (hp - d.K) / stride + 1;
  d.Wo = (wp - d.K) / stride + 1;
  if (bias.defined() && (bias.shape().size() != 1 || bias.dim(0) != d.Cout))
    throw ShapeError("conv2d: bias shape " + shape_str(bias.shape()) + " does not match Cout");

  std::size_t ckk = d.Cin * d.K * d.K, ohw = d.Ho * d.Wo;
  std::vector<double> v(d.N * d.Cout * ohw, 0.0);
  std::vector<double> col(ckk * ohw);
  auto dx = x.data();
  auto bb = bias.defined() ? bias.data() : std::span<const double>();
  for (std::size_t n = 0; n < d.N; ++n) {
    im2col(dx.data() + n * d.Cin * d.H * d.W, d, col.data());
    double* out = v.data() + n * d.Cout * ohw;
    dgemm(false, false, d.Cout, ohw, ckk, kernel.data().data(), col.data(), out, 0.0);
    if (bias.defined())
      for (std::size_t c = 0; c < d.Cout; ++c)
        for (std::size_t i = 0; i < ohw; ++i) out[c * ohw + i] += bb[c];
  }
  std::vector<Tensor> inputs{x, kernel};
  if (bias.defined()) inputs.push_back(bias);
  return make_tensor_op(
      {d.N, d.Cout, d.Ho, d.Wo}, std::move(v), std::move(inputs),
      [x, kernel, d, ckk, ohw](std::span<const double> g, std::span<double*> gi) {
        std::vector<double> col(ckk * ohw);
        auto dx = x.data();
        for (std::size_t n = 0; n < d.N; ++n) {
          const double* gn = g.data() + n * d.Cout * ohw;
          if (gi[1]) {
            im2col(dx.data() + n * d.Cin * d.H * d.W, d, col.data());
            dgemm(false, true, d.Cout, ckk, ohw, gn, col.data(), gi[1], 1.0);
          }
          if (gi[0]) {
            dgemm(true, false, ckk, ohw, d.Cout, kernel.data().data(), gn, col.data(), 0.0);
            col2im_add(col.data(), d, gi[0] + n * d.Cin * d.H * d.W);
          }
          if (gi.size() > 2 && gi[2]) {
            for (std::size_t c = 0; c < d.Cout; ++c)
              for (std::size_t i = 0; i < ohw; ++i) gi[2][c] += gn[c * ohw + i];
          }
        }
      });
}

// ---------------------------------------------------------------------------
// reductions / structure
// ---------------------------------------------------------------------------

Tensor sum(const Tensor& a) {
  double s = 0.0;
  for (double x : a.data()) s += x;
  std::size_t n = a.size();
  return make_tensor_op({1}, {s}, {a},
                        [n](std::span<const double> g, std::span<double*> gi) {
                          if (!gi[0]) return;
                          for (std::size_t i = 0; i < n; ++i) gi[0][i] += g[0];
                        });
}

Tensor mean(const Tensor& a) { return mul(sum(a), 1.0 / static_cast<double>(a.size())); }

Tensor reshape(const Tensor& a, Shape shape) {
  if (shape_numel(shape) != a.size())
    throw ShapeError("reshape: cannot view " + shape_str(a.shape()) + " as " + shape_str(shape));
  std::vector<double> v(a.data().begin(), a.data().end());
  return make_tensor_op(std::move(shape), std::move(v), {a},
                        [](std::span<const double> g, std::span<double*> gi) {
                          if (gi[0])
                            for (std::size_t i = 0; i < g.size(); ++i) gi[0][i] += g[i];
                        });
}

Tensor sum_axis0(const Tensor& t) {
  if (t.shape().empty() || t.shape().size() < 2)
    throw ShapeError("sum_axis0: need rank >= 2, got " + shape_str(t.shape()));
  std::size_t m = t.dim(0), rest = t.size() / m;
  Shape out_shape(t.shape().begin() + 1, t.shape().end());
  std::vector<double> v(rest, 0.0);
  auto dt = t.data();
  for (std::size_t j = 0; j < m; ++j)
    for (std::size_t r = 0; r < rest; ++r) v[r] += dt[j * rest + r];
  return make_tensor_op(std::move(out_shape), std::move(v), {t},
                        [m, rest](std::span<const double> g, std::span<double*> gi) {
                          if (!gi[0]) return;
                          for (std::size_t j = 0; j < m; ++j)
                            for (std::size_t r = 0; r < rest; ++r) gi[0][j * rest + r] += g[r];
                        });
}

Tensor broadcast_mul_axis0(const Tensor& t, const Tensor& f) {
  if (t.shape().size() < 2)
    throw ShapeError("broadcast_mul_axis0: need rank >= 2, got " + shape_str(t.shape()));
  std::size_t m = t.dim(0), rest = t.size() / m;
  if (f.size() != rest)
    throw ShapeError("broadcast_mul_axis0: factor " + shape_str(f.shape()) +
                     " does not match trailing shape of " + shape_str(t.shape()));
  std::vector<double> v(t.size());
  auto dt = t.data();
  auto df = f.data();
  for (std::size_t j = 0; j < m; ++j)
    for (std::size_t r = 0; r < rest; ++r) v[j * rest + r] = dt[j * rest + r] * df[r];
  return make_tensor_op(t.shape(), std::move(v), {t, f},
                        [t, f, m, rest](std::span<const double> g, std::span<double*> gi) {
                          auto dt = t.data();
                          auto df = f.data();
                          for (std::size_t j = 0; j < m; ++j)
                            for (std::size_t r = 0; r < rest; ++r) {
                              if (gi[0]) gi[0][j * rest + r] += g[j * rest + r] * df[r];
                              if (gi[1]) gi[1][r] += g[j * rest + r] * dt[j * rest + r];
                            }
                        });
}

Tensor concat_axis0(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw ValueError("concat_axis0: empty input list");
  Shape trailing(parts[0].shape().begin() + 1, parts[0].shape().end());
  std::size_t m = 0;
  for (const auto& p : parts) {
    Shape t(p.shape().begin() + 1, p.shape().end());
    if (t != trailing)
      throw ShapeError("concat_axis0: trailing shape mismatch " + shape_str(p.shape()));
    m += p.dim(0);
  }
  std::size_t rest = shape_numel(trailing);
  Shape out_shape{m};
  out_shape.insert(out_shape.end(), trailing.begin(), trailing.end());
  std::vector<double> v;
  v.reserve(m * rest);
  for (const auto& p : parts) v.insert(v.end(), p.data().begin(), p.data().end());
  return make_tensor_op(std::move(out_shape), std::move(v), parts,
                        [sizes = [&] {
                           std::vector<std::size_t> s;
                           for (const auto& p : parts) s.push_back(p.size());
                           return s;
                         }()](std::span<const double> g, std::span<double*> gi) {
                          std::size_t off = 0;
                          for (std::size_t p = 0; p < sizes.size(); ++p) {
                            if (gi[p])
                              for (std::size_t i = 0; i < sizes[p]; ++i) gi[p][i] += g[off + i];
                            off += sizes[p];
                          }
                        });
}

Tensor take_axis0(const Tensor& t, const std::vector<std::size_t>& idx) {
  if (t.shape().empty()) throw ShapeError("take_axis0: need rank >= 1");
  std::size_t m = t.dim(0), rest = t.size() / std::max<std::size_t>(m, 1);
  for (std::size_t i : idx)
    if (i >= m) throw ValueError("take_axis0: index " + std::to_string(i) + " out of range");
  Shape out_shape = t.shape();
  out_shape[0] = idx.size();
  std::vector<double> v(idx.size() * rest);
  auto dt = t.data();
  for (std::size_t r = 0; r < idx.size(); ++r)
    std::copy(dt.begin() + idx[r] * rest, dt.begin() + (idx[r] + 1) * rest, v.begin() + r * rest);
  return make_tensor_op(std::move(out_shape), std::move(v), {t},
                        [idx, rest](std::span<const double> g, std::span<double*> gi) {
                          if (!gi[0]) return;
                          for (std::size_t r = 0; r < idx.size(); ++r)
                            for (std::size_t i = 0; i < rest; ++i)
                              gi[0][idx[r] * rest + i] += g[r * rest + i];
                        });
}

Tensor gather(const Tensor& x, const std::vector<std::size_t>& idx) {
  if (x.shape().size() != 1) throw ShapeError("gather: need rank-1, got " + shape_str(x.shape()));
  std::vector<double> v(idx.size());
  auto dx = x.data();
  for (std::size_t i = 0; i < idx.size(); ++i) {
    if (idx[i] >= dx.size()) throw ValueError("gather: index out of range");
    v[i] = dx[idx[i]];
  }
  return make_tensor_op({idx.size()}, std::move(v), {x},
                        [idx](std::span<const double> g, std::span<double*> gi) {
                          if (!gi[0]) return;
                          for (std::size_t i = 0; i < idx.size(); ++i) gi[0][idx[i]] += g[i];
                        });
}

// ---------------------------------------------------------------------------
// nn primitives
// ---------------------------------------------------------------------------

Tensor softmax_cross_entropy(const Tensor& logits, const std::vector<int>& targets) {
  if (logits.shape().size() != 2)
    throw ShapeError("softmax_cross_entropy: logits must be [N,k], got " +
                     shape_str(logits.shape()));
  std::size_t n = logits.dim(0), k = logits.dim(1);
  if (k < 2) throw ShapeError("softmax_cross_entropy: need k >= 2 classes");
  if (targets.size() != n)
    throw ShapeError("softmax_cross_entropy: " + std::to_string(targets.size()) +
                     " targets for " + std::to_string(n) + " rows");
  for (int t : targets)
    if (t < 0 || static_cast<std::size_t>(t) >= k)
      throw ValueError("softmax_cross_entropy: target " + std::to_string(t) + " out of [0," +
                       std::to_string(k) + ")");
  auto dl = logits.data();
  double loss = 0.0;
  for (std::size_t r = 0; r < n; ++r) {
    const double* z = dl.data() + r * k;
    double m = *std::max_element(z, z + k);
    double lse = 0.0;
    for (std::size_t c = 0; c < k; ++c) lse += std::exp(z[c] - m);
    lse = m + std::log(lse);
    loss += lse - z[targets[r]];
  }
  loss /= static_cast<double>(n);
  return make_tensor_op(
      {1}, {loss}, {logits},
      [logits, targets, n, k](std::span<const double> g, std::span<double*> gi) {
        if (!gi[0]) return;
        auto dl = logits.data();
        double scale = g[0] / static_cast<double>(n);
        for (std::size_t r = 0; r < n; ++r) {
          const double* z = dl.data() + r * k;
          double m = *std::max_element(z, z + k);
          double denom = 0.0;
          for (std::size_t c = 0; c < k; ++c) denom += std::exp(z[c] - m);
          for (std::size_t c = 0; c < k; ++c) {
            double p = std::exp(z[c] - m) / denom;
            gi[0][r * k + c] += scale * (p - (static_cast<std::size_t>(targets[r]) == c ? 1.0 : 0.0));
          }
        }
      });
}

std::pair<Tensor, std::vector<std::size_t>> sort_desc(const Tensor& x) {
  if (x.shape().size() != 1 || x.size() == 0)
    throw ShapeError("sort_desc: need non-empty rank-1 tensor");
  std::size_t n = x.size();
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  auto dx = x.data();
  std::stable_sort(perm.begin(), perm.end(),
                   [&](std::size_t a, std::size_t b) { return dx[a] > dx[b]; });
  Tensor values = gather(x, perm);
  return {values, perm};
}

Tensor maxpool1d(const Tensor& x, std::size_t k, std::size_t stride) {
  if (x.shape().size() != 1) throw ShapeError("maxpool1d: need rank-1 tensor");
  std::size_t n = x.size();
  if (k == 0 || stride == 0) throw ValueError("maxpool1d: k and stride must be positive");
  if (k > n)
    throw ValueError("maxpool1d: window " + std::to_string(k) + " exceeds length " +
                     std::to_string(n));
  std::size_t windows = (n - k) / stride + 1;
  std::vector<double> v(windows);
  std::vector<std::size_t> arg(windows);
  auto dx = x.data();
  for (std::size_t w = 0; w < windows; ++w) {
    std::size_t best = w * stride;
    for (std::size_t i = 1; i < k; ++i)
      if (dx[w * stride + i] > dx[best]) best = w * stride + i;
    v[w] = dx[best];
    arg[w] = best;
  }
  return make_tensor_op({windows}, std::move(v), {x},
                        [arg](std::span<const double> g, std::span<double*> gi) {
                          if (!gi[0]) return;
                          for (std::size_t w = 0; w < arg.size(); ++w) gi[0][arg[w]] += g[w];
                        });
}

}  // namespace hzcert
