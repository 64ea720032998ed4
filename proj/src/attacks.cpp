#include "hzcert/attacks.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace hzcert {

namespace {

// Attack backprop must not leak into the parameter gradients the trainer is
// accumulating, and must work even under NoGradGuard.
class AttackScope {
 public:
  explicit AttackScope(const NetworkIR& net) : net_(net), prev_(set_grad_enabled(true)) {
    saved_.reserve(net.params.size());
    for (const auto& p : net.params) saved_.push_back(p.node()->grad);
  }
  ~AttackScope() {
    for (std::size_t i = 0; i < saved_.size(); ++i) net_.params[i].node()->grad = saved_[i];
    set_grad_enabled(prev_);
  }

 private:
  const NetworkIR& net_;
  bool prev_;
  std::vector<std::vector<double>> saved_;
};

// Gradient of the mean cross-entropy at point x; empty on non-finite values.
std::vector<double> input_gradient(const NetworkIR& net, const std::vector<double>& x,
                                   const Shape& shape, const std::vector<int>& targets) {
  Tensor xt = Tensor::from_data(shape, x, true);
  Tensor loss = softmax_cross_entropy(net.concrete_forward(xt), targets);
  if (!std::isfinite(loss.item())) return {};
  loss.backward();
  auto g = xt.grad();
  std::vector<double> out(g.begin(), g.end());
  for (double v : out)
    if (!std::isfinite(v)) return {};
  return out;
}

}  // namespace

Tensor ifgsm(const NetworkIR& net, const Tensor& l, const Tensor& u,
             const std::vector<int>& targets, std::size_t k) {
  if (l.shape() != u.shape()) throw ShapeError("ifgsm: bound shape mismatch");
  if (k == 0) throw ValueError("ifgsm: k must be positive");
  auto dl = l.data();
  auto du = u.data();
  std::size_t n = dl.size();
  for (std::size_t i = 0; i < n; ++i)
    if (dl[i] > du[i]) throw ValueError("ifgsm: lower bound exceeds upper bound");

  std::vector<double> x(n), step(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = 0.5 * (dl[i] + du[i]);
    step[i] = (du[i] - dl[i]) / static_cast<double>(k);
  }
  AttackScope scope(net);
  for (std::size_t it = 0; it < k; ++it) {
    std::vector<double> g = input_gradient(net, x, l.shape(), targets);
    if (g.empty()) {
      std::fprintf(stderr, "warning: ifgsm: non-finite gradient, stopping early\n");
      break;
    }
    for (std::size_t i = 0; i < n; ++i) {
      double s = g[i] > 0 ? 1.0 : (g[i] < 0 ? -1.0 : 0.0);
      x[i] = std::clamp(x[i] + step[i] * s, dl[i], du[i]);
    }
  }
  NoGradGuard ng;
  return Tensor::from_data(l.shape(), std::move(x));
}

Tensor mifgsm(const NetworkIR& net, const Tensor& x0, const std::vector<int>& targets, double eps,
              double mu, std::size_t iters, double step, double lo, double hi) {
  if (eps < 0) throw ValueError("mifgsm: eps must be nonnegative");
  if (step <= 0) throw ValueError("mifgsm: step must be positive");
  auto dx = x0.data();
  std::size_t n = dx.size();
  std::vector<double> l(n), u(n), x(dx.begin(), dx.end());
  for (std::size_t i = 0; i < n; ++i) {
    l[i] = std::max(dx[i] - eps, lo);
    u[i] = std::min(dx[i] + eps, hi);
    x[i] = std::clamp(x[i], l[i], u[i]);
  }
  if (eps == 0) {
    NoGradGuard ng;
    return Tensor::from_data(x0.shape(), std::move(x));
  }
  std::vector<double> g(n, 0.0);
  AttackScope scope(net);
  for (std::size_t it = 0; it < iters; ++it) {
    std::vector<double> grad = input_gradient(net, x, x0.shape(), targets);
    if (grad.empty()) {
      std::fprintf(stderr, "warning: mifgsm: non-finite gradient, stopping early\n");
      break;
    }
    double l1 = 0.0;
    for (double v : grad) l1 += std::abs(v);
    if (l1 == 0) l1 = 1.0;
    for (std::size_t i = 0; i < n; ++i) g[i] = mu * g[i] + grad[i] / l1;
    for (std::size_t i = 0; i < n; ++i) {
      double s = g[i] > 0 ? 1.0 : (g[i] < 0 ? -1.0 : 0.0);
      x[i] = std::clamp(x[i] + step * s, l[i], u[i]);
    }
  }
  NoGradGuard ng;
  return Tensor::from_data(x0.shape(), std::move(x));
}

}  // namespace hzcert
