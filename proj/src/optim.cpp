#include "hzcert/optim.hpp"

#include <cmath>

namespace hzcert {

namespace {

void check_grads_finite(const std::vector<Tensor>& params) {
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto g = params[i].grad();
    if (g.size() != params[i].size())
      throw ValueError("optimizer: parameter " + std::to_string(i) + " has no gradient");
    for (double x : g)
      if (!std::isfinite(x))
        throw ValueError("optimizer: non-finite gradient in parameter " + std::to_string(i) +
                         "; step aborted");
  }
}

}  // namespace

void adam_step(std::vector<Tensor>& params, AdamState& state, double lr, double beta1,
               double beta2, double eps) {
  check_grads_finite(params);
  if (state.m.empty()) {
    state.m.resize(params.size());
    state.v.resize(params.size());
    for (std::size_t i = 0; i < params.size(); ++i) {
      state.m[i].assign(params[i].size(), 0.0);
      state.v[i].assign(params[i].size(), 0.0);
    }
  }
  ++state.step;
  double bc1 = 1.0 - std::pow(beta1, static_cast<double>(state.step));
  double bc2 = 1.0 - std::pow(beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto g = params[i].grad();
    auto p = params[i].mutable_data();
    auto& m = state.m[i];
    auto& v = state.v[i];
    for (std::size_t j = 0; j < p.size(); ++j) {
      m[j] = beta1 * m[j] + (1.0 - beta1) * g[j];
      v[j] = beta2 * v[j] + (1.0 - beta2) * g[j] * g[j];
      double mhat = m[j] / bc1;
      double vhat = v[j] / bc2;
      p[j] -= lr * mhat / (std::sqrt(vhat) + eps);
    }
  }
}

void sgd_momentum_step(std::vector<Tensor>& params, SgdState& state, double lr, double momentum,
                       double weight_decay) {
  check_grads_finite(params);
  if (state.velocity.empty()) {
    state.velocity.resize(params.size());
    for (std::size_t i = 0; i < params.size(); ++i)
      state.velocity[i].assign(params[i].size(), 0.0);
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto g = params[i].grad();
    auto p = params[i].mutable_data();
    auto& vel = state.velocity[i];
    for (std::size_t j = 0; j < p.size(); ++j) {
      double grad = g[j] + weight_decay * p[j];
      vel[j] = momentum * vel[j] + grad;
      p[j] -= lr * vel[j];
    }
  }
}

void quantize_params_f32(std::vector<Tensor>& params) {
  for (auto& t : params) {
    auto p = t.mutable_data();
    for (double& x : p) x = static_cast<double>(static_cast<float>(x));
  }
}

void zero_grads(std::vector<Tensor>& params) {
  for (auto& t : params) t.zero_grad();
}

}  // namespace hzcert
