#pragma once

#include <vector>

#include "hzcert/tensor.hpp"

namespace hzcert {

struct AdamState {
  std::vector<std::vector<double>> m, v;
  std::size_t step = 0;
};

struct SgdState {
  std::vector<std::vector<double>> velocity;
};

// Standard Adam with bias correction. Reads gradients from params[i].grad();
// throws ValueError on any non-finite gradient without touching the params.
void adam_step(std::vector<Tensor>& params, AdamState& state, double lr, double beta1 = 0.9,
               double beta2 = 0.999, double eps = 1e-8);

// SGD with momentum; weight_decay adds wd * param to the gradient (equivalent
// to an L2 term in the loss, not decoupled decay).
void sgd_momentum_step(std::vector<Tensor>& params, SgdState& state, double lr, double momentum,
                       double weight_decay = 0.0);

// Rounds parameter values through 32-bit floats so that the f32 on-disk
// checkpoint format reproduces them bit-exactly on reload.
void quantize_params_f32(std::vector<Tensor>& params);

void zero_grads(std::vector<Tensor>& params);

}  // namespace hzcert
