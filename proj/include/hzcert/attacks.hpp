#pragma once

#include <vector>

#include "hzcert/network.hpp"

namespace hzcert {

// Iterated FGSM over the box [l,u] ([B,p] each): start at the box center, take
// k signed-gradient steps of (u-l)/k, clamping to the box after each. Returns
// a constant tensor (no tape); parameter gradients are left untouched.
Tensor ifgsm(const NetworkIR& net, const Tensor& l, const Tensor& u,
             const std::vector<int>& targets, std::size_t k);

// Momentum-iterated FGSM within the eps-ball around x intersected with the
// data range [lo,hi]. Gradient accumulator is L1-normalized per step.
Tensor mifgsm(const NetworkIR& net, const Tensor& x, const std::vector<int>& targets, double eps,
              double mu, std::size_t iters, double step, double lo, double hi);

struct AttackConfig {
  std::size_t iterations = 20;
  double momentum = 0.8;
  double step = 0.0031373;
};

}  // namespace hzcert
