#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "hzcert/tensor.hpp"

namespace testutil {

inline double rel_err(double a, double b) {
  double scale = std::max({std::abs(a), std::abs(b), 1.0});
  return std::abs(a - b) / scale;
}

// Central finite-difference check of d f / d params against backward().
// f must rebuild its graph from the current parameter values on every call.
inline double max_grad_rel_err(std::vector<hzcert::Tensor> params,
                               const std::function<hzcert::Tensor()>& f, double step = 1e-5) {
  hzcert::Tensor loss = f();
  for (auto& p : params) p.zero_grad();
  loss.backward();
  std::vector<std::vector<double>> analytic;
  for (auto& p : params) {
    auto g = p.grad();
    analytic.emplace_back(g.begin(), g.end());
  }
  double worst = 0.0;
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    auto data = params[pi].mutable_data();
    for (std::size_t i = 0; i < data.size(); ++i) {
      double saved = data[i];
      data[i] = saved + step;
      double up = f().item();
      data[i] = saved - step;
      double down = f().item();
      data[i] = saved;
      double numeric = (up - down) / (2 * step);
      worst = std::max(worst, rel_err(analytic[pi][i], numeric));
    }
  }
  return worst;
}

inline std::vector<double> random_vec(hzcert::RngStream& rng, std::size_t n, double lo = -1,
                                      double hi = 1) {
  std::vector<double> v(n);
  for (auto& x : v) x = rng.uniform(lo, hi);
  return v;
}

}  // namespace testutil
