#pragma once

#include "hzcert/tensor.hpp"

namespace hzcert {

// Per-variable bounds, each [B,p].
struct Interval {
  Tensor lower, upper;
};

// Abstract element <center, uncorrelated radius, correlated coefficients>
// over p variables with m shared error terms, batched over B examples.
// Tensors are stored flattened: center/beta [B,p], errors [m,B,p] (undefined
// when m == 0). var_shape records the logical per-example shape (e.g. C,H,W).
class HybridZonotope {
 public:
  HybridZonotope() = default;
  HybridZonotope(Tensor center, Tensor beta, Tensor errors, Shape var_shape);

  // Box abstraction: center (l+u)/2, radius (u-l)/2, m = 0. l,u are [B,p...].
  static HybridZonotope from_box(const Tensor& l, const Tensor& u);
  // Degenerate element (zero error) around a point.
  static HybridZonotope from_point(const Tensor& x);

  bool defined() const { return center_.defined(); }
  std::size_t batch() const { return center_.dim(0); }
  std::size_t vars() const { return center_.size() / batch(); }
  std::size_t terms() const { return errors_.defined() ? errors_.dim(0) : 0; }
  const Shape& var_shape() const { return var_shape_; }

  const Tensor& center() const { return center_; }
  const Tensor& beta() const { return beta_; }
  const Tensor& errors() const { return errors_; }  // undefined when m == 0

  HybridZonotope with_var_shape(Shape vs) const;

  // eps_i = beta_i + sum_j |E_ij|; differentiable.
  Tensor total_error() const;
  Interval concretize() const;

  // h^(beta, e) for one sample per example: bs [B,p], es [B,m] (es may be
  // empty when m == 0). Values only (no tape). Throws on out-of-range samples.
  Tensor evaluate_point(const Tensor& bs, const Tensor& es) const;

  bool all_finite() const;

 private:
  Tensor center_, beta_, errors_;
  Shape var_shape_;
};

// h' = W h + b with W [q,p], b [q] (optional): center affinely, correlated
// coefficients by W per term, uncorrelated radius by |W|.
HybridZonotope affine_transform(const HybridZonotope& h, const Tensor& W, const Tensor& b = {});

// Same rule in convolution form; |W| realized by convolving with |kernel|.
HybridZonotope conv_transform(const HybridZonotope& h, const Tensor& kernel, const Tensor& bias,
                              std::size_t stride, std::size_t padding);

// Sound ReLU. Per variable with bounds [l,u]: dead -> 0, active -> identity,
// crossing (m > 0) -> minimal-area relaxation lambda = u/(u-l), mu = -lambda*l/2
// with the new noise folded into the uncorrelated radius. For m == 0 the exact
// interval ReLU is used.
HybridZonotope relu_transform(const HybridZonotope& h);

// Componentwise sum; shorter error axis is zero-padded. Exact when both
// operands share error-term meaning, sound otherwise.
HybridZonotope add_transform(const HybridZonotope& h1, const HybridZonotope& h2);

// Sum of two elements that both evolved from a common ancestor with
// `shared_terms` error terms: the first `shared_terms` columns are added,
// terms introduced past that point are kept disjoint.
HybridZonotope add_transform_shared(const HybridZonotope& h1, const HybridZonotope& h2,
                                    std::size_t shared_terms);

}  // namespace hzcert
