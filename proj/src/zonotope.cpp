#include "hzcert/zonotope.hpp"

#include <cmath>

namespace hzcert {

HybridZonotope::HybridZonotope(Tensor center, Tensor beta, Tensor errors, Shape var_shape)
    : center_(std::move(center)),
      beta_(std::move(beta)),
      errors_(std::move(errors)),
      var_shape_(std::move(var_shape)) {
  if (center_.shape() != beta_.shape())
    throw ShapeError("hzono: center/beta shape mismatch");
  for (double b : beta_.data())
    if (b < 0) throw ValueError("hzono: uncorrelated radius must be nonnegative");
  if (errors_.defined()) {
    if (errors_.shape().size() != 3 || errors_.dim(1) != center_.dim(0) ||
        errors_.dim(2) != center_.dim(1))
      throw ShapeError("hzono: errors must be [m,B,p] matching center " +
                       shape_str(center_.shape()) + ", got " + shape_str(errors_.shape()));
  }
}

HybridZonotope HybridZonotope::from_box(const Tensor& l, const Tensor& u) {
  if (l.shape() != u.shape()) throw ShapeError("from_box: bound shape mismatch");
  if (l.shape().empty() || l.dim(0) == 0) throw ShapeError("from_box: need [B,...] bounds");
  auto dl = l.data();
  auto du = u.data();
  for (std::size_t i = 0; i < dl.size(); ++i)
    if (dl[i] > du[i]) throw ValueError("from_box: lower bound exceeds upper bound");
  Shape vs(l.shape().begin() + 1, l.shape().end());
  Shape fs = {l.dim(0), shape_numel(vs)};
  Tensor lf = reshape(l, fs), uf = reshape(u, fs);
  Tensor c = mul(add(lf, uf), 0.5);
  Tensor b = mul(sub(uf, lf), 0.5);
  return HybridZonotope(std::move(c), std::move(b), Tensor(), std::move(vs));
}

HybridZonotope HybridZonotope::from_point(const Tensor& x) { return from_box(x, x); }

HybridZonotope HybridZonotope::with_var_shape(Shape vs) const {
  if (shape_numel(vs) != vars())
    throw ShapeError("hzono: cannot view " + std::to_string(vars()) + " vars as " + shape_str(vs));
  return HybridZonotope(center_, beta_, errors_, std::move(vs));
}

Tensor HybridZonotope::total_error() const {
  if (!errors_.defined()) return beta_;
  return add(beta_, sum_axis0(abs(errors_)));
}

Interval HybridZonotope::concretize() const {
  Tensor eps = total_error();
  return {sub(center_, eps), add(center_, eps)};
}

Tensor HybridZonotope::evaluate_point(const Tensor& bs, const Tensor& es) const {
  std::size_t B = batch(), p = vars(), m = terms();
  if (bs.size() != B * p)
    throw ShapeError("evaluate_point: beta sample must be [B,p]");
  if (m > 0 && (!es.defined() || es.shape().size() != 2 || es.dim(0) != B || es.dim(1) != m))
    throw ShapeError("evaluate_point: error sample must be [B,m]");
  for (double x : bs.data())
    if (x < -1.0 || x > 1.0) throw ValueError("evaluate_point: beta outside [-1,1]");
  if (m > 0)
    for (double x : es.data())
      if (x < -1.0 || x > 1.0) throw ValueError("evaluate_point: e outside [-1,1]");

  std::vector<double> out(B * p);
  auto dc = center_.data();
  auto db = beta_.data();
  auto dbs = bs.data();
  for (std::size_t i = 0; i < B * p; ++i) out[i] = dc[i] + db[i] * dbs[i];
  if (m > 0) {
    auto de = errors_.data();
    auto des = es.data();
    for (std::size_t j = 0; j < m; ++j)
      for (std::size_t b = 0; b < B; ++b) {
        double e = des[b * m + j];
        for (std::size_t i = 0; i < p; ++i) out[b * p + i] += de[(j * B + b) * p + i] * e;
      }
  }
  Shape os{B};
  os.insert(os.end(), var_shape_.begin(), var_shape_.end());
  return Tensor::from_data(std::move(os), std::move(out));
}

bool HybridZonotope::all_finite() const {
  auto ok = [](const Tensor& t) {
    if (!t.defined()) return true;
    for (double x : t.data())
      if (!std::isfinite(x)) return false;
    return true;
  };
  return ok(center_) && ok(beta_) && ok(errors_);
}

HybridZonotope affine_transform(const HybridZonotope& h, const Tensor& W, const Tensor& b) {
  std::size_t B = h.batch(), p = h.vars(), m = h.terms();
  if (W.shape().size() != 2 || W.dim(1) != p)
    throw ShapeError("affine_transform: W " + shape_str(W.shape()) + " does not match p=" +
                     std::to_string(p));
  std::size_t q = W.dim(0);
  Tensor c = linear(h.center(), W, b);
  Tensor beta = linear(h.beta(), abs(W));
  Tensor errors;
  if (m > 0) {
    Tensor flat = reshape(h.errors(), {m * B, p});
    errors = reshape(linear(flat, W), {m, B, q});
  }
  return HybridZonotope(std::move(c), std::move(beta), std::move(errors), {q});
}

HybridZonotope conv_transform(const HybridZonotope& h, const Tensor& kernel, const Tensor& bias,
                              std::size_t stride, std::size_t padding) {
  std::size_t B = h.batch(), m = h.terms();
  const Shape& vs = h.var_shape();
  if (vs.size() != 3)
    throw ShapeError("conv_transform: element vars must be [C,H,W], got " + shape_str(vs));
  Shape in{B, vs[0], vs[1], vs[2]};
  Tensor c = conv2d(reshape(h.center(), in), kernel, bias, stride, padding);
  Tensor beta = conv2d(reshape(h.beta(), in), abs(kernel), {}, stride, padding);
  Shape out_vs(c.shape().begin() + 1, c.shape().end());
  std::size_t q = shape_numel(out_vs);
  Tensor errors;
  if (m > 0) {
    Shape ein{m * B, vs[0], vs[1], vs[2]};
    errors = reshape(conv2d(reshape(h.errors(), ein), kernel, {}, stride, padding), {m, B, q});
  }
  return HybridZonotope(reshape(c, {B, q}), reshape(beta, {B, q}), std::move(errors),
                        std::move(out_vs));
}

HybridZonotope relu_transform(const HybridZonotope& h) {
  std::size_t m = h.terms();
  Interval iv = h.concretize();
  if (m == 0) {
    Tensor rl = relu(iv.lower), ru = relu(iv.upper);
    Tensor c = mul(add(rl, ru), 0.5);
    Tensor b = mul(sub(ru, rl), 0.5);
    return HybridZonotope(std::move(c), std::move(b), Tensor(), h.var_shape());
  }
  // Piecewise masks are constants; lambda and mu stay differentiable in l,u.
  auto dl = iv.lower.data();
  auto du = iv.upper.data();
  std::size_t n = dl.size();
  std::vector<double> active(n), cross(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (dl[i] >= 0) {
      active[i] = 1.0;
    } else if (du[i] > 0) {
      cross[i] = 1.0;
    }
  }
  Tensor ma = Tensor::from_data(iv.lower.shape(), std::move(active));
  Tensor mc = Tensor::from_data(iv.lower.shape(), std::move(cross));
  // denom = u-l where crossing (there strictly positive), 1 elsewhere
  Tensor denom = add(mul(sub(iv.upper, iv.lower), mc), add(neg(mc), 1.0));
  Tensor lambda = div(mul(iv.upper, mc), denom);
  Tensor mu = mul(mul(lambda, neg(iv.lower)), 0.5);
  Tensor factor = add(lambda, ma);
  Tensor c = add(mul(h.center(), factor), mu);
  Tensor b = add(mul(h.beta(), factor), mu);
  Tensor errors = broadcast_mul_axis0(h.errors(), factor);
  return HybridZonotope(std::move(c), std::move(b), std::move(errors), h.var_shape());
}

HybridZonotope add_transform(const HybridZonotope& h1, const HybridZonotope& h2) {
  return add_transform_shared(h1, h2, std::min(h1.terms(), h2.terms()));
}

HybridZonotope add_transform_shared(const HybridZonotope& h1, const HybridZonotope& h2,
                                    std::size_t shared_terms) {
  if (h1.batch() != h2.batch() || h1.vars() != h2.vars())
    throw ShapeError("add_transform: operand dimensions differ (" +
                     std::to_string(h1.vars()) + " vs " + std::to_string(h2.vars()) + " vars)");
  std::size_t B = h1.batch(), p = h1.vars();
  std::size_t m1 = h1.terms(), m2 = h2.terms();
  if (shared_terms > m1 || shared_terms > m2)
    throw ValueError("add_transform: shared term count exceeds an operand's terms");
  Tensor c = add(h1.center(), h2.center());
  Tensor b = add(h1.beta(), h2.beta());
  Tensor errors;
  std::size_t s = shared_terms;
  if (m1 + m2 - s > 0) {
    // layout: [shared | h1-only | h2-only]
    std::vector<Tensor> parts;
    if (s > 0) {
      std::vector<std::size_t> idx(s);
      for (std::size_t i = 0; i < s; ++i) idx[i] = i;
      parts.push_back(add(take_axis0(h1.errors(), idx), take_axis0(h2.errors(), idx)));
    }
    if (m1 > s) {
      std::vector<std::size_t> idx(m1 - s);
      for (std::size_t i = 0; i < m1 - s; ++i) idx[i] = s + i;
      parts.push_back(take_axis0(h1.errors(), idx));
    }
    if (m2 > s) parts.push_back(Tensor::zeros({m2 - s, B, p}));
    Tensor left = parts.size() == 1 ? parts[0] : concat_axis0(parts);

    std::vector<Tensor> rparts;
    if (m2 > s) {
      // zeros in the shared+h1-only block, then h2's own terms
      if (s + (m1 - s) > 0) rparts.push_back(Tensor::zeros({m1, B, p}));
      std::vector<std::size_t> idx(m2 - s);
      for (std::size_t i = 0; i < m2 - s; ++i) idx[i] = s + i;
      rparts.push_back(take_axis0(h2.errors(), idx));
      Tensor right = rparts.size() == 1 ? rparts[0] : concat_axis0(rparts);
      errors = add(left, right);
    } else {
      errors = left;
    }
  }
  return HybridZonotope(std::move(c), std::move(b), std::move(errors), h1.var_shape());
}

}  // namespace hzcert
