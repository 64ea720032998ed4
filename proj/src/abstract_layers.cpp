#include "hzcert/abstract_layers.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace hzcert {

namespace {

IndexSets replicate(const std::vector<std::size_t>& one, std::size_t batch) {
  return IndexSets(batch, one);
}

void check_sets(const IndexSets& sets, std::size_t batch, std::size_t limit, const char* what) {
  if (sets.size() != batch)
    throw ValueError(std::string(what) + ": expected one index set per example");
  for (const auto& s : sets) {
    for (std::size_t i = 0; i + 1 < s.size(); ++i) {
      if (s[i] >= s[i + 1])
        throw ValueError(std::string(what) + ": indices must be strictly increasing (duplicates?)");
    }
    if (!s.empty() && s.back() >= limit)
      throw ValueError(std::string(what) + ": index " + std::to_string(s.back()) +
                       " out of range [0," + std::to_string(limit) + ")");
  }
}

// Indices of the k largest values, ties broken toward the lowest index;
// returned in ascending index order.
std::vector<std::size_t> top_k_indices(const double* v, std::size_t n, std::size_t k) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] > v[b]; });
  idx.resize(k);
  std::sort(idx.begin(), idx.end());
  return idx;
}

}  // namespace

IndexSets select_correlation_indices(const CorrelationStrategy& strategy, const HybridZonotope& h,
                                     bool is_first_layer) {
  std::size_t B = h.batch(), p = h.vars();
  switch (strategy.kind) {
    case CorrelationKind::All: {
      std::vector<std::size_t> all(p);
      std::iota(all.begin(), all.end(), 0);
      return replicate(all, B);
    }
    case CorrelationKind::Fixed: {
      if (strategy.k == 0 || strategy.k > p)
        throw ValueError("correlate_fixed: k=" + std::to_string(strategy.k) +
                         " out of range for p=" + std::to_string(p));
      std::vector<std::size_t> idx(strategy.k);
      for (std::size_t i = 0; i < strategy.k; ++i) idx[i] = i * p / strategy.k;
      return replicate(idx, B);
    }
    case CorrelationKind::Max: {
      if (strategy.k == 0 || strategy.k > p)
        throw ValueError("correlate_max: k=" + std::to_string(strategy.k) +
                         " out of range for p=" + std::to_string(p));
      Interval iv = h.concretize();
      auto ub = iv.upper.data();
      IndexSets sets(B);
      for (std::size_t b = 0; b < B; ++b)
        sets[b] = top_k_indices(ub.data() + b * p, p, strategy.k);
      return sets;
    }
    case CorrelationKind::MaxPool: {
      const Shape& vs = h.var_shape();
      if (vs.size() != 3)
        throw ShapeError("correlate_maxpool: element must have [C,H,W] vars, got " +
                         shape_str(vs));
      std::size_t C = vs[0], H = vs[1], W = vs[2];
      std::size_t kc = strategy.pc, kh = strategy.ph, kw = strategy.pw, s = strategy.stride;
      if (kc == 0 || kh == 0 || kw == 0 || s == 0 || kc > C || kh > H || kw > W)
        throw ValueError("correlate_maxpool: kernel does not fit element shape " + shape_str(vs));
      const Tensor& stat = is_first_layer ? h.center() : h.beta();
      auto f = stat.data();
      IndexSets sets(B);
      for (std::size_t b = 0; b < B; ++b) {
        std::vector<std::size_t> picked;
        for (std::size_t zc = 0; zc + kc <= C; zc += s)
          for (std::size_t zy = 0; zy + kh <= H; zy += s)
            for (std::size_t zx = 0; zx + kw <= W; zx += s) {
              std::size_t best = (zc * H + zy) * W + zx;
              for (std::size_t dc = 0; dc < kc; ++dc)
                for (std::size_t dy = 0; dy < kh; ++dy)
                  for (std::size_t dx = 0; dx < kw; ++dx) {
                    std::size_t i = ((zc + dc) * H + (zy + dy)) * W + (zx + dx);
                    if (f[b * C * H * W + i] > f[b * C * H * W + best]) best = i;
                  }
              picked.push_back(best);
            }
        std::sort(picked.begin(), picked.end());
        picked.erase(std::unique(picked.begin(), picked.end()), picked.end());
        sets[b] = std::move(picked);
      }
      return sets;
    }
  }
  throw ValueError("correlate: unknown strategy");
}

HybridZonotope correlate(const HybridZonotope& h, const std::vector<std::size_t>& indices) {
  return correlate(h, replicate(indices, h.batch()));
}

HybridZonotope correlate(const HybridZonotope& h, const IndexSets& sets) {
  std::size_t B = h.batch(), p = h.vars();
  check_sets(sets, B, p, "correlate");
  std::size_t k = 0;
  for (const auto& s : sets) k = std::max(k, s.size());

  // Mask keeps the uncorrelated radius of unselected dimensions.
  std::vector<double> mask(B * p, 1.0);
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t i : sets[b]) mask[b * p + i] = 0.0;
  Tensor beta2 = mul(h.beta(), Tensor::from_data({B, p}, std::move(mask)));

  Tensor errors2 = h.errors();
  if (k > 0) {
    // New columns: column t of example b carries the radius of sets[b][t].
    const Tensor& beta = h.beta();
    std::vector<double> cols(k * B * p, 0.0);
    auto db = beta.data();
    for (std::size_t b = 0; b < B; ++b)
      for (std::size_t t = 0; t < sets[b].size(); ++t) {
        std::size_t i = sets[b][t];
        cols[(t * B + b) * p + i] = db[b * p + i];
      }
    Tensor new_cols = make_tensor_op(
        {k, B, p}, std::move(cols), {beta},
        [sets, B, p](std::span<const double> g, std::span<double*> gi) {
          if (!gi[0]) return;
          for (std::size_t b = 0; b < B; ++b)
            for (std::size_t t = 0; t < sets[b].size(); ++t) {
              std::size_t i = sets[b][t];
              gi[0][b * p + i] += g[(t * B + b) * p + i];
            }
        });
    errors2 = errors2.defined() ? concat_axis0({errors2, new_cols}) : new_cols;
  }
  return HybridZonotope(h.center(), std::move(beta2), std::move(errors2), h.var_shape());
}

IndexSets select_decorrelation_removals(const HybridZonotope& h, std::size_t k) {
  std::size_t B = h.batch(), p = h.vars(), m = h.terms();
  if (k > m)
    throw ValueError("decorrelate_min: k=" + std::to_string(k) + " exceeds m=" +
                     std::to_string(m));
  IndexSets sets(B);
  if (m == 0) return sets;
  auto de = h.errors().data();
  for (std::size_t b = 0; b < B; ++b) {
    std::vector<double> sums(m, 0.0);
    for (std::size_t j = 0; j < m; ++j)
      for (std::size_t i = 0; i < p; ++i) sums[j] += std::abs(de[(j * B + b) * p + i]);
    std::vector<std::size_t> idx(m);
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(),
                     [&](std::size_t a, std::size_t c) { return sums[a] < sums[c]; });
    idx.resize(m - k);
    std::sort(idx.begin(), idx.end());
    sets[b] = std::move(idx);
  }
  return sets;
}

HybridZonotope decorrelate(const HybridZonotope& h, const std::vector<std::size_t>& removals) {
  return decorrelate(h, replicate(removals, h.batch()));
}

HybridZonotope decorrelate(const HybridZonotope& h, const IndexSets& removals) {
  std::size_t B = h.batch(), p = h.vars(), m = h.terms();
  check_sets(removals, B, m, "decorrelate");
  if (m == 0) return h;
  std::size_t r = removals[0].size();
  for (const auto& s : removals)
    if (s.size() != r) throw ValueError("decorrelate: removal sets must have equal size");

  IndexSets kept(B);
  for (std::size_t b = 0; b < B; ++b) {
    std::vector<bool> gone(m, false);
    for (std::size_t j : removals[b]) gone[j] = true;
    for (std::size_t j = 0; j < m; ++j)
      if (!gone[j]) kept[b].push_back(j);
  }
  std::size_t keep = m - r;

  const Tensor& beta = h.beta();
  const Tensor& errors = h.errors();

  // beta' = beta + sum of |removed columns|
  std::vector<double> bv(beta.data().begin(), beta.data().end());
  auto de = errors.data();
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t j : removals[b])
      for (std::size_t i = 0; i < p; ++i) bv[b * p + i] += std::abs(de[(j * B + b) * p + i]);
  Tensor beta2 = make_tensor_op(
      {B, p}, std::move(bv), {beta, errors},
      [removals, errors, B, p](std::span<const double> g, std::span<double*> gi) {
        auto de = errors.data();
        for (std::size_t b = 0; b < B; ++b)
          for (std::size_t i = 0; i < p; ++i) {
            double gv = g[b * p + i];
            if (gi[0]) gi[0][b * p + i] += gv;
            if (gi[1])
              for (std::size_t j : removals[b]) {
                double e = de[(j * B + b) * p + i];
                double s = e > 0 ? 1.0 : (e < 0 ? -1.0 : 0.0);
                gi[1][(j * B + b) * p + i] += gv * s;
              }
          }
      });

  Tensor errors2;
  if (keep > 0) {
    std::vector<double> ev(keep * B * p);
    for (std::size_t b = 0; b < B; ++b)
      for (std::size_t t = 0; t < keep; ++t) {
        std::size_t j = kept[b][t];
        std::copy(de.begin() + (j * B + b) * p, de.begin() + (j * B + b) * p + p,
                  ev.begin() + (t * B + b) * p);
      }
    errors2 = make_tensor_op(
        {keep, B, p}, std::move(ev), {errors},
        [kept, keep, B, p](std::span<const double> g, std::span<double*> gi) {
          if (!gi[0]) return;
          for (std::size_t b = 0; b < B; ++b)
            for (std::size_t t = 0; t < keep; ++t) {
              std::size_t j = kept[b][t];
              for (std::size_t i = 0; i < p; ++i)
                gi[0][(j * B + b) * p + i] += g[(t * B + b) * p + i];
            }
        });
  }
  return HybridZonotope(h.center(), std::move(beta2), std::move(errors2), h.var_shape());
}

// ---------------------------------------------------------------------------
// DeepLoss
// ---------------------------------------------------------------------------

namespace {

double activ(PositiveActivation f, double x) {
  switch (f) {
    case PositiveActivation::Relu:
      return x > 0 ? x : 0.0;
  }
  return 0.0;
}

bool activ_grad_active(PositiveActivation f, double x) {
  switch (f) {
    case PositiveActivation::Relu:
      return x > 0;
  }
  return false;
}

struct OverlapTerm {
  std::size_t b, i, j;
  double diff;  // argument of f; gradient flows only when f' != 0 there
  bool is_lb;   // true: diff = U[j]-L[i]; false: diff = U[i]-L[j]
};

void check_interval(const Interval& c) {
  if (!c.lower.defined() || !c.upper.defined() || c.lower.shape() != c.upper.shape() ||
      c.lower.shape().size() != 2)
    throw ShapeError("deep_loss: interval sides must be matching [B,n] tensors");
}

Tensor finish_deep_loss(const Interval& c, double total, std::vector<OverlapTerm> terms,
                        PositiveActivation f) {
  std::size_t B = c.lower.dim(0), n = c.lower.dim(1);
  double loss = total / (2.0 * static_cast<double>(n) * static_cast<double>(B));
  return make_tensor_op(
      {1}, {loss}, {c.lower, c.upper},
      [terms = std::move(terms), f, B, n](std::span<const double> g, std::span<double*> gi) {
        double s = g[0] / (2.0 * static_cast<double>(n) * static_cast<double>(B));
        for (const auto& t : terms) {
          if (!activ_grad_active(f, t.diff)) continue;
          if (t.is_lb) {
            if (gi[1]) gi[1][t.b * n + t.j] += s;
            if (gi[0]) gi[0][t.b * n + t.i] -= s;
          } else {
            if (gi[1]) gi[1][t.b * n + t.i] += s;
            if (gi[0]) gi[0][t.b * n + t.j] -= s;
          }
        }
      });
}

}  // namespace

Tensor deep_loss_naive(const Interval& c, PositiveActivation f) {
  check_interval(c);
  std::size_t B = c.lower.dim(0), n = c.lower.dim(1);
  auto L = c.lower.data();
  auto U = c.upper.data();
  double total = 0.0;
  std::vector<OverlapTerm> terms;
  for (std::size_t b = 0; b < B; ++b) {
    const double* l = L.data() + b * n;
    const double* u = U.data() + b * n;
    for (std::size_t i = 0; i < n; ++i) {
      // worst overlap against this dimension's lower bound
      bool found = false;
      double best = 0.0;
      std::size_t bj = 0;
      for (std::size_t j = 0; j < n; ++j) {
        if (j == i || l[j] > l[i]) continue;
        double v = activ(f, u[j] - l[i]);
        if (!found || v > best) {
          found = true;
          best = v;
          bj = j;
        }
      }
      if (found) {
        total += best;
        terms.push_back({b, i, bj, u[bj] - l[i], true});
      }
      // and against its upper bound
      found = false;
      best = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        if (j == i || u[j] < u[i]) continue;
        double v = activ(f, u[i] - l[j]);
        if (!found || v > best) {
          found = true;
          best = v;
          bj = j;
        }
      }
      if (found) {
        total += best;
        terms.push_back({b, i, bj, u[i] - l[bj], false});
      }
    }
  }
  return finish_deep_loss(c, total, std::move(terms), f);
}

Tensor deep_loss_fast(const Interval& c, PositiveActivation f) {
  check_interval(c);
  std::size_t B = c.lower.dim(0), n = c.lower.dim(1);
  auto L = c.lower.data();
  auto U = c.upper.data();
  double total = 0.0;
  std::vector<OverlapTerm> terms;

  std::vector<std::size_t> order(n), group_end(n);
  std::vector<double> t1v(n), t2v(n);
  std::vector<std::size_t> t1s(n), t2s(n);
  constexpr double kNegInf = -std::numeric_limits<double>::infinity();

  for (std::size_t b = 0; b < B; ++b) {
    const double* l = L.data() + b * n;
    const double* u = U.data() + b * n;

    // ---- L_lb: candidates are j != i with l[j] <= l[i]; the worst offender
    // has the largest u[j]. Sort by lower bound ascending; prefix top-2 upper
    // bounds let us exclude i itself.
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t c2) { return l[a] < l[c2]; });
    for (std::size_t r = n; r-- > 0;)
      group_end[r] = (r + 1 < n && l[order[r + 1]] == l[order[r]]) ? group_end[r + 1] : r;
    double v1 = kNegInf, v2 = kNegInf;
    std::size_t s1 = 0, s2 = 0;
    for (std::size_t r = 0; r < n; ++r) {
      std::size_t j = order[r];
      if (u[j] > v1) {
        v2 = v1;
        s2 = s1;
        v1 = u[j];
        s1 = j;
      } else if (u[j] > v2) {
        v2 = u[j];
        s2 = j;
      }
      t1v[r] = v1;
      t1s[r] = s1;
      t2v[r] = v2;
      t2s[r] = s2;
    }
    for (std::size_t r = 0; r < n; ++r) {
      std::size_t i = order[r];
      std::size_t end = group_end[r];
      if (end == 0 && r == 0 && group_end[0] == 0) {
        // single candidate == self
      }
      // number of candidates including self is end+1
      if (end + 1 < 2) continue;
      double bu;
      std::size_t bj;
      if (t1s[end] != i) {
        bu = t1v[end];
        bj = t1s[end];
      } else if (t2v[end] != kNegInf) {
        bu = t2v[end];
        bj = t2s[end];
      } else {
        continue;
      }
      double d = bu - l[i];
      total += activ(f, d);
      terms.push_back({b, i, bj, d, true});
    }

    // ---- L_ub: candidates are j != i with u[j] >= u[i]; the worst offender
    // has the smallest l[j]. Sort by upper bound descending; prefix min-2.
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t c2) { return u[a] > u[c2]; });
    for (std::size_t r = n; r-- > 0;)
      group_end[r] = (r + 1 < n && u[order[r + 1]] == u[order[r]]) ? group_end[r + 1] : r;
    v1 = std::numeric_limits<double>::infinity();
    v2 = std::numeric_limits<double>::infinity();
    s1 = s2 = 0;
    for (std::size_t r = 0; r < n; ++r) {
      std::size_t j = order[r];
      if (l[j] < v1) {
        v2 = v1;
        s2 = s1;
        v1 = l[j];
        s1 = j;
      } else if (l[j] < v2) {
        v2 = l[j];
        s2 = j;
      }
      t1v[r] = v1;
      t1s[r] = s1;
      t2v[r] = v2;
      t2s[r] = s2;
    }
    for (std::size_t r = 0; r < n; ++r) {
      std::size_t i = order[r];
      std::size_t end = group_end[r];
      if (end + 1 < 2) continue;
      double bl;
      std::size_t bj;
      if (t1s[end] != i) {
        bl = t1v[end];
        bj = t1s[end];
      } else if (t2v[end] != std::numeric_limits<double>::infinity()) {
        bl = t2v[end];
        bj = t2s[end];
      } else {
        continue;
      }
      double d = u[i] - bl;
      total += activ(f, d);
      terms.push_back({b, i, bj, d, false});
    }
  }
  return finish_deep_loss(c, total, std::move(terms), f);
}

}  // namespace hzcert
