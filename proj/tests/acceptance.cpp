// Acceptance suite: one criterion per invocation (argv[1] in 1..10), printing
// a single "criterion N: PASS/FAIL — ..." line and exiting nonzero on failure.
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "hzcert/abstract_layers.hpp"
#include "hzcert/attacks.hpp"
#include "hzcert/certifier.hpp"
#include "hzcert/data.hpp"
#include "hzcert/dsl.hpp"
#include "hzcert/network.hpp"
#include "hzcert/trainer.hpp"
#include "hzcert/zonotope.hpp"

using namespace hzcert;

namespace {

std::vector<double> rand_vec(RngStream& r, std::size_t n, double lo, double hi) {
  std::vector<double> v(n);
  for (auto& x : v) x = r.uniform(lo, hi);
  return v;
}

double now_seconds() {
  return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

// ---------------------------------------------------------------------------
// 1. soundness of the abstract transformers on random networks
// ---------------------------------------------------------------------------

std::string random_net_text(RngStream& r, std::size_t in_dim, bool abstract_layers) {
  std::ostringstream os;
  os << "input d=" << in_dim << "\n";
  std::size_t depth = 1 + r.next_u64() % 4;
  std::size_t width = in_dim;
  if (abstract_layers && r.uniform() < 0.5) os << "correlate_all\n";
  for (std::size_t d = 0; d < depth; ++d) {
    width = 2 + r.next_u64() % 63;
    os << "linear out=" << width << "\n";
    if (abstract_layers) {
      double pick = r.uniform();
      if (pick < 0.25)
        os << "correlate_max k=" << 1 + r.next_u64() % width << "\n";
      else if (pick < 0.4)
        os << "correlate_fixed k=" << 1 + r.next_u64() % width << "\n";
      else if (pick < 0.55)
        os << "deep_loss weight=\"0.1\"\n";
    }
    if (d + 1 < depth) os << "relu\n";
    if (abstract_layers && r.uniform() < 0.3) os << "decorrelate_min k=" << r.next_u64() % 3 << "\n";
    if (abstract_layers && r.uniform() < 0.15) os << "decorrelate_all\n";
  }
  os << "linear out=" << 2 + r.next_u64() % 8 << "\n";
  return os.str();
}

bool criterion_soundness(std::string& msg) {
  const std::size_t kNets = 50, kSamples = 10000;
  std::size_t violations = 0, checked = 0;
  RngStream rng(2024);
  for (std::size_t t = 0; t < kNets; ++t) {
    auto r = rng.split(t);
    std::size_t in_dim = 2 + r.next_u64() % 9;
    bool abs_layers = t % 2 == 1;
    NetworkIR net = parse_network(random_net_text(r, in_dim, abs_layers));
    net.init_params(r.next_u64());

    std::vector<double> lo(in_dim), hi(in_dim);
    for (std::size_t i = 0; i < in_dim; ++i) {
      double c = r.uniform(0.1, 0.9), w = r.uniform(0.0, 0.2);
      lo[i] = std::max(0.0, c - w);
      hi[i] = std::min(1.0, c + w);
    }
    auto box = HybridZonotope::from_box(Tensor::from_data({1, in_dim}, lo),
                                        Tensor::from_data({1, in_dim}, hi));
    Interval iv = net.abstract_forward(box, 3.0).out.concretize();
    std::size_t out_dim = iv.lower.size();

    std::vector<double> points(kSamples * in_dim);
    for (std::size_t s = 0; s < kSamples; ++s)
      for (std::size_t i = 0; i < in_dim; ++i)
        points[s * in_dim + i] = r.uniform(lo[i], hi[i]);
    Tensor y = net.concrete_forward(Tensor::from_data({kSamples, in_dim}, std::move(points)));
    auto yd = y.data();
    for (std::size_t s = 0; s < kSamples; ++s)
      for (std::size_t i = 0; i < out_dim; ++i) {
        double v = yd[s * out_dim + i];
        double l = iv.lower.at(i), u = iv.upper.at(i);
        double tol = 1e-5 * std::max({1.0, std::abs(l), std::abs(u)});
        ++checked;
        if (v < l - tol || v > u + tol) ++violations;
      }
  }
  std::ostringstream os;
  os << kNets << " random nets, " << checked << " point/output checks, " << violations
     << " violations";
  msg = os.str();
  return violations == 0;
}

// ---------------------------------------------------------------------------
// 2. golden pipeline triplets (correlate_max 2 / decorrelate_min 1)
// ---------------------------------------------------------------------------

struct Triplet {
  double c, b;
  std::vector<double> e;
};

bool match(const HybridZonotope& h, std::size_t i, const Triplet& want, std::string& why,
           const char* name) {
  std::size_t B = 1, p = h.vars();
  bool ok = h.center().at(i) == want.c && h.beta().at(i) == want.b && h.terms() == want.e.size();
  if (ok)
    for (std::size_t j = 0; j < want.e.size(); ++j)
      if (h.errors().at((j * B) * p + i) != want.e[j]) ok = false;
  if (!ok) {
    std::ostringstream os;
    os << name << " got <" << h.center().at(i) << "," << h.beta().at(i) << ",(";
    for (std::size_t j = 0; j < h.terms(); ++j)
      os << (j ? "," : "") << h.errors().at(j * p + i);
    os << ")> want <" << want.c << "," << want.b << ",(";
    for (std::size_t j = 0; j < want.e.size(); ++j) os << (j ? "," : "") << want.e[j];
    os << ")>";
    why = os.str();
  }
  return ok;
}

bool criterion_golden_pipeline(std::string& msg) {
  std::vector<std::string> problems;
  auto require = [&](bool ok, const std::string& why) {
    if (!ok) problems.push_back(why);
  };

  // inputs <0,1> x3
  auto h = HybridZonotope::from_box(Tensor::from_data({1, 3}, {-1, -1, -1}),
                                    Tensor::from_data({1, 3}, {1, 1, 1}));
  std::string why;
  // first layer scales channels by (0.75, 1.25, 0.5)
  auto h456 = affine_transform(h, Tensor::from_data({3, 3}, {0.75, 0, 0, 0, 1.25, 0, 0, 0, 0.5}));
  require(match(h456, 0, {0, 0.75, {}}, why, "h4"), why);
  require(match(h456, 1, {0, 1.25, {}}, why, "h5"), why);
  require(match(h456, 2, {0, 0.5, {}}, why, "h6"), why);

  auto sets = select_correlation_indices(CorrelationStrategy::max(2), h456, true);
  auto hc = correlate(h456, sets);
  require(match(hc, 0, {0, 0, {0.75, 0}}, why, "h4'"), why);
  require(match(hc, 1, {0, 0, {0, 1.25}}, why, "h5'"), why);
  require(match(hc, 2, {0, 0.5, {0, 0}}, why, "h6'"), why);

  auto h789 = affine_transform(
      hc, Tensor::from_data({3, 3}, {4.0 / 3.0, -0.8, 0, 4.0 / 3.0, 0.4, 0, 0, 0, 0}));
  require(match(h789, 0, {0, 0, {1, -1}}, why, "h7"), why);
  require(match(h789, 1, {0, 0, {1, 0.5}}, why, "h8"), why);
  require(match(h789, 2, {0, 0, {0, 0}}, why, "h9"), why);

  auto removals = select_decorrelation_removals(h789, 1);
  require(removals[0] == std::vector<std::size_t>{1}, "decorrelate_min removed the wrong column");
  auto hd = decorrelate(h789, removals);
  require(match(hd, 0, {0, 1, {1}}, why, "h7'"), why);
  require(match(hd, 1, {0, 0.5, {1}}, why, "h8'"), why);
  require(match(hd, 2, {0, 0, {0}}, why, "h9'"), why);

  // Final layer. The annotated h10 = <0,0,(1)> requires beta' = 0 while
  // E' = 1; under the affine rule beta' = |W| beta with beta = (1,0.5,0), so
  // beta' = 0 forces the first two weights (and with them E') to zero. No
  // weight row realizes the annotation; the closest sound element from
  // w = (1,0,0) is <0,1,(1)>.
  auto fin = affine_transform(hd, Tensor::from_data({3, 3}, {1, 0, 0, 0.5, 0, 0, 0, 0, 0}));
  if (!match(fin, 0, {0, 0, {1}}, why, "h10"))
    problems.push_back(why + " (annotation unrealizable: beta'=|W|beta forces E'=0 for any row)");
  require(match(fin, 1, {0, 0.5, {0.5}}, why, "h11"), why);
  require(match(fin, 2, {0, 0, {0}}, why, "h12"), why);

  if (problems.empty()) {
    msg = "all pipeline triplets reproduced exactly";
    return true;
  }
  std::ostringstream os;
  os << problems.size() << " mismatch(es): " << problems.front();
  msg = os.str();
  return false;
}

// ---------------------------------------------------------------------------
// 3. golden affine comparison (box widens, correlated terms track signs)
// ---------------------------------------------------------------------------

bool criterion_golden_affine(std::string& msg) {
  Tensor W = Tensor::from_data({2, 2}, {1, 1, 1, -1});  // x3 = x1+x2, x4 = x1-x2

  auto box = HybridZonotope::from_box(Tensor::from_data({1, 2}, {-1, -1}),
                                      Tensor::from_data({1, 2}, {1, 1}));
  auto hb = affine_transform(box, W);
  bool ok = hb.terms() == 0 && hb.center().at(0) == 0 && hb.center().at(1) == 0 &&
            hb.beta().at(0) == 2 && hb.beta().at(1) == 2;

  HybridZonotope hz(Tensor::zeros({1, 2}), Tensor::zeros({1, 2}),
                    Tensor::from_data({2, 1, 2}, {1, 0, 0, 1}), {2});
  auto hh = affine_transform(hz, W);
  ok = ok && hh.terms() == 2 && hh.beta().at(0) == 0 && hh.beta().at(1) == 0 &&
       hh.center().at(0) == 0 && hh.center().at(1) == 0 && hh.errors().at(0) == 1 &&
       hh.errors().at(1) == 1 && hh.errors().at(2) == 1 && hh.errors().at(3) == -1;

  msg = ok ? "box <0,2>/<0,2> and hybrid <0,0,(1,1)>/<0,0,(1,-1)> match exactly"
           : "affine outputs deviate from the annotated values";
  return ok;
}

// ---------------------------------------------------------------------------
// 4. gamma-equality / containment witnesses
// ---------------------------------------------------------------------------

bool criterion_witnesses(std::string& msg) {
  RngStream rng(77);
  std::size_t witnesses = 0, failures = 0;
  const double kTol = 1e-9;

  // correlate: every point of h maps to a point of correlate(h) exactly
  for (int trial = 0; witnesses < 5000; ++trial) {
    auto r = rng.split(trial);
    std::size_t p = 2 + r.next_u64() % 6, m = r.next_u64() % 4;
    Tensor c = Tensor::from_data({1, p}, rand_vec(r, p, -1, 1));
    Tensor b = Tensor::from_data({1, p}, rand_vec(r, p, 0, 1));
    Tensor e = m ? Tensor::from_data({m, 1, p}, rand_vec(r, m * p, -1, 1)) : Tensor();
    HybridZonotope h(c, b, e, {p});
    std::size_t k = 1 + r.next_u64() % p;
    auto sets = select_correlation_indices(CorrelationStrategy::max(k), h, true);
    auto out = correlate(h, sets);
    const auto& idx = sets[0];
    for (int s = 0; s < 25; ++s, ++witnesses) {
      std::vector<double> bs = rand_vec(r, p, -1, 1), es = rand_vec(r, m, -1, 1);
      Tensor x = h.evaluate_point(Tensor::from_data({1, p}, bs),
                                  m ? Tensor::from_data({1, m}, es) : Tensor::zeros({1, 0}));
      std::vector<double> bs2 = bs, es2(m + idx.size(), 0.0);
      for (std::size_t j = 0; j < m; ++j) es2[j] = es[j];
      for (std::size_t t = 0; t < idx.size(); ++t) {
        es2[m + t] = bs[idx[t]];
        bs2[idx[t]] = 0.0;
      }
      Tensor y = out.evaluate_point(Tensor::from_data({1, p}, bs2),
                                    Tensor::from_data({1, m + idx.size()}, es2));
      for (std::size_t i = 0; i < p; ++i)
        if (std::abs(y.at(i) - x.at(i)) >= kTol) ++failures;
    }
  }

  // decorrelate: every point of h maps into decorrelate(h) exactly
  for (int trial = 0; witnesses < 10000; ++trial) {
    auto r = rng.split(100000 + trial);
    std::size_t p = 2 + r.next_u64() % 5, m = 2 + r.next_u64() % 4;
    HybridZonotope h(Tensor::from_data({1, p}, rand_vec(r, p, -1, 1)),
                     Tensor::from_data({1, p}, rand_vec(r, p, 0, 1)),
                     Tensor::from_data({m, 1, p}, rand_vec(r, m * p, -1, 1)), {p});
    std::size_t keep = r.next_u64() % m;
    auto removals = select_decorrelation_removals(h, keep);
    auto out = decorrelate(h, removals);
    auto be = h.beta().data();
    auto de = h.errors().data();
    std::vector<bool> gone(m, false);
    for (std::size_t j : removals[0]) gone[j] = true;
    for (int s = 0; s < 25; ++s, ++witnesses) {
      std::vector<double> bs = rand_vec(r, p, -1, 1), es = rand_vec(r, m, -1, 1);
      Tensor x = h.evaluate_point(Tensor::from_data({1, p}, bs), Tensor::from_data({1, m}, es));
      std::vector<double> bs2(p), es2(keep, 0.0);
      std::size_t t = 0;
      for (std::size_t j = 0; j < m; ++j)
        if (!gone[j]) es2[t++] = es[j];
      bool witness_ok = true;
      for (std::size_t i = 0; i < p; ++i) {
        double noise = be[i] * bs[i], radius = be[i];
        for (std::size_t j : removals[0]) {
          noise += es[j] * de[j * p + i];
          radius += std::abs(de[j * p + i]);
        }
        bs2[i] = radius > 0 ? noise / radius : 0.0;
        if (std::abs(bs2[i]) > 1 + 1e-12) witness_ok = false;  // not in the unit cube
      }
      Tensor y = out.evaluate_point(Tensor::from_data({1, p}, bs2),
                                    keep ? Tensor::from_data({1, keep}, es2)
                                         : Tensor::zeros({1, 0}));
      if (!witness_ok) ++failures;
      for (std::size_t i = 0; i < p; ++i)
        if (std::abs(y.at(i) - x.at(i)) >= kTol) ++failures;
    }
  }

  std::ostringstream os;
  os << witnesses << " witness constructions, " << failures << " deviations >= 1e-9";
  msg = os.str();
  return failures == 0;
}

// ---------------------------------------------------------------------------
// 5. deep loss oracle equivalence and speedup
// ---------------------------------------------------------------------------

Interval random_interval(RngStream& r, std::size_t B, std::size_t n) {
  std::vector<double> lo(B * n), hi(B * n);
  for (std::size_t i = 0; i < B * n; ++i) {
    double a = r.uniform(-2, 2), w = r.uniform(0, 1.5);
    lo[i] = a;
    hi[i] = a + w;
    if (i > 0 && r.uniform() < 0.2) lo[i] = lo[i - 1];  // exercise ties
    if (i > 0 && r.uniform() < 0.2) hi[i] = std::max(hi[i - 1], lo[i]);
  }
  return {Tensor::from_data({B, n}, lo), Tensor::from_data({B, n}, hi)};
}

bool criterion_deep_loss(std::string& msg) {
  RngStream rng(88);
  std::size_t mismatches = 0;
  for (int trial = 0; trial < 500; ++trial) {
    auto r = rng.split(trial);
    // sizes up to 4096, log-uniform
    std::size_t n = static_cast<std::size_t>(std::exp(r.uniform(std::log(2.0), std::log(4096.0))));
    Interval c = random_interval(r, 1, n);
    double a = deep_loss_naive(c).item(), b = deep_loss_fast(c).item();
    if (std::abs(a - b) > 1e-6 * std::max(1.0, std::abs(a))) ++mismatches;
  }

  auto r = rng.split(999999);
  Interval big = random_interval(r, 1, 4096);
  double t_naive = 1e300, t_fast = 1e300;
  for (int rep = 0; rep < 3; ++rep) {
    double t0 = now_seconds();
    deep_loss_naive(big).item();
    t_naive = std::min(t_naive, now_seconds() - t0);
    t0 = now_seconds();
    deep_loss_fast(big).item();
    t_fast = std::min(t_fast, now_seconds() - t0);
  }
  double speedup = t_naive / t_fast;
  std::ostringstream os;
  os << "500 instances, " << mismatches << " mismatches; n=4096 speedup " << speedup << "x";
  msg = os.str();
  return mismatches == 0 && speedup >= 10.0;
}

// ---------------------------------------------------------------------------
// 6. gradient checks on a 2-16-16-2 net
// ---------------------------------------------------------------------------

double gradcheck(std::vector<Tensor> params, const std::function<Tensor()>& f) {
  const double step = 1e-5;
  Tensor loss = f();
  for (auto& p : params) p.zero_grad();
  loss.backward();
  std::vector<std::vector<double>> analytic;
  for (auto& p : params) {
    auto g = p.grad();
    analytic.emplace_back(g.begin(), g.end());
  }
  double worst = 0.0;
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    auto d = params[pi].mutable_data();
    for (std::size_t i = 0; i < d.size(); ++i) {
      double saved = d[i];
      d[i] = saved + step;
      double up = f().item();
      d[i] = saved - step;
      double dn = f().item();
      d[i] = saved;
      double numeric = (up - dn) / (2 * step);
      double denom = std::max({std::abs(numeric), std::abs(analytic[pi][i]), 1.0});
      worst = std::max(worst, std::abs(numeric - analytic[pi][i]) / denom);
    }
  }
  return worst;
}

bool criterion_gradients(std::string& msg) {
  NetworkIR net = parse_network("input d=2\nlinear out=16\nrelu\nlinear out=16\nrelu\nlinear out=2\n");
  net.init_params(6);
  Tensor o = Tensor::from_data({2, 2}, {0.3, 0.4, 0.6, 0.7});
  std::vector<int> targets{0, 1};

  std::ostringstream os;
  bool ok = true;
  struct Case {
    const char* name;
    std::string goal;
    double t;
  };
  for (const Case& c : {Case{"Point", "Point", 0.0}, Case{"Box", "Box", 0.0},
                        Case{"Baseline@155", preset_text("Baseline"), 155.0}}) {
    auto g = parse_goal(c.goal);
    double err = gradcheck(net.params, [&] {
      RngStream rng(12);
      return training_loss(*g, net, o, targets, 0.08, c.t, rng);
    });
    os << c.name << "=" << err << " ";
    if (!(err < 1e-4)) ok = false;
  }

  // relu_transform alone
  RngStream rng(5);
  auto r = rng.split(0);
  Tensor rc = Tensor::from_data({1, 6}, rand_vec(r, 6, -1, 1), true);
  Tensor rb = Tensor::from_data({1, 6}, rand_vec(r, 6, 0.1, 1), true);
  Tensor re = Tensor::from_data({2, 1, 6}, rand_vec(r, 12, -1, 1), true);
  double relu_err = gradcheck({rc, rb, re}, [&] {
    HybridZonotope h(rc, rb, re, {6});
    auto out = relu_transform(h);
    auto iv = out.concretize();
    return sum(add(mul(iv.lower, iv.lower), mul(iv.upper, iv.upper)));
  });
  os << "relu_transform=" << relu_err << " ";
  if (!(relu_err < 1e-4)) ok = false;

  // deep_loss alone
  Tensor dl = Tensor::from_data({2, 6}, rand_vec(r, 12, -1, 0), true);
  Tensor du = Tensor::from_data({2, 6}, rand_vec(r, 12, 0.2, 1.2), true);
  double deep_err = gradcheck({dl, du}, [&] { return deep_loss_fast({dl, du}); });
  os << "deep_loss=" << deep_err;
  if (!(deep_err < 1e-4)) ok = false;

  msg = "max rel errors: " + os.str();
  return ok;
}

// ---------------------------------------------------------------------------
// 7. DSL conformance
// ---------------------------------------------------------------------------

bool criterion_dsl(std::string& msg) {
  bool ok = true;
  std::ostringstream os;
  auto names = preset_names();
  if (names.size() != 13) {
    ok = false;
    os << "expected 13 presets, got " << names.size() << "; ";
  }
  for (const auto& name : names) {
    try {
      auto g = parse_goal(preset_text(name, 3));
      auto g2 = parse_goal(print_goal(g));
      if (!goal_equal(*g, *g2)) {
        ok = false;
        os << name << " reparse mismatch; ";
      }
    } catch (const std::exception& e) {
      ok = false;
      os << name << " failed: " << e.what() << "; ";
    }
  }

  // every annealing window used by the presets, on the spec grid
  struct Lin {
    double a, b, m, n;
  };
  for (const Lin& s : {Lin{0, 1, 150, 10}, Lin{0, 0.5, 150, 10}, Lin{0, 1, 20, 20},
                       Lin{0, 0.35, 150, 10}, Lin{0, 1, 200, 40}, Lin{0, 0.5, 200, 40},
                       Lin{0, 1, 150, 50}, Lin{0, 0.5, 150, 50}, Lin{0, 1, 150, 30},
                       Lin{0, 0.6, 200, 30}}) {
    std::ostringstream expr;
    expr << "Lin(" << s.a << ", " << s.b << ", " << s.m << ", " << s.n << ")";
    auto sched = parse_schedule(expr.str());
    double grid[5] = {0, s.m, s.m + s.n / 2, s.m + s.n, 10 * (s.m + s.n)};
    double want[5] = {s.a, s.a, s.a + (s.b - s.a) * ((s.n / 2) / s.n), s.b, s.b};
    for (int i = 0; i < 5; ++i)
      if (eval_schedule(sched, grid[i]) != want[i]) {
        ok = false;
        os << expr.str() << " at t=" << grid[i] << ": got " << eval_schedule(sched, grid[i])
           << " want " << want[i] << "; ";
      }
  }
  msg = ok ? "13 presets round trip; schedule grid matches hand values exactly" : os.str();
  return ok;
}

// ---------------------------------------------------------------------------
// 8. scaled MNIST experiment (requires the dataset on disk)
// ---------------------------------------------------------------------------

std::string find_mnist_dir() {
  std::vector<std::string> candidates;
  if (const char* env = std::getenv("MNIST_DIR")) candidates.push_back(env);
  candidates.push_back("data/mnist");
  candidates.push_back("/root/proj/data/mnist");
  for (const auto& dir : candidates)
    if (std::filesystem::exists(dir + "/train-images-idx3-ubyte") &&
        std::filesystem::exists(dir + "/train-labels-idx1-ubyte") &&
        std::filesystem::exists(dir + "/t10k-images-idx3-ubyte") &&
        std::filesystem::exists(dir + "/t10k-labels-idx1-ubyte"))
      return dir;
  return "";
}

bool criterion_mnist(std::string& msg) {
  std::string dir = find_mnist_dir();
  if (dir.empty()) {
    msg = "MNIST IDX files not found (set MNIST_DIR or place train-images-idx3-ubyte etc. "
          "under data/mnist); this environment has no network access to fetch them";
    return false;
  }
  Dataset train_d = load_idx(dir + "/train-images-idx3-ubyte", dir + "/train-labels-idx1-ubyte");
  Dataset test_d = load_idx(dir + "/t10k-images-idx3-ubyte", dir + "/t10k-labels-idx1-ubyte");

  NetworkIR net = parse_network(
      "input c=1 h=28 w=28\nflatten\n"
      "linear out=100\nrelu\nlinear out=100\nrelu\nlinear out=100\nrelu\n"
      "linear out=100\nrelu\nlinear out=100\nrelu\nlinear out=10\n");
  net.init_params(1);

  TrainConfig cfg;
  // annealing horizons rescaled from 160 to 50 epochs
  cfg.goal_text = "Mix(Point, Sub(Lin(0, 1, 40, 10), Box), Lin(0, 0.5, 40, 10))";
  cfg.epsilon = 0.1;
  cfg.epochs = 50;
  cfg.batch = 100;
  cfg.lr = 1e-3;
  cfg.seed = 1;
  cfg.eval_subset = 200;
  RunReport rep = train(net, train_d, test_d, cfg);

  VerifySummary vs = verified_robustness(net, test_d, 0.1, Domain::HZono, 1000, 4);
  double standard = static_cast<double>(vs.correct) / static_cast<double>(vs.total);
  double verified = vs.fraction;
  std::ostringstream os;
  os << "standard=" << standard << " verified=" << verified << " over " << vs.total
     << " test images";
  msg = os.str();
  return standard >= 0.88 && verified >= 0.75 && !rep.rows.empty();
}

// ---------------------------------------------------------------------------
// 9. consistency triad
// ---------------------------------------------------------------------------

bool criterion_consistency(std::string& msg) {
  bool ok = true;
  std::ostringstream os;
  std::size_t rows_checked = 0, examples_checked = 0;

  Dataset data = synthetic_blobs(300, 0.07, 4);
  auto [train_d, test_d] = split_dataset(data, 0.2);

  struct Run {
    std::string goal;
    double eps;
  };
  NetworkIR last_net = parse_network("input d=2\nlinear out=16\nrelu\nlinear out=2\n");
  double last_eps = 0;
  for (const Run& run : {Run{"Point", 0.0}, Run{"Mix(Point, Box, 0.3)", 0.05},
                         Run{"Mix(Point, Sub(Lin(0, 1, 2, 4), Box), Lin(0, 0.5, 2, 4))", 0.08}}) {
    NetworkIR net = parse_network("input d=2\nlinear out=16\nrelu\nlinear out=2\n");
    net.init_params(11);
    TrainConfig cfg;
    cfg.goal_text = run.goal;
    cfg.epsilon = run.eps;
    cfg.epochs = 8;
    cfg.batch = 20;
    cfg.lr = 0.01;
    cfg.seed = 2;
    cfg.eval_subset = 60;
    RunReport rep = train(net, train_d, test_d, cfg);
    for (const auto& row : rep.rows) {
      ++rows_checked;
      if (row.verified > row.attacked + 1e-12 || row.attacked > row.standard + 1e-12) {
        ok = false;
        os << "ordering broken at " << run.goal << " epoch " << row.epoch << "; ";
      }
    }
    last_net = std::move(net);
    last_eps = run.eps;
  }

  // no example is both verified and successfully attacked at the same eps
  AttackConfig atk;
  for (std::size_t i = 0; i < test_d.count(); ++i) {
    ++examples_checked;
    Certificate c = verify_example(last_net, test_d.example(i), test_d.labels[i], last_eps,
                                   Domain::HZono);
    if (!c.verified) continue;
    Tensor adv = mifgsm(last_net, test_d.example(i), {test_d.labels[i]}, last_eps, atk.momentum,
                        atk.iterations, atk.step, 0.0, 1.0);
    Tensor z = last_net.concrete_forward(adv);
    int pred = 0;
    for (std::size_t k = 1; k < 2; ++k)
      if (z.at(k) > z.at(pred)) pred = static_cast<int>(k);
    if (pred != c.predicted) {
      ok = false;
      os << "example " << i << " verified yet attacked; ";
    }
  }

  if (ok) {
    std::ostringstream good;
    good << rows_checked << " logged rows ordered, " << examples_checked
         << " examples free of verified-and-attacked contradictions";
    msg = good.str();
  } else {
    msg = os.str();
  }
  return ok;
}

// ---------------------------------------------------------------------------
// 10. determinism
// ---------------------------------------------------------------------------

bool criterion_determinism(std::string& msg) {
  Dataset data = synthetic_blobs(240, 0.06, 6);
  auto [train_d, test_d] = split_dataset(data, 0.25);

  auto run = [&](NetworkIR& net, RunReport& rep) {
    net = parse_network("input d=2\nlinear out=16\nrelu\nlinear out=2\n");
    net.init_params(21);
    TrainConfig cfg;
    cfg.goal_text = "Mix(Point, Sub(Lin(0, 1, 1, 3), Box), 0.4)";
    cfg.epsilon = 0.05;
    cfg.epochs = 5;
    cfg.batch = 20;
    cfg.lr = 0.01;
    cfg.seed = 9;
    cfg.eval_subset = 40;
    cfg.threads = 1;
    rep = train(net, train_d, test_d, cfg);
  };
  NetworkIR n1, n2;
  RunReport r1, r2;
  run(n1, r1);
  run(n2, r2);

  if (r1.rows.empty() || r1.rows[0].loss != r2.rows[0].loss) {
    msg = "epoch-0 losses differ between identically seeded runs";
    return false;
  }
  VerifySummary s1 = verified_robustness(n1, test_d, 0.05, Domain::HZono, 0, 1);
  VerifySummary s2 = verified_robustness(n2, test_d, 0.05, Domain::HZono, 0, 1);
  if (s1.certificates.size() != s2.certificates.size()) {
    msg = "certificate counts differ";
    return false;
  }
  for (std::size_t i = 0; i < s1.certificates.size(); ++i) {
    const auto& a = s1.certificates[i];
    const auto& b = s2.certificates[i];
    if (a.verified != b.verified || a.margin != b.margin || a.predicted != b.predicted) {
      msg = "certificates diverge at example " + std::to_string(i);
      return false;
    }
  }
  std::ostringstream os;
  os << "epoch-0 loss bit-identical (" << r1.rows[0].loss << "); " << s1.certificates.size()
     << " final certificates identical";
  msg = os.str();
  return true;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc != 2) {
    std::cerr << "usage: acceptance <criterion 1..10>\n";
    return 2;
  }
  int crit = std::atoi(argv[1]);
  using Fn = bool (*)(std::string&);
  struct Entry {
    Fn fn;
    const char* title;
  };
  const Entry table[10] = {
      {criterion_soundness, "soundness on random networks"},
      {criterion_golden_pipeline, "golden correlate/decorrelate pipeline"},
      {criterion_golden_affine, "golden box vs hybrid affine"},
      {criterion_witnesses, "gamma equality/containment witnesses"},
      {criterion_deep_loss, "deep loss oracle equivalence and speedup"},
      {criterion_gradients, "gradient checks"},
      {criterion_dsl, "dsl conformance"},
      {criterion_mnist, "scaled mnist experiment"},
      {criterion_consistency, "consistency triad"},
      {criterion_determinism, "determinism"},
  };
  if (crit < 1 || crit > 10) {
    std::cerr << "criterion out of range\n";
    return 2;
  }
  std::string msg;
  bool ok = false;
  try {
    ok = table[crit - 1].fn(msg);
  } catch (const std::exception& e) {
    msg = std::string("exception: ") + e.what();
  }
  std::cout << "criterion " << crit << " (" << table[crit - 1].title << "): "
            << (ok ? "PASS" : "FAIL") << " — " << msg << "\n";
  return ok ? 0 : 1;
}
