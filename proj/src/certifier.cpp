#include "hzcert/certifier.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <sstream>
#include <thread>

#include "hzcert/abstract_layers.hpp"

namespace hzcert {

Domain parse_domain(const std::string& s) {
  if (s == "box") return Domain::Box;
  if (s == "hzono") return Domain::HZono;
  throw ValueError("unknown domain '" + s + "' (expected box or hzono)");
}

Certificate verify_example(const NetworkIR& net, const Tensor& x, int label, double eps,
                           Domain domain) {
  if (eps < 0) throw ValueError("verify_example: eps must be nonnegative");
  NoGradGuard ng;
  Certificate cert;
  cert.epsilon = eps;
  cert.domain = domain;

  auto dx = x.data();
  std::size_t p = dx.size();
  std::vector<double> l(p), u(p);
  for (std::size_t i = 0; i < p; ++i) {
    l[i] = std::max(dx[i] - eps, net.range_lo);
    u[i] = std::min(dx[i] + eps, net.range_hi);
  }
  HybridZonotope h =
      HybridZonotope::from_box(Tensor::from_data({1, p}, std::move(l)),
                               Tensor::from_data({1, p}, std::move(u)));
  if (domain == Domain::HZono)
    h = correlate(h, select_correlation_indices(CorrelationStrategy::all(), h, true));

  // concrete prediction
  Tensor logits = net.concrete_forward(reshape(x, {1, p}));
  auto zl = logits.data();
  std::size_t k = zl.size();
  cert.predicted = static_cast<int>(
      std::max_element(zl.begin(), zl.end()) - zl.begin());
  cert.correct = cert.predicted == label;
  if (label < 0 || static_cast<std::size_t>(label) >= k)
    throw ValueError("verify_example: label out of range");

  HybridZonotope out = [&] {
    try {
      return net.abstract_forward(h, 0.0, domain == Domain::Box).out;
    } catch (const ShapeError&) {
      throw;
    } catch (const ValueError&) {
      throw;
    } catch (const Error&) {  // numeric overflow inside a layer
      cert.overflow = true;
      return HybridZonotope::from_point(Tensor::zeros({1, k}));
    }
  }();
  if (cert.overflow) {
    cert.margin = -std::numeric_limits<double>::infinity();
    return cert;
  }

  auto c = out.center().data();
  auto beta = out.beta().data();
  std::size_t m = out.terms();
  std::span<const double> e;
  if (m > 0) e = out.errors().data();
  std::size_t t = static_cast<std::size_t>(label);
  double margin = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < k; ++j) {
    if (j == t) continue;
    double lb = (c[t] - c[j]) - (beta[t] + beta[j]);
    for (std::size_t q = 0; q < m; ++q) lb -= std::abs(e[q * k + t] - e[q * k + j]);
    margin = std::min(margin, lb);
  }
  cert.margin = margin;
  if (!std::isfinite(margin)) {
    cert.overflow = true;
    cert.verified = false;
  } else {
    cert.verified = margin > 0;
  }
  return cert;
}

VerifySummary verified_robustness(const NetworkIR& net, const Dataset& data, double eps,
                                  Domain domain, std::size_t limit, int threads) {
  if (data.count() == 0) throw ValueError("verified_robustness: empty dataset");
  std::size_t n = data.count();
  if (limit > 0) n = std::min(n, limit);
  VerifySummary sum;
  sum.total = n;
  sum.certificates.resize(n);

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (;;) {
      std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      Certificate c = verify_example(net, data.example(i), data.labels[i], eps, domain);
      c.id = i;
      sum.certificates[i] = c;
    }
  };
  int nthreads = std::max(1, threads);
  if (nthreads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < nthreads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  for (const auto& c : sum.certificates) {
    if (c.correct) ++sum.correct;
    if (c.verified) ++sum.verified_verdicts;
    if (c.verified && c.correct) ++sum.verified;
  }
  sum.fraction = static_cast<double>(sum.verified) / static_cast<double>(n);
  return sum;
}

std::string certificate_json(const Certificate& c) {
  std::ostringstream os;
  os << "{\"id\":" << c.id << ",\"epsilon\":" << c.epsilon << ",\"domain\":\""
     << domain_name(c.domain) << "\",\"verdict\":\"" << (c.verified ? "verified" : "unknown")
     << "\",\"margin\":";
  if (std::isfinite(c.margin))
    os << c.margin;
  else
    os << "\"-inf\"";
  os << ",\"predicted\":" << c.predicted << ",\"correct\":" << (c.correct ? "true" : "false");
  if (c.overflow) os << ",\"overflow\":true";
  os << "}";
  return os.str();
}

}  // namespace hzcert
