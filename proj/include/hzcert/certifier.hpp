#pragma once

#include <string>
#include <vector>

#include "hzcert/data.hpp"
#include "hzcert/network.hpp"

namespace hzcert {

enum class Domain { Box, HZono };

inline const char* domain_name(Domain d) { return d == Domain::Box ? "box" : "hzono"; }
Domain parse_domain(const std::string& s);

struct Certificate {
  std::size_t id = 0;
  double epsilon = 0;
  Domain domain = Domain::Box;
  bool verified = false;  // margin > 0 and finite
  bool overflow = false;  // non-finite bounds -> unknown
  double margin = 0;      // min over j != t of LB(z_t - z_j)
  int predicted = -1;     // concrete argmax at x
  bool correct = false;
};

// Robustness of the eps-box around x ([1,p]), clipped to the data range.
// The hzono backend correlates the whole input box; Box stays interval.
Certificate verify_example(const NetworkIR& net, const Tensor& x, int label, double eps,
                           Domain domain);

struct VerifySummary {
  std::size_t total = 0;
  std::size_t verified = 0;          // verified AND correctly classified
  std::size_t verified_verdicts = 0; // verified regardless of correctness
  std::size_t correct = 0;
  double fraction = 0;               // verified / total
  std::vector<Certificate> certificates;
};

VerifySummary verified_robustness(const NetworkIR& net, const Dataset& data, double eps,
                                  Domain domain, std::size_t limit = 0, int threads = 1);

std::string certificate_json(const Certificate& c);

}  // namespace hzcert
