#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "hzcert/network.hpp"
#include "hzcert/schedule.hpp"

namespace hzcert {

struct GoalExpr;
using GoalPtr = std::shared_ptr<const GoalExpr>;

// Training-objective goal constructors.
struct GoalExpr {
  enum class Kind { Point, Normal, Uniform, IFGSM, Box, Mix, Sub, Sample, BiSample };
  Kind kind = Kind::Point;
  std::size_t k = 0;   // IFGSM iteration count
  double r = 1.0;      // Sample
  SchedulePtr sched;   // Mix lambda / Sub delta / Sample delta
  GoalPtr g1, g2;      // Mix(g1,g2), Sample(gs=g1,gt=g2), BiSample, Sub(g1)
};

GoalPtr parse_goal(const std::string& text);
std::string print_goal(const GoalExpr& g);
inline std::string print_goal(const GoalPtr& g) { return print_goal(*g); }
bool goal_equal(const GoalExpr& a, const GoalExpr& b);

// Mirrors the Mix structure of the goal: a point, an abstract element, or a
// pair of sub-results.
struct AbstractOrProduct {
  enum class Kind { Point, Zono, Pair };
  Kind kind = Kind::Point;
  Tensor point;  // [B,p]
  std::optional<HybridZonotope> zono;
  std::shared_ptr<AbstractOrProduct> first, second;
};

// Builds the training element(s) for the input box [l,u] ([B,p] each).
// `targets` and `net` are consulted only by IFGSM subtrees; `rng` drives the
// stochastic constructors (one independent substream per example).
AbstractOrProduct goal_abstract(const GoalExpr& g, const Tensor& l, const Tensor& u,
                                const std::vector<int>& targets, const NetworkIR& net,
                                double time, RngStream& rng);

// Upper bound on the maximum cross-entropy over the concretization: the
// adversary gets the target's lower bound and every other logit's upper bound.
Tensor worst_case_cross_entropy(const HybridZonotope& h, const std::vector<int>& targets);

// The full training loss: clips the eps-box to the data range, abstracts it
// per the goal, pushes every leaf through the network, combines leaf losses
// (Mix leaves weighted (1-lambda)/lambda), and adds the scheduled DeepLoss
// terms collected from abstract-element leaves.
Tensor training_loss(const GoalExpr& g, const NetworkIR& net, const Tensor& o,
                     const std::vector<int>& targets, double eps, double time, RngStream& rng);

// Named Table-2-style training schemes; `{k}` in a preset stands for the
// IFGSM iteration count and is substituted by preset_text.
std::vector<std::string> preset_names();
bool preset_reconstructed(const std::string& name);  // repaired from a defective source
std::string preset_text(const std::string& name, std::size_t k = 3);

}  // namespace hzcert
