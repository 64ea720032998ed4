#pragma once

#include <memory>
#include <string>

#include "hzcert/common.hpp"

namespace hzcert {

// Scheduled scalar: Const(v) | Lin(a,b,m,n) | Until(m, s1, s2).
// Lin holds a until epoch m, anneals linearly to b over the next n epochs,
// then holds b. Until evaluates s1 before epoch m and s2 (with the clock
// restarted at 0) afterwards.
struct ScheduleExpr {
  enum class Kind { Const, Lin, Until };
  Kind kind = Kind::Const;
  double value = 0.0;            // Const
  double a = 0, b = 0, m = 0, n = 0;  // Lin
  double cutoff = 0;             // Until
  std::shared_ptr<const ScheduleExpr> s1, s2;
};
using SchedulePtr = std::shared_ptr<const ScheduleExpr>;

SchedulePtr parse_schedule(const std::string& text);
double eval_schedule(const ScheduleExpr& s, double t);
inline double eval_schedule(const SchedulePtr& s, double t) { return eval_schedule(*s, t); }
std::string print_schedule(const ScheduleExpr& s);
inline std::string print_schedule(const SchedulePtr& s) { return print_schedule(*s); }
bool schedule_equal(const ScheduleExpr& a, const ScheduleExpr& b);

}  // namespace hzcert
