#include "hzcert/dsl.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <iomanip>
#include <sstream>

#include "hzcert/attacks.hpp"

namespace hzcert {

// ---------------------------------------------------------------------------
// Shared expression reader for schedules and goals
// ---------------------------------------------------------------------------

namespace {

struct Node {
  bool is_number = false;
  double num = 0;
  std::string name;
  bool has_sub = false;
  std::size_t sub = 0;
  std::vector<Node> args;
  bool has_parens = false;
  std::size_t col = 0;  // 1-based
};

[[noreturn]] void fail_at(std::size_t col, const std::string& msg) {
  throw ParseError("dsl: column " + std::to_string(col) + ": " + msg);
}

class Reader {
 public:
  explicit Reader(const std::string& text) : text_(text) {}

  Node parse_all() {
    Node n = parse_expr();
    skip_ws();
    if (pos_ < text_.size()) fail_at(pos_ + 1, "unexpected trailing text");
    return n;
  }

 private:
  void skip_ws() {
    while (pos_ < text_.size() && (text_[pos_] == ' ' || text_[pos_] == '\t')) ++pos_;
  }
  char peek() { return pos_ < text_.size() ? text_[pos_] : '\0'; }

  Node parse_expr() {
    skip_ws();
    if (pos_ >= text_.size()) fail_at(pos_ + 1, "expected an expression");
    char c = text_[pos_];
    Node n;
    n.col = pos_ + 1;
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '-' || c == '+' || c == '.') {
      std::size_t end = pos_;
      while (end < text_.size() &&
             (std::isdigit(static_cast<unsigned char>(text_[end])) || text_[end] == '.' ||
              text_[end] == '-' || text_[end] == '+' || text_[end] == 'e' || text_[end] == 'E'))
        ++end;
      std::string num = text_.substr(pos_, end - pos_);
      try {
        std::size_t used = 0;
        n.num = std::stod(num, &used);
        if (used != num.size()) throw std::invalid_argument("");
      } catch (...) {
        fail_at(n.col, "malformed number '" + num + "'");
      }
      n.is_number = true;
      pos_ = end;
      return n;
    }
    if (!std::isalpha(static_cast<unsigned char>(c))) fail_at(n.col, "expected an expression");
    std::size_t end = pos_;
    while (end < text_.size() && std::isalpha(static_cast<unsigned char>(text_[end]))) ++end;
    n.name = text_.substr(pos_, end - pos_);
    pos_ = end;
    if (peek() == '_') {
      ++pos_;
      std::size_t start = pos_;
      while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
      if (pos_ == start) fail_at(start + 1, "expected an integer subscript");
      n.has_sub = true;
      n.sub = std::stoull(text_.substr(start, pos_ - start));
    }
    skip_ws();
    if (peek() == '(') {
      n.has_parens = true;
      ++pos_;
      skip_ws();
      if (peek() == ')') fail_at(pos_ + 1, "empty argument list");
      n.args.push_back(parse_expr());
      skip_ws();
      while (peek() == ',') {
        ++pos_;
        n.args.push_back(parse_expr());
        skip_ws();
      }
      if (peek() != ')') fail_at(pos_ + 1, "expected ')' or ','");
      ++pos_;
    }
    return n;
  }

  const std::string& text_;
  std::size_t pos_ = 0;
};

double num_arg(const Node& n, const char* ctx) {
  if (!n.is_number) fail_at(n.col, std::string(ctx) + " expects a number here");
  return n.num;
}

SchedulePtr to_schedule(const Node& n) {
  auto out = std::make_shared<ScheduleExpr>();
  if (n.is_number) {
    out->kind = ScheduleExpr::Kind::Const;
    out->value = n.num;
    return out;
  }
  if (n.has_sub) fail_at(n.col, "schedule constructors take no subscript");
  if (n.name == "Const") {
    if (n.args.size() != 1) fail_at(n.col, "Const expects 1 argument");
    out->kind = ScheduleExpr::Kind::Const;
    out->value = num_arg(n.args[0], "Const");
    return out;
  }
  if (n.name == "Lin") {
    if (n.args.size() != 4) fail_at(n.col, "Lin expects 4 arguments (a,b,m,n)");
    out->kind = ScheduleExpr::Kind::Lin;
    out->a = num_arg(n.args[0], "Lin");
    out->b = num_arg(n.args[1], "Lin");
    out->m = num_arg(n.args[2], "Lin");
    out->n = num_arg(n.args[3], "Lin");
    if (out->n <= 0) fail_at(n.col, "Lin duration n must be positive");
    if (out->m < 0) fail_at(n.col, "Lin start m must be nonnegative");
    return out;
  }
  if (n.name == "Until") {
    if (n.args.size() != 3) fail_at(n.col, "Until expects 3 arguments (m,s1,s2)");
    out->kind = ScheduleExpr::Kind::Until;
    out->cutoff = num_arg(n.args[0], "Until");
    if (out->cutoff < 0) fail_at(n.col, "Until cutoff must be nonnegative");
    out->s1 = to_schedule(n.args[1]);
    out->s2 = to_schedule(n.args[2]);
    return out;
  }
  fail_at(n.col, "'" + n.name + "' is not a schedule constructor");
}

GoalPtr to_goal(const Node& n) {
  if (n.is_number) fail_at(n.col, "expected a goal constructor, got a number");
  auto out = std::make_shared<GoalExpr>();
  auto leaf = [&](GoalExpr::Kind k) {
    if (n.has_sub || !n.args.empty())
      fail_at(n.col, n.name + " takes no arguments");
    out->kind = k;
    return out;
  };
  if (n.name == "Point") return leaf(GoalExpr::Kind::Point);
  if (n.name == "Normal") return leaf(GoalExpr::Kind::Normal);
  if (n.name == "Uniform") return leaf(GoalExpr::Kind::Uniform);
  if (n.name == "Box") return leaf(GoalExpr::Kind::Box);
  if (n.name == "IFGSM") {
    out->kind = GoalExpr::Kind::IFGSM;
    if (n.has_sub && n.args.empty()) {
      out->k = n.sub;
    } else if (!n.has_sub && n.args.size() == 1) {
      double k = num_arg(n.args[0], "IFGSM");
      if (k != std::floor(k)) fail_at(n.args[0].col, "IFGSM iteration count must be an integer");
      out->k = static_cast<std::size_t>(k);
    } else {
      fail_at(n.col, "IFGSM expects its iteration count as IFGSM_k or IFGSM(k)");
    }
    if (out->k == 0) fail_at(n.col, "IFGSM iteration count must be positive");
    return out;
  }
  if (n.name == "Mix") {
    if (n.args.size() != 3) fail_at(n.col, "Mix expects 3 arguments (g1,g2,lambda)");
    out->kind = GoalExpr::Kind::Mix;
    out->g1 = to_goal(n.args[0]);
    out->g2 = to_goal(n.args[1]);
    out->sched = to_schedule(n.args[2]);
    return out;
  }
  if (n.name == "Sub") {
    if (n.args.size() != 2) fail_at(n.col, "Sub expects 2 arguments (delta,g)");
    out->kind = GoalExpr::Kind::Sub;
    out->sched = to_schedule(n.args[0]);
    out->g1 = to_goal(n.args[1]);
    return out;
  }
  if (n.name == "Sample") {
    out->kind = GoalExpr::Kind::Sample;
    if (n.args.size() == 4) {
      out->sched = to_schedule(n.args[0]);
      out->r = num_arg(n.args[1], "Sample r");
      out->g1 = to_goal(n.args[2]);
      out->g2 = to_goal(n.args[3]);
    } else if (n.args.size() == 3) {
      out->sched = to_schedule(n.args[0]);
      out->r = 1.0;
      // subscripted sampling goal carries r, e.g. Uniform_1
      if (!n.args[1].is_number && n.args[1].has_sub) {
        out->r = static_cast<double>(n.args[1].sub);
        Node gs = n.args[1];
        gs.has_sub = false;
        out->g1 = to_goal(gs);
      } else {
        out->g1 = to_goal(n.args[1]);
      }
      out->g2 = to_goal(n.args[2]);
    } else {
      fail_at(n.col, "Sample expects (delta,r,gs,gt) or (delta,gs,gt)");
    }
    if (out->r < 0 || out->r > 1) fail_at(n.col, "Sample r must lie in [0,1]");
    return out;
  }
  if (n.name == "BiSample") {
    if (n.args.size() != 2) fail_at(n.col, "BiSample expects 2 arguments (g1,g2)");
    out->kind = GoalExpr::Kind::BiSample;
    out->g1 = to_goal(n.args[0]);
    out->g2 = to_goal(n.args[1]);
    return out;
  }
  fail_at(n.col, "'" + n.name + "' is not a goal constructor");
}

std::string fmt_num(double v) {
  std::ostringstream os;
  os << std::setprecision(15) << v;
  return os.str();
}

}  // namespace

// ---------------------------------------------------------------------------
// Schedules
// ---------------------------------------------------------------------------

SchedulePtr parse_schedule(const std::string& text) {
  return to_schedule(Reader(text).parse_all());
}

double eval_schedule(const ScheduleExpr& s, double t) {
  switch (s.kind) {
    case ScheduleExpr::Kind::Const:
      return s.value;
    case ScheduleExpr::Kind::Lin:
      if (t <= s.m) return s.a;
      if (t >= s.m + s.n) return s.b;
      return s.a + (s.b - s.a) * (t - s.m) / s.n;
    case ScheduleExpr::Kind::Until:
      return t < s.cutoff ? eval_schedule(*s.s1, t) : eval_schedule(*s.s2, t - s.cutoff);
  }
  throw Error("eval_schedule: bad kind");
}

std::string print_schedule(const ScheduleExpr& s) {
  switch (s.kind) {
    case ScheduleExpr::Kind::Const:
      return fmt_num(s.value);
    case ScheduleExpr::Kind::Lin:
      return "Lin(" + fmt_num(s.a) + ", " + fmt_num(s.b) + ", " + fmt_num(s.m) + ", " +
             fmt_num(s.n) + ")";
    case ScheduleExpr::Kind::Until:
      return "Until(" + fmt_num(s.cutoff) + ", " + print_schedule(*s.s1) + ", " +
             print_schedule(*s.s2) + ")";
  }
  throw Error("print_schedule: bad kind");
}

bool schedule_equal(const ScheduleExpr& a, const ScheduleExpr& b) {
  if (a.kind != b.kind) return false;
  switch (a.kind) {
    case ScheduleExpr::Kind::Const:
      return a.value == b.value;
    case ScheduleExpr::Kind::Lin:
      return a.a == b.a && a.b == b.b && a.m == b.m && a.n == b.n;
    case ScheduleExpr::Kind::Until:
      return a.cutoff == b.cutoff && schedule_equal(*a.s1, *b.s1) && schedule_equal(*a.s2, *b.s2);
  }
  return false;
}

// ---------------------------------------------------------------------------
// Goals
// ---------------------------------------------------------------------------

GoalPtr parse_goal(const std::string& text) { return to_goal(Reader(text).parse_all()); }

std::string print_goal(const GoalExpr& g) {
  switch (g.kind) {
    case GoalExpr::Kind::Point:
      return "Point";
    case GoalExpr::Kind::Normal:
      return "Normal";
    case GoalExpr::Kind::Uniform:
      return "Uniform";
    case GoalExpr::Kind::Box:
      return "Box";
    case GoalExpr::Kind::IFGSM:
      return "IFGSM_" + std::to_string(g.k);
    case GoalExpr::Kind::Mix:
      return "Mix(" + print_goal(*g.g1) + ", " + print_goal(*g.g2) + ", " +
             print_schedule(g.sched) + ")";
    case GoalExpr::Kind::Sub:
      return "Sub(" + print_schedule(g.sched) + ", " + print_goal(*g.g1) + ")";
    case GoalExpr::Kind::Sample:
      return "Sample(" + print_schedule(g.sched) + ", " + fmt_num(g.r) + ", " +
             print_goal(*g.g1) + ", " + print_goal(*g.g2) + ")";
    case GoalExpr::Kind::BiSample:
      return "BiSample(" + print_goal(*g.g1) + ", " + print_goal(*g.g2) + ")";
  }
  throw Error("print_goal: bad kind");
}

bool goal_equal(const GoalExpr& a, const GoalExpr& b) {
  if (a.kind != b.kind) return false;
  auto sub_eq = [](const GoalPtr& x, const GoalPtr& y) {
    return (x == nullptr) == (y == nullptr) && (!x || goal_equal(*x, *y));
  };
  auto sched_eq = [](const SchedulePtr& x, const SchedulePtr& y) {
    return (x == nullptr) == (y == nullptr) && (!x || schedule_equal(*x, *y));
  };
  return a.k == b.k && a.r == b.r && sched_eq(a.sched, b.sched) && sub_eq(a.g1, b.g1) &&
         sub_eq(a.g2, b.g2);
}

namespace {

double sched01(const SchedulePtr& s, double t, const char* what) {
  double v = eval_schedule(s, t);
  if (v < 0.0 || v > 1.0) {
    std::fprintf(stderr, "warning: %s schedule evaluates to %g, clamped to [0,1]\n", what, v);
    v = std::clamp(v, 0.0, 1.0);
  }
  return v;
}

struct GoalCtx {
  const std::vector<int>& targets;
  const NetworkIR& net;
  double time;
  RngStream& rng;
  std::size_t draws = 0;
};

Tensor midpoint(const Tensor& l, const Tensor& u) {
  auto dl = l.data();
  auto du = u.data();
  std::vector<double> out(dl.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = 0.5 * (dl[i] + du[i]);
  return Tensor::from_data(l.shape(), std::move(out));
}

const Tensor& center_of(const AbstractOrProduct& d) {
  switch (d.kind) {
    case AbstractOrProduct::Kind::Point:
      return d.point;
    case AbstractOrProduct::Kind::Zono:
      return d.zono->center();
    case AbstractOrProduct::Kind::Pair:
      return center_of(*d.first);
  }
  throw Error("center_of: bad kind");
}

Tensor upper_of(const AbstractOrProduct& d) {
  switch (d.kind) {
    case AbstractOrProduct::Kind::Point:
      return d.point;
    case AbstractOrProduct::Kind::Zono:
      return d.zono->concretize().upper;
    case AbstractOrProduct::Kind::Pair:
      return upper_of(*d.first);
  }
  throw Error("upper_of: bad kind");
}

AbstractOrProduct recurse(const GoalExpr& g, const Tensor& l, const Tensor& u, GoalCtx& ctx) {
  auto dl = l.data();
  auto du = u.data();
  std::size_t B = l.dim(0), p = l.size() / B;
  AbstractOrProduct out;
  switch (g.kind) {
    case GoalExpr::Kind::Point:
      out.kind = AbstractOrProduct::Kind::Point;
      out.point = midpoint(l, u);
      return out;
    case GoalExpr::Kind::Normal:
    case GoalExpr::Kind::Uniform: {
      RngStream base = ctx.rng.split(ctx.draws++);
      std::vector<double> x(dl.size());
      for (std::size_t b = 0; b < B; ++b) {
        RngStream s = base.split(b);
        for (std::size_t i = 0; i < p; ++i) {
          std::size_t j = b * p + i;
          double v = g.kind == GoalExpr::Kind::Uniform
                         ? s.uniform(dl[j], du[j])
                         : 0.5 * (dl[j] + du[j]) + 0.5 * (du[j] - dl[j]) * s.normal();
          x[j] = std::clamp(v, dl[j], du[j]);
        }
      }
      out.kind = AbstractOrProduct::Kind::Point;
      out.point = Tensor::from_data(l.shape(), std::move(x));
      return out;
    }
    case GoalExpr::Kind::IFGSM:
      out.kind = AbstractOrProduct::Kind::Point;
      out.point = ifgsm(ctx.net, l, u, ctx.targets, g.k);
      return out;
    case GoalExpr::Kind::Box:
      out.kind = AbstractOrProduct::Kind::Zono;
      out.zono = HybridZonotope::from_box(l, u);
      return out;
    case GoalExpr::Kind::Mix:
      out.kind = AbstractOrProduct::Kind::Pair;
      out.first = std::make_shared<AbstractOrProduct>(recurse(*g.g1, l, u, ctx));
      out.second = std::make_shared<AbstractOrProduct>(recurse(*g.g2, l, u, ctx));
      return out;
    case GoalExpr::Kind::Sub: {
      double delta = sched01(g.sched, ctx.time, "Sub delta");
      std::vector<double> nl(dl.size()), nu(dl.size());
      for (std::size_t i = 0; i < dl.size(); ++i) {
        nl[i] = 0.5 * (du[i] + dl[i] - delta * (du[i] - dl[i]));
        nu[i] = 0.5 * (du[i] + dl[i] + delta * (du[i] - dl[i]));
      }
      return recurse(*g.g1, Tensor::from_data(l.shape(), std::move(nl)),
                     Tensor::from_data(l.shape(), std::move(nu)), ctx);
    }
    case GoalExpr::Kind::Sample: {
      double delta = sched01(g.sched, ctx.time, "Sample delta");
      double dprime = std::clamp(1.0 - g.r * delta, 0.0, 1.0);
      std::vector<double> sl(dl.size()), su(dl.size());
      for (std::size_t i = 0; i < dl.size(); ++i) {
        sl[i] = 0.5 * (du[i] + dl[i] - dprime * (du[i] - dl[i]));
        su[i] = 0.5 * (du[i] + dl[i] + dprime * (du[i] - dl[i]));
      }
      AbstractOrProduct ds = recurse(*g.g1, Tensor::from_data(l.shape(), std::move(sl)),
                                     Tensor::from_data(l.shape(), std::move(su)), ctx);
      auto b = center_of(ds).data();
      std::vector<double> nl(dl.size()), nu(dl.size());
      for (std::size_t i = 0; i < dl.size(); ++i) {
        double half = 0.5 * delta * (du[i] - dl[i]);
        nl[i] = b[i] - half;
        nu[i] = b[i] + half;
      }
      return recurse(*g.g2, Tensor::from_data(l.shape(), std::move(nl)),
                     Tensor::from_data(l.shape(), std::move(nu)), ctx);
    }
    case GoalExpr::Kind::BiSample: {
      AbstractOrProduct d1 = recurse(*g.g1, l, u, ctx);
      Tensor ub = upper_of(d1);
      auto x = ub.data();
      std::vector<double> nl(dl.size()), nu(dl.size());
      for (std::size_t i = 0; i < dl.size(); ++i) {
        double c = 0.5 * (dl[i] + du[i]);
        double w = std::abs(x[i] - c);
        nl[i] = c - w;
        nu[i] = c + w;
      }
      return recurse(*g.g2, Tensor::from_data(l.shape(), std::move(nl)),
                     Tensor::from_data(l.shape(), std::move(nu)), ctx);
    }
  }
  throw Error("goal_abstract: bad kind");
}

Tensor leaf_losses(const GoalExpr& g, const AbstractOrProduct& d, const NetworkIR& net,
                   const std::vector<int>& targets, double time,
                   std::vector<DeepTerm>& deep_terms) {
  switch (g.kind) {
    case GoalExpr::Kind::Point:
    case GoalExpr::Kind::Normal:
    case GoalExpr::Kind::Uniform:
    case GoalExpr::Kind::IFGSM:
      return softmax_cross_entropy(net.concrete_forward(d.point), targets);
    case GoalExpr::Kind::Box: {
      AbstractResult res = net.abstract_forward(*d.zono, time);
      for (auto& term : res.deep_terms) deep_terms.push_back(std::move(term));
      return worst_case_cross_entropy(res.out, targets);
    }
    case GoalExpr::Kind::Mix: {
      double lambda = sched01(g.sched, time, "Mix lambda");
      Tensor l1 = leaf_losses(*g.g1, *d.first, net, targets, time, deep_terms);
      Tensor l2 = leaf_losses(*g.g2, *d.second, net, targets, time, deep_terms);
      return add(mul(l1, 1.0 - lambda), mul(l2, lambda));
    }
    case GoalExpr::Kind::Sub:
      return leaf_losses(*g.g1, d, net, targets, time, deep_terms);
    case GoalExpr::Kind::Sample:
    case GoalExpr::Kind::BiSample:
      return leaf_losses(*g.g2, d, net, targets, time, deep_terms);
  }
  throw Error("training_loss: bad kind");
}

}  // namespace

AbstractOrProduct goal_abstract(const GoalExpr& g, const Tensor& l, const Tensor& u,
                                const std::vector<int>& targets, const NetworkIR& net,
                                double time, RngStream& rng) {
  if (l.shape() != u.shape() || l.shape().size() < 1)
    throw ShapeError("goal_abstract: bounds must be matching [B,p] tensors");
  auto dl = l.data();
  auto du = u.data();
  for (std::size_t i = 0; i < dl.size(); ++i)
    if (dl[i] > du[i]) throw ValueError("goal_abstract: lower bound exceeds upper bound");
  NoGradGuard ng;  // the abstraction is a constant of the parameters
  GoalCtx ctx{targets, net, time, rng, 0};
  return recurse(g, l, u, ctx);
}

Tensor worst_case_cross_entropy(const HybridZonotope& h, const std::vector<int>& targets) {
  std::size_t B = h.batch(), k = h.vars();
  if (targets.size() != B)
    throw ShapeError("worst_case_cross_entropy: one target per example required");
  Interval iv = h.concretize();
  std::vector<double> onehot(B * k, 0.0);
  for (std::size_t b = 0; b < B; ++b) {
    if (targets[b] < 0 || static_cast<std::size_t>(targets[b]) >= k)
      throw ValueError("worst_case_cross_entropy: target out of range");
    onehot[b * k + static_cast<std::size_t>(targets[b])] = 1.0;
  }
  Tensor mask = Tensor::from_data({B, k}, std::move(onehot));
  Tensor z = add(iv.upper, mul(sub(iv.lower, iv.upper), mask));
  return softmax_cross_entropy(reshape(z, {B, k}), targets);
}

Tensor training_loss(const GoalExpr& g, const NetworkIR& net, const Tensor& o,
                     const std::vector<int>& targets, double eps, double time, RngStream& rng) {
  if (eps < 0) throw ValueError("training_loss: eps must be nonnegative");
  std::size_t B = o.dim(0), p = o.size() / B;
  auto dx = o.data();
  std::vector<double> l(dx.size()), u(dx.size());
  for (std::size_t i = 0; i < dx.size(); ++i) {
    if (dx[i] < net.range_lo || dx[i] > net.range_hi)
      throw ValueError("training_loss: example value outside the data range");
    l[i] = std::max(dx[i] - eps, net.range_lo);
    u[i] = std::min(dx[i] + eps, net.range_hi);
  }
  Tensor lt, ut;
  {
    NoGradGuard ng;
    lt = Tensor::from_data({B, p}, std::move(l));
    ut = Tensor::from_data({B, p}, std::move(u));
  }
  AbstractOrProduct d = goal_abstract(g, lt, ut, targets, net, time, rng);
  std::vector<DeepTerm> deep_terms;
  Tensor loss = leaf_losses(g, d, net, targets, time, deep_terms);
  for (const auto& term : deep_terms) loss = add(loss, mul(term.loss, term.weight));
  if (!std::isfinite(loss.item()))
    throw Error("training_loss: non-finite loss for goal " + print_goal(g));
  return loss;
}

// ---------------------------------------------------------------------------
// Presets
// ---------------------------------------------------------------------------

namespace {

struct Preset {
  const char* name;
  const char* text;
  bool reconstructed;
};

// clang-format off
const Preset kPresets[] = {
  {"Baseline",        "Mix(Point, Sub(Lin(0, 1, 150, 10), Box), Lin(0, 0.5, 150, 10))", false},
  {"InSamp",          "Mix(Point, Sample(Lin(0, 1, 150, 10), 0.5, Normal, Box), Lin(0, 0.5, 150, 10))", false},
  {"InSampLPA",       "Mix(Point, Sub(Lin(0, 1, 150, 10), Sample(Lin(0, 1, 150, 10), 0.5, Normal, Box)), Lin(0, 0.5, 150, 10))", false},
  {"Adv_kIS",         "Mix(Sub(Lin(0, 1, 20, 20), IFGSM_{k}), Sample(Lin(0, 1, 150, 10), 0.5, Normal, Box), Lin(0, 0.5, 150, 10))", false},
  {"Adv_kISLPA",      "Mix(Sub(Lin(0, 1, 20, 20), IFGSM_{k}), Sub(Lin(0, 1, 150, 10), Sample(Lin(0, 1, 150, 10), 0.5, Normal, Box)), Lin(0, 0.5, 150, 10))", false},
  {"Adv_kISLPAUS",    "Mix(Sub(Lin(0, 1, 20, 20), IFGSM_{k}), Sub(Lin(0, 1, 150, 10), Sample(Lin(0, 1, 150, 10), Uniform_1, Box)), Lin(0, 0.35, 150, 10))", false},
  {"Baseline_S18",    "Mix(Point, Sub(Lin(0, 1, 200, 40), Box), Lin(0, 0.5, 200, 40))", false},
  {"InSamp_S18",      "Mix(Point, Sample(Lin(0, 1, 200, 40), 0.5, Normal, Box), Lin(0, 0.5, 200, 40))", false},
  {"Adv_kIS_S18",     "Mix(Sub(Lin(0, 1, 20, 20), IFGSM_{k}), Sample(Lin(0, 1, 200, 40), 0.5, Normal, Box), Lin(0, 0.5, 200, 40))", false},
  {"Adv_kISLPA_R18",  "Mix(Sub(Lin(0, 1, 20, 20), IFGSM_{k}), Sub(Lin(0, 1, 200, 40), Sample(Lin(0, 1, 200, 40), 1, Uniform, Box)), Lin(0, 0.5, 200, 40))", false},
  {"InSampLPA_R34",   "Mix(Point, Sub(Lin(0, 1, 200, 40), Sample(Lin(0, 1, 200, 40), 1, Uniform, Box)), Lin(0, 0.5, 200, 40))", false},
  {"Adv_kISLPA_D100", "Mix(IFGSM_{k}, Sub(Lin(0, 1, 150, 50), Sample(Lin(0, 1, 150, 50), 1, Uniform, Box)), Lin(0, 0.5, 150, 50))", false},
  {"BiAdv_L",         "Mix(IFGSM_2, BiSample(Sub(Lin(0, 1, 150, 30), IFGSM_3), Box), Lin(0, 0.6, 200, 30))", true},
};
// clang-format on

}  // namespace

std::vector<std::string> preset_names() {
  std::vector<std::string> out;
  for (const auto& p : kPresets) out.push_back(p.name);
  return out;
}

bool preset_reconstructed(const std::string& name) {
  for (const auto& p : kPresets)
    if (name == p.name) return p.reconstructed;
  throw ValueError("unknown preset: " + name);
}

std::string preset_text(const std::string& name, std::size_t k) {
  for (const auto& p : kPresets) {
    if (name != p.name) continue;
    std::string text = p.text;
    std::string needle = "{k}";
    for (std::size_t pos = text.find(needle); pos != std::string::npos;
         pos = text.find(needle, pos))
      text.replace(pos, needle.size(), std::to_string(k));
    return text;
  }
  throw ValueError("unknown preset: " + name);
}

}  // namespace hzcert
