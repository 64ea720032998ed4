#include "hzcert/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <ostream>
#include <sstream>

#include "hzcert/attacks.hpp"
#include "hzcert/optim.hpp"

namespace hzcert {

double lr_at(double lr0, const std::vector<double>& milestones, double multiplier, double epoch) {
  for (std::size_t i = 1; i < milestones.size(); ++i)
    if (milestones[i] < milestones[i - 1]) throw ValueError("lr milestones must be ascending");
  double lr = lr0;
  for (double m : milestones)
    if (m <= epoch) lr *= multiplier;
  return lr;
}

namespace {

// URBG adapter so std::shuffle can consume an RngStream.
struct RngUrbg {
  RngStream& s;
  using result_type = std::uint64_t;
  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~0ull; }
  result_type operator()() { return s.next_u64(); }
};

struct EvalMetrics {
  double standard = 0, attacked = 0, verified = 0;
};

EvalMetrics evaluate(const NetworkIR& net, const Dataset& test, const TrainConfig& cfg) {
  NoGradGuard ng;
  std::size_t n = std::min(test.count(), cfg.eval_subset == 0 ? test.count() : cfg.eval_subset);
  if (n == 0) return {};
  std::size_t std_ok = 0, atk_ok = 0, ver_ok = 0;
  AttackConfig atk;
  for (std::size_t i = 0; i < n; ++i) {
    Tensor x = test.example(i);
    int label = test.labels[i];
    Tensor logits_t = net.concrete_forward(x);
    auto logits = logits_t.data();
    int pred = static_cast<int>(std::max_element(logits.begin(), logits.end()) - logits.begin());
    bool correct = pred == label;
    if (correct) ++std_ok;
    if (correct && cfg.epsilon > 0) {
      Tensor xa = mifgsm(net, x, {label}, cfg.epsilon, atk.momentum, atk.iterations, atk.step,
                         test.lo, test.hi);
      Tensor za_t = net.concrete_forward(xa);
      auto za = za_t.data();
      int pa = static_cast<int>(std::max_element(za.begin(), za.end()) - za.begin());
      if (pa == label) ++atk_ok;
    } else if (correct) {
      ++atk_ok;
    }
    Certificate cert = verify_example(net, x, label, cfg.epsilon, cfg.eval_domain);
    if (cert.verified && cert.correct) ++ver_ok;
  }
  double dn = static_cast<double>(n);
  return {std_ok / dn, atk_ok / dn, ver_ok / dn};
}

}  // namespace

std::string epoch_row_json(const EpochRow& r) {
  std::ostringstream os;
  os << "{\"epoch\":" << r.epoch << ",\"t\":" << r.t << ",\"loss\":" << r.loss
     << ",\"standard\":" << r.standard << ",\"attacked\":" << r.attacked
     << ",\"verified\":" << r.verified << ",\"seconds\":" << r.seconds << "}";
  return os.str();
}

RunReport train(NetworkIR& net, const Dataset& train_data, const Dataset& test_data,
                const TrainConfig& cfg, std::ostream* jsonl) {
  if (cfg.batch == 0) throw ValueError("train: batch size must be positive");
  if (cfg.lr <= 0) throw ValueError("train: lr must be positive");
  if (cfg.epsilon < 0) throw ValueError("train: eps must be nonnegative");
  if (cfg.optimizer != "adam" && cfg.optimizer != "sgd")
    throw ValueError("train: unknown optimizer '" + cfg.optimizer + "'");
  if (train_data.count() == 0) throw ValueError("train: empty training set");
  net.range_lo = train_data.lo;
  net.range_hi = train_data.hi;

  GoalPtr goal = parse_goal(cfg.goal_text);
  AdamState adam;
  SgdState sgd;
  RngStream root(cfg.seed);
  RunReport report;

  std::size_t N = train_data.count();
  std::size_t processed = 0;
  int nan_streak = 0;
  std::size_t global_batch = 0;

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    auto start = std::chrono::steady_clock::now();
    std::vector<std::size_t> order(N);
    std::iota(order.begin(), order.end(), 0);
    RngStream shuffle_stream = root.split(2 * epoch);
    RngUrbg urbg{shuffle_stream};
    std::shuffle(order.begin(), order.end(), urbg);

    double loss_sum = 0;
    std::size_t loss_batches = 0;

    for (std::size_t off = 0; off < N; off += cfg.batch, ++global_batch) {
      std::size_t take = std::min(cfg.batch, N - off);
      std::vector<std::size_t> idx(order.begin() + off, order.begin() + off + take);
      processed += take;
      double t = static_cast<double>(processed) / static_cast<double>(N);

      Tensor x = train_data.batch(idx);
      std::vector<int> targets(take);
      for (std::size_t i = 0; i < take; ++i) targets[i] = train_data.labels[idx[i]];

      zero_grads(net.params);
      RngStream goal_rng = root.split(2 * epoch + 1).split(global_batch);
      bool ok = true;
      double loss_val = 0;
      try {
        Tensor loss = training_loss(*goal, net, x, targets, cfg.epsilon, t, goal_rng);
        if (cfg.l2 > 0) {
          Tensor reg = Tensor::scalar(0.0);
          for (const auto& p : net.params) reg = add(reg, sum(mul(p, p)));
          loss = add(loss, mul(reg, cfg.l2));
        }
        loss_val = loss.item();
        loss.backward();
        double lr = lr_at(cfg.lr, cfg.lr_milestones, cfg.lr_multiplier, t);
        if (cfg.optimizer == "adam")
          adam_step(net.params, adam, lr);
        else
          sgd_momentum_step(net.params, sgd, lr, cfg.momentum);
        quantize_params_f32(net.params);
      } catch (const Error& e) {
        // skip the step on numeric blow-ups, propagate contract errors
        if (std::string(e.what()).find("non-finite") == std::string::npos) throw;
        ok = false;
      }
      if (!ok || !std::isfinite(loss_val)) {
        if (++nan_streak >= 2)
          throw Error(
              "train: non-finite loss twice in a row at t=" + std::to_string(t) +
              "; the abstract bounds likely overflowed - lower eps, shrink the "
              "learning rate, or add decorrelation/DeepLoss layers");
        continue;
      }
      nan_streak = 0;
      loss_sum += loss_val;
      ++loss_batches;
    }

    EvalMetrics m = evaluate(net, test_data, cfg);
    EpochRow row;
    row.epoch = epoch + 1;
    row.t = static_cast<double>(processed) / static_cast<double>(N);
    row.loss = loss_batches > 0 ? loss_sum / static_cast<double>(loss_batches) : 0.0;
    row.standard = m.standard;
    row.attacked = m.attacked;
    row.verified = m.verified;
    row.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    report.rows.push_back(row);
    if (jsonl) *jsonl << epoch_row_json(row) << "\n" << std::flush;

    if (!cfg.out_dir.empty()) {
      report.last_checkpoint = cfg.out_dir + "/last.dfai";
      save_weights(net, report.last_checkpoint);
      if (row.verified >= report.best_verified) {
        report.best_verified = row.verified;
        report.best_checkpoint = cfg.out_dir + "/best.dfai";
        save_weights(net, report.best_checkpoint);
      }
    } else {
      report.best_verified = std::max(report.best_verified, row.verified);
    }
  }
  return report;
}

}  // namespace hzcert
