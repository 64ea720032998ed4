#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "hzcert/certifier.hpp"
#include "hzcert/data.hpp"
#include "hzcert/dsl.hpp"
#include "hzcert/network.hpp"

namespace hzcert {

struct TrainConfig {
  std::string goal_text = "Point";
  double epsilon = 0.0;
  std::size_t epochs = 1;
  std::size_t batch = 50;
  std::string optimizer = "adam";  // adam | sgd
  double lr = 1e-3;
  double momentum = 0.9;
  double l2 = 0.0;
  std::vector<double> lr_milestones;  // epochs, ascending
  double lr_multiplier = 0.1;
  std::uint64_t seed = 0;
  std::size_t eval_subset = 500;  // examples per epoch for attack/verify metrics
  Domain eval_domain = Domain::HZono;
  std::string out_dir;  // empty: no checkpoints
  int threads = 1;
};

struct EpochRow {
  std::size_t epoch = 0;
  double t = 0;
  double loss = 0;
  double standard = 0;
  double attacked = 0;
  double verified = 0;
  double seconds = 0;
};

struct RunReport {
  std::vector<EpochRow> rows;
  double best_verified = 0;
  std::string last_checkpoint, best_checkpoint;
};

double lr_at(double lr0, const std::vector<double>& milestones, double multiplier, double epoch);

// Trains net in place. Emits one JSON object per epoch to `jsonl` when given.
RunReport train(NetworkIR& net, const Dataset& train_data, const Dataset& test_data,
                const TrainConfig& config, std::ostream* jsonl = nullptr);

std::string epoch_row_json(const EpochRow& row);

}  // namespace hzcert
