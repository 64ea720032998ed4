#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdio>
#include <filesystem>
#include <sstream>

#include "hzcert/trainer.hpp"

using namespace hzcert;

namespace {

NetworkIR blob_net() {
  return parse_network("input d=2\nlinear out=16\nrelu\nlinear out=2\n");
}

TrainConfig fast_config() {
  TrainConfig cfg;
  cfg.goal_text = "Point";
  cfg.epsilon = 0.0;
  cfg.epochs = 8;
  cfg.batch = 20;
  cfg.lr = 0.01;
  cfg.seed = 1;
  cfg.eval_subset = 40;
  return cfg;
}

}  // namespace

TEST_CASE("lr schedule hand values") {
  std::vector<double> ms{10, 20};
  CHECK(lr_at(0.1, ms, 0.1, 5) == doctest::Approx(0.1));
  CHECK(lr_at(0.1, ms, 0.1, 15) == doctest::Approx(0.01));
  CHECK(lr_at(0.1, ms, 0.1, 25) == doctest::Approx(0.001));
  CHECK(lr_at(0.1, ms, 0.1, 10) == doctest::Approx(0.01));  // milestone reached
  CHECK(lr_at(0.5, {}, 0.1, 100) == doctest::Approx(0.5));
}

TEST_CASE("point training separates the blobs") {
  Dataset data = synthetic_blobs(300, 0.06, 2);
  auto [train_d, test_d] = split_dataset(data, 0.2);
  NetworkIR net = blob_net();
  net.init_params(3);
  TrainConfig cfg = fast_config();
  cfg.epochs = 20;
  RunReport rep = train(net, train_d, test_d, cfg);
  REQUIRE(rep.rows.size() == 20);
  CHECK(rep.rows.back().standard >= 0.99);
  // eps 0: attacked and verified collapse onto standard accuracy
  CHECK(rep.rows.back().attacked == doctest::Approx(rep.rows.back().standard));
  CHECK(rep.rows.back().verified == doctest::Approx(rep.rows.back().standard));
  // loss decreased substantially
  CHECK(rep.rows.back().loss < 0.5 * rep.rows.front().loss);
}

TEST_CASE("accuracy ordering holds on every logged row") {
  Dataset data = synthetic_blobs(240, 0.07, 5);
  auto [train_d, test_d] = split_dataset(data, 0.25);
  NetworkIR net = blob_net();
  net.init_params(7);
  TrainConfig cfg = fast_config();
  cfg.goal_text = "Mix(Point, Box, 0.3)";
  cfg.epsilon = 0.05;
  cfg.epochs = 6;
  RunReport rep = train(net, train_d, test_d, cfg);
  for (const auto& row : rep.rows) {
    CHECK(row.verified <= row.attacked + 1e-12);
    CHECK(row.attacked <= row.standard + 1e-12);
  }
}

TEST_CASE("training is deterministic in the seed") {
  Dataset data = synthetic_blobs(200, 0.06, 9);
  auto [train_d, test_d] = split_dataset(data, 0.2);
  TrainConfig cfg = fast_config();
  cfg.epochs = 4;

  NetworkIR a = blob_net();
  a.init_params(11);
  RunReport ra = train(a, train_d, test_d, cfg);
  NetworkIR b = blob_net();
  b.init_params(11);
  RunReport rb = train(b, train_d, test_d, cfg);
  REQUIRE(ra.rows.size() == rb.rows.size());
  for (std::size_t i = 0; i < ra.rows.size(); ++i) {
    REQUIRE(ra.rows[i].loss == rb.rows[i].loss);  // bit-identical
    CHECK(ra.rows[i].standard == rb.rows[i].standard);
  }
  for (std::size_t i = 0; i < a.params.size(); ++i)
    for (std::size_t j = 0; j < a.params[i].size(); ++j)
      REQUIRE(a.params[i].at(j) == b.params[i].at(j));
}

TEST_CASE("checkpoints reload to identical verified robustness") {
  Dataset data = synthetic_blobs(160, 0.06, 13);
  auto [train_d, test_d] = split_dataset(data, 0.25);
  std::string dir = "/tmp/hzcert_ckpt_" + std::to_string(getpid());
  std::filesystem::create_directories(dir);

  NetworkIR net = blob_net();
  net.init_params(17);
  TrainConfig cfg = fast_config();
  cfg.epochs = 5;
  cfg.epsilon = 0.03;
  cfg.goal_text = "Mix(Point, Box, 0.2)";
  cfg.out_dir = dir;
  RunReport rep = train(net, train_d, test_d, cfg);
  REQUIRE(!rep.last_checkpoint.empty());
  REQUIRE(!rep.best_checkpoint.empty());

  NetworkIR fresh = blob_net();
  fresh.init_params(999);
  load_weights(fresh, rep.last_checkpoint);
  VerifySummary s1 = verified_robustness(net, test_d, 0.03, Domain::HZono);
  VerifySummary s2 = verified_robustness(fresh, test_d, 0.03, Domain::HZono);
  CHECK(s1.verified == s2.verified);
  for (std::size_t i = 0; i < s1.certificates.size(); ++i)
    REQUIRE(s1.certificates[i].margin == s2.certificates[i].margin);

  std::filesystem::remove_all(dir);
}

TEST_CASE("jsonl rows are emitted per epoch") {
  Dataset data = synthetic_blobs(120, 0.06, 19);
  auto [train_d, test_d] = split_dataset(data, 0.25);
  NetworkIR net = blob_net();
  net.init_params(23);
  TrainConfig cfg = fast_config();
  cfg.epochs = 3;
  std::ostringstream jsonl;
  RunReport rep = train(net, train_d, test_d, cfg, &jsonl);
  std::istringstream lines(jsonl.str());
  std::string line;
  int count = 0;
  while (std::getline(lines, line)) {
    CHECK(line.find("\"epoch\":") != std::string::npos);
    CHECK(line.find("\"loss\":") != std::string::npos);
    CHECK(line.find("\"standard\":") != std::string::npos);
    CHECK(line.find("\"verified\":") != std::string::npos);
    ++count;
  }
  CHECK(count == 3);
  CHECK(epoch_row_json(rep.rows[0]).find("\"attacked\":") != std::string::npos);
}

TEST_CASE("config validation") {
  Dataset data = synthetic_blobs(40, 0.06, 21);
  NetworkIR net = blob_net();
  net.init_params(1);
  TrainConfig cfg = fast_config();
  cfg.optimizer = "bogus";
  CHECK_THROWS_AS(train(net, data, data, cfg), ValueError);
  cfg = fast_config();
  cfg.goal_text = "Nope(";
  CHECK_THROWS_AS(train(net, data, data, cfg), ParseError);
}
