#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>

#include "hzcert/capi.h"

namespace {

struct Str {
  char* s = nullptr;
  ~Str() { hz_string_free(s); }
  std::string view() const { return s ? s : ""; }
};

}  // namespace

TEST_CASE("network lifecycle through the c api") {
  hz_network* net = nullptr;
  REQUIRE(hz_network_parse("input d=4\nlinear out=8\nrelu\nlinear out=2\n", &net) == HZ_OK);
  REQUIRE(net != nullptr);
  CHECK(hz_network_init(net, 42) == HZ_OK);

  size_t params = 0;
  CHECK(hz_network_param_count(net, &params) == HZ_OK);
  CHECK(params == 4 * 8 + 8 + 8 * 2 + 2);

  Str printed;
  CHECK(hz_network_print(net, &printed.s) == HZ_OK);
  CHECK(printed.view().find("linear out=8") != std::string::npos);
  Str trace;
  CHECK(hz_network_shape_trace(net, &trace.s) == HZ_OK);
  CHECK(trace.view().find("[4]") != std::string::npos);

  std::string path = "/tmp/hzcert_capi_" + std::to_string(getpid()) + ".dfai";
  CHECK(hz_network_save_weights(net, path.c_str()) == HZ_OK);

  hz_network* other = nullptr;
  REQUIRE(hz_network_parse(printed.s, &other) == HZ_OK);
  CHECK(hz_network_init(other, 7) == HZ_OK);
  CHECK(hz_network_load_weights(other, path.c_str()) == HZ_OK);
  Str p2;
  CHECK(hz_network_print(other, &p2.s) == HZ_OK);
  CHECK(p2.view() == printed.view());

  CHECK(hz_network_set_range(net, -1.0, 1.0) == HZ_OK);
  CHECK(hz_network_set_range(net, 1.0, -1.0) == HZ_ERR_VALUE);

  std::remove(path.c_str());
  hz_network_free(net);
  hz_network_free(other);
}

TEST_CASE("status codes and last error") {
  hz_network* net = nullptr;
  CHECK(hz_network_parse("input d=4\nbroken\n", &net) == HZ_ERR_PARSE);
  CHECK(net == nullptr);
  std::string msg = hz_last_error();
  CHECK(msg.find("line 2") != std::string::npos);

  CHECK(hz_network_parse_file("/nonexistent/net.txt", &net) == HZ_ERR_IO);
  CHECK(std::strlen(hz_last_error()) > 0);

  CHECK(hz_network_parse(nullptr, &net) == HZ_ERR_VALUE);

  hz_dataset* d = nullptr;
  CHECK(hz_dataset_synthetic("nonsense", 10, 0.1, 1, &d) == HZ_ERR_VALUE);
  CHECK(d == nullptr);

  double v = 0;
  CHECK(hz_dsl_eval_schedule("Lin(0,1", 0.0, &v) == HZ_ERR_PARSE);
  CHECK(std::string(hz_last_error()).find("column") != std::string::npos);
}

TEST_CASE("dsl helpers") {
  Str goal;
  REQUIRE(hz_dsl_print_goal("Mix(Point,Box,0.5)", &goal.s) == HZ_OK);
  CHECK(goal.view().find("Mix(Point, Box") != std::string::npos);

  Str sched;
  REQUIRE(hz_dsl_print_schedule("Lin(0,1,150,10)", &sched.s) == HZ_OK);
  CHECK(sched.view() == "Lin(0, 1, 150, 10)");

  double v = 0;
  REQUIRE(hz_dsl_eval_schedule("Lin(0,1,150,10)", 155.0, &v) == HZ_OK);
  CHECK(v == doctest::Approx(0.5));

  Str names;
  REQUIRE(hz_dsl_preset_names(&names.s) == HZ_OK);
  CHECK(names.view().find("Baseline") != std::string::npos);
  CHECK(names.view().find("BiAdv_L") != std::string::npos);

  Str preset;
  REQUIRE(hz_dsl_preset("Adv_kIS", 5, &preset.s) == HZ_OK);
  CHECK(preset.view().find("IFGSM_5") != std::string::npos);
  Str bad;
  CHECK(hz_dsl_preset("NoSuch", 3, &bad.s) == HZ_ERR_VALUE);
}

TEST_CASE("datasets, training, verification, attack through the c api") {
  hz_dataset* full = nullptr;
  REQUIRE(hz_dataset_synthetic("blobs", 200, 0.06, 3, &full) == HZ_OK);
  CHECK(hz_dataset_count(full) == 200);

  hz_dataset* train_d = nullptr;
  hz_dataset* test_d = nullptr;
  REQUIRE(hz_dataset_split(full, 0.2, &train_d, &test_d) == HZ_OK);
  CHECK(hz_dataset_count(train_d) == 160);
  CHECK(hz_dataset_count(test_d) == 40);

  hz_network* net = nullptr;
  REQUIRE(hz_network_parse("input d=2\nlinear out=16\nrelu\nlinear out=2\n", &net) == HZ_OK);
  REQUIRE(hz_network_init(net, 5) == HZ_OK);

  std::string jsonl = "/tmp/hzcert_capi_rows_" + std::to_string(getpid()) + ".jsonl";
  const char* config = R"({"goal":"Point","epochs":10,"batch":20,"lr":0.01,"seed":1,
                           "eval_subset":40})";
  Str summary;
  REQUIRE(hz_train(net, train_d, test_d, config, jsonl.c_str(), &summary.s) == HZ_OK);
  CHECK(summary.view().find("\"epochs\":10") != std::string::npos);
  CHECK(summary.view().find("\"best_verified\":") != std::string::npos);
  std::ifstream rows(jsonl);
  REQUIRE(rows.good());
  int count = 0;
  std::string line;
  while (std::getline(rows, line)) ++count;
  CHECK(count == 10);

  Str vsum;
  REQUIRE(hz_verify(net, test_d, 0.02, "hzono", 0, 2, nullptr, &vsum.s) == HZ_OK);
  CHECK(vsum.view().find("\"total\":40") != std::string::npos);
  CHECK(vsum.view().find("\"verified\":") != std::string::npos);
  Str bad;
  CHECK(hz_verify(net, test_d, 0.02, "wat", 0, 1, nullptr, &bad.s) == HZ_ERR_VALUE);

  Str asum;
  REQUIRE(hz_attack(net, test_d, 0.02, 0, &asum.s) == HZ_OK);
  CHECK(asum.view().find("\"standard_accuracy\":") != std::string::npos);
  CHECK(asum.view().find("\"attacked_accuracy\":") != std::string::npos);

  // required config key missing
  Str nogoal;
  CHECK(hz_train(net, train_d, test_d, "{}", nullptr, &nogoal.s) == HZ_ERR_VALUE);

  std::remove(jsonl.c_str());
  hz_network_free(net);
  hz_dataset_free(full);
  hz_dataset_free(train_d);
  hz_dataset_free(test_d);
}
