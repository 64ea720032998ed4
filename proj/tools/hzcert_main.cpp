// Command-line front end. Talks to the core library exclusively through the
// C API so it doubles as a smoke test of the shared-library surface.

#include <cstdio>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hzcert/capi.h"

namespace {

struct StringOut {
  char* s = nullptr;
  ~StringOut() { hz_string_free(s); }
};

[[noreturn]] void die(const std::string& msg) {
  std::fprintf(stderr, "error: %s\n", msg.c_str());
  std::exit(1);
}

void check(hz_status st) {
  if (st != HZ_OK) die(hz_last_error());
}

struct NetGuard {
  hz_network* net = nullptr;
  ~NetGuard() { hz_network_free(net); }
};

struct DataGuard {
  hz_dataset* d = nullptr;
  ~DataGuard() { hz_dataset_free(d); }
};

struct DatasetFlags {
  std::string images, labels, test_images, test_labels;
  std::string synthetic;
  std::size_t n = 2000;
  double noise = 0.05;
  double test_fraction = 0.2;
  std::uint64_t seed = 0;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--images", images, "IDX image file");
    cmd->add_option("--labels", labels, "IDX label file");
    cmd->add_option("--test-images", test_images, "IDX image file for the test split");
    cmd->add_option("--test-labels", test_labels, "IDX label file for the test split");
    cmd->add_option("--synthetic", synthetic, "synthetic dataset: blobs or moons");
    cmd->add_option("--n", n, "synthetic dataset size");
    cmd->add_option("--noise", noise, "synthetic dataset noise");
    cmd->add_option("--test-fraction", test_fraction, "held-out fraction when splitting");
  }

  // loads (train,test); test may be null when want_test is false
  void load(DataGuard& train, DataGuard& test, bool want_test) const {
    if (!synthetic.empty()) {
      DataGuard all;
      check(hz_dataset_synthetic(synthetic.c_str(), n, noise, seed, &all.d));
      if (want_test) {
        check(hz_dataset_split(all.d, test_fraction, &train.d, &test.d));
      } else {
        train.d = all.d;
        all.d = nullptr;
      }
      return;
    }
    if (images.empty() || labels.empty())
      die("no dataset: pass --synthetic or --images/--labels");
    check(hz_dataset_load_idx(images.c_str(), labels.c_str(), &train.d));
    if (want_test) {
      if (!test_images.empty() && !test_labels.empty())
        check(hz_dataset_load_idx(test_images.c_str(), test_labels.c_str(), &test.d));
      else
        die("train needs a test split: pass --test-images/--test-labels");
    }
  }
};

std::string resolve_goal(const std::string& goal, const std::string& preset, std::size_t k) {
  if (!goal.empty() && !preset.empty()) die("pass either --goal or --preset, not both");
  if (!goal.empty()) return goal;
  if (!preset.empty()) {
    StringOut s;
    check(hz_dsl_preset(preset.c_str(), k, &s.s));
    return s.s;
  }
  die("pass --goal or --preset");
}

std::string json_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '"' || c == '\\') out.push_back('\\');
    out.push_back(c);
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Training and certification of provably robust networks"};
  app.require_subcommand(1);

  // ---- train ----
  auto* train = app.add_subcommand("train", "train a network with a DSL goal");
  std::string net_file, weights, goal, preset, out_dir, report_file, domain = "hzono";
  std::string optimizer = "adam";
  double epsilon = 0, lr = 1e-3, l2 = 0, momentum = 0.9, lr_multiplier = 0.1;
  std::size_t epochs = 1, batch = 50, eval_subset = 500, preset_k = 3, limit = 0;
  std::uint64_t seed = 0;
  int threads = 1;
  std::vector<double> milestones;
  DatasetFlags train_data;
  train->add_option("--net", net_file, "network description file")->required();
  train->add_option("--weights", weights, "initial weights (otherwise seeded init)");
  train->add_option("--goal", goal, "goal DSL text");
  train->add_option("--preset", preset, "named training scheme");
  train->add_option("--k", preset_k, "IFGSM iterations substituted into presets");
  train->add_option("--epsilon", epsilon, "training width");
  train->add_option("--epochs", epochs);
  train->add_option("--batch", batch);
  train->add_option("--optimizer", optimizer, "adam|sgd");
  train->add_option("--lr", lr);
  train->add_option("--momentum", momentum);
  train->add_option("--l2", l2, "L2 regularization coefficient");
  train->add_option("--lr-milestones", milestones, "epochs at which lr is scaled");
  train->add_option("--lr-multiplier", lr_multiplier);
  train->add_option("--seed", seed);
  train->add_option("--eval-subset", eval_subset, "examples per epoch for attack/verify metrics");
  train->add_option("--domain", domain, "evaluation domain: box|hzono");
  train->add_option("--threads", threads);
  train->add_option("--out", out_dir, "checkpoint directory");
  train->add_option("--report", report_file, "JSON-lines per-epoch report path");
  train_data.add_to(train);

  // ---- verify ----
  auto* verify = app.add_subcommand("verify", "certify robustness over a dataset");
  std::string v_net, v_weights, v_domain = "hzono", v_out;
  double v_eps = 0;
  std::size_t v_limit = 0;
  int v_threads = 1;
  std::uint64_t v_seed = 0;
  DatasetFlags verify_data;
  verify->add_option("--net", v_net)->required();
  verify->add_option("--weights", v_weights)->required();
  verify->add_option("--epsilon", v_eps)->required();
  verify->add_option("--domain", v_domain, "box|hzono");
  verify->add_option("--limit", v_limit, "verify only the first N examples");
  verify->add_option("--threads", v_threads);
  verify->add_option("--seed", v_seed);
  verify->add_option("--out", v_out, "per-example certificate JSON-lines path");
  verify_data.add_to(verify);

  // ---- attack ----
  auto* attack = app.add_subcommand("attack", "report attacked accuracy (MI-FGSM)");
  std::string a_net, a_weights;
  double a_eps = 0;
  std::size_t a_limit = 0;
  std::uint64_t a_seed = 0;
  DatasetFlags attack_data;
  attack->add_option("--net", a_net)->required();
  attack->add_option("--weights", a_weights)->required();
  attack->add_option("--epsilon", a_eps)->required();
  attack->add_option("--limit", a_limit);
  attack->add_option("--seed", a_seed);
  attack_data.add_to(attack);

  // ---- dsl ----
  auto* dsl = app.add_subcommand("dsl", "parse/print goals and evaluate schedules");
  std::string d_goal, d_preset, d_eval;
  std::size_t d_k = 3;
  double d_t = 0;
  bool d_list = false;
  dsl->add_option("--goal", d_goal, "goal text to parse and print");
  dsl->add_option("--preset", d_preset, "print a preset's goal text");
  dsl->add_option("--k", d_k, "IFGSM iterations substituted into presets");
  dsl->add_option("--eval-schedule", d_eval, "schedule text to evaluate");
  dsl->add_option("--t", d_t, "fractional epoch for --eval-schedule");
  dsl->add_flag("--list-presets", d_list);

  // ---- net-check ----
  auto* netcheck = app.add_subcommand("net-check", "parse a network and print its shape trace");
  std::string n_net;
  netcheck->add_option("--net", n_net)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return 2;
  }

  if (train->parsed()) {
    train_data.seed = seed;
    NetGuard net;
    check(hz_network_parse_file(net_file.c_str(), &net.net));
    check(hz_network_init(net.net, seed));
    if (!weights.empty()) check(hz_network_load_weights(net.net, weights.c_str()));
    DataGuard tr, te;
    train_data.load(tr, te, true);
    (void)limit;
    std::string cfg = "{\"goal\":\"" + json_escape(resolve_goal(goal, preset, preset_k)) +
                      "\",\"epsilon\":" + std::to_string(epsilon) +
                      ",\"epochs\":" + std::to_string(epochs) +
                      ",\"batch\":" + std::to_string(batch) + ",\"optimizer\":\"" + optimizer +
                      "\",\"lr\":" + std::to_string(lr) + ",\"momentum\":" +
                      std::to_string(momentum) + ",\"l2\":" + std::to_string(l2) +
                      ",\"lr_multiplier\":" + std::to_string(lr_multiplier) +
                      ",\"seed\":" + std::to_string(seed) +
                      ",\"eval_subset\":" + std::to_string(eval_subset) + ",\"domain\":\"" +
                      domain + "\",\"threads\":" + std::to_string(threads) + ",\"out_dir\":\"" +
                      json_escape(out_dir) + "\",\"lr_milestones\":[";
    for (std::size_t i = 0; i < milestones.size(); ++i)
      cfg += (i ? "," : "") + std::to_string(milestones[i]);
    cfg += "]}";
    StringOut summary;
    check(hz_train(net.net, tr.d, te.d, cfg.c_str(),
                   report_file.empty() ? nullptr : report_file.c_str(), &summary.s));
    std::printf("%s\n", summary.s);
    return 0;
  }

  if (verify->parsed()) {
    verify_data.seed = v_seed;
    NetGuard net;
    check(hz_network_parse_file(v_net.c_str(), &net.net));
    check(hz_network_load_weights(net.net, v_weights.c_str()));
    DataGuard data, unused;
    verify_data.load(data, unused, false);
    StringOut summary;
    check(hz_verify(net.net, data.d, v_eps, v_domain.c_str(), v_limit, v_threads,
                    v_out.empty() ? nullptr : v_out.c_str(), &summary.s));
    std::printf("%s\n", summary.s);
    return 0;
  }

  if (attack->parsed()) {
    attack_data.seed = a_seed;
    NetGuard net;
    check(hz_network_parse_file(a_net.c_str(), &net.net));
    check(hz_network_load_weights(net.net, a_weights.c_str()));
    DataGuard data, unused;
    attack_data.load(data, unused, false);
    StringOut summary;
    check(hz_attack(net.net, data.d, a_eps, a_limit, &summary.s));
    std::printf("%s\n", summary.s);
    return 0;
  }

  if (dsl->parsed()) {
    bool did = false;
    if (d_list) {
      StringOut names;
      check(hz_dsl_preset_names(&names.s));
      std::printf("%s", names.s);
      did = true;
    }
    if (!d_preset.empty()) {
      StringOut text;
      check(hz_dsl_preset(d_preset.c_str(), d_k, &text.s));
      std::printf("%s\n", text.s);
      did = true;
    }
    if (!d_goal.empty()) {
      StringOut text;
      check(hz_dsl_print_goal(d_goal.c_str(), &text.s));
      std::printf("%s\n", text.s);
      did = true;
    }
    if (!d_eval.empty()) {
      double v = 0;
      check(hz_dsl_eval_schedule(d_eval.c_str(), d_t, &v));
      std::printf("%g\n", v);
      did = true;
    }
    if (!did) die("dsl: pass --goal, --preset, --eval-schedule, or --list-presets");
    return 0;
  }

  if (netcheck->parsed()) {
    NetGuard net;
    check(hz_network_parse_file(n_net.c_str(), &net.net));
    StringOut trace;
    check(hz_network_shape_trace(net.net, &trace.s));
    std::printf("%s", trace.s);
    return 0;
  }

  return 2;
}
