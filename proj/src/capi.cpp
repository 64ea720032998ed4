#include "hzcert/capi.h"

#include <algorithm>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "hzcert/attacks.hpp"
#include "hzcert/certifier.hpp"
#include "hzcert/data.hpp"
#include "hzcert/dsl.hpp"
#include "hzcert/network.hpp"
#include "hzcert/trainer.hpp"

using nlohmann::json;

namespace {

thread_local std::string g_last_error;

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

template <typename F>
hz_status guarded(F&& f) {
  try {
    f();
    g_last_error.clear();
    return HZ_OK;
  } catch (const hzcert::ParseError& e) {
    g_last_error = e.what();
    return HZ_ERR_PARSE;
  } catch (const hzcert::ShapeError& e) {
    g_last_error = e.what();
    return HZ_ERR_SHAPE;
  } catch (const hzcert::ValueError& e) {
    g_last_error = e.what();
    return HZ_ERR_VALUE;
  } catch (const hzcert::IoError& e) {
    g_last_error = e.what();
    return HZ_ERR_IO;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return HZ_ERR_RUNTIME;
  }
}

}  // namespace

struct hz_network {
  hzcert::NetworkIR net;
};

struct hz_dataset {
  hzcert::Dataset data;
};

extern "C" {

const char* hz_last_error(void) { return g_last_error.c_str(); }

void hz_string_free(char* s) { std::free(s); }

hz_status hz_network_parse(const char* text, hz_network** out) {
  return guarded([&] {
    if (!text || !out) throw hzcert::ValueError("hz_network_parse: null argument");
    *out = new hz_network{hzcert::parse_network(text)};
  });
}

hz_status hz_network_parse_file(const char* path, hz_network** out) {
  return guarded([&] {
    if (!path || !out) throw hzcert::ValueError("hz_network_parse_file: null argument");
    *out = new hz_network{hzcert::parse_network_file(path)};
  });
}

void hz_network_free(hz_network* net) { delete net; }

hz_status hz_network_init(hz_network* net, uint64_t seed) {
  return guarded([&] {
    if (!net) throw hzcert::ValueError("hz_network_init: null network");
    net->net.init_params(seed);
  });
}

hz_status hz_network_load_weights(hz_network* net, const char* path) {
  return guarded([&] {
    if (!net || !path) throw hzcert::ValueError("hz_network_load_weights: null argument");
    hzcert::load_weights(net->net, path);
  });
}

hz_status hz_network_save_weights(const hz_network* net, const char* path) {
  return guarded([&] {
    if (!net || !path) throw hzcert::ValueError("hz_network_save_weights: null argument");
    hzcert::save_weights(net->net, path);
  });
}

hz_status hz_network_print(const hz_network* net, char** out) {
  return guarded([&] {
    if (!net || !out) throw hzcert::ValueError("hz_network_print: null argument");
    *out = dup_string(hzcert::print_network(net->net));
  });
}

hz_status hz_network_shape_trace(const hz_network* net, char** out) {
  return guarded([&] {
    if (!net || !out) throw hzcert::ValueError("hz_network_shape_trace: null argument");
    *out = dup_string(hzcert::shape_trace(net->net));
  });
}

hz_status hz_network_set_range(hz_network* net, double lo, double hi) {
  return guarded([&] {
    if (!net) throw hzcert::ValueError("hz_network_set_range: null network");
    if (lo > hi) throw hzcert::ValueError("hz_network_set_range: lo > hi");
    net->net.range_lo = lo;
    net->net.range_hi = hi;
  });
}

hz_status hz_network_param_count(const hz_network* net, size_t* out) {
  return guarded([&] {
    if (!net || !out) throw hzcert::ValueError("hz_network_param_count: null argument");
    *out = net->net.param_count();
  });
}

hz_status hz_dataset_load_idx(const char* images_path, const char* labels_path,
                              hz_dataset** out) {
  return guarded([&] {
    if (!images_path || !labels_path || !out)
      throw hzcert::ValueError("hz_dataset_load_idx: null argument");
    *out = new hz_dataset{hzcert::load_idx(images_path, labels_path)};
  });
}

hz_status hz_dataset_synthetic(const char* kind, size_t n, double noise, uint64_t seed,
                               hz_dataset** out) {
  return guarded([&] {
    if (!kind || !out) throw hzcert::ValueError("hz_dataset_synthetic: null argument");
    std::string k = kind;
    if (k == "blobs")
      *out = new hz_dataset{hzcert::synthetic_blobs(n, noise, seed)};
    else if (k == "moons")
      *out = new hz_dataset{hzcert::synthetic_moons(n, noise, seed)};
    else
      throw hzcert::ValueError("unknown synthetic dataset '" + k + "'");
  });
}

hz_status hz_dataset_split(const hz_dataset* d, double test_fraction, hz_dataset** train,
                           hz_dataset** test) {
  return guarded([&] {
    if (!d || !train || !test) throw hzcert::ValueError("hz_dataset_split: null argument");
    auto [tr, te] = hzcert::split_dataset(d->data, test_fraction);
    *train = new hz_dataset{std::move(tr)};
    *test = new hz_dataset{std::move(te)};
  });
}

size_t hz_dataset_count(const hz_dataset* d) { return d ? d->data.count() : 0; }

void hz_dataset_free(hz_dataset* d) { delete d; }

hz_status hz_dsl_print_goal(const char* text, char** out) {
  return guarded([&] {
    if (!text || !out) throw hzcert::ValueError("hz_dsl_print_goal: null argument");
    *out = dup_string(hzcert::print_goal(hzcert::parse_goal(text)));
  });
}

hz_status hz_dsl_print_schedule(const char* text, char** out) {
  return guarded([&] {
    if (!text || !out) throw hzcert::ValueError("hz_dsl_print_schedule: null argument");
    *out = dup_string(hzcert::print_schedule(hzcert::parse_schedule(text)));
  });
}

hz_status hz_dsl_eval_schedule(const char* text, double t, double* out) {
  return guarded([&] {
    if (!text || !out) throw hzcert::ValueError("hz_dsl_eval_schedule: null argument");
    *out = hzcert::eval_schedule(hzcert::parse_schedule(text), t);
  });
}

hz_status hz_dsl_preset(const char* name, size_t k, char** out) {
  return guarded([&] {
    if (!name || !out) throw hzcert::ValueError("hz_dsl_preset: null argument");
    *out = dup_string(hzcert::preset_text(name, k == 0 ? 3 : k));
  });
}

hz_status hz_dsl_preset_names(char** out) {
  return guarded([&] {
    if (!out) throw hzcert::ValueError("hz_dsl_preset_names: null argument");
    std::string joined;
    for (const auto& n : hzcert::preset_names()) {
      joined += n;
      joined += '\n';
    }
    *out = dup_string(joined);
  });
}

hz_status hz_train(hz_network* net, const hz_dataset* train_data, const hz_dataset* test_data,
                   const char* config_json, const char* jsonl_path, char** summary_json) {
  return guarded([&] {
    if (!net || !train_data || !test_data || !config_json || !summary_json)
      throw hzcert::ValueError("hz_train: null argument");
    json cfg_in = json::parse(config_json, nullptr, false);
    if (cfg_in.is_discarded()) throw hzcert::ParseError("hz_train: config is not valid JSON");
    hzcert::TrainConfig cfg;
    if (!cfg_in.contains("goal") || !cfg_in["goal"].is_string())
      throw hzcert::ValueError("hz_train: config requires a \"goal\" string");
    cfg.goal_text = cfg_in["goal"].get<std::string>();
    cfg.epsilon = cfg_in.value("epsilon", cfg.epsilon);
    cfg.epochs = cfg_in.value("epochs", cfg.epochs);
    cfg.batch = cfg_in.value("batch", cfg.batch);
    cfg.optimizer = cfg_in.value("optimizer", cfg.optimizer);
    cfg.lr = cfg_in.value("lr", cfg.lr);
    cfg.momentum = cfg_in.value("momentum", cfg.momentum);
    cfg.l2 = cfg_in.value("l2", cfg.l2);
    if (cfg_in.contains("lr_milestones"))
      cfg.lr_milestones = cfg_in["lr_milestones"].get<std::vector<double>>();
    cfg.lr_multiplier = cfg_in.value("lr_multiplier", cfg.lr_multiplier);
    cfg.seed = cfg_in.value("seed", cfg.seed);
    cfg.eval_subset = cfg_in.value("eval_subset", cfg.eval_subset);
    cfg.eval_domain = hzcert::parse_domain(cfg_in.value("domain", std::string("hzono")));
    cfg.out_dir = cfg_in.value("out_dir", cfg.out_dir);
    cfg.threads = cfg_in.value("threads", cfg.threads);

    std::ofstream jsonl;
    std::ostream* sink = nullptr;
    if (jsonl_path && *jsonl_path) {
      jsonl.open(jsonl_path);
      if (!jsonl) throw hzcert::IoError(std::string("cannot open report file: ") + jsonl_path);
      sink = &jsonl;
    }
    hzcert::RunReport rep = hzcert::train(net->net, train_data->data, test_data->data, cfg, sink);

    json out;
    out["epochs"] = rep.rows.size();
    if (!rep.rows.empty()) {
      const auto& last = rep.rows.back();
      out["loss"] = last.loss;
      out["standard"] = last.standard;
      out["attacked"] = last.attacked;
      out["verified"] = last.verified;
    }
    out["best_verified"] = rep.best_verified;
    if (!rep.last_checkpoint.empty()) out["last_checkpoint"] = rep.last_checkpoint;
    if (!rep.best_checkpoint.empty()) out["best_checkpoint"] = rep.best_checkpoint;
    *summary_json = dup_string(out.dump());
  });
}

hz_status hz_verify(const hz_network* net, const hz_dataset* data, double epsilon,
                    const char* domain, size_t limit, int threads, const char* jsonl_path,
                    char** summary_json) {
  return guarded([&] {
    if (!net || !data || !domain || !summary_json)
      throw hzcert::ValueError("hz_verify: null argument");
    hzcert::VerifySummary sum = hzcert::verified_robustness(
        net->net, data->data, epsilon, hzcert::parse_domain(domain), limit, threads);
    if (jsonl_path && *jsonl_path) {
      std::ofstream f(jsonl_path);
      if (!f) throw hzcert::IoError(std::string("cannot open certificate file: ") + jsonl_path);
      for (const auto& c : sum.certificates) f << hzcert::certificate_json(c) << "\n";
    }
    json out;
    out["total"] = sum.total;
    out["verified"] = sum.verified;
    out["verified_verdicts"] = sum.verified_verdicts;
    out["unknown"] = sum.total - sum.verified_verdicts;
    out["correct"] = sum.correct;
    out["fraction"] = sum.fraction;
    out["standard_accuracy"] = static_cast<double>(sum.correct) / static_cast<double>(sum.total);
    *summary_json = dup_string(out.dump());
  });
}

hz_status hz_attack(const hz_network* net, const hz_dataset* data, double epsilon, size_t limit,
                    char** summary_json) {
  return guarded([&] {
    if (!net || !data || !summary_json) throw hzcert::ValueError("hz_attack: null argument");
    const hzcert::Dataset& d = data->data;
    if (d.count() == 0) throw hzcert::ValueError("hz_attack: empty dataset");
    std::size_t n = d.count();
    if (limit > 0) n = std::min(n, limit);
    hzcert::AttackConfig atk;
    std::size_t std_ok = 0, atk_ok = 0;
    hzcert::NoGradGuard ng;
    for (std::size_t i = 0; i < n; ++i) {
      hzcert::Tensor x = d.example(i);
      int label = d.labels[i];
      hzcert::Tensor z_t = net->net.concrete_forward(x);
      auto z = z_t.data();
      int pred = static_cast<int>(std::max_element(z.begin(), z.end()) - z.begin());
      if (pred == label) ++std_ok;
      hzcert::Tensor xa = hzcert::mifgsm(net->net, x, {label}, epsilon, atk.momentum,
                                         atk.iterations, atk.step, d.lo, d.hi);
      hzcert::Tensor za_t = net->net.concrete_forward(xa);
      auto za = za_t.data();
      int pa = static_cast<int>(std::max_element(za.begin(), za.end()) - za.begin());
      if (pa == label) ++atk_ok;
    }
    json out;
    out["total"] = n;
    out["standard_accuracy"] = static_cast<double>(std_ok) / static_cast<double>(n);
    out["attacked_accuracy"] = static_cast<double>(atk_ok) / static_cast<double>(n);
    out["momentum"] = atk.momentum;
    out["iterations"] = atk.iterations;
    out["step"] = atk.step;
    *summary_json = dup_string(out.dump());
  });
}

}  // extern "C"
