#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hzcert/abstract_layers.hpp"
#include "hzcert/schedule.hpp"
#include "hzcert/zonotope.hpp"

namespace hzcert {

enum class LayerKind {
  Input,
  Linear,
  Conv,
  Relu,
  Flatten,
  Residual,
  CorrelateAll,
  CorrelateFixed,
  CorrelateMax,
  CorrelateMaxPool,
  DecorrelateAll,
  DecorrelateMin,
  DeepLoss,
};

struct LayerSpec {
  LayerKind kind = LayerKind::Relu;
  std::size_t out = 0;           // linear / conv channels
  std::size_t k = 0;             // conv kernel, correlate/decorrelate k
  std::size_t s = 1, p = 0;      // conv stride/padding; s doubles as maxpool stride
  std::size_t c = 0, h = 0, w = 0;  // input dims / maxpool kernel
  std::string weight_text;       // deep_loss schedule source
  SchedulePtr weight;            // parsed form of weight_text
  std::vector<LayerSpec> branch_a, branch_b;  // residual
  int line = 0;
  // filled by shape inference
  Shape in_shape, out_shape;     // per-example variable shapes
  int param_index = -1;          // params[i] = weight, params[i+1] = bias
};

struct DeepTerm {
  double weight = 0.0;  // schedule value at the forward's time
  Tensor loss;
};

struct AbstractResult {
  HybridZonotope out;
  std::vector<DeepTerm> deep_terms;
};

class NetworkIR {
 public:
  std::vector<LayerSpec> layers;
  std::vector<Tensor> params;  // requires_grad leaves, f32-representable values
  std::vector<std::string> param_names;
  double range_lo = 0.0, range_hi = 1.0;  // dataset value bounds

  const Shape& input_shape() const { return layers.front().out_shape; }
  const Shape& output_shape() const { return layers.back().out_shape; }
  std::size_t param_count() const;

  // Uniform(+-sqrt(6/fan_in)) weights, zero biases, rounded through f32.
  void init_params(std::uint64_t seed);

  // x: [B, input dims...] (or flattened). Abstract layers are identities.
  Tensor concrete_forward(const Tensor& x) const;

  // Composes the domain transformers; correlate/decorrelate reshape the error
  // terms; DeepLoss layers record (weight(t), L_deep) without touching the
  // element. Throws if any layer output turns non-finite. With
  // skip_correlation the correlate layers become identities, which keeps a
  // box input in the interval domain end to end.
  AbstractResult abstract_forward(const HybridZonotope& h, double t,
                                  bool skip_correlation = false) const;
};

NetworkIR parse_network(const std::string& text);
NetworkIR parse_network_file(const std::string& path);
std::string print_network(const NetworkIR& net);
// One line per layer: "linear out=100  [784] -> [100]".
std::string shape_trace(const NetworkIR& net);

void save_weights(const NetworkIR& net, const std::string& path);
void load_weights(NetworkIR& net, const std::string& path);

}  // namespace hzcert
