#include "hzcert/network.hpp"

#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "hzcert/optim.hpp"

namespace hzcert {

namespace {

struct Token {
  std::string text;
  int line;
};

std::vector<Token> tokenize(const std::string& text) {
  std::vector<Token> out;
  int line = 1;
  std::size_t i = 0, n = text.size();
  while (i < n) {
    char ch = text[i];
    if (ch == '\n') {
      ++line;
      ++i;
    } else if (ch == ' ' || ch == '\t' || ch == '\r') {
      ++i;
    } else if (ch == '#') {
      while (i < n && text[i] != '\n') ++i;
    } else if (ch == '{' || ch == '}') {
      out.push_back({std::string(1, ch), line});
      ++i;
    } else {
      std::size_t start = i;
      bool in_quote = false;
      while (i < n) {
        char c = text[i];
        if (c == '"') {
          in_quote = !in_quote;
          ++i;
        } else if (!in_quote && (c == ' ' || c == '\t' || c == '\r' || c == '\n' || c == '#' ||
                                 c == '{' || c == '}')) {
          break;
        } else {
          ++i;
        }
      }
      if (in_quote) throw ParseError("network: unterminated quote on line " + std::to_string(line));
      out.push_back({text.substr(start, i - start), line});
    }
  }
  return out;
}

[[noreturn]] void fail(int line, const std::string& msg) {
  throw ParseError("network: line " + std::to_string(line) + ": " + msg);
}

struct KeyVals {
  std::vector<std::pair<std::string, std::string>> kv;
  int line;

  std::string get(const std::string& key) const {
    for (auto& [k, v] : kv)
      if (k == key) return v;
    fail(line, "missing key '" + key + "='");
  }
  bool has(const std::string& key) const {
    for (auto& [k, v] : kv)
      if (k == key) return true;
    return false;
  }
  std::size_t get_uint(const std::string& key) const {
    std::string v = get(key);
    try {
      std::size_t pos = 0;
      long long x = std::stoll(v, &pos);
      if (pos != v.size() || x < 0) throw std::invalid_argument("");
      return static_cast<std::size_t>(x);
    } catch (...) {
      fail(line, "key '" + key + "' expects a nonnegative integer, got '" + v + "'");
    }
  }
};

class Parser {
 public:
  explicit Parser(std::vector<Token> toks) : toks_(std::move(toks)) {}

  std::vector<LayerSpec> parse_block(bool top_level) {
    std::vector<LayerSpec> layers;
    while (pos_ < toks_.size() && toks_[pos_].text != "}") {
      layers.push_back(parse_stmt());
    }
    if (!top_level && pos_ >= toks_.size())
      throw ParseError("network: unexpected end of input, missing '}'");
    return layers;
  }

  bool at_end() const { return pos_ >= toks_.size(); }
  const Token& peek() const { return toks_[pos_]; }
  void expect(const std::string& t) {
    if (pos_ >= toks_.size() || toks_[pos_].text != t)
      fail(pos_ < toks_.size() ? toks_[pos_].line : last_line(), "expected '" + t + "'");
    ++pos_;
  }

 private:
  int last_line() const { return toks_.empty() ? 1 : toks_.back().line; }

  KeyVals read_keys() {
    KeyVals kvs;
    kvs.line = toks_[pos_ - 1].line;
    while (pos_ < toks_.size()) {
      const std::string& t = toks_[pos_].text;
      auto eq = t.find('=');
      if (eq == std::string::npos || eq == 0 || t == "{" || t == "}") break;
      std::string key = t.substr(0, eq);
      bool word = true;
      for (char c : key)
        if (!(std::islower(static_cast<unsigned char>(c)) || c == '_')) word = false;
      if (!word) break;
      std::string val = t.substr(eq + 1);
      if (val.size() >= 2 && val.front() == '"' && val.back() == '"')
        val = val.substr(1, val.size() - 2);
      kvs.kv.emplace_back(key, val);
      ++pos_;
    }
    return kvs;
  }

  LayerSpec parse_stmt() {
    const Token& tok = toks_[pos_++];
    const std::string& name = tok.text;
    LayerSpec ls;
    ls.line = tok.line;
    if (name == "input") {
      ls.kind = LayerKind::Input;
      KeyVals kv = read_keys();
      if (kv.has("d")) {
        // shorthand for a flat input vector
        ls.c = kv.get_uint("d");
        ls.h = ls.w = 0;
      } else {
        ls.c = kv.get_uint("c");
        ls.h = kv.get_uint("h");
        ls.w = kv.get_uint("w");
      }
    } else if (name == "linear") {
      ls.kind = LayerKind::Linear;
      ls.out = read_keys().get_uint("out");
    } else if (name == "conv") {
      ls.kind = LayerKind::Conv;
      KeyVals kv = read_keys();
      ls.out = kv.get_uint("out");
      ls.k = kv.get_uint("k");
      ls.s = kv.get_uint("s");
      ls.p = kv.get_uint("p");
    } else if (name == "relu") {
      ls.kind = LayerKind::Relu;
    } else if (name == "flatten") {
      ls.kind = LayerKind::Flatten;
    } else if (name == "residual") {
      ls.kind = LayerKind::Residual;
      expect("{");
      ls.branch_a = parse_block(false);
      expect("}");
      if (pos_ < toks_.size() && toks_[pos_].text == "{") {
        ++pos_;
        ls.branch_b = parse_block(false);
        expect("}");
      }
    } else if (name == "correlate_all") {
      ls.kind = LayerKind::CorrelateAll;
    } else if (name == "correlate_fixed") {
      ls.kind = LayerKind::CorrelateFixed;
      ls.k = read_keys().get_uint("k");
    } else if (name == "correlate_max") {
      ls.kind = LayerKind::CorrelateMax;
      ls.k = read_keys().get_uint("k");
    } else if (name == "correlate_maxpool") {
      ls.kind = LayerKind::CorrelateMaxPool;
      KeyVals kv = read_keys();
      ls.c = kv.get_uint("c");
      ls.h = kv.get_uint("h");
      ls.w = kv.get_uint("w");
      ls.s = kv.get_uint("s");
    } else if (name == "decorrelate_all") {
      ls.kind = LayerKind::DecorrelateAll;
    } else if (name == "decorrelate_min") {
      ls.kind = LayerKind::DecorrelateMin;
      ls.k = read_keys().get_uint("k");
    } else if (name == "deep_loss") {
      ls.kind = LayerKind::DeepLoss;
      KeyVals kv = read_keys();
      ls.weight_text = kv.get("weight");
      try {
        ls.weight = parse_schedule(ls.weight_text);
      } catch (const ParseError& e) {
        fail(ls.line, std::string("bad weight schedule: ") + e.what());
      }
    } else {
      fail(tok.line, "unknown layer '" + name + "'");
    }
    return ls;
  }

  std::vector<Token> toks_;
  std::size_t pos_ = 0;
};

void infer_shapes(std::vector<LayerSpec>& layers, Shape& cur, NetworkIR& net, bool nested) {
  for (auto& ls : layers) {
    ls.in_shape = cur;
    std::size_t p = shape_numel(cur);
    switch (ls.kind) {
      case LayerKind::Input:
        fail(ls.line, "'input' is only allowed once, at the top");
      case LayerKind::Linear: {
        if (cur.size() != 1)
          fail(ls.line, "linear expects a flat input (use 'flatten'), got " + shape_str(cur));
        if (ls.out == 0) fail(ls.line, "linear out must be positive");
        ls.param_index = static_cast<int>(net.params.size());
        std::string tag = "L" + std::to_string(net.params.size() / 2);
        net.params.push_back(Tensor::zeros({ls.out, cur[0]}, true));
        net.params.push_back(Tensor::zeros({ls.out}, true));
        net.param_names.push_back(tag + ".weight");
        net.param_names.push_back(tag + ".bias");
        cur = {ls.out};
        break;
      }
      case LayerKind::Conv: {
        if (cur.size() != 3)
          fail(ls.line, "conv expects [C,H,W] input, got " + shape_str(cur));
        if (ls.out == 0 || ls.k == 0 || ls.s == 0) fail(ls.line, "conv out/k/s must be positive");
        std::size_t H = cur[1] + 2 * ls.p, W = cur[2] + 2 * ls.p;
        if (H < ls.k || W < ls.k || (H - ls.k) % ls.s != 0 || (W - ls.k) % ls.s != 0)
          fail(ls.line, "conv k=" + std::to_string(ls.k) + " s=" + std::to_string(ls.s) +
                            " p=" + std::to_string(ls.p) + " does not tile input " +
                            shape_str(cur));
        ls.param_index = static_cast<int>(net.params.size());
        std::string tag = "L" + std::to_string(net.params.size() / 2);
        net.params.push_back(Tensor::zeros({ls.out, cur[0], ls.k, ls.k}, true));
        net.params.push_back(Tensor::zeros({ls.out}, true));
        net.param_names.push_back(tag + ".weight");
        net.param_names.push_back(tag + ".bias");
        cur = {ls.out, (H - ls.k) / ls.s + 1, (W - ls.k) / ls.s + 1};
        break;
      }
      case LayerKind::Relu:
      case LayerKind::CorrelateAll:
      case LayerKind::DecorrelateAll:
      case LayerKind::DeepLoss:
        break;
      case LayerKind::Flatten:
        cur = {p};
        break;
      case LayerKind::Residual: {
        Shape ca = cur, cb = cur;
        infer_shapes(ls.branch_a, ca, net, true);
        infer_shapes(ls.branch_b, cb, net, true);
        if (ca != cb)
          fail(ls.line, "residual branch outputs differ: " + shape_str(ca) + " vs " +
                            shape_str(cb));
        cur = ca;
        break;
      }
      case LayerKind::CorrelateFixed:
      case LayerKind::CorrelateMax:
        if (ls.k == 0 || ls.k > p)
          fail(ls.line, "correlate k=" + std::to_string(ls.k) + " out of range for " +
                            std::to_string(p) + " dimensions");
        break;
      case LayerKind::CorrelateMaxPool:
        if (cur.size() != 3)
          fail(ls.line, "correlate_maxpool expects [C,H,W] input, got " + shape_str(cur));
        if (ls.c == 0 || ls.h == 0 || ls.w == 0 || ls.s == 0 || ls.c > cur[0] ||
            ls.h > cur[1] || ls.w > cur[2])
          fail(ls.line, "correlate_maxpool window does not fit input " + shape_str(cur));
        break;
      case LayerKind::DecorrelateMin:
        break;  // k is checked against the runtime term count
    }
    ls.out_shape = cur;
    (void)nested;
  }
}

void print_block(std::ostringstream& os, const std::vector<LayerSpec>& layers, int indent) {
  std::string pad(static_cast<std::size_t>(indent) * 2, ' ');
  for (const auto& ls : layers) {
    os << pad;
    switch (ls.kind) {
      case LayerKind::Input:
        if (ls.h == 0 && ls.w == 0)
          os << "input d=" << ls.c;
        else
          os << "input c=" << ls.c << " h=" << ls.h << " w=" << ls.w;
        break;
      case LayerKind::Linear:
        os << "linear out=" << ls.out;
        break;
      case LayerKind::Conv:
        os << "conv out=" << ls.out << " k=" << ls.k << " s=" << ls.s << " p=" << ls.p;
        break;
      case LayerKind::Relu:
        os << "relu";
        break;
      case LayerKind::Flatten:
        os << "flatten";
        break;
      case LayerKind::Residual:
        os << "residual {\n";
        print_block(os, ls.branch_a, indent + 1);
        os << pad << "}";
        if (!ls.branch_b.empty()) {
          os << " {\n";
          print_block(os, ls.branch_b, indent + 1);
          os << pad << "}";
        }
        break;
      case LayerKind::CorrelateAll:
        os << "correlate_all";
        break;
      case LayerKind::CorrelateFixed:
        os << "correlate_fixed k=" << ls.k;
        break;
      case LayerKind::CorrelateMax:
        os << "correlate_max k=" << ls.k;
        break;
      case LayerKind::CorrelateMaxPool:
        os << "correlate_maxpool c=" << ls.c << " h=" << ls.h << " w=" << ls.w << " s=" << ls.s;
        break;
      case LayerKind::DecorrelateAll:
        os << "decorrelate_all";
        break;
      case LayerKind::DecorrelateMin:
        os << "decorrelate_min k=" << ls.k;
        break;
      case LayerKind::DeepLoss:
        os << "deep_loss weight=\"" << print_schedule(ls.weight) << "\"";
        break;
    }
    os << "\n";
  }
}

Tensor forward_block(const NetworkIR& net, const std::vector<LayerSpec>& layers, Tensor x) {
  for (const auto& ls : layers) {
    switch (ls.kind) {
      case LayerKind::Input:
        break;
      case LayerKind::Linear:
        x = linear(x, net.params[ls.param_index], net.params[ls.param_index + 1]);
        break;
      case LayerKind::Conv: {
        Shape in{x.dim(0)};
        in.insert(in.end(), ls.in_shape.begin(), ls.in_shape.end());
        x = conv2d(reshape(x, in), net.params[ls.param_index], net.params[ls.param_index + 1],
                   ls.s, ls.p);
        break;
      }
      case LayerKind::Relu:
        x = relu(x);
        break;
      case LayerKind::Flatten:
        x = reshape(x, {x.dim(0), shape_numel(ls.out_shape)});
        break;
      case LayerKind::Residual: {
        Tensor a = forward_block(net, ls.branch_a, x);
        Tensor b = forward_block(net, ls.branch_b, x);
        x = add(a, b);
        break;
      }
      default:
        break;  // abstract layers are concrete identities
    }
  }
  return x;
}

struct AbstractCtx {
  const NetworkIR& net;
  double t;
  std::vector<DeepTerm>& deep_terms;
  bool skip_correlation = false;
  std::size_t layer_counter = 0;
};

HybridZonotope abstract_block(AbstractCtx& ctx, const std::vector<LayerSpec>& layers,
                              HybridZonotope h, bool& seen_params) {
  for (const auto& ls : layers) {
    ++ctx.layer_counter;
    switch (ls.kind) {
      case LayerKind::Input:
        break;
      case LayerKind::Linear:
        h = affine_transform(h, ctx.net.params[ls.param_index],
                             ctx.net.params[ls.param_index + 1]);
        seen_params = true;
        break;
      case LayerKind::Conv:
        h = conv_transform(h.with_var_shape(ls.in_shape), ctx.net.params[ls.param_index],
                           ctx.net.params[ls.param_index + 1], ls.s, ls.p);
        seen_params = true;
        break;
      case LayerKind::Relu:
        h = relu_transform(h);
        break;
      case LayerKind::Flatten:
        h = h.with_var_shape({shape_numel(ls.out_shape)});
        break;
      case LayerKind::Residual: {
        std::size_t shared = h.terms();
        bool seen_a = seen_params, seen_b = seen_params;
        HybridZonotope a = abstract_block(ctx, ls.branch_a, h, seen_a);
        HybridZonotope b = abstract_block(ctx, ls.branch_b, h, seen_b);
        h = add_transform_shared(a, b, std::min({shared, a.terms(), b.terms()}));
        seen_params = seen_a || seen_b;
        break;
      }
      case LayerKind::CorrelateAll:
        if (ctx.skip_correlation) break;
        h = correlate(h, select_correlation_indices(CorrelationStrategy::all(), h, !seen_params));
        break;
      case LayerKind::CorrelateFixed:
        if (ctx.skip_correlation) break;
        h = correlate(h,
                      select_correlation_indices(CorrelationStrategy::fixed(ls.k), h, !seen_params));
        break;
      case LayerKind::CorrelateMax:
        if (ctx.skip_correlation) break;
        h = correlate(h,
                      select_correlation_indices(CorrelationStrategy::max(ls.k), h, !seen_params));
        break;
      case LayerKind::CorrelateMaxPool:
        if (ctx.skip_correlation) break;
        h = correlate(h, select_correlation_indices(
                             CorrelationStrategy::maxpool(ls.c, ls.h, ls.w, ls.s),
                             h.with_var_shape(ls.in_shape), !seen_params));
        break;
      case LayerKind::DecorrelateAll:
        h = decorrelate(h, select_decorrelation_removals(h, 0));
        break;
      case LayerKind::DecorrelateMin: {
        std::size_t keep = std::min(ls.k, h.terms());
        h = decorrelate(h, select_decorrelation_removals(h, keep));
        break;
      }
      case LayerKind::DeepLoss: {
        // Degenerate elements (points) never overlap; skip to keep the tape small.
        bool any = false;
        Tensor total = h.total_error();
        for (double e : total.data())
          if (e != 0) {
            any = true;
            break;
          }
        if (any) {
          double w = eval_schedule(ls.weight, ctx.t);
          Interval iv = h.concretize();
          iv.lower = reshape(iv.lower, {h.batch(), h.vars()});
          iv.upper = reshape(iv.upper, {h.batch(), h.vars()});
          ctx.deep_terms.push_back({w, deep_loss(iv)});
        }
        break;
      }
    }
    if (!h.all_finite())
      throw Error("abstract forward: non-finite values after layer " +
                  std::to_string(ctx.layer_counter));
  }
  return h;
}

}  // namespace

std::size_t NetworkIR::param_count() const {
  std::size_t n = 0;
  for (const auto& p : params) n += p.size();
  return n;
}

void NetworkIR::init_params(std::uint64_t seed) {
  RngStream root(seed);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto data = params[i].mutable_data();
    if (param_names[i].ends_with(".bias")) {
      std::fill(data.begin(), data.end(), 0.0);
      continue;
    }
    const Shape& sh = params[i].shape();
    std::size_t fan_in = 1;
    for (std::size_t d = 1; d < sh.size(); ++d) fan_in *= sh[d];
    double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
    RngStream s = root.split(i);
    for (double& x : data) x = s.uniform(-bound, bound);
  }
  quantize_params_f32(params);
}

Tensor NetworkIR::concrete_forward(const Tensor& x) const {
  if (layers.empty() || layers[0].kind != LayerKind::Input)
    throw Error("network: missing input layer");
  std::size_t want = shape_numel(input_shape());
  if (x.shape().empty() || x.size() % x.dim(0) != 0 || x.size() / x.dim(0) != want)
    throw ShapeError("concrete_forward: input " + shape_str(x.shape()) +
                     " does not match network input " + shape_str(input_shape()));
  Shape in{x.dim(0)};
  in.insert(in.end(), input_shape().begin(), input_shape().end());
  return forward_block(*this, layers, reshape(x, in));
}

AbstractResult NetworkIR::abstract_forward(const HybridZonotope& h, double t,
                                           bool skip_correlation) const {
  if (layers.empty() || layers[0].kind != LayerKind::Input)
    throw Error("network: missing input layer");
  if (shape_numel(h.var_shape()) != shape_numel(input_shape()))
    throw ShapeError("abstract_forward: element " + shape_str(h.var_shape()) +
                     " does not match network input " + shape_str(input_shape()));
  AbstractResult res{h.with_var_shape(input_shape()), {}};
  AbstractCtx ctx{*this, t, res.deep_terms, skip_correlation, 0};
  bool seen_params = false;
  res.out = abstract_block(ctx, layers, res.out, seen_params);
  return res;
}

NetworkIR parse_network(const std::string& text) {
  Parser parser(tokenize(text));
  if (parser.at_end()) throw ParseError("network: empty description");
  NetworkIR net;
  std::vector<LayerSpec> layers = parser.parse_block(true);
  if (layers.empty() || layers[0].kind != LayerKind::Input) {
    int line = layers.empty() ? 1 : layers[0].line;
    fail(line, "network must start with an 'input' statement");
  }
  LayerSpec& in = layers[0];
  Shape cur = (in.h == 0 && in.w == 0) ? Shape{in.c} : Shape{in.c, in.h, in.w};
  if (shape_numel(cur) == 0) fail(in.line, "input dimensions must be positive");
  in.in_shape = in.out_shape = cur;
  std::vector<LayerSpec> rest(layers.begin() + 1, layers.end());
  infer_shapes(rest, cur, net, false);
  net.layers.push_back(std::move(in));
  for (auto& ls : rest) net.layers.push_back(std::move(ls));
  return net;
}

NetworkIR parse_network_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open network file: " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_network(ss.str());
}

std::string print_network(const NetworkIR& net) {
  std::ostringstream os;
  print_block(os, net.layers, 0);
  return os.str();
}

std::string shape_trace(const NetworkIR& net) {
  std::ostringstream os;
  for (const auto& ls : net.layers) {
    std::ostringstream one;
    print_block(one, {ls}, 0);
    std::string s = one.str();
    // flatten residual sub-blocks onto one line for the trace
    for (char& c : s)
      if (c == '\n') c = ' ';
    while (!s.empty() && s.back() == ' ') s.pop_back();
    os << s << "  " << shape_str(ls.in_shape) << " -> " << shape_str(ls.out_shape) << "\n";
  }
  return os.str();
}

void save_weights(const NetworkIR& net, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open weights file for writing: " + path);
  auto put_u32 = [&](std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v >> 16),
                          static_cast<unsigned char>(v >> 24)};
    f.write(reinterpret_cast<char*>(b), 4);
  };
  f.write("DFAI", 4);
  put_u32(1);
  for (const auto& param : net.params) {
    const Shape& sh = param.shape();
    put_u32(static_cast<std::uint32_t>(sh.size()));
    for (std::size_t d : sh) put_u32(static_cast<std::uint32_t>(d));
    for (double x : param.data()) {
      float v = static_cast<float>(x);
      std::uint32_t bits;
      std::memcpy(&bits, &v, 4);
      put_u32(bits);
    }
  }
  if (!f) throw IoError("failed writing weights file: " + path);
}

void load_weights(NetworkIR& net, const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open weights file: " + path);
  auto get_u32 = [&](const char* what) -> std::uint32_t {
    unsigned char b[4];
    if (!f.read(reinterpret_cast<char*>(b), 4))
      throw IoError(std::string("weights file truncated reading ") + what + ": " + path);
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
  };
  char magic[4];
  if (!f.read(magic, 4) || std::memcmp(magic, "DFAI", 4) != 0)
    throw IoError("not a DFAI weights file: " + path);
  std::uint32_t version = get_u32("version");
  if (version != 1)
    throw IoError("unsupported weights version " + std::to_string(version) + ": " + path);
  for (std::size_t i = 0; i < net.params.size(); ++i) {
    std::uint32_t rank = get_u32("rank");
    const Shape& want = net.params[i].shape();
    if (rank != want.size())
      throw IoError("weights: parameter " + net.param_names[i] + " rank " +
                    std::to_string(rank) + " != expected " + std::to_string(want.size()));
    for (std::size_t d = 0; d < rank; ++d) {
      std::uint32_t dim = get_u32("dims");
      if (dim != want[d])
        throw IoError("weights: parameter " + net.param_names[i] + " dim " + std::to_string(d) +
                      " is " + std::to_string(dim) + ", expected " + std::to_string(want[d]));
    }
    auto out = net.params[i].mutable_data();
    for (double& x : out) {
      std::uint32_t bits = get_u32("data");
      float v;
      std::memcpy(&v, &bits, 4);
      x = static_cast<double>(v);
    }
  }
  f.peek();
  if (!f.eof()) throw IoError("weights file has trailing bytes: " + path);
}

}  // namespace hzcert
