#include "core/unet.hpp"

#include <cmath>

#include "core/rng.hpp"

namespace ts {

void validate(const UNetConfig& cfg) {
  if (cfg.in_channels < 1 || cfg.out_channels < 1 || cfg.depth < 1 ||
      cfg.base_width < 1 || cfg.img_size < 1)
    fail(ErrorKind::config, "model config fields must be positive");
  if (cfg.depth > 12) fail(ErrorKind::config, "model depth too large: " + std::to_string(cfg.depth));
  if (cfg.base_width > (int64_t(1) << 16))
    fail(ErrorKind::config, "base width too large: " + std::to_string(cfg.base_width));
  if (cfg.img_size > (int64_t(1) << 20))
    fail(ErrorKind::config, "image size too large: " + std::to_string(cfg.img_size));
  const int64_t div = int64_t(1) << cfg.depth;
  if (cfg.img_size % div != 0 || cfg.img_size / div < 1)
    fail(ErrorKind::config, "image size " + std::to_string(cfg.img_size) +
                                " is not divisible by 2^depth = " + std::to_string(div));
}

bool operator==(const UNetConfig& a, const UNetConfig& b) {
  return a.in_channels == b.in_channels && a.out_channels == b.out_channels &&
         a.depth == b.depth && a.base_width == b.base_width && a.img_size == b.img_size;
}

std::vector<std::pair<std::string, Shape>> param_shapes(const UNetConfig& cfg) {
  validate(cfg);
  std::vector<std::pair<std::string, Shape>> out;
  auto conv = [&out](const std::string& prefix, int64_t cin, int64_t cout, int64_t k) {
    out.emplace_back(prefix + ".w", Shape{cout, cin, k, k});
    out.emplace_back(prefix + ".b", Shape{cout});
  };
  int64_t cin = cfg.in_channels;
  for (int64_t i = 0; i < cfg.depth; ++i) {
    const int64_t cout = cfg.base_width << i;
    const std::string enc = "enc" + std::to_string(i);
    conv(enc + ".conv0", cin, cout, 3);
    conv(enc + ".conv1", cout, cout, 3);
    cin = cout;
  }
  const int64_t cb = cfg.base_width << cfg.depth;
  conv("bottleneck.conv0", cin, cb, 3);
  conv("bottleneck.conv1", cb, cb, 3);
  int64_t cur = cb;
  for (int64_t i = cfg.depth - 1; i >= 0; --i) {
    const int64_t cout = cfg.base_width << i;
    const std::string dec = "dec" + std::to_string(i);
    out.emplace_back(dec + ".up.w", Shape{cur, cout, 2, 2});
    conv(dec + ".conv0", cout * 2, cout, 3);
    conv(dec + ".conv1", cout, cout, 3);
    cur = cout;
  }
  conv("head", cfg.base_width, cfg.out_channels, 1);
  return out;
}

int64_t param_count(const UNetConfig& cfg) {
  int64_t n = 0;
  for (const auto& [name, shape] : param_shapes(cfg)) n += shape_numel(shape);
  return n;
}

template <class T>
ParamStore<T> init_params(const UNetConfig& cfg, uint64_t seed) {
  ParamStore<T> store;
  for (const auto& [name, shape] : param_shapes(cfg)) {
    if (name.size() >= 2 && name.compare(name.size() - 2, 2, ".b") == 0) {
      store.emplace(name, TensorT<T>::zeros(shape));
      continue;
    }
    // weight layouts put the incoming channel count at index 1, except the
    // upsampling kernels which keep it at index 0
    const bool up = name.find(".up.") != std::string::npos;
    const int64_t fan_in = (up ? shape[0] : shape[1]) * shape[2] * shape[3];
    const double stddev = std::sqrt(2.0 / static_cast<double>(fan_in));
    GaussianStream gs(hash64(seed, name));
    TensorT<T> w = TensorT<T>::zeros(shape);
    for (auto& v : w.data) v = static_cast<T>(gs.next() * stddev);
    store.emplace(name, std::move(w));
  }
  return store;
}

template <class T>
std::map<std::string, Var<T>> leaf_params(Tape<T>& tape, const ParamStore<T>& params) {
  std::map<std::string, Var<T>> vars;
  for (const auto& [name, tensor] : params) vars.emplace(name, tape.leaf(tensor));
  return vars;
}

template <class T>
Var<T> unet_forward(Tape<T>& tape, const std::map<std::string, Var<T>>& params,
                    const UNetConfig& cfg, Var<T> input, ForwardTrace* trace) {
  validate(cfg);
  auto p = [&params](const std::string& name) -> Var<T> {
    auto it = params.find(name);
    if (it == params.end())
      fail(ErrorKind::invalid_argument, "missing parameter " + name);
    return it->second;
  };
  auto record = [&](const std::string& stage, Var<T> v) {
    if (trace) trace->stages.emplace_back(stage, tape.value(v).shape);
  };
  const TensorT<T>& in = tape.value(input);
  if (in.rank() != 4)
    fail(ErrorKind::shape, "input must be rank 4, got " + shape_str(in.shape));
  if (in.dim(1) != cfg.in_channels)
    fail(ErrorKind::shape, "input has " + std::to_string(in.dim(1)) +
                               " channels, model expects " + std::to_string(cfg.in_channels));
  const int64_t div = int64_t(1) << cfg.depth;
  if (in.dim(2) % div != 0 || in.dim(3) % div != 0 || in.dim(2) / div < 1 ||
      in.dim(3) / div < 1)
    fail(ErrorKind::shape, "input extents " + shape_str(in.shape) +
                               " must be divisible by 2^depth = " + std::to_string(div));

  auto conv_block = [&](Var<T> x, const std::string& prefix, int64_t cin, int64_t cout) {
    ConvSpec spec{cin, cout, 3, 1, Padding::same};
    return relu(tape, conv2d(tape, x, p(prefix + ".w"), p(prefix + ".b"), spec));
  };

  std::vector<Var<T>> skips;
  Var<T> x = input;
  int64_t c = cfg.in_channels;
  for (int64_t i = 0; i < cfg.depth; ++i) {
    const int64_t cout = cfg.base_width << i;
    const std::string enc = "enc" + std::to_string(i);
    x = conv_block(x, enc + ".conv0", c, cout);
    x = conv_block(x, enc + ".conv1", cout, cout);
    skips.push_back(x);
    record(enc, x);
    x = maxpool2d(tape, x);
    c = cout;
  }
  const int64_t cb = cfg.base_width << cfg.depth;
  x = conv_block(x, "bottleneck.conv0", c, cb);
  x = conv_block(x, "bottleneck.conv1", cb, cb);
  record("bottleneck", x);
  for (int64_t i = cfg.depth - 1; i >= 0; --i) {
    const int64_t cout = cfg.base_width << i;
    const std::string dec = "dec" + std::to_string(i);
    x = conv_transpose2d(tape, x, p(dec + ".up.w"));
    x = concat_channels(tape, x, skips[static_cast<size_t>(i)]);
    x = conv_block(x, dec + ".conv0", cout * 2, cout);
    x = conv_block(x, dec + ".conv1", cout, cout);
    record(dec, x);
  }
  ConvSpec head{cfg.base_width, cfg.out_channels, 1, 1, Padding::same};
  x = conv2d(tape, x, p("head.w"), p("head.b"), head);
  record("logits", x);
  return x;
}

#define TS_UNET_DEF(T)                                                \
  template ParamStore<T> init_params<T>(const UNetConfig&, uint64_t); \
  template std::map<std::string, Var<T>> leaf_params<T>(Tape<T>&, const ParamStore<T>&); \
  template Var<T> unet_forward<T>(Tape<T>&, const std::map<std::string, Var<T>>&, const UNetConfig&, Var<T>, ForwardTrace*);
TS_UNET_DEF(float)
TS_UNET_DEF(double)
#undef TS_UNET_DEF

}  // namespace ts
