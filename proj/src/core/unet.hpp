#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "core/kernels.hpp"
#include "core/tape.hpp"

namespace ts {

struct UNetConfig {
  int64_t in_channels = 3;
  int64_t out_channels = 1;
  int64_t depth = 4;
  int64_t base_width = 64;
  int64_t img_size = 256;
};

void validate(const UNetConfig& cfg);

bool operator==(const UNetConfig& a, const UNetConfig& b);

// Parameters keyed by name; map iteration gives the canonical lexicographic
// order used everywhere (init, checkpoints, optimizer walks).
template <class T>
using ParamStore = std::map<std::string, TensorT<T>>;

// Names and shapes of every parameter, in construction order:
// enc{i}.conv{j}.{w,b}, bottleneck.conv{j}.{w,b}, dec{i}.up.w,
// dec{i}.conv{j}.{w,b}, head.{w,b}.
std::vector<std::pair<std::string, Shape>> param_shapes(const UNetConfig& cfg);

int64_t param_count(const UNetConfig& cfg);

// He-normal weights, zero biases. Each tensor draws from its own stream
// seeded by hash64(seed, name), so the result is independent of enumeration
// order and identical across runs.
template <class T>
ParamStore<T> init_params(const UNetConfig& cfg, uint64_t seed);

// Registers every parameter as a tape leaf.
template <class T>
std::map<std::string, Var<T>> leaf_params(Tape<T>& tape, const ParamStore<T>& params);

// Stage-by-stage output shapes, recorded when a trace is supplied to forward.
struct ForwardTrace {
  std::vector<std::pair<std::string, Shape>> stages;
};

// Full encoder/bottleneck/decoder pass producing logits (no activation after
// the 1x1 head). Input is N x in_channels x H x W with H and W divisible by
// 2^depth.
template <class T>
Var<T> unet_forward(Tape<T>& tape, const std::map<std::string, Var<T>>& params,
                    const UNetConfig& cfg, Var<T> input,
                    ForwardTrace* trace = nullptr);

#define TS_UNET_DECL(T)                                                \
  extern template ParamStore<T> init_params<T>(const UNetConfig&, uint64_t); \
  extern template std::map<std::string, Var<T>> leaf_params<T>(Tape<T>&, const ParamStore<T>&); \
  extern template Var<T> unet_forward<T>(Tape<T>&, const std::map<std::string, Var<T>>&, const UNetConfig&, Var<T>, ForwardTrace*);
TS_UNET_DECL(float)
TS_UNET_DECL(double)
#undef TS_UNET_DECL

}  // namespace ts
