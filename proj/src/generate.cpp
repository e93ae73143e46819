/* Copyright 2026 The bnnsim Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "bnnsim/generate.hpp"

#include <algorithm>

#include "bnnsim/errors.hpp"

namespace bnnsim {

namespace {

// Thin wrapper so every draw is a documented function of the raw engine
// output. std::uniform_int_distribution differs between libstdc++ and libc++.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  std::uint64_t bits() { return engine_(); }
  // Uniform in [lo, hi]; modulo bias is irrelevant at these ranges.
  int uniform(int lo, int hi) {
    return lo + static_cast<int>(engine_() % static_cast<std::uint64_t>(hi - lo + 1));
  }
  bool coin(int percent) { return uniform(0, 99) < percent; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace

NetworkSpec generate_random(const Architecture& arch, std::uint64_t seed) {
  if (const auto diags = validate_structure(arch); !diags.empty()) {
    throw ValidationError("cannot generate weights for invalid architecture: " + diags.front());
  }
  Rng rng(seed);
  NetworkSpec net;
  net.name = arch.name;
  net.input_shape = arch.input_shape;
  net.layers = arch.layers;
  for (auto& l : net.layers) {
    LayerWeights w;
    l.bias.clear();
    if (l.kind != LayerKind::MaxPool) {
      const std::size_t count = static_cast<std::size_t>(l.out_channels) * l.receptive_field();
      if (l.kind == LayerKind::FCLast16) {
        w.fixed.resize(count);
        for (auto& v : w.fixed) v = static_cast<std::int16_t>(rng.bits() >> 48);
      } else {
        std::vector<std::uint64_t> limbs((count + 63) / 64);
        for (auto& limb : limbs) limb = rng.bits();
        w.bits = PackedBitVector::from_limbs(std::move(limbs), count, WordWidth{64});
        w.bits.canonicalize();
      }
      l.bias.resize(static_cast<std::size_t>(l.out_channels));
      for (auto& b : l.bias) b = rng.uniform(-3, 3);
    }
    net.weights.push_back(std::move(w));
  }
  return net;
}

Fixed16Tensor random_input(Shape shape, std::uint64_t seed) {
  Rng rng(seed);
  Fixed16Tensor t(shape);
  for (auto& v : t.data) v.raw = static_cast<std::int16_t>(rng.bits() >> 48);
  return t;
}

Architecture random_architecture(std::uint64_t seed, const RandomArchOptions& opts) {
  Rng rng(seed);
  Architecture arch;
  arch.name = "random-" + std::to_string(seed);
  Shape cur{rng.uniform(1, 8), rng.uniform(1, std::min(6, opts.max_spatial)),
            rng.uniform(2, opts.max_spatial)};
  arch.input_shape = cur;
  auto channels = [&] { return rng.uniform(1, opts.max_channels); };

  auto add_conv = [&](LayerKind kind) {
    LayerSpec l;
    l.kind = kind;
    l.out_channels = channels();
    l.kernel = {rng.uniform(1, std::min(3, cur.height)), rng.uniform(1, std::min(5, cur.width))};
    l.stride = {rng.uniform(1, 2), rng.uniform(1, 2)};
    arch.layers.push_back(l);
    cur = output_shape(l, cur);
  };
  auto maybe_pool = [&] {
    if (!rng.coin(60)) return;
    static constexpr Extent2 kPools[] = {{1, 2}, {2, 2}, {1, 3}, {2, 1}, {1, 1}, {3, 3}};
    const Extent2 p = kPools[rng.uniform(0, 5)];
    if (p.h > cur.height || p.w > cur.width) return;
    LayerSpec l;
    l.kind = LayerKind::MaxPool;
    l.pool = p;
    l.out_channels = cur.channels;
    arch.layers.push_back(l);
    cur = output_shape(l, cur);
  };

  const int first = rng.uniform(0, 9);
  if (first < 6) {
    add_conv(LayerKind::ConvFirst);
    maybe_pool();
  } else if (first < 8) {
    add_conv(LayerKind::ConvBin);
    maybe_pool();
  }
  const int mids = rng.uniform(0, opts.max_mid_layers);
  for (int i = 0; i < mids && cur.height * cur.width > 1; ++i) {
    add_conv(LayerKind::ConvBin);
    maybe_pool();
  }
  if (rng.coin(60)) {
    LayerSpec l;
    l.kind = LayerKind::FCBin;
    l.out_channels = rng.uniform(1, 2 * opts.max_channels);
    arch.layers.push_back(l);
    cur = output_shape(l, cur);
    if (rng.coin(30)) maybe_pool();
  }
  LayerSpec last;
  last.kind = rng.coin(50) ? LayerKind::FCLast16 : LayerKind::FCBin;
  last.out_channels = rng.uniform(2, 10);
  arch.layers.push_back(last);
  return arch.resolved();
}

Architecture stress_architecture() {
  auto conv = [](LayerKind kind, int out) {
    LayerSpec l;
    l.kind = kind;
    l.out_channels = out;
    l.kernel = {1, 5};
    return l;
  };
  auto pool = [] {
    LayerSpec l;
    l.kind = LayerKind::MaxPool;
    l.pool = {1, 2};
    return l;
  };
  auto fc = [](LayerKind kind, int out) {
    LayerSpec l;
    l.kind = kind;
    l.out_channels = out;
    return l;
  };
  Architecture a;
  a.name = "stress-reconstructed";
  a.input_shape = {7, 1, 64};
  a.layers = {conv(LayerKind::ConvFirst, 88),
              conv(LayerKind::ConvBin, 96),
              pool(),
              conv(LayerKind::ConvBin, 56),
              conv(LayerKind::ConvBin, 56),
              pool(),
              conv(LayerKind::ConvBin, 24),
              pool(),
              fc(LayerKind::FCBin, 64),
              fc(LayerKind::FCLast16, 4)};
  return a.resolved();
}

Architecture pamap2_architecture() {
  Architecture a;
  a.name = "pamap2-reconstructed";
  a.input_shape = {40, 1, 1};
  LayerSpec first;
  first.kind = LayerKind::ConvFirst;
  first.out_channels = 256;
  LayerSpec hidden;
  hidden.kind = LayerKind::FCBin;
  hidden.out_channels = 496;
  LayerSpec out;
  out.kind = LayerKind::FCBin;
  out.out_channels = 16;
  a.layers = {first, hidden, out};
  return a.resolved();
}

}  // namespace bnnsim
