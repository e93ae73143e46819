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

#include "bnnsim/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "bnnsim/errors.hpp"
#include "bnnsim/model_io.hpp"

namespace bnnsim {

std::string_view to_string(LayerKind kind) {
  switch (kind) {
    case LayerKind::ConvFirst: return "conv_first";
    case LayerKind::ConvBin: return "conv";
    case LayerKind::FCBin: return "fc";
    case LayerKind::FCLast16: return "fc16";
    case LayerKind::MaxPool: return "maxpool";
  }
  return "unknown";
}

bool has_weights(LayerKind kind) { return kind != LayerKind::MaxPool; }

bool is_fully_connected(LayerKind kind) {
  return kind == LayerKind::FCBin || kind == LayerKind::FCLast16;
}

bool produces_binary(LayerKind kind) {
  return kind == LayerKind::ConvFirst || kind == LayerKind::ConvBin || kind == LayerKind::FCBin;
}

Fixed16 Fixed16::from_double(double value) {
  const double scaled = std::nearbyint(value * kScale);
  if (!std::isfinite(scaled) || scaled < std::numeric_limits<std::int16_t>::min() ||
      scaled > std::numeric_limits<std::int16_t>::max()) {
    throw InvalidInputError("value " + std::to_string(value) + " is outside the Q8.8 range");
  }
  return Fixed16{static_cast<std::int16_t>(scaled)};
}

std::size_t LayerSpec::receptive_field() const {
  return static_cast<std::size_t>(kernel.h) * static_cast<std::size_t>(kernel.w) *
         static_cast<std::size_t>(in_channels);
}

Shape output_shape(const LayerSpec& layer, Shape in) {
  if (layer.kind == LayerKind::MaxPool) {
    if (layer.pool.h < 1 || layer.pool.w < 1) throw ContractError("pool extent must be >= 1");
    if (layer.pool.h > in.height || layer.pool.w > in.width) {
      throw ContractError("pool " + std::to_string(layer.pool.h) + "x" +
                          std::to_string(layer.pool.w) + " larger than input " + in.to_string());
    }
    return {in.channels, in.height / layer.pool.h, in.width / layer.pool.w};
  }
  if (is_fully_connected(layer.kind)) return {layer.out_channels, 1, 1};
  if (layer.kernel.h < 1 || layer.kernel.w < 1 || layer.stride.h < 1 || layer.stride.w < 1) {
    throw ContractError("kernel and stride extents must be >= 1");
  }
  if (layer.kernel.h > in.height || layer.kernel.w > in.width) {
    throw ContractError("kernel " + std::to_string(layer.kernel.h) + "x" +
                        std::to_string(layer.kernel.w) + " larger than input " + in.to_string());
  }
  return {layer.out_channels, (in.height - layer.kernel.h) / layer.stride.h + 1,
          (in.width - layer.kernel.w) / layer.stride.w + 1};
}

Architecture Architecture::resolved() const {
  Architecture out = *this;
  Shape cur = input_shape;
  for (std::size_t i = 0; i < out.layers.size(); ++i) {
    LayerSpec& l = out.layers[i];
    l.in_channels = cur.channels;
    if (l.kind == LayerKind::MaxPool) l.out_channels = cur.channels;
    if (is_fully_connected(l.kind)) {
      l.kernel = {cur.height, cur.width};
      l.stride = {1, 1};
    }
    try {
      cur = output_shape(l, cur);
    } catch (const ContractError& e) {
      throw ValidationError("layer " + std::to_string(i) + ": " + e.what());
    }
  }
  return out;
}

std::vector<Shape> layer_shapes(const Architecture& arch) {
  std::vector<Shape> shapes;
  shapes.reserve(arch.layers.size());
  Shape cur = arch.input_shape;
  for (const auto& l : arch.layers) {
    cur = output_shape(l, cur);
    shapes.push_back(cur);
  }
  return shapes;
}

std::vector<Shape> layer_shapes(const NetworkSpec& net) {
  return layer_shapes(net.architecture());
}

std::vector<std::string> validate_structure(const Architecture& arch) {
  std::vector<std::string> diags;
  auto report = [&](std::size_t i, const std::string& msg) {
    diags.push_back("layer " + std::to_string(i) + ": " + msg);
  };
  const Shape& in = arch.input_shape;
  if (in.channels < 1 || in.height < 1 || in.width < 1) {
    diags.push_back("input shape " + in.to_string() + " must be positive");
    return diags;
  }
  Shape cur = in;
  const std::size_t n = arch.layers.size();
  for (std::size_t i = 0; i < n; ++i) {
    const LayerSpec& l = arch.layers[i];
    const bool last = i + 1 == n;
    if (l.kind == LayerKind::ConvFirst && i != 0) report(i, "conv_first is only allowed as layer 0");
    if (l.kind == LayerKind::FCLast16 && !last) report(i, "fc16 is only allowed as the final layer");
    if (last && !is_fully_connected(l.kind)) {
      report(i, "final layer must be fc or fc16 to produce logits");
    }
    if (l.kind == LayerKind::MaxPool) {
      if (i == 0 || !produces_binary(arch.layers[i - 1].kind)) {
        report(i, "pool without preceding binary layer");
      }
      if (l.pool.h < 1 || l.pool.w < 1) report(i, "pool extent must be >= 1");
      if (l.out_channels != l.in_channels) report(i, "maxpool must preserve channel count");
    } else {
      if (l.out_channels < 1) report(i, "out_channels must be >= 1");
      if (l.kernel.h < 1 || l.kernel.w < 1) report(i, "kernel extent must be >= 1");
      if (l.stride.h < 1 || l.stride.w < 1) report(i, "stride extent must be >= 1");
    }
    if (l.in_channels != cur.channels) {
      report(i, "input channel mismatch: layer expects " + std::to_string(l.in_channels) +
                    ", previous output has " + std::to_string(cur.channels));
    }
    if (is_fully_connected(l.kind) && (l.kernel.h != cur.height || l.kernel.w != cur.width)) {
      report(i, "fc kernel must cover the whole input " + cur.to_string());
    }
    // Accumulator range: 32-bit signed, with headroom for the bias.
    const double k = static_cast<double>(l.kernel.h) * l.kernel.w * std::max(l.in_channels, 0);
    const double per_term =
        (l.kind == LayerKind::ConvFirst || l.kind == LayerKind::FCLast16) ? 32768.0 : 1.0;
    if (l.kind != LayerKind::MaxPool && k * per_term >= 2147483647.0 / 2) {
      report(i, "receptive field too large for a 32-bit accumulator");
    }
    try {
      cur = output_shape(l, cur);
    } catch (const ContractError& e) {
      report(i, std::string("shape error: ") + e.what());
      return diags;  // later shapes are meaningless
    }
    if (cur.elements() == 0) {
      report(i, "produces an empty feature map");
      return diags;
    }
  }
  return diags;
}

std::vector<std::string> validate(const NetworkSpec& net) {
  std::vector<std::string> diags = validate_structure(net.architecture());
  if (net.weights.size() != net.layers.size()) {
    diags.push_back("weight table has " + std::to_string(net.weights.size()) + " entries for " +
                    std::to_string(net.layers.size()) + " layers");
    return diags;
  }
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    const LayerSpec& l = net.layers[i];
    const LayerWeights& w = net.weights[i];
    const std::size_t bias_expected =
        l.kind == LayerKind::MaxPool ? 0 : static_cast<std::size_t>(std::max(l.out_channels, 0));
    if (l.bias.size() != bias_expected) {
      diags.push_back("layer " + std::to_string(i) + ": bias count mismatch: expected " +
                      std::to_string(bias_expected) + ", got " + std::to_string(l.bias.size()));
    }
    const std::size_t expected =
        l.out_channels > 0 ? static_cast<std::size_t>(l.out_channels) * l.receptive_field() : 0;
    auto mismatch = [&](std::size_t got) {
      diags.push_back("layer " + std::to_string(i) + ": weight count mismatch: expected " +
                      std::to_string(expected) + ", got " + std::to_string(got));
    };
    switch (l.kind) {
      case LayerKind::MaxPool:
        if (w.bits.valid_bits() != 0 || !w.fixed.empty()) {
          diags.push_back("layer " + std::to_string(i) + ": maxpool carries no weights");
        }
        break;
      case LayerKind::FCLast16:
        if (w.fixed.size() != expected) mismatch(w.fixed.size());
        if (w.bits.valid_bits() != 0) {
          diags.push_back("layer " + std::to_string(i) + ": fc16 has unexpected binary weights");
        }
        break;
      default:
        if (w.bits.valid_bits() != expected) mismatch(w.bits.valid_bits());
        if (!w.fixed.empty()) {
          diags.push_back("layer " + std::to_string(i) + ": binary layer has Q8.8 weights");
        }
        break;
    }
  }
  return diags;
}

void require_valid(const NetworkSpec& net) {
  const auto diags = validate(net);
  if (diags.empty()) return;
  std::string msg = "invalid network";
  for (const auto& d : diags) msg += "\n  " + d;
  throw ValidationError(msg);
}

namespace {

OpCounts count_impl(const Architecture& arch) {
  OpCounts counts;
  Shape cur = arch.input_shape;
  for (const auto& l : arch.layers) {
    const Shape out = output_shape(l, cur);
    LayerOpCount lc;
    if (l.kind == LayerKind::MaxPool) {
      lc.pool_compare_ops =
          static_cast<std::size_t>(l.pool.h * l.pool.w - 1) * out.elements();
    } else {
      lc.params = static_cast<std::size_t>(l.out_channels) * l.receptive_field();
      lc.mac_ops = 2 * l.receptive_field() * out.elements();
      if (l.kind == LayerKind::FCLast16) {
        counts.fixed16_params += lc.params;
      } else {
        counts.binary_params += lc.params;
      }
    }
    counts.params += lc.params;
    counts.mac_ops += lc.mac_ops;
    counts.pool_compare_ops += lc.pool_compare_ops;
    counts.per_layer.push_back(lc);
    cur = out;
  }
  return counts;
}

}  // namespace

OpCounts count_params_and_ops(const Architecture& arch) { return count_impl(arch); }

OpCounts count_params_and_ops(const NetworkSpec& net) {
  return count_impl(net.architecture());
}

PackedSize packed_size_bytes(const NetworkSpec& net) {
  PackedSize size;
  size.overhead_bytes = model_format::kHeaderBytes + net.name.size();
  for (const auto& l : net.layers) {
    size.overhead_bytes += model_format::kDescriptorBytes + 4 * l.bias.size();
    if (l.kind == LayerKind::MaxPool) continue;
    const std::size_t params = static_cast<std::size_t>(l.out_channels) * l.receptive_field();
    size.weight_bytes += l.kind == LayerKind::FCLast16 ? 2 * params : (params + 7) / 8;
  }
  return size;
}

}  // namespace bnnsim
