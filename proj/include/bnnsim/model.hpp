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

#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "bnnsim/bitpack.hpp"

namespace bnnsim {

enum class LayerKind : std::uint8_t {
  ConvFirst = 1,  // full-precision input, binary weights: add/sub accumulate
  ConvBin = 2,    // binary conv, xnor/popcount
  FCBin = 3,      // binary fully connected, xnor/popcount
  FCLast16 = 4,   // binary activations, Q8.8 weights: add/sub accumulate
  MaxPool = 5,
};

std::string_view to_string(LayerKind kind);
bool has_weights(LayerKind kind);
bool is_fully_connected(LayerKind kind);
// True for layers whose output feature map is binarized.
bool produces_binary(LayerKind kind);

// Q8.8 signed fixed point.
struct Fixed16 {
  static constexpr int kFractionBits = 8;
  static constexpr double kScale = 256.0;

  std::int16_t raw = 0;

  // Rounds to the nearest representable value; throws InvalidInputError
  // outside [-128, 128).
  static Fixed16 from_double(double value);
  double to_double() const { return raw / kScale; }

  friend bool operator==(const Fixed16&, const Fixed16&) = default;
};

// Channel-major like PackedBitTensor: element (c,h,w) at (h*W + w)*C + c.
struct Fixed16Tensor {
  Shape shape;
  std::vector<Fixed16> data;

  Fixed16Tensor() = default;
  explicit Fixed16Tensor(Shape s) : shape(s), data(s.elements()) {}

  std::size_t index(int c, int h, int w) const {
    return (static_cast<std::size_t>(h) * static_cast<std::size_t>(shape.width) +
            static_cast<std::size_t>(w)) *
               static_cast<std::size_t>(shape.channels) +
           static_cast<std::size_t>(c);
  }
  Fixed16 at(int c, int h, int w) const { return data[index(c, h, w)]; }
};

struct Extent2 {
  int h = 1;
  int w = 1;
  friend bool operator==(const Extent2&, const Extent2&) = default;
};

struct LayerSpec {
  LayerKind kind = LayerKind::ConvBin;
  int in_channels = 0;
  int out_channels = 0;
  // FC layers carry the full input extent as their kernel.
  Extent2 kernel;
  Extent2 stride;
  Extent2 pool;  // MaxPool only; the pool stride equals its size
  // Added to the accumulator before sign (or to the logit for the final
  // layer). One per output channel, empty for MaxPool. ConvFirst and
  // FCLast16 biases are in raw Q8.8 units.
  std::vector<std::int32_t> bias;

  // Weight elements per output channel: kernel.h * kernel.w * in_channels.
  std::size_t receptive_field() const;

  friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

// Binary layers: `bits` holds out_channels filters back to back, each
// receptive_field() bits in [kh][kw][c] order (the same order as the input
// feature map). FCLast16: `fixed` holds the Q8.8 weights in the same order.
struct LayerWeights {
  PackedBitVector bits;
  std::vector<std::int16_t> fixed;

  friend bool operator==(const LayerWeights&, const LayerWeights&) = default;
};

// Layer list without weights, as written in an architecture file.
struct Architecture {
  std::string name;
  Shape input_shape;
  std::vector<LayerSpec> layers;

  // Fills in in_channels for every layer and the kernel of FC layers by
  // chaining shapes from input_shape. Throws ValidationError when the chain
  // breaks.
  Architecture resolved() const;
};

struct NetworkSpec {
  std::string name;
  Shape input_shape;
  std::vector<LayerSpec> layers;
  std::vector<LayerWeights> weights;

  Architecture architecture() const { return {name, input_shape, layers}; }
  friend bool operator==(const NetworkSpec&, const NetworkSpec&) = default;
};

// Valid (unpadded) convolution arithmetic. Throws ContractError if the
// kernel or pool does not fit the input.
Shape output_shape(const LayerSpec& layer, Shape in);

// Output shape after every layer; element i is the output of layer i.
std::vector<Shape> layer_shapes(const Architecture& arch);
std::vector<Shape> layer_shapes(const NetworkSpec& net);

// Every invariant violation found; empty means the network is valid.
std::vector<std::string> validate(const NetworkSpec& net);
std::vector<std::string> validate_structure(const Architecture& arch);
// Throws ValidationError listing every diagnostic.
void require_valid(const NetworkSpec& net);

struct LayerOpCount {
  std::size_t params = 0;
  // 2 x multiply-accumulates: one multiply (xnor or add/sub select) and one
  // accumulate per weight use.
  std::size_t mac_ops = 0;
  // (pool_size - 1) comparisons per pooled output element.
  std::size_t pool_compare_ops = 0;
  std::size_t nominal_ops() const { return mac_ops + pool_compare_ops; }
};

struct OpCounts {
  std::size_t params = 0;
  std::size_t binary_params = 0;
  std::size_t fixed16_params = 0;
  std::size_t mac_ops = 0;
  std::size_t pool_compare_ops = 0;
  std::vector<LayerOpCount> per_layer;

  std::size_t nominal_ops() const { return mac_ops + pool_compare_ops; }
};

OpCounts count_params_and_ops(const NetworkSpec& net);
OpCounts count_params_and_ops(const Architecture& arch);

struct PackedSize {
  // ceil(binary params / 8) per layer + 2 bytes per Q8.8 weight.
  std::size_t weight_bytes = 0;
  // File header, layer descriptors and biases.
  std::size_t overhead_bytes = 0;
  std::size_t total() const { return weight_bytes + overhead_bytes; }
};

PackedSize packed_size_bytes(const NetworkSpec& net);

}  // namespace bnnsim
