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

#include <cstdint>
#include <vector>

#include "bnnsim/model.hpp"

namespace bnnsim {

// Feature map of explicit -1/+1 values, channel-major like the packed maps.
struct SignTensor {
  Shape shape;
  std::vector<std::int8_t> data;

  SignTensor() = default;
  explicit SignTensor(Shape s) : shape(s), data(s.elements(), 1) {}

  std::size_t index(int c, int h, int w) const {
    return (static_cast<std::size_t>(h) * static_cast<std::size_t>(shape.width) +
            static_cast<std::size_t>(w)) *
               static_cast<std::size_t>(shape.channels) +
           static_cast<std::size_t>(c);
  }
  int at(int c, int h, int w) const { return data[index(c, h, w)]; }

  friend bool operator==(const SignTensor&, const SignTensor&) = default;
};

// Integer tensor of pre-activation accumulators, same layout.
struct IntTensor {
  Shape shape;
  std::vector<std::int32_t> data;

  IntTensor() = default;
  explicit IntTensor(Shape s) : shape(s), data(s.elements(), 0) {}

  std::size_t index(int c, int h, int w) const {
    return (static_cast<std::size_t>(h) * static_cast<std::size_t>(shape.width) +
            static_cast<std::size_t>(w)) *
               static_cast<std::size_t>(shape.channels) +
           static_cast<std::size_t>(c);
  }
  std::int32_t at(int c, int h, int w) const { return data[index(c, h, w)]; }
};

struct ReferenceResult {
  int class_id = 0;
  std::vector<std::int32_t> logits;
  // One entry per layer except the final (logit-producing) one.
  std::vector<SignTensor> intermediates;
  // Input after binarization, present when layer 0 is a binary layer.
  SignTensor binarized_input;
};

// Naive layer-by-layer evaluation with explicit +/-1 arithmetic. Shares no
// code with the packed engine.
ReferenceResult ref_infer(const NetworkSpec& net, const Fixed16Tensor& input);

// sign(max over each pool of the raw accumulators): max-pool applied before
// the activation. pool must divide the spatial extents.
SignTensor ref_maxpool_before_sign(const IntTensor& pre_activation, Extent2 pool);

// Elementwise sign with sign(0) = +1.
SignTensor ref_sign(const IntTensor& t);
// Max over non-overlapping pools of a sign map (floor on the edges).
SignTensor ref_maxpool(const SignTensor& t, Extent2 pool);

// Lowest index wins ties.
int argmax(const std::vector<std::int32_t>& logits);

}  // namespace bnnsim
