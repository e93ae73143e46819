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
#include <random>

#include "bnnsim/model.hpp"

namespace bnnsim {

// Stand-in for trained weights: binary weights i.i.d. +/-1, Q8.8 weights
// uniform over the full 16-bit range, biases uniform in [-3, 3]. Values are
// taken straight from mt19937_64 output bits so a seed means the same model
// on every standard library. arch must pass validate_structure.
NetworkSpec generate_random(const Architecture& arch, std::uint64_t seed);

// Uniform Q8.8 frame over the full range.
Fixed16Tensor random_input(Shape shape, std::uint64_t seed);

struct RandomArchOptions {
  int max_channels = 40;
  int max_spatial = 12;
  int max_mid_layers = 4;
};

// Small random architecture mixing every layer kind: optional conv_first,
// binary convs with assorted kernels/strides, maxpools of assorted extents,
// fc layers, and a final fc or fc16. Always passes validate_structure.
Architecture random_architecture(std::uint64_t seed, const RandomArchOptions& opts = {});

// Reconstructed case-study architectures.
Architecture stress_architecture();
Architecture pamap2_architecture();

}  // namespace bnnsim
