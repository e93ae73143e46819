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

#include <optional>
#include <string>

#include "bnnsim/engine.hpp"
#include "bnnsim/reference.hpp"

namespace bnnsim {

// First disagreement between the packed engine and the reference oracle.
struct Mismatch {
  // Layer index, or -1 for the binarized input.
  long layer = 0;
  int channel = 0;
  int height = 0;
  int width = 0;
  int expected = 0;
  int actual = 0;
  std::string what;

  std::string describe() const;
};

// Compares class, logits and every feature map the engine materialized.
std::optional<Mismatch> compare_results(const ReferenceResult& expected, const EngineResult& actual);

}  // namespace bnnsim
