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

#include "bnnsim/differential.hpp"

#include <sstream>

namespace bnnsim {

namespace {

std::optional<Mismatch> compare_map(long layer, const SignTensor& ref, const PackedBitTensor& got) {
  if (ref.shape != got.shape) {
    Mismatch m;
    m.layer = layer;
    m.what = "shape " + got.shape.to_string() + " vs expected " + ref.shape.to_string();
    return m;
  }
  for (int h = 0; h < ref.shape.height; ++h) {
    for (int w = 0; w < ref.shape.width; ++w) {
      for (int c = 0; c < ref.shape.channels; ++c) {
        const int actual = got.at(c, h, w) ? 1 : -1;
        if (actual != ref.at(c, h, w)) {
          return Mismatch{layer, c, h, w, ref.at(c, h, w), actual, "feature map bit"};
        }
      }
    }
  }
  return std::nullopt;
}

}  // namespace

std::string Mismatch::describe() const {
  std::ostringstream os;
  os << what << " mismatch at ";
  if (layer < 0) {
    os << "binarized input";
  } else {
    os << "layer " << layer;
  }
  os << " (c=" << channel << ", h=" << height << ", w=" << width << "): expected " << expected
     << ", got " << actual;
  return os.str();
}

std::optional<Mismatch> compare_results(const ReferenceResult& expected, const EngineResult& actual) {
  if (actual.binarized_input) {
    if (auto m = compare_map(-1, expected.binarized_input, *actual.binarized_input)) return m;
  }
  for (std::size_t i = 0; i < actual.intermediates.size() && i < expected.intermediates.size(); ++i) {
    if (!actual.intermediates[i]) continue;
    if (auto m = compare_map(static_cast<long>(i), expected.intermediates[i], *actual.intermediates[i])) {
      return m;
    }
  }
  const long last = static_cast<long>(expected.intermediates.size());
  if (expected.logits.size() != actual.logits.size()) {
    return Mismatch{last, 0, 0, 0, static_cast<int>(expected.logits.size()),
                    static_cast<int>(actual.logits.size()), "logit count"};
  }
  for (std::size_t c = 0; c < expected.logits.size(); ++c) {
    if (expected.logits[c] != actual.logits[c]) {
      return Mismatch{last, static_cast<int>(c), 0, 0, expected.logits[c], actual.logits[c], "logit"};
    }
  }
  if (expected.class_id != actual.class_id) {
    return Mismatch{last, 0, 0, 0, expected.class_id, actual.class_id, "class"};
  }
  return std::nullopt;
}

}  // namespace bnnsim
