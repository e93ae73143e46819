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

#include "bnnsim/reference.hpp"

#include <algorithm>

#include "bnnsim/errors.hpp"

namespace bnnsim {

namespace {

int sign_of(std::int64_t x) { return x >= 0 ? 1 : -1; }

// Weight for output channel o at kernel offset (i, j), input channel c.
int binary_weight(const LayerSpec& l, const LayerWeights& w, int o, int i, int j, int c) {
  const std::size_t idx =
      static_cast<std::size_t>(o) * l.receptive_field() +
      (static_cast<std::size_t>(i) * static_cast<std::size_t>(l.kernel.w) +
       static_cast<std::size_t>(j)) *
          static_cast<std::size_t>(l.in_channels) +
      static_cast<std::size_t>(c);
  return w.bits.bit(idx) ? 1 : -1;
}

std::int32_t fixed_weight(const LayerSpec& l, const LayerWeights& w, int o, int i, int j, int c) {
  const std::size_t idx =
      static_cast<std::size_t>(o) * l.receptive_field() +
      (static_cast<std::size_t>(i) * static_cast<std::size_t>(l.kernel.w) +
       static_cast<std::size_t>(j)) *
          static_cast<std::size_t>(l.in_channels) +
      static_cast<std::size_t>(c);
  return w.fixed[idx];
}

// Generic valid convolution; value(c, h, w) yields the input sample and
// weight(o, i, j, c) the weight. FC layers are convolutions whose kernel is
// the whole input.
template <typename ValueFn, typename WeightFn>
IntTensor convolve(const LayerSpec& l, Shape in, ValueFn value, WeightFn weight) {
  const Shape out_shape = output_shape(l, in);
  IntTensor out(out_shape);
  for (int oh = 0; oh < out_shape.height; ++oh) {
    for (int ow = 0; ow < out_shape.width; ++ow) {
      for (int o = 0; o < out_shape.channels; ++o) {
        std::int64_t acc = 0;
        for (int i = 0; i < l.kernel.h; ++i) {
          for (int j = 0; j < l.kernel.w; ++j) {
            for (int c = 0; c < l.in_channels; ++c) {
              acc += static_cast<std::int64_t>(weight(o, i, j, c)) *
                     value(c, oh * l.stride.h + i, ow * l.stride.w + j);
            }
          }
        }
        acc += l.bias[static_cast<std::size_t>(o)];
        out.data[out.index(o, oh, ow)] = static_cast<std::int32_t>(acc);
      }
    }
  }
  return out;
}

}  // namespace

SignTensor ref_sign(const IntTensor& t) {
  SignTensor s(t.shape);
  for (std::size_t i = 0; i < t.data.size(); ++i) {
    s.data[i] = static_cast<std::int8_t>(sign_of(t.data[i]));
  }
  return s;
}

SignTensor ref_maxpool(const SignTensor& t, Extent2 pool) {
  const Shape out_shape{t.shape.channels, t.shape.height / pool.h, t.shape.width / pool.w};
  SignTensor out(out_shape);
  for (int h = 0; h < out_shape.height; ++h) {
    for (int w = 0; w < out_shape.width; ++w) {
      for (int c = 0; c < out_shape.channels; ++c) {
        int best = -1;
        for (int i = 0; i < pool.h; ++i) {
          for (int j = 0; j < pool.w; ++j) best = std::max(best, t.at(c, h * pool.h + i, w * pool.w + j));
        }
        out.data[out.index(c, h, w)] = static_cast<std::int8_t>(best);
      }
    }
  }
  return out;
}

SignTensor ref_maxpool_before_sign(const IntTensor& pre_activation, Extent2 pool) {
  const Shape& s = pre_activation.shape;
  if (pool.h < 1 || pool.w < 1 || s.height % pool.h != 0 || s.width % pool.w != 0) {
    throw ContractError("pool " + std::to_string(pool.h) + "x" + std::to_string(pool.w) +
                        " does not divide " + s.to_string());
  }
  const Shape out_shape{s.channels, s.height / pool.h, s.width / pool.w};
  SignTensor out(out_shape);
  for (int h = 0; h < out_shape.height; ++h) {
    for (int w = 0; w < out_shape.width; ++w) {
      for (int c = 0; c < out_shape.channels; ++c) {
        std::int32_t best = pre_activation.at(c, h * pool.h, w * pool.w);
        for (int i = 0; i < pool.h; ++i) {
          for (int j = 0; j < pool.w; ++j) {
            best = std::max(best, pre_activation.at(c, h * pool.h + i, w * pool.w + j));
          }
        }
        out.data[out.index(c, h, w)] = static_cast<std::int8_t>(sign_of(best));
      }
    }
  }
  return out;
}

int argmax(const std::vector<std::int32_t>& logits) {
  if (logits.empty()) throw ContractError("argmax of empty logits");
  return static_cast<int>(std::max_element(logits.begin(), logits.end()) - logits.begin());
}

ReferenceResult ref_infer(const NetworkSpec& net, const Fixed16Tensor& input) {
  if (input.shape != net.input_shape) {
    throw ContractError("input shape " + input.shape.to_string() + " does not match model input " +
                        net.input_shape.to_string());
  }
  if (net.layers.empty()) throw ContractError("network has no layers");
  ReferenceResult result;
  SignTensor act;
  Shape cur = net.input_shape;
  for (std::size_t li = 0; li < net.layers.size(); ++li) {
    const LayerSpec& l = net.layers[li];
    const LayerWeights& w = net.weights[li];
    const bool last = li + 1 == net.layers.size();
    if (li == 0 && l.kind != LayerKind::ConvFirst) {
      act = SignTensor(cur);
      for (std::size_t i = 0; i < input.data.size(); ++i) {
        act.data[i] = static_cast<std::int8_t>(sign_of(input.data[i].raw));
      }
      result.binarized_input = act;
    }
    IntTensor acc;
    switch (l.kind) {
      case LayerKind::ConvFirst:
        // Binary weights select +x or -x: a chain of adds and subtracts.
        acc = convolve(
            l, cur, [&](int c, int h, int x) { return std::int64_t{input.at(c, h, x).raw}; },
            [&](int o, int i, int j, int c) { return binary_weight(l, w, o, i, j, c); });
        break;
      case LayerKind::ConvBin:
      case LayerKind::FCBin:
        acc = convolve(
            l, cur, [&](int c, int h, int x) { return std::int64_t{act.at(c, h, x)}; },
            [&](int o, int i, int j, int c) { return binary_weight(l, w, o, i, j, c); });
        break;
      case LayerKind::FCLast16:
        acc = convolve(
            l, cur, [&](int c, int h, int x) { return std::int64_t{act.at(c, h, x)}; },
            [&](int o, int i, int j, int c) { return fixed_weight(l, w, o, i, j, c); });
        break;
      case LayerKind::MaxPool:
        act = ref_maxpool(act, l.pool);
        cur = act.shape;
        result.intermediates.push_back(act);
        continue;
    }
    cur = acc.shape;
    if (last) {
      result.logits = acc.data;
      break;
    }
    act = ref_sign(acc);
    result.intermediates.push_back(act);
  }
  result.class_id = argmax(result.logits);
  return result;
}

}  // namespace bnnsim
