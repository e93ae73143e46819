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
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "bnnsim/bitpack.hpp"
#include "bnnsim/model.hpp"

namespace bnnsim {

struct HardwareConfig {
  WordWidth m{128};
  int n_pes = 1;
  double clock_hz = 100e6;

  // Throws ContractError unless n_pes is in [1, 64] and clock_hz > 0.
  void validate() const;
};

struct AccessTally {
  std::uint64_t entries = 0;
  std::uint64_t bits = 0;

  AccessTally& operator+=(const AccessTally& o) {
    entries += o.entries;
    bits += o.bits;
    return *this;
  }
  friend bool operator==(const AccessTally&, const AccessTally&) = default;
};

// An operation is one add or one multiply: a fused xnor/popcount over k
// valid bits is 2k operations, as is an add/sub chain over k samples.
struct ExecutionCounters {
  std::uint64_t nominal_ops = 0;
  std::uint64_t effective_ops = 0;
  std::uint64_t skipped_ops = 0;
  std::uint64_t xnor_pcnt_instructions = 0;
  std::uint64_t addsub_ops = 0;  // first and last layers
  std::uint64_t pool_compare_ops = 0;
  AccessTally filter_mem_reads;
  AccessTally input_mem_reads;
  AccessTally fmap_mem_writes;
  std::uint64_t estimated_cycles = 0;

  ExecutionCounters& operator+=(const ExecutionCounters& o);
  friend bool operator==(const ExecutionCounters&, const ExecutionCounters&) = default;
};

struct RunOptions {
  bool pool_skipping = false;
  bool record_intermediates = false;
  // Host threads used to run PE lanes. Results do not depend on it.
  int workers = 1;
  // Mutation hook for the differential harness: treat the last partial word
  // of every xnor/popcount as full. Never set outside tests.
  bool inject_tail_mask_fault = false;
};

enum class MemoryRole { Input, FeatureMap };

struct LayerTrace {
  std::size_t layer = 0;
  LayerKind kind = LayerKind::ConvBin;
  Shape output;
  // Memory the layer reads its feature map from; the other one receives its
  // output. The two swap after every materialized map.
  MemoryRole source = MemoryRole::Input;
  ExecutionCounters counters;
  // Binary producers: how many output elements were actually computed and
  // how many of those binarized to +1.
  std::uint64_t evaluated_outputs = 0;
  std::uint64_t plus_outputs = 0;
};

struct EngineResult {
  int class_id = 0;
  std::vector<std::int32_t> logits;
  ExecutionCounters counters;
  std::vector<LayerTrace> layers;
  // Present when record_intermediates is set: one slot per non-final layer.
  // A producer fused with a following max-pool under pool-skipping has no
  // complete pre-pool map, so its slot stays empty.
  std::vector<std::optional<PackedBitTensor>> intermediates;
  std::optional<PackedBitTensor> binarized_input;
};

// Round-robin output-channel tiling: PE p owns channels p, p + n, p + 2n, ...
std::vector<std::vector<int>> tile_output_channels(int out_channels, int n_pes);

// Runs the packed simulator. Throws ValidationError for an invalid network and
// ContractError for a mismatched input or hardware config.
EngineResult run_inference(const NetworkSpec& net, const Fixed16Tensor& input,
                           const HardwareConfig& hw, const RunOptions& opts = {});

// Per-layer building blocks used by run_inference. `pool` is the max-pool
// fused after the producer, if any; pool_trace receives its counters.
struct StageOutput {
  PackedBitTensor output;                  // pooled map when pool is given
  std::optional<PackedBitTensor> prepool;  // full producer map, when available
};

StageOutput execute_mid_layer(const LayerSpec& layer, const LayerWeights& weights,
                              const PackedBitTensor& input, const LayerSpec* pool,
                              const HardwareConfig& hw, const RunOptions& opts,
                              LayerTrace& trace, LayerTrace* pool_trace);

StageOutput execute_first_layer(const LayerSpec& layer, const LayerWeights& weights,
                                const Fixed16Tensor& input, const LayerSpec* pool,
                                const HardwareConfig& hw, const RunOptions& opts,
                                LayerTrace& trace, LayerTrace* pool_trace);

// Final layer: fc16 (add/sub over Q8.8 weights) or a binary fc whose raw
// accumulators are the logits.
std::vector<std::int32_t> execute_last_layer(const LayerSpec& layer, const LayerWeights& weights,
                                             const PackedBitTensor& activations,
                                             const HardwareConfig& hw, const RunOptions& opts,
                                             LayerTrace& trace);

// One CSV row per layer with every counter.
void write_trace_csv(std::ostream& os, const EngineResult& result);

}  // namespace bnnsim
