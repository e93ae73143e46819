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

#include "bnnsim/engine.hpp"

#include <algorithm>
#include <thread>

#include "bnnsim/errors.hpp"
#include "bnnsim/reference.hpp"

namespace bnnsim {

void HardwareConfig::validate() const {
  if (n_pes < 1 || n_pes > 64) {
    throw ContractError("PE count " + std::to_string(n_pes) + " outside [1, 64]");
  }
  if (!(clock_hz > 0)) throw ContractError("clock frequency must be positive");
}

ExecutionCounters& ExecutionCounters::operator+=(const ExecutionCounters& o) {
  nominal_ops += o.nominal_ops;
  effective_ops += o.effective_ops;
  skipped_ops += o.skipped_ops;
  xnor_pcnt_instructions += o.xnor_pcnt_instructions;
  addsub_ops += o.addsub_ops;
  pool_compare_ops += o.pool_compare_ops;
  filter_mem_reads += o.filter_mem_reads;
  input_mem_reads += o.input_mem_reads;
  fmap_mem_writes += o.fmap_mem_writes;
  estimated_cycles += o.estimated_cycles;
  return *this;
}

std::vector<std::vector<int>> tile_output_channels(int out_channels, int n_pes) {
  if (out_channels < 1) throw ContractError("tiling needs at least one output channel");
  if (n_pes < 1) throw ContractError("tiling needs at least one PE");
  std::vector<std::vector<int>> tiles(static_cast<std::size_t>(n_pes));
  for (int c = 0; c < out_channels; ++c) tiles[static_cast<std::size_t>(c % n_pes)].push_back(c);
  return tiles;
}

namespace {

// Entries of an m-bit memory touched by bits [start, start + len).
std::uint64_t entries_spanned(std::size_t start, std::size_t len, unsigned m) {
  if (len == 0) return 0;
  return (start + len - 1) / m - start / m + 1;
}

std::uint64_t ceil_div(std::uint64_t a, std::uint64_t b) { return (a + b - 1) / b; }

template <typename Fn>
void for_each_lane(int n_pes, int workers, Fn&& fn) {
  const int threads = std::min(std::max(workers, 1), n_pes);
  if (threads == 1) {
    for (int p = 0; p < n_pes; ++p) fn(p);
    return;
  }
  std::vector<std::jthread> pool;
  pool.reserve(static_cast<std::size_t>(threads));
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([&fn, t, threads, n_pes] {
      for (int p = t; p < n_pes; p += threads) fn(p);
    });
  }
}

struct LaneTally {
  ExecutionCounters producer;
  ExecutionCounters pool;
  // Instructions (xnor/popcount lanes) or add/sub steps issued by this PE.
  std::uint64_t compute_units = 0;
  std::uint64_t evaluated = 0;
  std::uint64_t plus = 0;
};

// Splits the filters of a binary layer into one m-bit-chunked vector per
// output channel; each filter starts on an entry boundary in filter memory.
std::vector<PackedBitVector> split_filters(const LayerSpec& l, const LayerWeights& w, WordWidth m) {
  const std::size_t k = l.receptive_field();
  std::vector<PackedBitVector> filters;
  filters.reserve(static_cast<std::size_t>(l.out_channels));
  for (int o = 0; o < l.out_channels; ++o) {
    PackedBitVector f(m);
    f.reserve_bits(k);
    f.append_range(w.bits, static_cast<std::size_t>(o) * k, k);
    filters.push_back(std::move(f));
  }
  return filters;
}

// xnor/popcount evaluation of one output element over a packed feature map.
class XnorEvaluator {
 public:
  XnorEvaluator(const LayerSpec& l, const std::vector<PackedBitVector>& filters,
                const PackedBitTensor& in, WordWidth m, bool fault)
      : l_(l), filters_(filters), in_(in), m_(m), fault_(fault), scratch_(m) {
    scratch_.reserve_bits(l.receptive_field());
  }

  std::uint64_t nominal_cost() const { return 2 * l_.receptive_field(); }

  void load_filter(LaneTally& t) const {
    const std::size_t k = l_.receptive_field();
    t.producer.filter_mem_reads += {ceil_div(k, m_.bits()), k};
  }

  std::uint64_t rf_entries(int oh, int ow) const {
    std::uint64_t e = 0;
    for (int i = 0; i < l_.kernel.h; ++i) e += entries_spanned(row_start(oh, ow, i), row_len(), m_.bits());
    return e;
  }

  std::int32_t accumulate(int o, int oh, int ow, LaneTally& t) {
    scratch_.clear();
    for (int i = 0; i < l_.kernel.h; ++i) scratch_.append_range(in_.data, row_start(oh, ow, i), row_len());
    const std::size_t k = l_.receptive_field();
    const std::uint64_t instr = xnor_pcnt_instruction_count(k, m_);
    t.producer.xnor_pcnt_instructions += instr;
    t.producer.effective_ops += 2 * k;
    t.producer.input_mem_reads += {rf_entries(oh, ow), k};
    t.compute_units += instr;
    const auto& f = filters_[static_cast<std::size_t>(o)];
    return detail::signed_dot_chunked(f, scratch_, !fault_) + l_.bias[static_cast<std::size_t>(o)];
  }

 private:
  std::size_t row_start(int oh, int ow, int i) const {
    const std::size_t h = static_cast<std::size_t>(oh * l_.stride.h + i);
    const std::size_t w = static_cast<std::size_t>(ow * l_.stride.w);
    return (h * static_cast<std::size_t>(in_.shape.width) + w) *
           static_cast<std::size_t>(in_.shape.channels);
  }
  std::size_t row_len() const {
    return static_cast<std::size_t>(l_.kernel.w) * static_cast<std::size_t>(l_.in_channels);
  }

  const LayerSpec& l_;
  const std::vector<PackedBitVector>& filters_;
  const PackedBitTensor& in_;
  WordWidth m_;
  bool fault_;
  PackedBitVector scratch_;
};

// Add/sub evaluation of one first-layer output over Q8.8 samples: each
// weight bit selects +x or -x.
class AddSubEvaluator {
 public:
  static constexpr unsigned kSampleBits = 16;

  AddSubEvaluator(const LayerSpec& l, const LayerWeights& w, const Fixed16Tensor& in, WordWidth m)
      : l_(l), w_(w), in_(in), m_(m) {}

  std::uint64_t nominal_cost() const { return 2 * l_.receptive_field(); }

  void load_filter(LaneTally& t) const {
    const std::size_t k = l_.receptive_field();
    t.producer.filter_mem_reads += {ceil_div(k, m_.bits()), k};
  }

  std::uint64_t rf_entries(int oh, int ow) const {
    std::uint64_t e = 0;
    for (int i = 0; i < l_.kernel.h; ++i) {
      e += entries_spanned(kSampleBits * row_start(oh, ow, i), kSampleBits * row_len(), m_.bits());
    }
    return e;
  }

  std::int32_t accumulate(int o, int oh, int ow, LaneTally& t) const {
    const std::size_t k = l_.receptive_field();
    const std::size_t base = static_cast<std::size_t>(o) * k;
    std::int32_t acc = l_.bias[static_cast<std::size_t>(o)];
    std::size_t wi = base;
    for (int i = 0; i < l_.kernel.h; ++i) {
      const std::size_t start = row_start(oh, ow, i);
      for (std::size_t s = 0; s < row_len(); ++s, ++wi) {
        const std::int32_t x = in_.data[start + s].raw;
        acc += w_.bits.bit(wi) ? x : -x;
      }
    }
    t.producer.addsub_ops += 2 * k;
    t.producer.effective_ops += 2 * k;
    t.producer.input_mem_reads += {rf_entries(oh, ow), kSampleBits * k};
    t.compute_units += k;
    return acc;
  }

 private:
  std::size_t row_start(int oh, int ow, int i) const {
    const std::size_t h = static_cast<std::size_t>(oh * l_.stride.h + i);
    const std::size_t w = static_cast<std::size_t>(ow * l_.stride.w);
    return (h * static_cast<std::size_t>(in_.shape.width) + w) *
           static_cast<std::size_t>(in_.shape.channels);
  }
  std::size_t row_len() const {
    return static_cast<std::size_t>(l_.kernel.w) * static_cast<std::size_t>(l_.in_channels);
  }

  const LayerSpec& l_;
  const LayerWeights& w_;
  const Fixed16Tensor& in_;
  WordWidth m_;
};

PackedBitTensor assemble(Shape shape, const std::vector<std::vector<std::uint8_t>>& per_channel,
                         WordWidth m) {
  PackedBitTensor t(shape, m);
  for (int c = 0; c < shape.channels; ++c) {
    const auto& bits = per_channel[static_cast<std::size_t>(c)];
    for (int h = 0; h < shape.height; ++h) {
      for (int w = 0; w < shape.width; ++w) {
        if (bits[static_cast<std::size_t>(h * shape.width + w)]) t.set(c, h, w, true);
      }
    }
  }
  return t;
}

// Shared driver for binary-output producers (conv_first, conv, fc), with an
// optional fused max-pool. make_eval() builds a per-lane evaluator.
template <typename MakeEval>
StageOutput run_producer(const LayerSpec& l, Shape in_shape, const LayerSpec* pool,
                         const HardwareConfig& hw, const RunOptions& opts, bool xnor_layer,
                         MakeEval make_eval, LayerTrace& trace, LayerTrace* pool_trace) {
  const Shape conv_shape = output_shape(l, in_shape);
  const Shape out_shape = pool ? output_shape(*pool, conv_shape) : conv_shape;
  const auto positions = static_cast<std::size_t>(conv_shape.height * conv_shape.width);
  const auto tiles = tile_output_channels(l.out_channels, hw.n_pes);
  const bool skipping = pool != nullptr && opts.pool_skipping;

  std::vector<std::vector<std::uint8_t>> conv_bits(static_cast<std::size_t>(l.out_channels));
  std::vector<std::vector<std::uint8_t>> pooled_bits(static_cast<std::size_t>(l.out_channels));
  std::vector<std::vector<std::uint8_t>> evaluated(static_cast<std::size_t>(l.out_channels));
  std::vector<LaneTally> lanes(static_cast<std::size_t>(hw.n_pes));

  for_each_lane(hw.n_pes, opts.workers, [&](int p) {
    LaneTally& t = lanes[static_cast<std::size_t>(p)];
    auto eval = make_eval();
    for (int o : tiles[static_cast<std::size_t>(p)]) {
      const auto oi = static_cast<std::size_t>(o);
      eval.load_filter(t);
      // Skipped positions stay 1: the or-gate masks them anyway.
      auto& cb = conv_bits[oi];
      cb.assign(positions, 1);
      auto& ev = evaluated[oi];
      ev.assign(positions, 0);
      auto compute = [&](int oh, int ow) {
        const bool bit = binarize(eval.accumulate(o, oh, ow, t));
        const auto pos = static_cast<std::size_t>(oh * conv_shape.width + ow);
        cb[pos] = bit;
        ev[pos] = 1;
        ++t.evaluated;
        t.plus += bit;
        return bit;
      };
      if (pool == nullptr) {
        for (int oh = 0; oh < conv_shape.height; ++oh) {
          for (int ow = 0; ow < conv_shape.width; ++ow) compute(oh, ow);
        }
        continue;
      }
      auto& pb = pooled_bits[oi];
      pb.assign(static_cast<std::size_t>(out_shape.height * out_shape.width), 0);
      for (int ph = 0; ph < out_shape.height; ++ph) {
        for (int pw = 0; pw < out_shape.width; ++pw) {
          bool any = false;
          int e = 0;
          for (int i = 0; i < pool->pool.h; ++i) {
            for (int j = 0; j < pool->pool.w; ++j, ++e) {
              if (skipping && any) {
                t.producer.skipped_ops += eval.nominal_cost();
                t.pool.skipped_ops += 1;
                continue;
              }
              any |= compute(ph * pool->pool.h + i, pw * pool->pool.w + j);
              if (e > 0) {
                t.pool.effective_ops += 1;
                t.pool.pool_compare_ops += 1;
              }
            }
          }
          pb[static_cast<std::size_t>(ph * out_shape.width + pw)] = any;
        }
      }
      // Producer outputs that no pool window covers are still part of the
      // layer's work.
      for (int oh = 0; oh < conv_shape.height; ++oh) {
        for (int ow = 0; ow < conv_shape.width; ++ow) {
          if (oh >= out_shape.height * pool->pool.h || ow >= out_shape.width * pool->pool.w) {
            compute(oh, ow);
          }
        }
      }
    }
  });

  // Barrier: merge lanes in order.
  ExecutionCounters producer;
  ExecutionCounters pooled;
  std::uint64_t max_units = 0;
  for (const auto& t : lanes) {
    producer += t.producer;
    pooled += t.pool;
    max_units = std::max(max_units, t.compute_units);
    trace.evaluated_outputs += t.evaluated;
    trace.plus_outputs += t.plus;
  }
  producer.nominal_ops = producer.effective_ops + producer.skipped_ops;
  pooled.nominal_ops = pooled.effective_ops + pooled.skipped_ops;

  const unsigned m = hw.m.bits();
  AccessTally writes{ceil_div(out_shape.elements(), m), out_shape.elements()};
  if (pool_trace != nullptr) {
    pooled.fmap_mem_writes = writes;
  } else {
    producer.fmap_mem_writes = writes;
  }

  std::uint64_t cycles = max_units;
  if (xnor_layer) {
    // Input entries are broadcast to every PE of a tiling round; a position is
    // fetched if any PE of the round still needs it.
    auto eval = make_eval();
    std::uint64_t broadcast = 0;
    for (int base = 0; base < l.out_channels; base += hw.n_pes) {
      const int end = std::min(base + hw.n_pes, l.out_channels);
      for (std::size_t pos = 0; pos < positions; ++pos) {
        bool needed = false;
        for (int o = base; o < end && !needed; ++o) needed = evaluated[static_cast<std::size_t>(o)][pos];
        if (needed) {
          broadcast += eval.rf_entries(static_cast<int>(pos) / conv_shape.width,
                                       static_cast<int>(pos) % conv_shape.width);
        }
      }
    }
    cycles = std::max({cycles, broadcast, producer.filter_mem_reads.entries, writes.entries});
  }
  producer.estimated_cycles = cycles;

  trace.output = conv_shape;
  trace.counters = producer;
  if (pool_trace != nullptr) {
    pool_trace->output = out_shape;
    pool_trace->counters = pooled;
  }

  StageOutput out;
  if (pool == nullptr) {
    out.output = assemble(conv_shape, conv_bits, hw.m);
  } else {
    out.output = assemble(out_shape, pooled_bits, hw.m);
    if (!skipping) out.prepool = assemble(conv_shape, conv_bits, hw.m);
  }
  if (pool == nullptr) out.prepool = out.output;
  return out;
}

}  // namespace

StageOutput execute_mid_layer(const LayerSpec& layer, const LayerWeights& weights,
                              const PackedBitTensor& input, const LayerSpec* pool,
                              const HardwareConfig& hw, const RunOptions& opts,
                              LayerTrace& trace, LayerTrace* pool_trace) {
  if (layer.kind != LayerKind::ConvBin && layer.kind != LayerKind::FCBin) {
    throw ContractError("execute_mid_layer needs a conv or fc layer, got " +
                        std::string(to_string(layer.kind)));
  }
  const auto filters = split_filters(layer, weights, hw.m);
  return run_producer(
      layer, input.shape, pool, hw, opts, true,
      [&] { return XnorEvaluator(layer, filters, input, hw.m, opts.inject_tail_mask_fault); },
      trace, pool_trace);
}

StageOutput execute_first_layer(const LayerSpec& layer, const LayerWeights& weights,
                                const Fixed16Tensor& input, const LayerSpec* pool,
                                const HardwareConfig& hw, const RunOptions& opts,
                                LayerTrace& trace, LayerTrace* pool_trace) {
  if (layer.kind != LayerKind::ConvFirst) {
    throw ContractError("execute_first_layer needs a conv_first layer");
  }
  return run_producer(
      layer, input.shape, pool, hw, opts, false,
      [&] { return AddSubEvaluator(layer, weights, input, hw.m); }, trace, pool_trace);
}

std::vector<std::int32_t> execute_last_layer(const LayerSpec& layer, const LayerWeights& weights,
                                             const PackedBitTensor& activations,
                                             const HardwareConfig& hw, const RunOptions& opts,
                                             LayerTrace& trace) {
  if (!is_fully_connected(layer.kind)) {
    throw ContractError("execute_last_layer needs an fc or fc16 layer");
  }
  const std::size_t k = layer.receptive_field();
  const unsigned m = hw.m.bits();
  const auto tiles = tile_output_channels(layer.out_channels, hw.n_pes);
  std::vector<std::int32_t> logits(static_cast<std::size_t>(layer.out_channels));
  std::vector<LaneTally> lanes(static_cast<std::size_t>(hw.n_pes));

  if (layer.kind == LayerKind::FCBin) {
    const auto filters = split_filters(layer, weights, hw.m);
    for_each_lane(hw.n_pes, opts.workers, [&](int p) {
      LaneTally& t = lanes[static_cast<std::size_t>(p)];
      XnorEvaluator eval(layer, filters, activations, hw.m, opts.inject_tail_mask_fault);
      for (int o : tiles[static_cast<std::size_t>(p)]) {
        eval.load_filter(t);
        logits[static_cast<std::size_t>(o)] = eval.accumulate(o, 0, 0, t);
      }
    });
  } else {
    for_each_lane(hw.n_pes, opts.workers, [&](int p) {
      LaneTally& t = lanes[static_cast<std::size_t>(p)];
      for (int o : tiles[static_cast<std::size_t>(p)]) {
        const std::size_t base = static_cast<std::size_t>(o) * k;
        t.producer.filter_mem_reads += {ceil_div(16 * k, m), 16 * k};
        t.producer.input_mem_reads += {ceil_div(k, m), k};
        std::int32_t acc = layer.bias[static_cast<std::size_t>(o)];
        for (std::size_t i = 0; i < k; ++i) {
          const std::int32_t w = weights.fixed[base + i];
          acc += activations.data.bit(i) ? w : -w;
        }
        t.producer.addsub_ops += 2 * k;
        t.producer.effective_ops += 2 * k;
        t.compute_units += k;
        logits[static_cast<std::size_t>(o)] = acc;
      }
    });
  }

  ExecutionCounters c;
  std::uint64_t max_units = 0;
  for (const auto& t : lanes) {
    c += t.producer;
    max_units = std::max(max_units, t.compute_units);
  }
  c.nominal_ops = c.effective_ops;
  c.estimated_cycles = max_units;
  if (layer.kind == LayerKind::FCBin) {
    // One broadcast of the activation vector per tiling round.
    const std::uint64_t rounds = ceil_div(static_cast<std::uint64_t>(layer.out_channels),
                                          static_cast<std::uint64_t>(hw.n_pes));
    c.estimated_cycles = std::max({max_units, rounds * ceil_div(k, m), c.filter_mem_reads.entries});
  }
  trace.output = {layer.out_channels, 1, 1};
  trace.counters = c;
  trace.evaluated_outputs = static_cast<std::uint64_t>(layer.out_channels);
  return logits;
}

EngineResult run_inference(const NetworkSpec& net, const Fixed16Tensor& input,
                           const HardwareConfig& hw, const RunOptions& opts) {
  require_valid(net);
  hw.validate();
  if (input.shape != net.input_shape) {
    throw ContractError("input shape " + input.shape.to_string() + " does not match model input " +
                        net.input_shape.to_string());
  }
  if (input.data.size() != input.shape.elements()) {
    throw ContractError("input tensor data does not match its shape");
  }
  if (net.layers.empty()) throw ContractError("network has no layers");

  EngineResult res;
  const std::size_t n_layers = net.layers.size();
  if (opts.record_intermediates) res.intermediates.resize(n_layers - 1);

  PackedBitTensor act;
  if (net.layers.front().kind != LayerKind::ConvFirst) {
    act = PackedBitTensor(input.shape, hw.m);
    for (std::size_t i = 0; i < input.data.size(); ++i) {
      act.data.set_bit(i, binarize(input.data[i].raw));
    }
    if (opts.record_intermediates) res.binarized_input = act;
  }

  MemoryRole source = MemoryRole::Input;
  for (std::size_t li = 0; li < n_layers;) {
    const LayerSpec& l = net.layers[li];
    LayerTrace trace;
    trace.layer = li;
    trace.kind = l.kind;
    trace.source = source;
    if (li + 1 == n_layers) {
      res.logits = execute_last_layer(l, net.weights[li], act, hw, opts, trace);
      res.layers.push_back(trace);
      break;
    }
    const LayerSpec* pool =
        net.layers[li + 1].kind == LayerKind::MaxPool ? &net.layers[li + 1] : nullptr;
    LayerTrace pool_trace;
    pool_trace.layer = li + 1;
    pool_trace.kind = LayerKind::MaxPool;
    pool_trace.source = source;
    StageOutput stage =
        l.kind == LayerKind::ConvFirst
            ? execute_first_layer(l, net.weights[li], input, pool, hw, opts, trace,
                                  pool ? &pool_trace : nullptr)
            : execute_mid_layer(l, net.weights[li], act, pool, hw, opts, trace,
                                pool ? &pool_trace : nullptr);
    res.layers.push_back(trace);
    if (pool) res.layers.push_back(pool_trace);
    if (opts.record_intermediates) {
      res.intermediates[li] = std::move(stage.prepool);
      if (pool) res.intermediates[li + 1] = stage.output;
    }
    act = std::move(stage.output);
    source = source == MemoryRole::Input ? MemoryRole::FeatureMap : MemoryRole::Input;
    li += pool ? 2 : 1;
  }

  for (const auto& t : res.layers) res.counters += t.counters;
  res.class_id = argmax(res.logits);
  return res;
}

void write_trace_csv(std::ostream& os, const EngineResult& result) {
  os << "layer,kind,out_channels,out_height,out_width,source_memory,nominal_ops,effective_ops,"
        "skipped_ops,xnor_pcnt_instructions,addsub_ops,pool_compare_ops,filter_read_entries,"
        "filter_read_bits,input_read_entries,input_read_bits,fmap_write_entries,fmap_write_bits,"
        "estimated_cycles,evaluated_outputs,plus_outputs\n";
  for (const auto& t : result.layers) {
    const auto& c = t.counters;
    os << t.layer << ',' << to_string(t.kind) << ',' << t.output.channels << ','
       << t.output.height << ',' << t.output.width << ','
       << (t.source == MemoryRole::Input ? "input" : "feature_map") << ',' << c.nominal_ops << ','
       << c.effective_ops << ',' << c.skipped_ops << ',' << c.xnor_pcnt_instructions << ','
       << c.addsub_ops << ',' << c.pool_compare_ops << ',' << c.filter_mem_reads.entries << ','
       << c.filter_mem_reads.bits << ',' << c.input_mem_reads.entries << ','
       << c.input_mem_reads.bits << ',' << c.fmap_mem_writes.entries << ','
       << c.fmap_mem_writes.bits << ',' << c.estimated_cycles << ',' << t.evaluated_outputs << ','
       << t.plus_outputs << '\n';
  }
}

}  // namespace bnnsim
