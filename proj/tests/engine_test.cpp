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

#include <doctest.h>

#include <random>
#include <sstream>

#include "bnnsim/differential.hpp"
#include "bnnsim/errors.hpp"
#include "nets.hpp"

using namespace bnnsim;
using namespace bnnsim::testing;

namespace {

EngineResult run(const NetworkSpec& net, const Fixed16Tensor& in, unsigned m, int pes,
                 bool skip, bool record = true, int workers = 1) {
  RunOptions o;
  o.pool_skipping = skip;
  o.record_intermediates = record;
  o.workers = workers;
  return run_inference(net, in, {WordWidth{m}, pes, 100e6}, o);
}

Fixed16Tensor signs_input(Shape s, std::initializer_list<int> v) {
  Fixed16Tensor t(s);
  auto it = v.begin();
  for (auto& x : t.data) x.raw = static_cast<std::int16_t>(*it++ > 0 ? 256 : -256);
  return t;
}

}  // namespace

TEST_CASE("round-robin output channel tiling") {
  CHECK(tile_output_channels(8, 4) ==
        std::vector<std::vector<int>>{{0, 4}, {1, 5}, {2, 6}, {3, 7}});
  CHECK(tile_output_channels(5, 4) == std::vector<std::vector<int>>{{0, 4}, {1}, {2}, {3}});
  CHECK(tile_output_channels(2, 4) == std::vector<std::vector<int>>{{0}, {1}, {}, {}});
  for (int c = 1; c <= 70; c += 3) {
    for (int n = 1; n <= 64; n += 7) {
      std::vector<int> seen(static_cast<std::size_t>(c), 0);
      for (const auto& tile : tile_output_channels(c, n)) {
        for (int o : tile) ++seen[static_cast<std::size_t>(o)];
      }
      CHECK(std::all_of(seen.begin(), seen.end(), [](int s) { return s == 1; }));
    }
  }
  CHECK_THROWS_AS(tile_output_channels(0, 4), ContractError);
}

TEST_CASE("hardware config validation") {
  const NetworkSpec net = net_from_text("input 4 1 1\nfc 2\n");
  const auto in = random_input(net.input_shape, 0);
  CHECK_THROWS_AS(run_inference(net, in, {WordWidth{64}, 0, 1e8}), ContractError);
  CHECK_THROWS_AS(run_inference(net, in, {WordWidth{64}, 65, 1e8}), ContractError);
  CHECK_THROWS_AS(run_inference(net, in, {WordWidth{64}, 1, 0}), ContractError);
  CHECK_THROWS_AS(run_inference(net, random_input({5, 1, 1}, 0), {}), ContractError);
}

TEST_CASE("engine matches the reference on random networks") {
  for (std::uint64_t seed = 0; seed < 60; ++seed) {
    const NetworkSpec net = generate_random(random_architecture(seed), seed + 100);
    const auto in = random_input(net.input_shape, seed + 200);
    const auto expected = ref_infer(net, in);
    for (unsigned m : WordWidth::kSupported) {
      for (int pes : {1, 4, 8}) {
        for (bool skip : {false, true}) {
          const auto got = run(net, in, m, pes, skip);
          const auto mismatch = compare_results(expected, got);
          if (mismatch) FAIL_CHECK("seed " << seed << " m=" << m << " n=" << pes << ": "
                                            << mismatch->describe());
        }
      }
    }
  }
}

TEST_CASE("PE count and worker count do not change results") {
  const NetworkSpec net = generate_random(stress_architecture(), 7);
  const auto in = random_input(net.input_shape, 7);
  const auto one = run(net, in, 128, 1, true, false);
  const auto eight = run(net, in, 128, 8, true, false);
  CHECK(one.logits == eight.logits);
  CHECK(one.counters.effective_ops == eight.counters.effective_ops);
  CHECK(one.counters.skipped_ops == eight.counters.skipped_ops);
  const auto threaded = run(net, in, 128, 8, true, false, 4);
  CHECK(threaded.counters == eight.counters);
  CHECK(threaded.logits == eight.logits);
}

TEST_CASE("pool skipping keeps outputs and skips work") {
  const NetworkSpec net = generate_random(stress_architecture(), 8);
  const auto in = random_input(net.input_shape, 8);
  const auto off = run(net, in, 64, 4, false);
  const auto on = run(net, in, 64, 4, true);
  CHECK(off.logits == on.logits);
  CHECK(off.class_id == on.class_id);
  CHECK(off.counters.skipped_ops == 0);
  CHECK(on.counters.skipped_ops > 0);
  CHECK(on.counters.nominal_ops == off.counters.nominal_ops);
  CHECK(on.counters.effective_ops < off.counters.effective_ops);
  // Pooled maps agree; pre-pool maps exist only without skipping.
  for (std::size_t i = 0; i < net.layers.size() - 1; ++i) {
    if (net.layers[i].kind == LayerKind::MaxPool) {
      CHECK(on.intermediates[i] == off.intermediates[i]);
      CHECK_FALSE(on.intermediates[i - 1].has_value());
      CHECK(off.intermediates[i - 1].has_value());
    }
  }
}

TEST_CASE("first +1 in a pool skips the rest of the window") {
  NetworkSpec net = net_from_text("input 1 1 2\nconv 1 1x1\nmaxpool 1x2\nfc 1\n");
  set_all_weight_bits(net, 0, true);
  zero_biases(net);

  auto r = run(net, signs_input({1, 1, 2}, {1, -1}), 64, 1, true);
  CHECK(r.layers[0].evaluated_outputs == 1);
  CHECK(r.layers[0].counters.skipped_ops == 2);
  CHECK(r.layers[0].counters.effective_ops == 2);
  CHECK(r.layers[1].counters.skipped_ops == 1);
  CHECK(r.layers[1].counters.pool_compare_ops == 0);
  CHECK(r.intermediates[1]->at(0, 0, 0));

  r = run(net, signs_input({1, 1, 2}, {-1, 1}), 64, 1, true);
  CHECK(r.layers[0].evaluated_outputs == 2);
  CHECK(r.layers[0].counters.skipped_ops == 0);
  CHECK(r.layers[1].counters.pool_compare_ops == 1);
  CHECK(r.intermediates[1]->at(0, 0, 0));

  r = run(net, signs_input({1, 1, 2}, {-1, -1}), 64, 1, true);
  CHECK(r.layers[0].evaluated_outputs == 2);
  CHECK_FALSE(r.intermediates[1]->at(0, 0, 0));
}

TEST_CASE("first layer add/sub examples") {
  NetworkSpec net = net_from_text("input 3 1 4\nconv_first 2 1x2\nfc 1\n");
  zero_biases(net);
  set_all_weight_bits(net, 0, true);
  auto r = run(net, constant_input({3, 1, 4}, 1.0), 128, 2, false);
  for (int c = 0; c < 2; ++c) {
    for (int w = 0; w < 3; ++w) CHECK(r.intermediates[0]->at(c, 0, w));
  }
  CHECK(r.layers[0].counters.addsub_ops == 2 * 6 * 6);
  CHECK(r.layers[0].counters.xnor_pcnt_instructions == 0);
  set_all_weight_bits(net, 0, false);
  r = run(net, constant_input({3, 1, 4}, 0.25), 128, 2, false);
  for (int c = 0; c < 2; ++c) {
    for (int w = 0; w < 3; ++w) CHECK_FALSE(r.intermediates[0]->at(c, 0, w));
  }
}

TEST_CASE("last layer is linear in the activations") {
  NetworkSpec net = net_from_text("input 37 1 1\nfc16 3\n", 5);
  const LayerSpec& l = net.layers[0];
  const LayerWeights& w = net.weights[0];
  const HardwareConfig hw{WordWidth{32}, 2, 1e8};
  PackedBitTensor act({37, 1, 1}, hw.m);
  for (int i = 0; i < 37; ++i) act.set(i, 0, 0, true);
  LayerTrace trace;
  const auto base = execute_last_layer(l, w, act, hw, {}, trace);
  for (int o = 0; o < 3; ++o) {
    std::int64_t sum = l.bias[static_cast<std::size_t>(o)];
    for (int i = 0; i < 37; ++i) sum += w.fixed[static_cast<std::size_t>(o * 37 + i)];
    CHECK(base[static_cast<std::size_t>(o)] == sum);
  }
  for (int i = 0; i < 37; i += 5) {
    PackedBitTensor flipped = act;
    flipped.set(i, 0, 0, false);
    const auto got = execute_last_layer(l, w, flipped, hw, {}, trace);
    for (int o = 0; o < 3; ++o) {
      CHECK(got[static_cast<std::size_t>(o)] - base[static_cast<std::size_t>(o)] ==
            -2 * w.fixed[static_cast<std::size_t>(o * 37 + i)]);
    }
  }
  CHECK(trace.counters.addsub_ops == 2 * 37 * 3);
}

TEST_CASE("filter memory reads count one load per filter") {
  const NetworkSpec fc = net_from_text("input 256 1 1\nfc 1\n");
  const auto r = run(fc, random_input({256, 1, 1}, 1), 128, 1, false);
  CHECK(r.layers[0].counters.filter_mem_reads.entries == 2);
  CHECK(r.layers[0].counters.filter_mem_reads.bits == 256);

  const NetworkSpec narrow = net_from_text("input 8 1 20\nconv 4 1x5\nfc 2\n");
  const NetworkSpec wide = net_from_text("input 8 1 40\nconv 4 1x5\nfc 2\n");
  const auto a = run(narrow, random_input({8, 1, 20}, 1), 32, 2, false);
  const auto b = run(wide, random_input({8, 1, 40}, 1), 32, 2, false);
  CHECK(a.layers[0].counters.filter_mem_reads == b.layers[0].counters.filter_mem_reads);
  CHECK(a.layers[0].counters.filter_mem_reads.entries == 4 * 2);  // 40 bits -> 2 entries
}

TEST_CASE("doubling m halves entry counts up to per-row rounding") {
  const NetworkSpec net = generate_random(stress_architecture(), 3);
  const auto in = random_input(net.input_shape, 3);
  for (unsigned m : {32u, 64u, 128u, 256u}) {
    const auto lo = run(net, in, m, 4, false, false);
    const auto hi = run(net, in, 2 * m, 4, false, false);
    for (std::size_t i = 0; i < lo.layers.size(); ++i) {
      const auto& l = net.layers[i];
      if (l.kind == LayerKind::ConvBin || l.kind == LayerKind::FCBin) {
        const auto loads = static_cast<std::uint64_t>(l.out_channels);
        const auto f_lo = lo.layers[i].counters.filter_mem_reads.entries;
        const auto f_hi = hi.layers[i].counters.filter_mem_reads.entries;
        CHECK(f_lo <= 2 * f_hi);
        CHECK(f_lo + loads >= 2 * f_hi);
        const auto rows = lo.layers[i].evaluated_outputs * static_cast<std::uint64_t>(l.kernel.h);
        const auto i_lo = lo.layers[i].counters.input_mem_reads.entries;
        const auto i_hi = hi.layers[i].counters.input_mem_reads.entries;
        CHECK(i_lo <= 2 * i_hi);
        CHECK(i_lo + 2 * rows >= 2 * i_hi);
      }
      CHECK(lo.layers[i].counters.input_mem_reads.bits == hi.layers[i].counters.input_mem_reads.bits);
    }
  }
}

TEST_CASE("xnor instruction count halves per dot product when m doubles") {
  const NetworkSpec net = generate_random(stress_architecture(), 5);
  const auto in = random_input(net.input_shape, 5);
  for (unsigned m : {32u, 64u, 128u, 256u}) {
    const auto lo = run(net, in, m, 1, false, false);
    const auto hi = run(net, in, 2 * m, 1, false, false);
    for (std::size_t i = 0; i < lo.layers.size(); ++i) {
      const auto kind = net.layers[i].kind;
      if (kind != LayerKind::ConvBin && kind != LayerKind::FCBin) continue;
      const std::uint64_t k = net.layers[i].receptive_field();
      const std::uint64_t per_lo = (k + m - 1) / m;
      const std::uint64_t evals = lo.layers[i].evaluated_outputs;
      CHECK(lo.layers[i].counters.xnor_pcnt_instructions == evals * per_lo);
      CHECK(hi.layers[i].counters.xnor_pcnt_instructions == evals * ((per_lo + 1) / 2));
    }
  }
}

TEST_CASE("counter conservation and invariance") {
  for (std::uint64_t seed = 0; seed < 25; ++seed) {
    const NetworkSpec net = generate_random(random_architecture(seed), seed);
    const auto in = random_input(net.input_shape, seed);
    const auto expected = count_params_and_ops(net);
    for (unsigned m : {32u, 512u}) {
      for (int pes : {1, 3, 16}) {
        const auto off = run(net, in, m, pes, false, false);
        const auto on = run(net, in, m, pes, true, false, 3);
        for (const auto* r : {&off, &on}) {
          CHECK(r->counters.nominal_ops == r->counters.effective_ops + r->counters.skipped_ops);
          CHECK(r->counters.nominal_ops == expected.nominal_ops());
        }
        CHECK(off.counters.skipped_ops == 0);
        CHECK(off.counters.effective_ops == expected.nominal_ops());
        CHECK(off.counters.pool_compare_ops == expected.pool_compare_ops);
      }
    }
  }
}

TEST_CASE("feature-map writes and memory roles") {
  const NetworkSpec net = generate_random(stress_architecture(), 2);
  const auto r = run(net, random_input(net.input_shape, 2), 128, 1, false, false);
  const auto shapes = layer_shapes(net);
  MemoryRole expected = MemoryRole::Input;
  for (const auto& t : r.layers) {
    const bool fused_producer = t.layer + 1 < net.layers.size() &&
                                net.layers[t.layer + 1].kind == LayerKind::MaxPool;
    if (t.layer + 1 < net.layers.size() && !fused_producer) {
      const auto bits = shapes[t.layer].elements();
      CHECK(t.counters.fmap_mem_writes.bits == bits);
      CHECK(t.counters.fmap_mem_writes.entries == (bits + 127) / 128);
    }
    if (t.kind == LayerKind::MaxPool) continue;
    CHECK(t.source == expected);
    expected = expected == MemoryRole::Input ? MemoryRole::FeatureMap : MemoryRole::Input;
  }
}

TEST_CASE("tail-mask fault is caught by the differential check") {
  int caught = 0;
  int exercised = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const NetworkSpec net = generate_random(random_architecture(seed), seed);
    const auto in = random_input(net.input_shape, seed);
    RunOptions o;
    o.record_intermediates = true;
    o.inject_tail_mask_fault = true;
    bool has_binary = false;
    for (const auto& l : net.layers) {
      if ((l.kind == LayerKind::ConvBin || l.kind == LayerKind::FCBin) &&
          l.receptive_field() % 512 != 0) {
        has_binary = true;
      }
    }
    if (!has_binary) continue;
    ++exercised;
    const auto got = run_inference(net, in, {WordWidth{512}, 2, 1e8}, o);
    if (compare_results(ref_infer(net, in), got)) ++caught;
  }
  REQUIRE(exercised > 10);
  CHECK(caught == exercised);
}

TEST_CASE("skip fraction on balanced data is about a quarter") {
  // 1x1 conv over random +/-1 maps: each pool of two skips its second element
  // whenever the first binarizes to +1.
  std::uint64_t pools = 0;
  std::uint64_t skipped = 0;
  std::uint64_t nominal = 0;
  for (std::uint64_t seed = 0; pools < 100000; ++seed) {
    const NetworkSpec net = net_from_text("input 64 1 200\nconv 64 1x1\nmaxpool 1x2\nfc 2\n", seed);
    const auto r = run(net, random_input(net.input_shape, seed + 1000), 64, 8, true, false, 4);
    pools += 64 * 100;
    skipped += r.layers[0].counters.skipped_ops;
    nominal += r.layers[0].counters.nominal_ops;
  }
  const double frac = static_cast<double>(skipped) / static_cast<double>(nominal);
  MESSAGE("skip fraction " << frac);
  CHECK(std::abs(frac - 0.25) <= 0.03);
}

TEST_CASE("trace csv has one row per layer") {
  const NetworkSpec net = generate_random(stress_architecture(), 2);
  const auto r = run(net, random_input(net.input_shape, 2), 128, 1, true, false);
  std::ostringstream os;
  write_trace_csv(os, r);
  const std::string s = os.str();
  CHECK(static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')) == net.layers.size() + 1);
}
