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

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "bnnsim/engine.hpp"

namespace bnnsim {

// Memory and compute energy parameters. Widths not listed are interpolated
// geometrically (linear in log-width / log-energy) between neighbours.
struct EnergyModelParams {
  struct Entry {
    double read_pj = 0;
    double write_pj = 0;
  };
  std::map<unsigned, Entry> per_entry;  // width in bits -> energy per entry access
  double compute_pj_per_op = 0;
  double leakage_mw = 0;
  double overhead_mw_per_pe = 0;

  enum class Trend {
    // Per-entry energy strictly increasing, per-bit strictly decreasing.
    Strict,
    // Per-entry non-decreasing, per-bit non-increasing (admits flat per-bit).
    Relaxed,
  };
  // Throws ValidationError on negative values or a table that breaks the trend.
  void validate(Trend trend = Trend::Strict) const;

  double read_pj(unsigned width) const;
  double write_pj(unsigned width) const;
};

// JSON parameter file, validated with Trend::Strict. See docs/formats.md.
EnergyModelParams load_energy_params(const std::filesystem::path& path);
EnergyModelParams parse_energy_params(const std::string& json_text, const std::string& source);

// Per-entry read energy divided by width. Throws ContractError outside the
// table's width range.
double per_bit_energy(unsigned width, const EnergyModelParams& params);

struct LayerEnergy {
  std::size_t layer = 0;
  double memory_uj = 0;
  double compute_uj = 0;
  double leakage_uj = 0;
  double total_uj() const { return memory_uj + compute_uj + leakage_uj; }
};

struct EnergyReport {
  double memory_uj = 0;
  double compute_uj = 0;
  double leakage_uj = 0;
  double total_uj = 0;
  double latency_s = 0;
  std::vector<LayerEnergy> per_layer;
};

// estimated_cycles / clock_hz.
double estimate_latency(const ExecutionCounters& counters, const HardwareConfig& hw);

// memory = reads x read_pj(m) + writes x write_pj(m); compute = effective ops
// x compute_pj_per_op; leakage = (leakage + n x overhead) x latency.
EnergyReport estimate_energy(const ExecutionCounters& counters, const HardwareConfig& hw,
                             const EnergyModelParams& params);
// Same, with a per-layer breakdown taken from the run's trace.
EnergyReport estimate_energy(const EngineResult& run, const HardwareConfig& hw,
                             const EnergyModelParams& params);

struct SweepPoint {
  unsigned m = 0;
  int n = 0;
  EnergyReport energy;    // averaged over the corpus
  double effective_ops = 0;
  double skipped_ops = 0;
  double nominal_ops = 0;
  double cycles = 0;
};

struct LayerSkipRow {
  std::size_t layer = 0;
  LayerKind kind = LayerKind::ConvBin;
  bool feeds_pool = false;
  double nominal_ops = 0;
  double effective_ops = 0;
  double skipped_ops = 0;
  double plus_fraction = 0;  // measured p(+1) among computed outputs
  double skip_fraction() const { return nominal_ops > 0 ? skipped_ops / nominal_ops : 0; }
};

struct SweepResult {
  std::vector<SweepPoint> grid;  // sorted by (m, n)
  std::size_t argmin = 0;
  double serial_to_optimal_ratio = 1;
  std::vector<LayerSkipRow> skip_table;  // at the argmin configuration
  double total_skip_fraction = 0;

  const SweepPoint& best() const { return grid[argmin]; }
};

struct SweepOptions {
  std::vector<unsigned> m_set;
  std::vector<int> n_set;
  double clock_hz = 100e6;
  bool pool_skipping = true;
  int workers = 1;  // sweep points evaluated concurrently
};

// Runs the engine for every (m, n) and every corpus frame. Throws Error
// naming the offending configuration if a run fails.
SweepResult sweep(const NetworkSpec& net, const std::vector<Fixed16Tensor>& corpus,
                  const SweepOptions& opts, const EnergyModelParams& params);

// Per-layer skip statistics averaged over a corpus for one configuration.
std::vector<LayerSkipRow> skip_table(const NetworkSpec& net,
                                     const std::vector<Fixed16Tensor>& corpus,
                                     const HardwareConfig& hw);

// True if the sequence never increases after it first increases.
bool is_unimodal(const std::vector<double>& values);

}  // namespace bnnsim
