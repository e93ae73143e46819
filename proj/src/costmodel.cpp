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

#include "bnnsim/costmodel.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "bnnsim/errors.hpp"

namespace bnnsim {

namespace {

double interpolate(const std::map<unsigned, EnergyModelParams::Entry>& table, unsigned width,
                   double EnergyModelParams::Entry::*field) {
  if (table.empty()) throw ContractError("energy table is empty");
  if (auto it = table.find(width); it != table.end()) return it->second.*field;
  const auto hi = table.lower_bound(width);
  if (hi == table.begin() || hi == table.end()) {
    throw ContractError("width " + std::to_string(width) + " outside the energy table range [" +
                        std::to_string(table.begin()->first) + ", " +
                        std::to_string(table.rbegin()->first) + "]");
  }
  const auto lo = std::prev(hi);
  const double t = (std::log(width) - std::log(lo->first)) / (std::log(hi->first) - std::log(lo->first));
  return std::exp(std::log(lo->second.*field) + t * (std::log(hi->second.*field) - std::log(lo->second.*field)));
}

constexpr double kPjPerUj = 1e6;

}  // namespace

void EnergyModelParams::validate(Trend trend) const {
  if (per_entry.empty()) throw ValidationError("energy table has no widths");
  if (compute_pj_per_op < 0 || leakage_mw < 0 || overhead_mw_per_pe < 0) {
    throw ValidationError("energies and powers must be non-negative");
  }
  const bool strict = trend == Trend::Strict;
  const Entry* prev = nullptr;
  unsigned prev_width = 0;
  for (const auto& [width, e] : per_entry) {
    if (width == 0) throw ValidationError("memory width must be positive");
    if (!(e.read_pj > 0) || !(e.write_pj > 0)) {
      throw ValidationError("per-entry energies must be positive (width " + std::to_string(width) + ")");
    }
    if (prev != nullptr) {
      auto check = [&](double a, double b, const char* what) {
        const double per_bit_a = a / prev_width;
        const double per_bit_b = b / width;
        const bool entry_ok = strict ? b > a : b >= a;
        const bool bit_ok = strict ? per_bit_b < per_bit_a : per_bit_b <= per_bit_a * (1 + 1e-12);
        if (!entry_ok) {
          throw ValidationError(std::string(what) + " energy per entry must increase with width (" +
                                std::to_string(prev_width) + " -> " + std::to_string(width) + ")");
        }
        if (!bit_ok) {
          throw ValidationError(std::string(what) + " energy per bit must decrease with width (" +
                                std::to_string(prev_width) + " -> " + std::to_string(width) + ")");
        }
      };
      check(prev->read_pj, e.read_pj, "read");
      check(prev->write_pj, e.write_pj, "write");
    }
    prev = &e;
    prev_width = width;
  }
}

double EnergyModelParams::read_pj(unsigned width) const {
  return interpolate(per_entry, width, &Entry::read_pj);
}

double EnergyModelParams::write_pj(unsigned width) const {
  return interpolate(per_entry, width, &Entry::write_pj);
}

EnergyModelParams parse_energy_params(const std::string& json_text, const std::string& source) {
  EnergyModelParams p;
  try {
    const auto j = nlohmann::json::parse(json_text);
    p.compute_pj_per_op = j.at("compute_pj_per_op").get<double>();
    p.leakage_mw = j.at("leakage_mw").get<double>();
    p.overhead_mw_per_pe = j.at("overhead_mw_per_pe").get<double>();
    for (const auto& row : j.at("memory")) {
      const auto width = row.at("width").get<unsigned>();
      if (p.per_entry.contains(width)) {
        throw ValidationError(source + ": duplicate width " + std::to_string(width));
      }
      p.per_entry[width] = {row.at("read_pj").get<double>(), row.at("write_pj").get<double>()};
    }
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(source, 0, e.what());
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(source, 0, std::string("bad energy parameter file: ") + e.what());
  }
  try {
    p.validate(EnergyModelParams::Trend::Strict);
  } catch (const ValidationError& e) {
    throw ValidationError(source + ": " + e.what());
  }
  return p;
}

EnergyModelParams load_energy_params(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open energy parameter file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_energy_params(ss.str(), path.string());
}

double per_bit_energy(unsigned width, const EnergyModelParams& params) {
  return params.read_pj(width) / width;
}

double estimate_latency(const ExecutionCounters& counters, const HardwareConfig& hw) {
  hw.validate();
  return static_cast<double>(counters.estimated_cycles) / hw.clock_hz;
}

namespace {

LayerEnergy energy_of(const ExecutionCounters& c, const HardwareConfig& hw,
                      const EnergyModelParams& params) {
  const unsigned m = hw.m.bits();
  LayerEnergy e;
  const double reads = static_cast<double>(c.filter_mem_reads.entries + c.input_mem_reads.entries);
  const double writes = static_cast<double>(c.fmap_mem_writes.entries);
  e.memory_uj = (reads * params.read_pj(m) + writes * params.write_pj(m)) / kPjPerUj;
  e.compute_uj = static_cast<double>(c.effective_ops) * params.compute_pj_per_op / kPjPerUj;
  const double power_mw = params.leakage_mw + hw.n_pes * params.overhead_mw_per_pe;
  // mW x s = mJ = 1e3 uJ
  e.leakage_uj = power_mw * estimate_latency(c, hw) * 1e3;
  return e;
}

}  // namespace

EnergyReport estimate_energy(const ExecutionCounters& counters, const HardwareConfig& hw,
                             const EnergyModelParams& params) {
  const LayerEnergy e = energy_of(counters, hw, params);
  EnergyReport r;
  r.memory_uj = e.memory_uj;
  r.compute_uj = e.compute_uj;
  r.leakage_uj = e.leakage_uj;
  r.total_uj = e.total_uj();
  r.latency_s = estimate_latency(counters, hw);
  return r;
}

EnergyReport estimate_energy(const EngineResult& run, const HardwareConfig& hw,
                             const EnergyModelParams& params) {
  EnergyReport r = estimate_energy(run.counters, hw, params);
  for (const auto& t : run.layers) {
    LayerEnergy e = energy_of(t.counters, hw, params);
    e.layer = t.layer;
    r.per_layer.push_back(e);
  }
  return r;
}

std::vector<LayerSkipRow> skip_table(const NetworkSpec& net,
                                     const std::vector<Fixed16Tensor>& corpus,
                                     const HardwareConfig& hw) {
  if (corpus.empty()) throw ContractError("skip table needs a non-empty corpus");
  RunOptions opts;
  opts.pool_skipping = true;
  std::vector<LayerSkipRow> rows;
  std::vector<double> evaluated;
  std::vector<double> plus;
  for (const auto& frame : corpus) {
    const EngineResult r = run_inference(net, frame, hw, opts);
    if (rows.empty()) {
      rows.resize(r.layers.size());
      evaluated.assign(r.layers.size(), 0);
      plus.assign(r.layers.size(), 0);
      for (std::size_t i = 0; i < r.layers.size(); ++i) {
        rows[i].layer = r.layers[i].layer;
        rows[i].kind = r.layers[i].kind;
        const std::size_t next = r.layers[i].layer + 1;
        rows[i].feeds_pool = next < net.layers.size() && net.layers[next].kind == LayerKind::MaxPool &&
                             r.layers[i].kind != LayerKind::MaxPool;
      }
    }
    for (std::size_t i = 0; i < r.layers.size(); ++i) {
      const auto& c = r.layers[i].counters;
      rows[i].nominal_ops += static_cast<double>(c.nominal_ops);
      rows[i].effective_ops += static_cast<double>(c.effective_ops);
      rows[i].skipped_ops += static_cast<double>(c.skipped_ops);
      evaluated[i] += static_cast<double>(r.layers[i].evaluated_outputs);
      plus[i] += static_cast<double>(r.layers[i].plus_outputs);
    }
  }
  const double n = static_cast<double>(corpus.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    rows[i].nominal_ops /= n;
    rows[i].effective_ops /= n;
    rows[i].skipped_ops /= n;
    rows[i].plus_fraction = evaluated[i] > 0 ? plus[i] / evaluated[i] : 0;
  }
  return rows;
}

SweepResult sweep(const NetworkSpec& net, const std::vector<Fixed16Tensor>& corpus,
                  const SweepOptions& opts, const EnergyModelParams& params) {
  if (opts.m_set.empty() || opts.n_set.empty()) throw ContractError("sweep sets must be non-empty");
  if (corpus.empty()) throw ContractError("sweep needs a non-empty input corpus");
  params.validate(EnergyModelParams::Trend::Relaxed);

  std::vector<unsigned> ms = opts.m_set;
  std::vector<int> ns = opts.n_set;
  std::sort(ms.begin(), ms.end());
  ms.erase(std::unique(ms.begin(), ms.end()), ms.end());
  std::sort(ns.begin(), ns.end());
  ns.erase(std::unique(ns.begin(), ns.end()), ns.end());

  SweepResult result;
  for (unsigned m : ms) {
    for (int n : ns) {
      SweepPoint p;
      p.m = m;
      p.n = n;
      result.grid.push_back(p);
    }
  }

  std::vector<std::exception_ptr> errors(result.grid.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < result.grid.size(); i = next++) {
      SweepPoint& p = result.grid[i];
      try {
        HardwareConfig hw{WordWidth{p.m}, p.n, opts.clock_hz};
        RunOptions ro;
        ro.pool_skipping = opts.pool_skipping;
        for (const auto& frame : corpus) {
          const EngineResult r = run_inference(net, frame, hw, ro);
          const EnergyReport e = estimate_energy(r.counters, hw, params);
          p.energy.memory_uj += e.memory_uj;
          p.energy.compute_uj += e.compute_uj;
          p.energy.leakage_uj += e.leakage_uj;
          p.energy.total_uj += e.total_uj;
          p.energy.latency_s += e.latency_s;
          p.effective_ops += static_cast<double>(r.counters.effective_ops);
          p.skipped_ops += static_cast<double>(r.counters.skipped_ops);
          p.nominal_ops += static_cast<double>(r.counters.nominal_ops);
          p.cycles += static_cast<double>(r.counters.estimated_cycles);
        }
        const double k = static_cast<double>(corpus.size());
        p.energy.memory_uj /= k;
        p.energy.compute_uj /= k;
        p.energy.leakage_uj /= k;
        p.energy.total_uj /= k;
        p.energy.latency_s /= k;
        p.effective_ops /= k;
        p.skipped_ops /= k;
        p.nominal_ops /= k;
        p.cycles /= k;
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  {
    const int threads = std::max(1, std::min<int>(opts.workers, static_cast<int>(result.grid.size())));
    std::vector<std::jthread> pool;
    for (int t = 1; t < threads; ++t) pool.emplace_back(worker);
    worker();
  }
  for (std::size_t i = 0; i < errors.size(); ++i) {
    if (!errors[i]) continue;
    try {
      std::rethrow_exception(errors[i]);
    } catch (const std::exception& e) {
      throw Error("sweep failed at m=" + std::to_string(result.grid[i].m) +
                  " n=" + std::to_string(result.grid[i].n) + ": " + e.what());
    }
  }

  for (std::size_t i = 1; i < result.grid.size(); ++i) {
    if (result.grid[i].energy.total_uj < result.grid[result.argmin].energy.total_uj) result.argmin = i;
  }
  const SweepPoint& best = result.best();
  const SweepPoint* serial = nullptr;
  for (const auto& p : result.grid) {
    if (p.m == best.m && p.n == ns.front()) serial = &p;
  }
  result.serial_to_optimal_ratio = serial->energy.total_uj / best.energy.total_uj;

  result.skip_table = skip_table(net, corpus, HardwareConfig{WordWidth{best.m}, best.n, opts.clock_hz});
  double nominal = 0;
  double skipped = 0;
  for (const auto& row : result.skip_table) {
    nominal += row.nominal_ops;
    skipped += row.skipped_ops;
  }
  result.total_skip_fraction = nominal > 0 ? skipped / nominal : 0;
  return result;
}

bool is_unimodal(const std::vector<double>& values) {
  std::size_t i = 1;
  while (i < values.size() && values[i] <= values[i - 1]) ++i;
  while (i < values.size() && values[i] >= values[i - 1]) ++i;
  return i >= values.size();
}

}  // namespace bnnsim
