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

#include "cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "bnnsim/costmodel.hpp"
#include "bnnsim/differential.hpp"
#include "bnnsim/engine.hpp"
#include "bnnsim/errors.hpp"
#include "bnnsim/generate.hpp"
#include "bnnsim/input_csv.hpp"
#include "bnnsim/model_io.hpp"
#include "bnnsim/reference.hpp"

namespace bnnsim::cli {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

namespace {

constexpr const char* kVersion = BNNSIM_VERSION;
constexpr const char* kReportDirEnv = "BNNSIM_REPORT_DIR";

class MismatchFound : public Error {
 public:
  using Error::Error;
};

std::optional<fs::path> report_dir() {
  const char* dir = std::getenv(kReportDirEnv);
  if (dir == nullptr || *dir == '\0') return std::nullopt;
  return fs::path(dir);
}

// Explicit path wins; otherwise <BNNSIM_REPORT_DIR>/<fallback> if the
// variable is set; otherwise nothing is written.
std::optional<fs::path> resolve_output(const std::string& explicit_path, const char* fallback) {
  if (!explicit_path.empty()) return fs::path(explicit_path);
  if (auto dir = report_dir()) return *dir / fallback;
  return std::nullopt;
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot write " + path.string());
  os << text;
  if (!os) throw Error("write failed for " + path.string());
}

std::string human(double v) {
  char buf[32];
  if (v >= 1e6) {
    std::snprintf(buf, sizeof buf, "%.2fM", v / 1e6);
  } else if (v >= 1e3) {
    std::snprintf(buf, sizeof buf, "%.1fK", v / 1e3);
  } else {
    std::snprintf(buf, sizeof buf, "%.0f", v);
  }
  return buf;
}

Json to_json(const AccessTally& t) { return {{"entries", t.entries}, {"bits", t.bits}}; }

Json to_json(const ExecutionCounters& c) {
  return {{"nominal_ops", c.nominal_ops},
          {"effective_ops", c.effective_ops},
          {"skipped_ops", c.skipped_ops},
          {"xnor_pcnt_instructions", c.xnor_pcnt_instructions},
          {"addsub_ops", c.addsub_ops},
          {"pool_compare_ops", c.pool_compare_ops},
          {"filter_mem_reads", to_json(c.filter_mem_reads)},
          {"input_mem_reads", to_json(c.input_mem_reads)},
          {"fmap_mem_writes", to_json(c.fmap_mem_writes)},
          {"estimated_cycles", c.estimated_cycles}};
}

Json to_json(const EnergyReport& e) {
  return {{"memory_uj", e.memory_uj}, {"compute_uj", e.compute_uj},
          {"leakage_uj", e.leakage_uj}, {"total_uj", e.total_uj},
          {"latency_s", e.latency_s}};
}

Json hardware_json(const HardwareConfig& hw) {
  return {{"m", hw.m.bits()}, {"n_pes", hw.n_pes}, {"clock_hz", hw.clock_hz}};
}

Json manifest(const std::string& command, const std::vector<std::string>& args) {
  return {{"command", command}, {"argv", args}, {"tool_version", kVersion}};
}

bool parse_on_off(const std::string& v) { return v == "on"; }

// ---------------------------------------------------------------- gen

struct GenArgs {
  std::string arch;
  std::uint64_t seed = 0;
  std::string out;
};

int cmd_gen(const GenArgs& a, std::ostream& out) {
  const Architecture arch = load_architecture(a.arch);
  const NetworkSpec net = generate_random(arch, a.seed);
  save_model(net, a.out);
  const auto counts = count_params_and_ops(net);
  const auto size = packed_size_bytes(net);
  out << "model: " << a.out << " (" << (net.name.empty() ? "unnamed" : net.name) << ", seed "
      << a.seed << ")\n";
  out << "params: " << counts.params << " (" << human(static_cast<double>(counts.params))
      << "; binary " << counts.binary_params << ", fixed16 " << counts.fixed16_params << ")\n";
  out << "packed size: " << size.total() << " B (weights " << size.weight_bytes << " B, overhead "
      << size.overhead_bytes << " B)\n";
  out << "nominal ops: " << counts.nominal_ops() << " ("
      << human(static_cast<double>(counts.mac_ops)) << " mac ops, " << counts.pool_compare_ops
      << " pool compares)\n";
  return kOk;
}

// ---------------------------------------------------------------- gen-inputs

struct GenInputsArgs {
  std::string model;
  int count = 1;
  std::uint64_t seed = 0;
  std::string out;
};

int cmd_gen_inputs(const GenInputsArgs& a, std::ostream& out) {
  const NetworkSpec net = load_model(a.model);
  fs::create_directories(a.out);
  for (int i = 0; i < a.count; ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "frame_%05d.csv", i);
    write_input_csv(fs::path(a.out) / name,
                    random_input(net.input_shape, a.seed + static_cast<std::uint64_t>(i)));
  }
  out << "wrote " << a.count << " frame(s) of shape " << net.input_shape.to_string() << " to "
      << a.out << "\n";
  return kOk;
}

// ---------------------------------------------------------------- infer

struct HwArgs {
  unsigned m = 128;
  int pes = 1;
  double freq = 100e6;
  int workers = 1;

  HardwareConfig config() const {
    HardwareConfig hw{WordWidth{m}, pes, freq};
    hw.validate();
    return hw;
  }
};

void add_hw_options(CLI::App* cmd, HwArgs& hw) {
  cmd->add_option("--m", hw.m, "word width in bits (32, 64, 128, 256, 512)")
      ->check(CLI::IsMember({32u, 64u, 128u, 256u, 512u}));
  cmd->add_option("--pes", hw.pes, "number of PEs (1..64)");
  cmd->add_option("--freq", hw.freq, "clock frequency in Hz");
  cmd->add_option("--workers", hw.workers, "host threads for PE lanes");
}

struct InferArgs {
  std::string model;
  std::string input;
  std::size_t frame = 0;
  HwArgs hw;
  std::string pool_skip = "on";
  std::string report;
  std::string trace;
  std::string energy;
};

int cmd_infer(const InferArgs& a, const std::vector<std::string>& argv, std::ostream& out) {
  const NetworkSpec net = load_model(a.model);
  const Fixed16Tensor input = read_input_csv(a.input, net.input_shape, a.frame);
  const HardwareConfig hw = a.hw.config();
  RunOptions opts;
  opts.pool_skipping = parse_on_off(a.pool_skip);
  opts.workers = a.hw.workers;
  const EngineResult r = run_inference(net, input, hw, opts);
  const double latency = estimate_latency(r.counters, hw);

  out << "class: " << r.class_id << "\n";
  out << "logits:";
  for (auto v : r.logits) out << ' ' << v;
  out << "\n";
  out << "ops: nominal " << r.counters.nominal_ops << ", effective " << r.counters.effective_ops
      << ", skipped " << r.counters.skipped_ops << "\n";
  out << "latency: " << latency * 1e3 << " ms (" << r.counters.estimated_cycles << " cycles)\n";

  Json report;
  report["class_id"] = r.class_id;
  report["logits"] = r.logits;
  report["counters"] = to_json(r.counters);
  report["latency_s"] = latency;
  Json layers = Json::array();
  for (const auto& t : r.layers) {
    layers.push_back({{"layer", t.layer},
                      {"kind", to_string(t.kind)},
                      {"output", t.output.to_string()},
                      {"counters", to_json(t.counters)},
                      {"evaluated_outputs", t.evaluated_outputs},
                      {"plus_outputs", t.plus_outputs}});
  }
  report["layers"] = layers;
  if (!a.energy.empty()) {
    const auto e = estimate_energy(r, hw, load_energy_params(a.energy));
    report["energy"] = to_json(e);
    out << "energy: " << e.total_uj << " uJ\n";
  }
  Json m = manifest("infer", argv);
  m["model"] = a.model;
  m["input"] = a.input;
  m["frame"] = a.frame;
  m["hardware"] = hardware_json(hw);
  m["options"] = {{"pool_skipping", opts.pool_skipping}, {"workers", opts.workers}};
  if (!a.energy.empty()) m["energy_params"] = a.energy;

  const auto report_path = resolve_output(a.report, "infer_report.json");
  Json outputs = Json::object();
  if (report_path) outputs["report"] = report_path->string();
  if (!a.trace.empty()) outputs["trace"] = a.trace;
  m["outputs"] = outputs;
  report["manifest"] = m;

  if (report_path) {
    write_text(*report_path, report.dump(2) + "\n");
    out << "report: " << report_path->string() << "\n";
  }
  if (!a.trace.empty()) {
    std::ostringstream csv;
    write_trace_csv(csv, r);
    write_text(a.trace, csv.str());
    out << "trace: " << a.trace << "\n";
  }
  return kOk;
}

// ---------------------------------------------------------------- compare

struct CompareArgs {
  std::string model;
  int count = 100;
  std::uint64_t seed = 0;
  std::string inject_fault;
  std::string reproducer;
  int workers = 1;
};

void dump_reproducer(const fs::path& dir, const NetworkSpec& net, const Fixed16Tensor& input,
                     const HardwareConfig& hw, const RunOptions& opts, const Mismatch& mm,
                     const std::vector<std::string>& argv) {
  fs::create_directories(dir);
  save_model(net, dir / "model.bnn");
  write_input_csv(dir / "input.csv", input);
  Json j;
  j["mismatch"] = {{"layer", mm.layer},     {"channel", mm.channel}, {"height", mm.height},
                   {"width", mm.width},     {"expected", mm.expected}, {"actual", mm.actual},
                   {"what", mm.what},       {"description", mm.describe()}};
  j["hardware"] = hardware_json(hw);
  j["options"] = {{"pool_skipping", opts.pool_skipping},
                  {"inject_tail_mask_fault", opts.inject_tail_mask_fault}};
  j["rerun"] = "bnnsim infer --model model.bnn --input input.csv --m " +
               std::to_string(hw.m.bits()) + " --pes " + std::to_string(hw.n_pes) +
               " --pool-skip " + (opts.pool_skipping ? "on" : "off");
  j["manifest"] = manifest("compare", argv);
  write_text(dir / "mismatch.json", j.dump(2) + "\n");
}

int cmd_compare(const CompareArgs& a, const std::vector<std::string>& argv, std::ostream& out,
                std::ostream& err) {
  const NetworkSpec net = load_model(a.model);
  require_valid(net);
  if (a.count == 0) {
    err << "warning: --count 0 compares nothing; passing vacuously\n";
    out << "compare: PASS (0 inputs)\n";
    return kOk;
  }
  std::uint64_t runs = 0;
  for (int i = 0; i < a.count; ++i) {
    const Fixed16Tensor input = random_input(net.input_shape, a.seed + static_cast<std::uint64_t>(i));
    const ReferenceResult expected = ref_infer(net, input);
    for (unsigned m : WordWidth::kSupported) {
      for (int pes : {1, 4, 8}) {
        for (bool skip : {false, true}) {
          const HardwareConfig hw{WordWidth{m}, pes, 100e6};
          RunOptions opts;
          opts.pool_skipping = skip;
          opts.record_intermediates = true;
          opts.workers = a.workers;
          opts.inject_tail_mask_fault = a.inject_fault == "tail-mask";
          const EngineResult got = run_inference(net, input, hw, opts);
          ++runs;
          if (auto mm = compare_results(expected, got)) {
            fs::path dir = a.reproducer.empty()
                               ? report_dir().value_or(fs::path(".")) / "bnnsim-reproducer"
                               : fs::path(a.reproducer);
            dump_reproducer(dir, net, input, hw, opts, *mm, argv);
            err << "compare: FAIL on input " << i << " (seed " << a.seed + static_cast<std::uint64_t>(i)
                << ") with m=" << m << " pes=" << pes << " pool-skip=" << (skip ? "on" : "off")
                << "\n  " << mm->describe() << "\n  reproducer: " << dir.string() << "\n";
            return kMismatch;
          }
        }
      }
    }
  }
  out << "compare: PASS (" << a.count << " inputs, " << runs << " engine runs, bit-identical)\n";
  return kOk;
}

// ---------------------------------------------------------------- sweep

struct SweepArgs {
  std::string model;
  std::string corpus;
  std::vector<unsigned> m_set{32, 64, 128, 256, 512};
  std::vector<int> n_set{1, 2, 4, 8, 16};
  std::string energy;
  std::string out;
  double freq = 100e6;
  std::string pool_skip = "on";
  int workers = 1;
};

int cmd_sweep(const SweepArgs& a, const std::vector<std::string>& argv, std::ostream& out) {
  const NetworkSpec net = load_model(a.model);
  const auto corpus = read_corpus(a.corpus, net.input_shape);
  if (corpus.empty()) throw ContractError("corpus " + a.corpus + " holds no complete frame");
  const auto params = load_energy_params(a.energy);
  SweepOptions o;
  o.m_set = a.m_set;
  o.n_set = a.n_set;
  o.clock_hz = a.freq;
  o.pool_skipping = parse_on_off(a.pool_skip);
  o.workers = a.workers;
  const SweepResult r = sweep(net, corpus, o, params);

  const auto dir = resolve_output(a.out, "sweep");
  if (!dir) throw ContractError("sweep needs --out or " + std::string(kReportDirEnv));
  fs::create_directories(*dir);

  std::ostringstream csv;
  csv << "m,n,total_uj,memory_uj,compute_uj,leakage_uj,latency_s,cycles,nominal_ops,"
         "effective_ops,skipped_ops\n";
  for (const auto& p : r.grid) {
    csv << p.m << ',' << p.n << ',' << p.energy.total_uj << ',' << p.energy.memory_uj << ','
        << p.energy.compute_uj << ',' << p.energy.leakage_uj << ',' << p.energy.latency_s << ','
        << p.cycles << ',' << p.nominal_ops << ',' << p.effective_ops << ',' << p.skipped_ops
        << '\n';
  }
  write_text(*dir / "sweep.csv", csv.str());

  std::ostringstream skip;
  skip << "layer,kind,feeds_pool,nominal_ops,effective_ops,skipped_ops,skip_fraction,"
          "plus_fraction\n";
  for (const auto& row : r.skip_table) {
    skip << row.layer << ',' << to_string(row.kind) << ',' << (row.feeds_pool ? 1 : 0) << ','
         << row.nominal_ops << ',' << row.effective_ops << ',' << row.skipped_ops << ','
         << row.skip_fraction() << ',' << row.plus_fraction << '\n';
  }
  write_text(*dir / "skip_table.csv", skip.str());

  const auto& best = r.best();
  Json j;
  j["argmin"] = {{"m", best.m}, {"n", best.n}, {"energy", to_json(best.energy)}};
  j["serial_to_optimal_ratio"] = r.serial_to_optimal_ratio;
  j["total_skip_fraction"] = r.total_skip_fraction;
  j["corpus_frames"] = corpus.size();
  Json grid = Json::array();
  for (const auto& p : r.grid) grid.push_back({{"m", p.m}, {"n", p.n}, {"total_uj", p.energy.total_uj}});
  j["grid"] = grid;
  Json m = manifest("sweep", argv);
  m["model"] = a.model;
  m["corpus"] = a.corpus;
  m["energy_params"] = a.energy;
  m["m_set"] = a.m_set;
  m["n_set"] = a.n_set;
  m["clock_hz"] = a.freq;
  m["pool_skipping"] = o.pool_skipping;
  m["outputs"] = {(*dir / "sweep.csv").string(), (*dir / "sweep.json").string(),
                  (*dir / "skip_table.csv").string()};
  j["manifest"] = m;
  write_text(*dir / "sweep.json", j.dump(2) + "\n");

  out << "grid: " << r.grid.size() << " configurations over " << corpus.size() << " frame(s)\n";
  out << "argmin: m=" << best.m << " n=" << best.n << " (" << best.energy.total_uj << " uJ)\n";
  out << "serial/optimal energy: " << r.serial_to_optimal_ratio << "\n";
  out << "total skip fraction: " << r.total_skip_fraction << "\n";
  out << "outputs: " << dir->string() << "\n";
  return kOk;
}

// ---------------------------------------------------------------- info

int cmd_info(const std::string& model, std::ostream& out) {
  const NetworkSpec net = load_model(model);
  const auto shapes = layer_shapes(net);
  const auto counts = count_params_and_ops(net);
  out << "name: " << (net.name.empty() ? "unnamed" : net.name) << "\n";
  out << "input: " << net.input_shape.to_string() << "\n";
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    const auto& l = net.layers[i];
    out << "  " << i << ": " << to_string(l.kind);
    if (l.kind == LayerKind::MaxPool) {
      out << ' ' << l.pool.h << 'x' << l.pool.w;
    } else {
      out << ' ' << l.out_channels << " kernel " << l.kernel.h << 'x' << l.kernel.w;
    }
    out << " -> " << shapes[i].to_string() << "  params " << counts.per_layer[i].params
        << "  ops " << counts.per_layer[i].nominal_ops() << "\n";
  }
  out << "params: " << counts.params << "\n";
  const auto size = packed_size_bytes(net);
  out << "packed size: " << size.total() << " B (weights " << size.weight_bytes << " B)\n";
  out << "nominal ops: " << counts.nominal_ops() << "\n";
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"bnnsim: packed binarized-network accelerator simulator"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  GenArgs gen;
  auto* c_gen = app.add_subcommand("gen", "generate a model with random weights");
  c_gen->add_option("--arch", gen.arch, "architecture file")->required();
  c_gen->add_option("--seed", gen.seed, "weight seed");
  c_gen->add_option("--out", gen.out, "model file to write")->required();

  GenInputsArgs gi;
  auto* c_gi = app.add_subcommand("gen-inputs", "write random input frames as CSV");
  c_gi->add_option("--model", gi.model, "model file")->required();
  c_gi->add_option("--count", gi.count, "number of frames")->check(CLI::NonNegativeNumber);
  c_gi->add_option("--seed", gi.seed, "first frame seed");
  c_gi->add_option("--out", gi.out, "output directory")->required();

  InferArgs inf;
  auto* c_inf = app.add_subcommand("infer", "classify one input frame");
  c_inf->add_option("--model", inf.model, "model file")->required();
  c_inf->add_option("--input", inf.input, "input CSV")->required();
  c_inf->add_option("--frame", inf.frame, "frame index within the CSV");
  add_hw_options(c_inf, inf.hw);
  c_inf->add_option("--pool-skip", inf.pool_skip, "pool skipping")->check(CLI::IsMember({"on", "off"}));
  c_inf->add_option("--report", inf.report, "JSON report path");
  c_inf->add_option("--trace", inf.trace, "per-layer counter CSV path");
  c_inf->add_option("--energy", inf.energy, "energy parameter file to include an energy estimate");

  CompareArgs cmp;
  auto* c_cmp = app.add_subcommand("compare", "check the engine against the reference oracle");
  c_cmp->add_option("--model", cmp.model, "model file")->required();
  c_cmp->add_option("--count", cmp.count, "number of random inputs")->check(CLI::NonNegativeNumber);
  c_cmp->add_option("--seed", cmp.seed, "first input seed");
  c_cmp->add_option("--inject-fault", cmp.inject_fault, "deliberate engine fault")
      ->check(CLI::IsMember({"tail-mask"}));
  c_cmp->add_option("--reproducer", cmp.reproducer, "directory for a mismatch reproducer");
  c_cmp->add_option("--workers", cmp.workers, "host threads for PE lanes");

  SweepArgs sw;
  auto* c_sw = app.add_subcommand("sweep", "energy/latency over an (m, n) grid");
  c_sw->add_option("--model", sw.model, "model file")->required();
  c_sw->add_option("--corpus", sw.corpus, "directory of input CSVs")->required();
  c_sw->add_option("--m-set", sw.m_set, "word widths, comma separated")
      ->delimiter(',')
      ->check(CLI::IsMember({32u, 64u, 128u, 256u, 512u}));
  c_sw->add_option("--n-set", sw.n_set, "PE counts, comma separated")
      ->delimiter(',')
      ->check(CLI::Range(1, 64));
  c_sw->add_option("--energy", sw.energy, "energy parameter file")->required();
  c_sw->add_option("--out", sw.out, "output directory");
  c_sw->add_option("--freq", sw.freq, "clock frequency in Hz");
  c_sw->add_option("--pool-skip", sw.pool_skip, "pool skipping")->check(CLI::IsMember({"on", "off"}));
  c_sw->add_option("--workers", sw.workers, "grid points evaluated concurrently");

  std::string info_model;
  auto* c_info = app.add_subcommand("info", "describe a model file");
  c_info->add_option("--model", info_model, "model file")->required();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kParse;
  }

  try {
    if (c_gen->parsed()) return cmd_gen(gen, out);
    if (c_gi->parsed()) return cmd_gen_inputs(gi, out);
    if (c_inf->parsed()) return cmd_infer(inf, args, out);
    if (c_cmp->parsed()) return cmd_compare(cmp, args, out, err);
    if (c_sw->parsed()) return cmd_sweep(sw, args, out);
    if (c_info->parsed()) return cmd_info(info_model, out);
  } catch (const ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kParse;
  } catch (const FormatError& e) {
    err << "error: " << e.what() << "\n";
    return kParse;
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return kValidation;
  } catch (const ContractError& e) {
    err << "error: " << e.what() << "\n";
    return kContract;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kFailure;
  }
  return kFailure;
}

}  // namespace bnnsim::cli
