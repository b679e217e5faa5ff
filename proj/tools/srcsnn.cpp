// srcsnn: drive trace generation, sweeps, frequency sweeps and weight export.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "srcsnn/config.hpp"
#include "srcsnn/experiment.hpp"
#include "srcsnn/trace.hpp"
#include "srcsnn/weights.hpp"

namespace {

using namespace srcsnn;

struct GenTracesArgs {
  std::string images, labels, out_dir;
  std::uint32_t n_active = 200, n_reset = 20;
  double p = 0.25;
  std::uint64_t seed = 1;
  std::size_t limit = 0;
  bool coe = false;
};

int cmd_gen_traces(const GenTracesArgs& a) {
  const auto set = parse_idx(a.images, a.labels);
  TraceParams tp{a.n_active, a.n_reset, a.p};
  tp.validate();
  std::filesystem::create_directories(a.out_dir);
  const std::size_t n = a.limit ? std::min(a.limit, set.size()) : set.size();
  for (std::size_t i = 0; i < n; ++i) {
    const auto bin = binarize(set.image(i));
    const auto trace = generate_spt(std::span<const std::uint8_t>(bin), set.labels[i], tp, derive_seed(a.seed, i));
    std::ostringstream name;
    name << "trace_" << std::setw(5) << std::setfill('0') << i;
    const auto stem = (std::filesystem::path(a.out_dir) / name.str()).string();
    serialize_spt(trace, stem + ".spt");
    if (a.coe) export_coe(trace, stem + ".coe");
  }
  std::cout << "wrote " << n << " traces of " << tp.n_reset + tp.n_active << " frames to " << a.out_dir << '\n';
  return 0;
}

struct RunArgs {
  std::string spec_file, network, images, labels, traces_dir, out_dir, mode;
  std::vector<std::uint32_t> spt_lengths;
  std::vector<int> bit_widths;
  std::vector<std::int32_t> z_hyp;
  std::uint64_t seed = 0;
  double power = -1.0, clock = -1.0, p = -1.0;
  std::size_t limit = 0;
  unsigned workers = 0;
};

int cmd_run(const RunArgs& a) {
  KeyValueFile kv;
  if (!a.spec_file.empty()) {
    kv = KeyValueFile::load(a.spec_file);
    kv.require_known({"network", "images", "labels", "traces_dir", "limit", "spt_lengths", "bit_widths",
                      "z_hyp_values", "seed", "p_max", "power_w", "clock_hz", "mode", "out_dir", "workers"});
  }
  ExperimentSpec spec;
  spec.spt_lengths = a.spt_lengths.empty() ? kv.list_or<std::uint32_t>("spt_lengths", spec.spt_lengths) : a.spt_lengths;
  spec.bit_widths = a.bit_widths.empty() ? kv.list_or<int>("bit_widths", spec.bit_widths) : a.bit_widths;
  spec.z_hyp_values = a.z_hyp.empty() ? kv.list_or<std::int32_t>("z_hyp_values", spec.z_hyp_values) : a.z_hyp;
  spec.seed = a.seed ? a.seed : kv.number_or<std::uint64_t>("seed", spec.seed);
  spec.p_max = a.p > 0 ? a.p : kv.number_or<double>("p_max", spec.p_max);
  spec.power_w = a.power >= 0 ? a.power : kv.number_or<double>("power_w", spec.power_w);
  spec.clock_hz = a.clock > 0 ? a.clock : kv.number_or<double>("clock_hz", spec.clock_hz);
  spec.mode = parse_run_mode(!a.mode.empty() ? a.mode : kv.get_or("mode", "integer"));
  spec.out_dir = !a.out_dir.empty() ? a.out_dir : kv.path(kv.get_or("out_dir", "out"));
  spec.workers = a.workers ? a.workers : kv.number_or<unsigned>("workers", 0);
  const std::size_t limit = a.limit ? a.limit : kv.number_or<std::size_t>("limit", 0);

  const std::string network = !a.network.empty() ? a.network : (kv.has("network") ? kv.path(*kv.get("network")) : "");
  if (network.empty()) throw Error(Errc::config, "a network config is required (--network)");
  const auto setup = load_network_setup(network);

  const std::string images = !a.images.empty() ? a.images : (kv.has("images") ? kv.path(*kv.get("images")) : "");
  const std::string labels = !a.labels.empty() ? a.labels : (kv.has("labels") ? kv.path(*kv.get("labels")) : "");
  const std::string traces = !a.traces_dir.empty() ? a.traces_dir : (kv.has("traces_dir") ? kv.path(*kv.get("traces_dir")) : "");
  TraceSource source;
  if (!images.empty() && !labels.empty()) source = TraceSource::from_idx(parse_idx(images, labels), limit);
  else if (!traces.empty()) source = TraceSource::from_directory(traces, limit);
  else throw Error(Errc::config, "a dataset is required: --images/--labels or --traces-dir");

  const auto results = run_experiment(spec, setup, source);
  std::cout << summary_table(spec, results);
  int failed = 0;
  for (const auto& r : results)
    if (!r.ok) {
      ++failed;
      std::cerr << "cell " << r.cell.index << " (length " << r.cell.spt_length << ", " << r.cell.bit_width
                << " bits, z_hyp " << r.cell.z_hyp << ") failed: " << r.message << '\n';
    }
  std::cout << results.size() - failed << "/" << results.size() << " cells succeeded; results in " << spec.out_dir
            << '\n';
  return failed ? 2 : 0;
}

struct FreqArgs {
  std::vector<std::int32_t> z_hyp{880, 900, 920, 940, 960, 980};
  std::int32_t current = 500;
  std::uint32_t steps = 1000;
  std::int32_t z_deep = 100;
  std::int32_t v_th = 500;
  std::string out;
};

int cmd_freq_sweep(const FreqArgs& a) {
  SrcParamsInt base;
  base.z_deep = a.z_deep;
  base.v_th = a.v_th;
  const auto csv = frequency_csv(frequency_sweep(a.z_hyp, a.current, a.steps, base));
  if (a.out.empty()) std::cout << csv;
  else io::write_text(a.out, csv);
  return 0;
}

struct ExportArgs {
  std::string weights, ir, out_dir, name = "WeightMatrix01", ir_name = "WeightMatrix02";
  std::vector<int> bit_widths{9};
  double scale = 0.0;
};

int cmd_export(const ExportArgs& a) {
  const auto m = load_float_weights(a.weights);
  std::optional<double> scale;
  if (a.scale > 0) scale = a.scale;
  auto written = export_weights(m, a.bit_widths, a.out_dir, a.name, scale);
  if (!a.ir.empty()) {
    const auto path = (std::filesystem::path(a.out_dir) / (a.ir_name + "_pkg.vhd")).string();
    emit_vhdl_pkg(encode_ir(load_float_weights(a.ir)), a.ir_name, path);
    written.push_back(path);
  }
  for (const auto& w : written) std::cout << w << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"SRC spiking network hardware twin"};
  app.require_subcommand(1);

  GenTracesArgs gen;
  auto* g = app.add_subcommand("gen-traces", "Generate SPT1 spiking traces from IDX images");
  g->add_option("--images", gen.images, "IDX image file")->required();
  g->add_option("--labels", gen.labels, "IDX label file")->required();
  g->add_option("--out", gen.out_dir, "Output directory")->required();
  g->add_option("--n-active", gen.n_active, "Active frames per trace")->capture_default_str();
  g->add_option("--n-reset", gen.n_reset, "Reset frames per trace")->capture_default_str();
  g->add_option("--p", gen.p, "Firing probability of ON pixels")->capture_default_str();
  g->add_option("--seed", gen.seed, "Base RNG seed")->capture_default_str();
  g->add_option("--limit", gen.limit, "Only the first N images (0: all)");
  g->add_flag("--coe", gen.coe, "Also write a COE file per trace");

  RunArgs run;
  auto* r = app.add_subcommand("run", "Run an SpT-length x bit-width x z_hyp sweep");
  r->add_option("--spec", run.spec_file, "Experiment key-value file");
  r->add_option("--network", run.network, "Network key-value file");
  r->add_option("--images", run.images, "IDX image file");
  r->add_option("--labels", run.labels, "IDX label file");
  r->add_option("--traces-dir", run.traces_dir, "Directory of stored .spt traces");
  r->add_option("--limit", run.limit, "Only the first N traces (0: all)");
  r->add_option("--spt-lengths", run.spt_lengths, "Total frames per SpT")->delimiter(',');
  r->add_option("--bit-widths", run.bit_widths, "SRC weight bit widths")->delimiter(',');
  r->add_option("--z-hyp", run.z_hyp, "Integer z_hyp values")->delimiter(',');
  r->add_option("--seed", run.seed, "Base RNG seed for generated traces");
  r->add_option("--p", run.p, "Firing probability of ON pixels");
  r->add_option("--power", run.power, "Power in watts for energy figures");
  r->add_option("--clock", run.clock, "Clock frequency in Hz");
  r->add_option("--mode", run.mode, "integer, float or dual");
  r->add_option("--out", run.out_dir, "Output directory");
  r->add_option("--workers", run.workers, "Worker threads (default: SRCSNN_WORKERS or all cores)");

  FreqArgs freq;
  auto* f = app.add_subcommand("freq-sweep", "Firing rate of one integer SRC neuron versus z_hyp");
  f->add_option("--z-hyp", freq.z_hyp, "z_hyp values")->delimiter(',')->capture_default_str();
  f->add_option("--current", freq.current, "Constant input current (x1000 scale)")->capture_default_str();
  f->add_option("--steps", freq.steps, "Simulation steps")->capture_default_str();
  f->add_option("--z-deep", freq.z_deep, "z_deep")->capture_default_str();
  f->add_option("--v-th", freq.v_th, "Switching threshold")->capture_default_str();
  f->add_option("--out", freq.out, "CSV output file (default: stdout)");

  ExportArgs exp;
  auto* e = app.add_subcommand("export", "Emit VHDL packages and COE files for quantized weights");
  e->add_option("--weights", exp.weights, "WMF1 float weight file")->required();
  e->add_option("--bit-widths", exp.bit_widths, "Bit widths to emit")->delimiter(',')->capture_default_str();
  e->add_option("--out", exp.out_dir, "Output directory")->required();
  e->add_option("--name", exp.name, "VHDL identifier for the SRC matrix")->capture_default_str();
  e->add_option("--ir", exp.ir, "WMF1 IR weight file with entries -1 / +10");
  e->add_option("--ir-name", exp.ir_name, "VHDL identifier for the IR matrix")->capture_default_str();
  e->add_option("--scale", exp.scale, "Explicit quantization scale (default: 255 / max|w|)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (g->parsed()) return cmd_gen_traces(gen);
    if (r->parsed()) return cmd_run(run);
    if (f->parsed()) return cmd_freq_sweep(freq);
    if (e->parsed()) return cmd_export(exp);
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << '\n';
    return 1;
  }
  return 1;
}
