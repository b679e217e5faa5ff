#pragma once

// Experiment driver: SpT-length x bit-width x z_hyp sweeps, single-neuron
// frequency sweeps and weight export.

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <iomanip>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "srcsnn/config.hpp"
#include "srcsnn/error.hpp"
#include "srcsnn/hash.hpp"
#include "srcsnn/network.hpp"
#include "srcsnn/perf.hpp"
#include "srcsnn/trace.hpp"
#include "srcsnn/weights.hpp"

namespace srcsnn {

/// Locale-independent shortest round-trip formatting.
inline std::string format_number(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc{}) return "nan";
  return std::string(buf, ptr);
}

inline std::string format_fixed(double v, int digits) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed, digits);
  if (ec != std::errc{}) return "nan";
  return std::string(buf, ptr);
}

inline std::string hex64(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << v;
  return os.str();
}

// ---------------------------------------------------------------------------
// Network description file

enum class RunMode { integer, floating, dual };

inline RunMode parse_run_mode(const std::string& s) {
  if (s == "integer") return RunMode::integer;
  if (s == "float") return RunMode::floating;
  if (s == "dual") return RunMode::dual;
  throw Error(Errc::config, "mode must be integer, float or dual, got '" + s + "'");
}

inline const char* to_string(RunMode m) noexcept {
  switch (m) {
    case RunMode::integer: return "integer";
    case RunMode::floating: return "float";
    case RunMode::dual: return "dual";
  }
  return "?";
}

/// Network topology and parameters plus the float weights it was built from.
struct NetworkSetup {
  NetworkConfig config;
  std::vector<RealMatrix> layer_weights;
  std::vector<std::string> weight_paths;
  RealMatrix ir_weights;
  std::optional<double> quant_scale;
  std::uint64_t fingerprint = 0;
};

inline const std::vector<std::string_view>& network_keys() {
  static const std::vector<std::string_view> keys = {
      "input_width", "layers",     "weights",     "ir_size",     "ir_weights",   "spike_threshold",
      "z_hyp",       "z_deep",     "v_th",        "beta_num",    "beta_shift",   "quant_scale",
      "float.r",     "float.r_s",  "float.b_h",   "float.z_hyp", "float.z_deep",
  };
  return keys;
}

inline NetworkSetup load_network_setup(const KeyValueFile& kv) {
  kv.require_known(network_keys());
  NetworkSetup s;
  auto& c = s.config;
  c.input_width = kv.number_or<std::uint32_t>("input_width", kMnistPixels);
  const auto sizes = kv.list_or<std::uint32_t>("layers", {100});
  s.weight_paths = kv.strings("weights");
  if (s.weight_paths.size() != sizes.size())
    throw Error(Errc::config, "weights must list one file per SRC layer (" + std::to_string(sizes.size()) + ")");
  c.ir.size = kv.number_or<std::uint32_t>("ir_size", 10);
  c.spike_threshold = kv.number_or<std::int32_t>("spike_threshold", SrcParamsInt::kDefaultThreshold);
  c.int_params.z_hyp = kv.number_or<std::int32_t>("z_hyp", 900);
  c.int_params.z_deep = kv.number_or<std::int32_t>("z_deep", 100);
  c.int_params.v_th = kv.number_or<std::int32_t>("v_th", SrcParamsInt::kDefaultThreshold);
  c.float_params.r = kv.number_or<double>("float.r", 2.0);
  c.float_params.r_s = kv.number_or<double>("float.r_s", -7.0);
  c.float_params.b_h = kv.number_or<double>("float.b_h", -6.0);
  c.float_params.z_hyp = kv.number_or<double>("float.z_hyp", 0.910);
  c.float_params.z_deep = kv.number_or<double>("float.z_deep", 0.0);
  c.beta.num = kv.number_or<std::int32_t>("beta_num", 0);
  c.beta.shift = kv.number_or<int>("beta_shift", 0);
  if (auto q = kv.get("quant_scale"); q && *q != "auto") s.quant_scale = KeyValueFile::to_number<double>("quant_scale", *q);

  std::uint32_t upstream = c.input_width;
  for (std::size_t k = 0; k < sizes.size(); ++k) {
    LayerConfig lc;
    lc.size = sizes[k];
    lc.weights_ref = "layer" + std::to_string(k);
    c.src_layers.push_back(lc);
    s.layer_weights.push_back(load_float_weights(kv.path(s.weight_paths[k]), sizes[k], upstream));
    upstream = sizes[k];
  }
  const auto ir_path = kv.get("ir_weights");
  if (!ir_path) throw Error(Errc::config, "ir_weights is required");
  s.ir_weights = load_float_weights(kv.path(*ir_path), c.ir.size, upstream);
  c.ir.k_bits_ref = "ir";
  c.validate();

  Fnv1a h;
  for (const auto& [k, v] : kv.values()) h.update(k).update("=").update(v).update("\n");
  for (const auto& m : s.layer_weights) {
    const auto b = encode_wmf(m);
    h.update(std::as_bytes(std::span(b)));
  }
  const auto b = encode_wmf(s.ir_weights);
  h.update(std::as_bytes(std::span(b)));
  s.fingerprint = h.digest();
  return s;
}

inline NetworkSetup load_network_setup(const std::string& path) { return load_network_setup(KeyValueFile::load(path)); }

/// Quantizes every SRC layer to `bit_width` and encodes the IR matrix.
inline WeightStore make_weight_store(const NetworkSetup& s, int bit_width) {
  WeightStore store;
  for (std::size_t k = 0; k < s.layer_weights.size(); ++k) {
    const auto& m = s.layer_weights[k];
    const double scale = s.quant_scale ? *s.quant_scale : quantization_scale(m);
    store.add(s.config.src_layers[k].weights_ref, quantize(m, bit_width, scale),
              Provenance{k < s.weight_paths.size() ? s.weight_paths[k] : std::string{}, scale, bit_width, 0});
  }
  store.add(s.config.ir.k_bits_ref, encode_ir(s.ir_weights));
  return store;
}

// ---------------------------------------------------------------------------
// Trace sources

/// Either IDX images (traces generated on demand) or a list of SPT1 files.
class TraceSource {
 public:
  static TraceSource from_idx(IdxImageSet set, std::size_t limit = 0) {
    TraceSource src;
    if (limit && limit < set.size()) {
      set.labels.resize(limit);
      set.pixels.resize(limit * set.image_size());
    }
    src.idx_ = std::move(set);
    return src;
  }

  static TraceSource from_directory(const std::string& dir, std::size_t limit = 0) {
    TraceSource src;
    std::error_code ec;
    for (const auto& e : std::filesystem::directory_iterator(dir, ec))
      if (e.is_regular_file() && e.path().extension() == ".spt") src.files_.push_back(e.path().string());
    if (ec) throw Error(Errc::io, "cannot list " + dir + ": " + ec.message());
    std::sort(src.files_.begin(), src.files_.end());
    if (limit && limit < src.files_.size()) src.files_.resize(limit);
    return src;
  }

  bool generates() const noexcept { return idx_.has_value(); }
  std::size_t size() const noexcept { return idx_ ? idx_->size() : files_.size(); }

  SpikingTrace trace(std::size_t i, const TraceParams& params, std::uint64_t seed) const {
    if (idx_) {
      const auto bin = binarize(idx_->image(i));
      return generate_spt(std::span<const std::uint8_t>(bin), idx_->labels[i], params, derive_seed(seed, i));
    }
    return parse_spt(files_.at(i));
  }

 private:
  std::optional<IdxImageSet> idx_;
  std::vector<std::string> files_;
};

/// Reset window is one eleventh of the trace, as in "20+200" or "4+40".
inline TraceParams trace_params_for_length(std::uint32_t total_frames, double p_max) {
  if (total_frames < 2) throw Error(Errc::invalid_argument, "SpT length must be at least 2");
  TraceParams p;
  p.n_reset = total_frames / 11;
  p.n_active = total_frames - p.n_reset;
  p.p_max = p_max;
  return p;
}

// ---------------------------------------------------------------------------
// Sweep grid

struct ExperimentSpec {
  std::vector<std::uint32_t> spt_lengths{220};
  std::vector<int> bit_widths{9};
  std::vector<std::int32_t> z_hyp_values{900};
  std::uint64_t seed = 1;
  double p_max = 0.25;
  double power_w = kReferencePowerW;
  double clock_hz = 100e6;
  RunMode mode = RunMode::integer;
  std::string out_dir = "out";
  unsigned workers = 0;  // 0: SRCSNN_WORKERS or hardware concurrency

  void validate() const {
    if (spt_lengths.empty() || bit_widths.empty() || z_hyp_values.empty())
      throw Error(Errc::config, "sweep axes must be non-empty");
    if (!(power_w >= 0.0)) throw Error(Errc::config, "power_w must be non-negative");
    if (!(clock_hz > 0.0)) throw Error(Errc::config, "clock_hz must be positive");
  }
  std::size_t cell_count() const noexcept { return spt_lengths.size() * bit_widths.size() * z_hyp_values.size(); }
};

struct Cell {
  std::size_t index = 0;
  std::uint32_t spt_length = 0;
  int bit_width = 0;
  std::int32_t z_hyp = 0;
};

inline std::vector<Cell> expand_grid(const ExperimentSpec& spec) {
  std::vector<Cell> cells;
  for (auto len : spec.spt_lengths)
    for (auto b : spec.bit_widths)
      for (auto z : spec.z_hyp_values) cells.push_back(Cell{cells.size(), len, b, z});
  return cells;
}

struct CellResult {
  Cell cell;
  bool ok = false;
  std::string message;
  TraceParams trace;
  RunStats stats;  // integer run, or float run in float mode
  std::optional<RunStats> float_stats;
  std::optional<double> agreement;
  PerfReport perf;
  std::string config_hash;
};

inline NetworkConfig cell_config(const NetworkConfig& base, const Cell& cell, Arithmetic arith) {
  NetworkConfig c = base;
  c.arithmetic = arith;
  c.int_params.z_hyp = cell.z_hyp;
  c.float_params.z_hyp = cell.z_hyp / 1000.0;
  for (auto& l : c.src_layers) {
    l.int_params.reset();
    l.float_params.reset();
  }
  return c;
}

inline unsigned resolve_workers(unsigned requested) {
  if (requested) return requested;
  if (const char* env = std::getenv("SRCSNN_WORKERS")) {
    const int n = std::atoi(env);
    if (n > 0) return static_cast<unsigned>(n);
  }
  return std::max(1U, std::thread::hardware_concurrency());
}

inline CellResult run_cell(const ExperimentSpec& spec, const NetworkSetup& setup, const TraceSource& source,
                           const Cell& cell) {
  CellResult res;
  res.cell = cell;
  try {
    if (cell.bit_width < kMinBitWidth || cell.bit_width > kMaxBitWidth)
      throw Error(Errc::invalid_argument, "bit width " + std::to_string(cell.bit_width) + " outside [2, 9]");
    res.trace = trace_params_for_length(cell.spt_length, spec.p_max);
    const auto store = make_weight_store(setup, cell.bit_width);

    Fnv1a h;
    h.update_value(setup.fingerprint).update_value(cell.spt_length).update_value(cell.bit_width).update_value(cell.z_hyp);
    h.update(to_string(spec.mode)).update_value(spec.seed).update_value(spec.p_max);
    res.config_hash = hex64(h.digest());

    auto load = [&](std::size_t i) {
      auto t = source.trace(i, res.trace, spec.seed);
      if (!source.generates() && t.frame_count() != cell.spt_length)
        throw Error(Errc::invalid_argument, "stored trace has " + std::to_string(t.frame_count()) +
                                                " frames, cell expects " + std::to_string(cell.spt_length));
      return t;
    };
    const bool want_int = spec.mode != RunMode::floating;
    const bool want_float = spec.mode != RunMode::integer;
    if (want_int) {
      auto net = build_network(cell_config(setup.config, cell, Arithmetic::integer), store);
      res.stats = run_dataset(net, source.size(), load);
    }
    if (want_float) {
      auto net = build_network(cell_config(setup.config, cell, Arithmetic::floating), store);
      auto fs = run_dataset(net, source.size(), load);
      if (want_int) {
        res.agreement = agreement_rate(res.stats, fs);
        res.float_stats = std::move(fs);
      } else {
        res.stats = std::move(fs);
      }
    }
    std::size_t max_fan_in = 0;
    for (const auto& m : setup.layer_weights) max_fan_in = std::max<std::size_t>(max_fan_in, m.cols);
    TimingModel tm;
    tm.clock_hz = spec.clock_hz;
    const auto spikes = res.stats.total_spikes();
    res.perf = report(tm, cell.spt_length, max_fan_in, spec.power_w, spikes, setup.layer_weights.size());
    // Per-trace energy over per-trace spikes.
    res.perf.energy_per_spike_j = res.perf.energy_j * static_cast<double>(res.stats.total) /
                                  static_cast<double>(std::max<std::uint64_t>(spikes, 1));
    res.ok = true;
  } catch (const std::exception& e) {
    res.ok = false;
    res.message = e.what();
  }
  return res;
}

// ---------------------------------------------------------------------------
// Outputs

inline const char* kResultsCsvHeader =
    "cell,mode,spt_length,reset_frames,active_frames,bit_width,z_hyp,status,accuracy,errors,total,cycles,time_s,"
    "energy_j,spikes,energy_per_spike_j,float_accuracy,agreement,config_hash,message";

inline std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c == '\n' ? ' ' : c;
  }
  return out + '"';
}

inline std::string csv_row(const CellResult& r, RunMode mode) {
  std::ostringstream os;
  os << r.cell.index << ',' << to_string(mode) << ',' << r.cell.spt_length << ',';
  if (r.ok) os << r.trace.n_reset << ',' << r.trace.n_active;
  else os << ',';
  os << ',' << r.cell.bit_width << ',' << r.cell.z_hyp << ',' << (r.ok ? "ok" : "failed") << ',';
  if (r.ok) {
    os << format_number(r.stats.accuracy) << ',' << r.stats.errors << ',' << r.stats.total << ',' << r.perf.total_cycles
       << ',' << format_number(r.perf.time_s) << ',' << format_number(r.perf.energy_j) << ',' << r.stats.total_spikes()
       << ',' << format_number(r.perf.energy_per_spike_j) << ',';
    if (r.float_stats) os << format_number(r.float_stats->accuracy);
    os << ',';
    if (r.agreement) os << format_number(*r.agreement);
    os << ',' << r.config_hash << ',';
  } else {
    os << ",,,,,,,,,,," ;
  }
  os << csv_escape(r.message);
  return os.str();
}

inline nlohmann::json to_json(const CellResult& r, RunMode mode) {
  nlohmann::json j;
  j["cell"] = r.cell.index;
  j["mode"] = to_string(mode);
  j["spt_length"] = r.cell.spt_length;
  j["bit_width"] = r.cell.bit_width;
  j["z_hyp"] = r.cell.z_hyp;
  j["status"] = r.ok ? "ok" : "failed";
  if (!r.ok) {
    j["message"] = r.message;
    return j;
  }
  j["accuracy"] = r.stats.accuracy;
  j["errors"] = r.stats.errors;
  j["total"] = r.stats.total;
  j["spikes_per_layer"] = r.stats.per_layer_spikes;
  j["config_hash"] = r.config_hash;
  j["perf"] = {{"cycles", r.perf.total_cycles},
               {"time_s", r.perf.time_s},
               {"energy_j", r.perf.energy_j},
               {"power_w", r.perf.power_w},
               {"energy_per_spike_j", r.perf.energy_per_spike_j}};
  if (r.float_stats) j["float_accuracy"] = r.float_stats->accuracy;
  if (r.agreement) j["agreement"] = *r.agreement;
  return j;
}

/// Text tables in the layout of the SpT-length / bit-width / z_hyp tables.
inline std::string summary_table(const ExperimentSpec& spec, const std::vector<CellResult>& results) {
  std::ostringstream os;
  auto find = [&](std::uint32_t len, int b, std::int32_t z) -> const CellResult* {
    for (const auto& r : results)
      if (r.cell.spt_length == len && r.cell.bit_width == b && r.cell.z_hyp == z) return &r;
    return nullptr;
  };
  for (auto z : spec.z_hyp_values) {
    os << "z_hyp = " << z << " (" << to_string(spec.mode) << ")\n";
    os << std::left << std::setw(10) << "size";
    for (auto b : spec.bit_widths) os << std::setw(12) << (std::to_string(b) + "-bit acc%");
    os << std::setw(12) << "T/SpT ms" << "E/SpT mJ\n";
    for (auto len : spec.spt_lengths) {
      const auto tp = trace_params_for_length(len, spec.p_max);
      os << std::setw(10) << (std::to_string(tp.n_reset) + "+" + std::to_string(tp.n_active));
      const CellResult* any = nullptr;
      for (auto b : spec.bit_widths) {
        const auto* r = find(len, b, z);
        if (r && r->ok) {
          os << std::setw(12) << format_fixed(100.0 * r->stats.accuracy, 2);
          any = r;
        } else {
          os << std::setw(12) << "failed";
        }
      }
      if (any) os << std::setw(12) << format_fixed(any->perf.time_s * 1e3, 4) << format_fixed(any->perf.energy_j * 1e3, 4);
      os << '\n';
    }
    os << '\n';
  }
  return os.str();
}

/// Runs every grid cell on a worker pool and writes per-cell JSON files,
/// results.csv, results.json and summary.txt under spec.out_dir.
inline std::vector<CellResult> run_experiment(const ExperimentSpec& spec, const NetworkSetup& setup,
                                              const TraceSource& source) {
  spec.validate();
  if (source.size() == 0) throw Error(Errc::empty_dataset);
  const auto cells = expand_grid(spec);
  const auto cell_dir = std::filesystem::path(spec.out_dir) / "cells";
  std::filesystem::create_directories(cell_dir);

  std::vector<CellResult> results(cells.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < cells.size(); i = next++) {
      results[i] = run_cell(spec, setup, source, cells[i]);
      std::ostringstream name;
      name << "cell_" << std::setw(4) << std::setfill('0') << i << ".json";
      io::write_text((cell_dir / name.str()).string(), to_json(results[i], spec.mode).dump(2) + "\n");
    }
  };
  const unsigned n = std::min<unsigned>(resolve_workers(spec.workers), static_cast<unsigned>(cells.size()));
  std::vector<std::thread> pool;
  for (unsigned w = 1; w < n; ++w) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  std::ostringstream csv;
  csv << kResultsCsvHeader << '\n';
  nlohmann::json all = nlohmann::json::array();
  for (const auto& r : results) {
    csv << csv_row(r, spec.mode) << '\n';
    all.push_back(to_json(r, spec.mode));
  }
  const auto out = std::filesystem::path(spec.out_dir);
  io::write_text((out / "results.csv").string(), csv.str());
  io::write_text((out / "results.json").string(), all.dump(2) + "\n");
  io::write_text((out / "summary.txt").string(), summary_table(spec, results));
  return results;
}

// ---------------------------------------------------------------------------
// Single-neuron frequency sweep

struct FrequencyPoint {
  std::int32_t z_hyp = 0;
  std::int32_t input_current = 0;
  std::uint32_t steps = 0;
  std::uint32_t spikes = 0;

  double rate() const noexcept { return steps ? static_cast<double>(spikes) / steps : 0.0; }
};

/// Spikes (rising edges through v_th) of one integer SRC driven by a constant current from the zero state.
inline std::uint32_t count_spikes_int(std::int32_t current, std::uint32_t steps, const SrcParamsInt& params,
                                      std::int32_t threshold = SrcParamsInt::kDefaultThreshold) {
  params.validate();
  SrcStateInt s;
  std::uint32_t n = 0;
  for (std::uint32_t t = 0; t < steps; ++t) {
    const auto next = src_step_int(s, current, params);
    n += spike_detect(s.h, next.h, threshold);
    s = next;
  }
  return n;
}

inline std::uint32_t count_spikes_float(double current, std::uint32_t steps, const SrcParamsFloat& params,
                                        double threshold = 0.5) {
  params.validate();
  SrcStateFloat s;
  std::uint32_t n = 0;
  for (std::uint32_t t = 0; t < steps; ++t) {
    const auto next = src_step_float(s, current, params);
    n += spike_detect(s.h, next.h, threshold);
    s = next;
  }
  return n;
}

inline std::vector<FrequencyPoint> frequency_sweep(const std::vector<std::int32_t>& z_values, std::int32_t current,
                                                   std::uint32_t steps, SrcParamsInt base = {}) {
  if (steps == 0) throw Error(Errc::invalid_argument, "steps must be positive");
  std::vector<FrequencyPoint> out;
  for (auto z : z_values) {
    SrcParamsInt p = base;
    p.z_hyp = z;
    out.push_back(FrequencyPoint{z, current, steps, count_spikes_int(current, steps, p, p.v_th)});
  }
  return out;
}

inline std::string frequency_csv(const std::vector<FrequencyPoint>& pts) {
  std::ostringstream os;
  os << "z_hyp,input_current,steps,spikes,rate\n";
  for (const auto& p : pts)
    os << p.z_hyp << ',' << p.input_current << ',' << p.steps << ',' << p.spikes << ',' << format_number(p.rate()) << '\n';
  return os.str();
}

// ---------------------------------------------------------------------------
// Export

/// Writes <name>_b<width>_pkg.vhd and <name>_b<width>.coe for every width.
inline std::vector<std::string> export_weights(const RealMatrix& m, const std::vector<int>& bit_widths,
                                               const std::string& out_dir, const std::string& name,
                                               std::optional<double> scale = std::nullopt) {
  if (bit_widths.empty()) throw Error(Errc::invalid_argument, "no bit widths requested");
  for (int b : bit_widths)
    if (b < kMinBitWidth || b > kMaxBitWidth)
      throw Error(Errc::invalid_argument, "bit width " + std::to_string(b) + " outside [2, 9]");
  if (!is_vhdl_identifier(name)) throw Error(Errc::invalid_argument, "invalid VHDL identifier '" + name + "'");
  std::filesystem::create_directories(out_dir);
  const double s = scale ? *scale : quantization_scale(m);
  std::vector<std::string> written;
  for (int b : bit_widths) {
    const auto q = quantize(m, b, s);
    const auto stem = (std::filesystem::path(out_dir) / (name + "_b" + std::to_string(b))).string();
    emit_vhdl_pkg(q, name, stem + "_pkg.vhd");
    emit_weight_coe(q, stem + ".coe");
    written.push_back(stem + "_pkg.vhd");
    written.push_back(stem + ".coe");
  }
  return written;
}

}  // namespace srcsnn
