#pragma once

// Layered SRC network: input -> N SRC layers -> IR layer -> comparator.
//
// Each level latches its output spike vector at the end of a frame, and the
// next level consumes the latched vector on the following frame. An input
// applied at frame t therefore first reaches SRC layer k (1-based) at frame
// t + k - 1 and the IR layer at frame t + N.

#include <algorithm>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include "srcsnn/error.hpp"
#include "srcsnn/neuron.hpp"
#include "srcsnn/trace.hpp"
#include "srcsnn/weights.hpp"

namespace srcsnn {

enum class Arithmetic { floating, integer };

inline const char* to_string(Arithmetic a) noexcept { return a == Arithmetic::floating ? "float" : "integer"; }

struct LayerConfig {
  std::uint32_t size = 0;
  std::string weights_ref;
  std::optional<SrcParamsInt> int_params;
  std::optional<SrcParamsFloat> float_params;
};

struct IrConfig {
  std::uint32_t size = 10;
  std::string k_bits_ref;
};

struct NetworkConfig {
  std::uint32_t input_width = kMnistPixels;
  std::vector<LayerConfig> src_layers;
  IrConfig ir;
  std::int32_t spike_threshold = SrcParamsInt::kDefaultThreshold;
  Arithmetic arithmetic = Arithmetic::integer;
  SrcParamsInt int_params;
  SrcParamsFloat float_params;
  BetaFactor beta;

  SrcParamsInt params_int(std::size_t k) const { return src_layers[k].int_params.value_or(int_params); }
  SrcParamsFloat params_float(std::size_t k) const { return src_layers[k].float_params.value_or(float_params); }

  void validate() const {
    if (input_width == 0) throw Error(Errc::config, "input_width must be positive");
    if (src_layers.empty()) throw Error(Errc::config, "at least one SRC layer is required");
    if (ir.size == 0) throw Error(Errc::config, "IR layer must be non-empty");
    if (ir.size > 16) throw Error(Errc::config, "comparator output must fit the 4-bit CMP_VAL");
    if (!(-1000 < spike_threshold && spike_threshold < 1000)) throw Error(Errc::config, "spike_threshold outside (-1000, 1000)");
    beta.validate();
    for (std::size_t k = 0; k < src_layers.size(); ++k) {
      if (src_layers[k].size == 0) throw Error(Errc::config, "SRC layer " + std::to_string(k) + " is empty");
      params_int(k).validate();
      params_float(k).validate();
    }
  }
};

using SpikeVector = std::vector<std::uint8_t>;

/// Index of the largest value; ties resolve to the lowest index.
template <class T>
std::size_t argmax_lowest(std::span<const T> values) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i)
    if (values[i] > values[best]) best = i;
  return best;
}

struct InferenceResult {
  std::uint8_t predicted = 0;
  std::uint8_t target = 0;
  std::vector<std::int64_t> ir_outputs;
  std::vector<std::uint64_t> spike_counts;  // per SRC layer

  bool correct() const noexcept { return predicted == target; }
  friend bool operator==(const InferenceResult&, const InferenceResult&) = default;
};

struct RunStats {
  std::uint64_t total = 0;
  std::uint64_t errors = 0;
  double accuracy = 0.0;
  std::vector<std::uint64_t> per_layer_spikes;
  std::vector<std::uint8_t> predictions;

  std::uint64_t total_spikes() const noexcept {
    std::uint64_t s = 0;
    for (auto v : per_layer_spikes) s += v;
    return s;
  }
  friend bool operator==(const RunStats&, const RunStats&) = default;
};

template <class Neuron>
class SrcLayer {
 public:
  using state_type = typename Neuron::state_type;
  using params_type = typename Neuron::params_type;
  using current_type = typename Neuron::current_type;

  SrcLayer(WeightMatrix weights, params_type params, BetaFactor beta, current_type threshold)
      : weights_(std::move(weights)),
        params_(params),
        beta_(beta),
        threshold_(threshold),
        states_(weights_.rows),
        sums_(weights_.rows) {}

  std::size_t size() const noexcept { return states_.size(); }
  std::size_t fan_in() const noexcept { return weights_.cols; }
  const WeightMatrix& weights() const noexcept { return weights_; }
  const params_type& params() const noexcept { return params_; }
  void set_params(const params_type& p) { params_ = p; }
  std::span<const state_type> states() const noexcept { return states_; }

  void reset() { std::fill(states_.begin(), states_.end(), state_type{}); }

  /// One synchronous update; writes the emitted spikes into `out`.
  void step(std::span<const std::uint32_t> active_inputs, SpikeVector& out) {
    out.assign(size(), 0);
    for (std::size_t j = 0; j < size(); ++j) {
      const auto row = weights_.row(j);
      std::int64_t acc = 0;
      for (auto i : active_inputs) acc += row[i];
      sums_[j] = acc;
    }
    const int shift = weights_.weight_shift();
    for (std::size_t j = 0; j < size(); ++j) {
      const state_type prev = states_[j];
      const current_type i_cur = Neuron::combine(Neuron::leak(prev.i_cur, beta_), Neuron::drive(sums_[j], shift));
      states_[j] = Neuron::step(prev, i_cur, params_);
      out[j] = spike_detect(Neuron::value(prev), Neuron::value(states_[j]), threshold_) ? 1 : 0;
    }
  }

 private:
  WeightMatrix weights_;
  params_type params_;
  BetaFactor beta_;
  current_type threshold_;
  std::vector<state_type> states_;
  std::vector<std::int64_t> sums_;
};

template <class Neuron>
class BasicNetwork {
 public:
  using layer_type = SrcLayer<Neuron>;

  BasicNetwork(std::uint32_t input_width, std::vector<layer_type> layers, IrWeightBits k_bits)
      : input_width_(input_width), layers_(std::move(layers)), k_bits_(std::move(k_bits)) {
    latched_.resize(layers_.size());
    emitted_.resize(layers_.size());
    for (std::size_t k = 0; k < layers_.size(); ++k) latched_[k].assign(layers_[k].size(), 0);
    ir_.resize(k_bits_.rows);
  }

  std::uint32_t input_width() const noexcept { return input_width_; }
  std::size_t layer_count() const noexcept { return layers_.size(); }
  const layer_type& layer(std::size_t k) const { return layers_.at(k); }
  layer_type& layer(std::size_t k) { return layers_.at(k); }
  std::span<const IrState> ir_states() const noexcept { return ir_; }
  std::span<const SpikeVector> latched() const noexcept { return latched_; }

  std::vector<std::int64_t> ir_outputs() const {
    std::vector<std::int64_t> out(ir_.size());
    std::transform(ir_.begin(), ir_.end(), out.begin(), [](const IrState& s) { return s.s_out; });
    return out;
  }

  /// Comparator output for the current accumulator values.
  std::uint8_t current_argmax() const {
    const auto v = ir_outputs();
    return static_cast<std::uint8_t>(argmax_lowest<std::int64_t>(v));
  }

  void reset() {
    for (auto& l : layers_) l.reset();
    for (auto& v : latched_) std::fill(v.begin(), v.end(), 0);
    std::fill(ir_.begin(), ir_.end(), IrState{});
  }

  bool is_zero_state() const {
    for (const auto& l : layers_)
      for (const auto& s : l.states())
        if (!(s == typename Neuron::state_type{})) return false;
    for (const auto& v : latched_)
      if (std::any_of(v.begin(), v.end(), [](auto b) { return b != 0; })) return false;
    return std::all_of(ir_.begin(), ir_.end(), [](const IrState& s) { return s.s_out == 0; });
  }

  /// Advances one frame. A frame with u_reset holds the whole network in
  /// reset: every state, latch and accumulator is zero after the call and
  /// no spikes are emitted.
  std::span<const SpikeVector> step_frame(std::span<const std::uint8_t> frame, const FrameControl& ctrl) {
    if (frame.size() != input_width_)
      throw Error(Errc::dimension_mismatch, "frame width " + std::to_string(frame.size()) + " != input width " +
                                                std::to_string(input_width_));
    if (ctrl.u_reset) {
      reset();
      for (std::size_t k = 0; k < layers_.size(); ++k) emitted_[k].assign(layers_[k].size(), 0);
      return emitted_;
    }
    for (std::size_t k = 0; k < layers_.size(); ++k) {
      if (k == 0) active_indices(frame, active_);
      else active_indices(latched_[k - 1], active_);
      layers_[k].step(active_, emitted_[k]);
    }
    const auto& ir_in = latched_.back();
    for (std::size_t n = 0; n < ir_.size(); ++n) ir_[n] = ir_step(ir_[n], ir_in, k_bits_.row(n));
    for (std::size_t k = 0; k < layers_.size(); ++k) latched_[k] = emitted_[k];
    return emitted_;
  }

  InferenceResult run_trace(const SpikingTrace& trace) {
    if (trace.pixel_count() != input_width_)
      throw Error(Errc::dimension_mismatch, "trace width " + std::to_string(trace.pixel_count()) +
                                                " != input width " + std::to_string(input_width_));
    InferenceResult res;
    res.spike_counts.assign(layers_.size(), 0);
    bool compared = false;
    for (std::size_t t = 0; t < trace.frame_count(); ++t) {
      const auto& ctrl = trace.ctrl(t);
      const auto spikes = step_frame(trace.frame(t), ctrl);
      for (std::size_t k = 0; k < spikes.size(); ++k)
        res.spike_counts[k] += static_cast<std::uint64_t>(std::count(spikes[k].begin(), spikes[k].end(), 1));
      if (ctrl.u_cmp) {
        res.ir_outputs = ir_outputs();
        res.predicted = current_argmax();
        res.target = ctrl.cmp_val;
        compared = true;
      }
    }
    if (!compared) throw Error(Errc::invalid_argument, "trace has no u_cmp frame");
    return res;
  }

 private:
  static void active_indices(std::span<const std::uint8_t> spikes, std::vector<std::uint32_t>& out) {
    out.clear();
    for (std::uint32_t i = 0; i < spikes.size(); ++i)
      if (spikes[i]) out.push_back(i);
  }

  std::uint32_t input_width_;
  std::vector<layer_type> layers_;
  IrWeightBits k_bits_;
  std::vector<IrState> ir_;
  std::vector<SpikeVector> latched_;
  std::vector<SpikeVector> emitted_;
  std::vector<std::uint32_t> active_;
};

using IntegerNetwork = BasicNetwork<IntegerSrc>;
using FloatNetwork = BasicNetwork<FloatSrc>;

namespace detail {
template <class Neuron>
BasicNetwork<Neuron> build_typed(const NetworkConfig& config, const WeightStore& store) {
  std::vector<SrcLayer<Neuron>> layers;
  std::uint32_t upstream = config.input_width;
  for (std::size_t k = 0; k < config.src_layers.size(); ++k) {
    const auto& lc = config.src_layers[k];
    const WeightMatrix& w = store.matrix(lc.weights_ref);
    if (w.rows != lc.size || w.cols != upstream)
      throw Error(Errc::shape_mismatch, "layer " + std::to_string(k) + " weights '" + lc.weights_ref + "' are " +
                                            std::to_string(w.rows) + "x" + std::to_string(w.cols) + ", expected " +
                                            std::to_string(lc.size) + "x" + std::to_string(upstream));
    typename Neuron::params_type params;
    if constexpr (std::is_same_v<Neuron, IntegerSrc>) params = config.params_int(k);
    else params = config.params_float(k);
    layers.emplace_back(w, params, config.beta, Neuron::threshold(config.spike_threshold));
    upstream = lc.size;
  }
  const IrWeightBits& kb = store.ir_bits(config.ir.k_bits_ref);
  if (kb.rows != config.ir.size || kb.cols != upstream)
    throw Error(Errc::shape_mismatch, "IR k_bits '" + config.ir.k_bits_ref + "' are " + std::to_string(kb.rows) + "x" +
                                          std::to_string(kb.cols) + ", expected " + std::to_string(config.ir.size) +
                                          "x" + std::to_string(upstream));
  return BasicNetwork<Neuron>(config.input_width, std::move(layers), kb);
}
}  // namespace detail

/// Runtime-selected arithmetic over the two network instantiations.
class Network {
 public:
  using Variant = std::variant<IntegerNetwork, FloatNetwork>;

  explicit Network(Variant v) : net_(std::move(v)) {}

  Arithmetic arithmetic() const noexcept {
    return std::holds_alternative<IntegerNetwork>(net_) ? Arithmetic::integer : Arithmetic::floating;
  }

  template <class F>
  decltype(auto) visit(F&& f) {
    return std::visit(std::forward<F>(f), net_);
  }
  template <class F>
  decltype(auto) visit(F&& f) const {
    return std::visit(std::forward<F>(f), net_);
  }

  std::size_t layer_count() const {
    return visit([](const auto& n) { return n.layer_count(); });
  }
  std::vector<std::size_t> layer_sizes() const {
    return visit([](const auto& n) {
      std::vector<std::size_t> s;
      for (std::size_t k = 0; k < n.layer_count(); ++k) s.push_back(n.layer(k).size());
      return s;
    });
  }
  std::size_t max_fan_in() const {
    return visit([](const auto& n) {
      std::size_t m = 0;
      for (std::size_t k = 0; k < n.layer_count(); ++k) m = std::max(m, n.layer(k).fan_in());
      return m;
    });
  }
  std::uint32_t input_width() const {
    return visit([](const auto& n) { return n.input_width(); });
  }
  void reset() {
    visit([](auto& n) { n.reset(); });
  }
  bool is_zero_state() const {
    return visit([](const auto& n) { return n.is_zero_state(); });
  }
  std::vector<std::int64_t> ir_outputs() const {
    return visit([](const auto& n) { return n.ir_outputs(); });
  }
  std::vector<SpikeVector> step_frame(std::span<const std::uint8_t> frame, const FrameControl& ctrl) {
    return visit([&](auto& n) {
      auto s = n.step_frame(frame, ctrl);
      return std::vector<SpikeVector>(s.begin(), s.end());
    });
  }
  InferenceResult run_trace(const SpikingTrace& trace) {
    return visit([&](auto& n) { return n.run_trace(trace); });
  }

 private:
  Variant net_;
};

inline Network build_network(const NetworkConfig& config, const WeightStore& store) {
  config.validate();
  if (config.arithmetic == Arithmetic::integer) return Network(detail::build_typed<IntegerSrc>(config, store));
  return Network(detail::build_typed<FloatSrc>(config, store));
}

/// Runs `count` traces produced by `load(i)`; errors carry the trace index.
template <class Net, class Loader>
RunStats run_dataset(Net& net, std::size_t count, Loader&& load) {
  if (count == 0) throw Error(Errc::empty_dataset);
  RunStats stats;
  for (std::size_t i = 0; i < count; ++i) {
    InferenceResult r;
    try {
      r = net.run_trace(load(i));
    } catch (const Error& e) {
      throw Error(e.code(), "trace " + std::to_string(i) + ": " + e.what());
    }
    if (stats.per_layer_spikes.empty()) stats.per_layer_spikes.assign(r.spike_counts.size(), 0);
    for (std::size_t k = 0; k < r.spike_counts.size(); ++k) stats.per_layer_spikes[k] += r.spike_counts[k];
    ++stats.total;
    if (!r.correct()) ++stats.errors;
    stats.predictions.push_back(r.predicted);
  }
  stats.accuracy = static_cast<double>(stats.total - stats.errors) / static_cast<double>(stats.total);
  return stats;
}

template <class Net>
RunStats run_dataset(Net& net, std::span<const SpikingTrace> traces) {
  return run_dataset(net, traces.size(), [&](std::size_t i) -> const SpikingTrace& { return traces[i]; });
}

/// Fraction of positions where two runs predicted the same class.
inline double agreement_rate(const RunStats& a, const RunStats& b) {
  if (a.predictions.size() != b.predictions.size() || a.predictions.empty())
    throw Error(Errc::dimension_mismatch, "runs cover different trace counts");
  std::size_t same = 0;
  for (std::size_t i = 0; i < a.predictions.size(); ++i) same += a.predictions[i] == b.predictions[i];
  return static_cast<double>(same) / static_cast<double>(a.predictions.size());
}

}  // namespace srcsnn
