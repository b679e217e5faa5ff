#pragma once

// Spiking Recurrent Cell (SRC) neuron in two arithmetic flavours, plus the
// leaky input-current integrator and the IR accumulator neuron.
//
// Float SRC:
//   z_s[t] = z_hyp - (z_hyp - z_deep) * sigmoid(10 * (h[t-1] - 0.5))
//   h_s[t] = z_s[t] * h_s[t-1] + (1 - z_s[t]) * h[t-1]
//   h[t]   = tanh(I[t] + r * h[t-1] + r_s * h_s[t-1] + b_h)
//
// Integer SRC, every quantity scaled by 1000, z scaled by 1024:
//   z_s[t] = h[t-1] < v_th ? z_hyp : z_deep
//   h_s[t] = ((z_s * (h_s[t-1] - h[t-1])) >> 10) + h[t-1]
//   x[t]   = I[t] + ((h[t-1] - (h_s[t-1] << 2) - 3000) << 1)
//   h[t]   = clamp(((x << 1) + x) >> 2, -1000, 1000)
//
// Right shifts are arithmetic (floor toward -inf), as with VHDL signed.

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>

#include "srcsnn/error.hpp"

namespace srcsnn {

namespace detail {

// Overflow-checked int32 helpers. Defining SRCSNN_UNCHECKED_ARITHMETIC turns
// them into plain two's-complement operations.
inline std::int32_t narrow_checked(std::int64_t v) {
#ifndef SRCSNN_UNCHECKED_ARITHMETIC
  if (v < std::numeric_limits<std::int32_t>::min() || v > std::numeric_limits<std::int32_t>::max())
    throw Error(Errc::integer_overflow);
#endif
  return static_cast<std::int32_t>(v);
}

inline std::int32_t add(std::int32_t a, std::int32_t b) {
  return narrow_checked(std::int64_t{a} + b);
}
inline std::int32_t sub(std::int32_t a, std::int32_t b) {
  return narrow_checked(std::int64_t{a} - b);
}
inline std::int32_t mul(std::int32_t a, std::int32_t b) {
  return narrow_checked(std::int64_t{a} * b);
}
inline std::int32_t shl(std::int32_t a, int bits) {
  return narrow_checked(std::int64_t{a} * (std::int64_t{1} << bits));
}
constexpr std::int32_t asr(std::int32_t a, int bits) noexcept { return a >> bits; }

}  // namespace detail

// ---------------------------------------------------------------------------
// Parameters and state

struct SrcParamsFloat {
  double r = 2.0;
  double r_s = -7.0;
  double b_h = -6.0;
  double z_hyp = 0.910;
  double z_deep = 0.000;

  void validate() const {
    if (!(z_deep >= 0.0 && z_deep <= z_hyp && z_hyp <= 1.0))
      throw Error(Errc::invalid_argument, "float SRC requires 0 <= z_deep <= z_hyp <= 1");
    if (!std::isfinite(r) || !std::isfinite(r_s) || !std::isfinite(b_h))
      throw Error(Errc::invalid_argument, "float SRC gains must be finite");
  }
};

struct SrcParamsInt {
  /// Switching threshold on h between the slow and fast relaxation regimes.
  static constexpr std::int32_t kDefaultThreshold = 500;
  /// b_h = -6 scaled by 1000 and halved by the factored-out <<1.
  static constexpr std::int32_t bias = -3000;

  std::int32_t z_hyp = 902;
  std::int32_t z_deep = 100;
  std::int32_t v_th = kDefaultThreshold;

  void validate() const {
    if (!(0 <= z_deep && z_deep <= z_hyp && z_hyp <= 1024))
      throw Error(Errc::invalid_argument, "integer SRC requires 0 <= z_deep <= z_hyp <= 1024");
    if (!(-1000 < v_th && v_th < 1000))
      throw Error(Errc::invalid_argument, "integer SRC threshold must lie in (-1000, 1000)");
  }
};

struct SrcStateFloat {
  double h = 0.0;
  double h_s = 0.0;
  double i_cur = 0.0;

  friend bool operator==(const SrcStateFloat&, const SrcStateFloat&) = default;
};

struct SrcStateInt {
  std::int32_t h = 0;
  std::int32_t h_s = 0;
  std::int32_t i_cur = 0;

  friend bool operator==(const SrcStateInt&, const SrcStateInt&) = default;
};

struct IrState {
  std::int64_t s_out = 0;

  friend bool operator==(const IrState&, const IrState&) = default;
};

// ---------------------------------------------------------------------------
// Float SRC

inline double refractory_gate(double h_prev, const SrcParamsFloat& p) noexcept {
  const double span = p.z_hyp - p.z_deep;
  if (span == 0.0) return p.z_hyp;
  return p.z_hyp - span / (1.0 + std::exp(-10.0 * (h_prev - 0.5)));
}

inline SrcStateFloat src_step_float(const SrcStateFloat& s, double input_current, const SrcParamsFloat& p) {
  if (!std::isfinite(s.h) || !std::isfinite(s.h_s) || !std::isfinite(input_current))
    throw Error(Errc::non_finite);
  const double z = refractory_gate(s.h, p);
  SrcStateFloat next;
  next.h_s = z * s.h_s + (1.0 - z) * s.h;
  next.h = std::tanh(input_current + p.r * s.h + p.r_s * s.h_s + p.b_h);
  next.i_cur = input_current;
  if (!std::isfinite(next.h) || !std::isfinite(next.h_s)) throw Error(Errc::non_finite);
  return next;
}

// ---------------------------------------------------------------------------
// Integer SRC

/// Saturating tanh replacement: floor(3x/4) clamped to [-1000, 1000].
inline std::int32_t pwf(std::int32_t x) {
  const std::int32_t y = detail::asr(detail::add(detail::shl(x, 1), x), 2);
  return y < -1000 ? -1000 : (y > 1000 ? 1000 : y);
}

constexpr std::int32_t refractory_gate(std::int32_t h_prev, const SrcParamsInt& p) noexcept {
  return h_prev < p.v_th ? p.z_hyp : p.z_deep;
}

inline SrcStateInt src_step_int(const SrcStateInt& s, std::int32_t input_current, const SrcParamsInt& p) {
  using namespace detail;
  const std::int32_t z = refractory_gate(s.h, p);
  SrcStateInt next;
  next.h_s = add(asr(mul(z, sub(s.h_s, s.h)), 10), s.h);
  const std::int32_t x = add(input_current, shl(add(sub(s.h, shl(s.h_s, 2)), SrcParamsInt::bias), 1));
  next.h = pwf(x);
  next.i_cur = input_current;
  return next;
}

/// Rising-edge crossing of `threshold`; one spike per action potential.
constexpr bool spike_detect(std::int32_t h_prev, std::int32_t h_now,
                            std::int32_t threshold = SrcParamsInt::kDefaultThreshold) noexcept {
  return h_prev < threshold && h_now >= threshold;
}

constexpr bool spike_detect(double h_prev, double h_now, double threshold = 0.5) noexcept {
  return h_prev < threshold && h_now >= threshold;
}

// ---------------------------------------------------------------------------
// Input current

/// Leak factor of the current integrator, num / 2^shift, applied as (I * num) >> shift.
struct BetaFactor {
  std::int32_t num = 0;
  int shift = 0;

  void validate() const {
    if (shift < 0 || shift > 30 || num < 0 || num > (std::int32_t{1} << shift))
      throw Error(Errc::invalid_argument, "beta must be num/2^shift within [0, 1]");
  }
  std::int32_t apply(std::int32_t i_prev) const {
    if (num == 0) return 0;
    return detail::asr(detail::mul(i_prev, num), shift);
  }
  double value() const noexcept { return static_cast<double>(num) / static_cast<double>(std::int64_t{1} << shift); }
};

/// beta * I[t-1] + sum_i W_i * spikes_i, where each weight is scaled back by
/// 2^weight_shift (truncated lower bit-widths keep the 9-bit current range).
inline std::int32_t current_step(std::int32_t i_prev, const BetaFactor& beta, std::span<const std::int16_t> weights,
                                 std::span<const std::uint8_t> spikes, int weight_shift = 0) {
  if (weights.size() != spikes.size()) throw Error(Errc::dimension_mismatch, "weights vs spikes");
  std::int64_t sum = 0;
  for (std::size_t i = 0; i < weights.size(); ++i)
    if (spikes[i]) sum += weights[i];
  const std::int32_t drive = detail::shl(detail::narrow_checked(sum), weight_shift);
  return detail::add(beta.apply(i_prev), drive);
}

// ---------------------------------------------------------------------------
// IR accumulator

/// 1-bit IR weight code: 0 -> -1, 1 -> +10.
constexpr std::int32_t decode_ir_weight(std::uint8_t bit) noexcept { return bit ? 10 : -1; }

inline IrState ir_step(const IrState& s, std::span<const std::uint8_t> spikes, std::span<const std::uint8_t> k_bits) {
  if (spikes.size() != k_bits.size()) throw Error(Errc::dimension_mismatch, "spikes vs k_bits");
  IrState next = s;
  for (std::size_t i = 0; i < spikes.size(); ++i)
    if (spikes[i]) next.s_out += decode_ir_weight(k_bits[i]);
  return next;
}

// ---------------------------------------------------------------------------
// Neuron policies consumed by the network templates

struct IntegerSrc {
  using state_type = SrcStateInt;
  using params_type = SrcParamsInt;
  using current_type = std::int32_t;
  static constexpr const char* name = "integer";

  static state_type step(const state_type& s, current_type i, const params_type& p) { return src_step_int(s, i, p); }
  static current_type value(const state_type& s) noexcept { return s.h; }
  static current_type threshold(std::int32_t scaled) noexcept { return scaled; }
  static current_type leak(current_type i_prev, const BetaFactor& beta) { return beta.apply(i_prev); }
  static current_type drive(std::int64_t weighted_sum, int weight_shift) {
    return detail::shl(detail::narrow_checked(weighted_sum), weight_shift);
  }
  static current_type combine(current_type leak, current_type drive) { return detail::add(leak, drive); }
};

struct FloatSrc {
  using state_type = SrcStateFloat;
  using params_type = SrcParamsFloat;
  using current_type = double;
  static constexpr const char* name = "float";
  /// Integer weights and thresholds live on the x1000 scale.
  static constexpr double kScale = 1000.0;

  static state_type step(const state_type& s, current_type i, const params_type& p) { return src_step_float(s, i, p); }
  static current_type value(const state_type& s) noexcept { return s.h; }
  static current_type threshold(std::int32_t scaled) noexcept { return scaled / kScale; }
  static current_type leak(current_type i_prev, const BetaFactor& beta) noexcept { return beta.value() * i_prev; }
  static current_type drive(std::int64_t weighted_sum, int weight_shift) noexcept {
    return std::ldexp(static_cast<double>(weighted_sum), weight_shift) / kScale;
  }
  static current_type combine(current_type leak, current_type drive) noexcept { return leak + drive; }
};

}  // namespace srcsnn
