#pragma once

// Cycle model of the synchronous FPGA schedule. The SRC layer with the
// largest fan-in bounds every frame: one MAC per input per cycle, plus a
// fixed per-frame overhead for buffering and state-machine reset. Deeper
// pipelines add one flush frame per extra level.

#include <algorithm>
#include <cstdint>

#include "srcsnn/error.hpp"

namespace srcsnn {

struct TimingModel {
  std::uint64_t cycles_per_input = 1;
  std::uint64_t overhead_cycles_per_frame = 8;
  double clock_hz = 100e6;

  void validate() const {
    if (cycles_per_input == 0) throw Error(Errc::invalid_argument, "cycles_per_input must be positive");
    if (!(clock_hz > 0.0)) throw Error(Errc::invalid_argument, "clock_hz must be positive");
  }
};

inline constexpr double kReferencePowerW = 1.13;

struct PerfReport {
  std::uint64_t total_cycles = 0;
  double time_s = 0.0;
  double energy_j = 0.0;
  double power_w = kReferencePowerW;
  std::uint64_t frames = 0;
  std::uint64_t spikes = 0;
  double energy_per_spike_j = 0.0;
};

inline std::uint64_t cycles_for_trace(const TimingModel& model, std::uint64_t frames, std::uint64_t max_fan_in,
                                      std::uint64_t levels = 1) {
  model.validate();
  if (frames == 0 || max_fan_in == 0 || levels == 0)
    throw Error(Errc::invalid_argument, "frames, fan-in and levels must be positive");
  const std::uint64_t per_frame = max_fan_in * model.cycles_per_input + model.overhead_cycles_per_frame;
  return (frames + levels - 1) * per_frame;
}

inline PerfReport report(const TimingModel& model, std::uint64_t frames, std::uint64_t max_fan_in, double power_w,
                         std::uint64_t spikes, std::uint64_t levels = 1) {
  if (!(power_w >= 0.0)) throw Error(Errc::invalid_argument, "power must be non-negative");
  PerfReport r;
  r.total_cycles = cycles_for_trace(model, frames, max_fan_in, levels);
  r.time_s = static_cast<double>(r.total_cycles) / model.clock_hz;
  r.power_w = power_w;
  r.energy_j = power_w * r.time_s;
  r.frames = frames;
  r.spikes = spikes;
  r.energy_per_spike_j = r.energy_j / static_cast<double>(std::max<std::uint64_t>(spikes, 1));
  return r;
}

}  // namespace srcsnn
