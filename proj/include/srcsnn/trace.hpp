#pragma once

// Spiking Traces (SpT): binary input frames derived from one image, each
// frame carrying the six control bits the input BRAM appends.
//
// Frame bit layout (word of pixel_count + 6 bits):
//   [0, pixel_count)      pixels, row-major
//   pixel_count           u_reset
//   pixel_count + 1       u_cmp
//   pixel_count + 2 .. 5  cmp_val, most significant bit first

#include <algorithm>
#include <array>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "srcsnn/error.hpp"
#include "srcsnn/io.hpp"

namespace srcsnn {

inline constexpr std::uint32_t kMnistPixels = 784;
inline constexpr std::uint32_t kControlBits = 6;

struct FrameControl {
  bool u_reset = false;
  bool u_cmp = false;
  std::uint8_t cmp_val = 0;

  friend bool operator==(const FrameControl&, const FrameControl&) = default;
};

class SpikingTrace {
 public:
  SpikingTrace() = default;
  SpikingTrace(std::uint32_t pixel_count, std::uint32_t frame_count, std::uint32_t reset_frames, std::uint64_t seed,
               std::uint8_t label)
      : pixel_count_(pixel_count),
        reset_frames_(reset_frames),
        seed_(seed),
        label_(label),
        pixels_(std::size_t{pixel_count} * frame_count, 0),
        ctrl_(frame_count) {}

  std::uint32_t pixel_count() const noexcept { return pixel_count_; }
  std::uint32_t frame_count() const noexcept { return static_cast<std::uint32_t>(ctrl_.size()); }
  std::uint32_t reset_frames() const noexcept { return reset_frames_; }
  std::uint32_t active_frames() const noexcept { return frame_count() - reset_frames_; }
  std::uint64_t seed() const noexcept { return seed_; }
  std::uint8_t label() const noexcept { return label_; }

  std::span<const std::uint8_t> frame(std::size_t t) const {
    return std::span(pixels_).subspan(t * pixel_count_, pixel_count_);
  }
  std::span<std::uint8_t> frame(std::size_t t) { return std::span(pixels_).subspan(t * pixel_count_, pixel_count_); }

  const FrameControl& ctrl(std::size_t t) const { return ctrl_.at(t); }
  FrameControl& ctrl(std::size_t t) { return ctrl_.at(t); }

  friend bool operator==(const SpikingTrace&, const SpikingTrace&) = default;

 private:
  std::uint32_t pixel_count_ = 0;
  std::uint32_t reset_frames_ = 0;
  std::uint64_t seed_ = 0;
  std::uint8_t label_ = 0;
  std::vector<std::uint8_t> pixels_;
  std::vector<FrameControl> ctrl_;
};

// ---------------------------------------------------------------------------
// Generation

struct TraceParams {
  std::uint32_t n_active = 200;
  std::uint32_t n_reset = 20;
  double p_max = 0.25;

  void validate() const {
    if (!(p_max > 0.0 && p_max <= 1.0)) throw Error(Errc::invalid_argument, "p_max must lie in (0, 1]");
    if (n_active + n_reset == 0) throw Error(Errc::invalid_argument, "trace must have at least one frame");
  }
};

/// Name of the generator recorded next to the seed in human-readable outputs.
inline constexpr const char* kTraceRng = "mt19937_64";

/// Per-image stream seed, so each trace is reproducible independently of the others.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) noexcept {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Pixel is ON iff value / 255 > 0.5, i.e. byte >= 128.
inline std::vector<std::uint8_t> binarize(std::span<const std::uint8_t> image) {
  std::vector<std::uint8_t> out(image.size());
  std::transform(image.begin(), image.end(), out.begin(), [](std::uint8_t v) { return std::uint8_t(v >= 128); });
  return out;
}

namespace detail {
// Uniform [0, 1) from the top 53 bits; independent of the standard library's
// distribution implementations.
inline double unit_uniform(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }
}  // namespace detail

/// Refractory Bernoulli generation with an explicit firing probability per pixel.
/// A pixel that fired on frame t is forced to 0 on frame t+1.
inline SpikingTrace generate_spt(std::span<const double> probabilities, std::uint8_t label, const TraceParams& params,
                                 std::uint64_t seed) {
  params.validate();
  if (probabilities.empty()) throw Error(Errc::invalid_argument, "empty pixel vector");
  if (label > 9) throw Error(Errc::invalid_argument, "label must lie in [0, 9]");
  for (double p : probabilities)
    if (!(p >= 0.0 && p <= 1.0)) throw Error(Errc::invalid_argument, "pixel probability outside [0, 1]");

  const auto width = static_cast<std::uint32_t>(probabilities.size());
  const std::uint32_t total = params.n_reset + params.n_active;
  SpikingTrace trace(width, total, params.n_reset, seed, label);
  std::mt19937_64 rng(seed);

  for (std::uint32_t t = params.n_reset; t < total; ++t) {
    auto cur = trace.frame(t);
    const bool has_prev = t > params.n_reset;
    for (std::uint32_t i = 0; i < width; ++i) {
      if (probabilities[i] == 0.0) continue;
      // Draw for every eligible-by-image pixel, so the stream position does
      // not depend on the refractory filter.
      const bool fire = detail::unit_uniform(rng) < probabilities[i];
      if (has_prev && trace.frame(t - 1)[i]) continue;
      cur[i] = fire ? 1 : 0;
    }
  }
  for (std::uint32_t t = 0; t < total; ++t) {
    auto& c = trace.ctrl(t);
    c.u_reset = t < params.n_reset;
    c.u_cmp = t + 1 == total;
    c.cmp_val = label;
  }
  return trace;
}

inline SpikingTrace generate_spt(std::span<const std::uint8_t> binary, std::uint8_t label, const TraceParams& params,
                                 std::uint64_t seed) {
  params.validate();
  std::vector<double> probs(binary.size());
  std::transform(binary.begin(), binary.end(), probs.begin(), [&](std::uint8_t b) { return b ? params.p_max : 0.0; });
  return generate_spt(std::span<const double>(probs), label, params, seed);
}

// ---------------------------------------------------------------------------
// Frame words

inline std::vector<std::uint8_t> frame_word_bits(const SpikingTrace& trace, std::size_t t) {
  const auto n = trace.pixel_count();
  std::vector<std::uint8_t> bits(n + kControlBits);
  auto px = trace.frame(t);
  std::copy(px.begin(), px.end(), bits.begin());
  const auto& c = trace.ctrl(t);
  bits[n] = c.u_reset;
  bits[n + 1] = c.u_cmp;
  for (int b = 0; b < 4; ++b) bits[n + 2 + b] = (c.cmp_val >> (3 - b)) & 1U;
  return bits;
}

inline void set_frame_word_bits(SpikingTrace& trace, std::size_t t, std::span<const std::uint8_t> bits) {
  const auto n = trace.pixel_count();
  auto px = trace.frame(t);
  std::copy_n(bits.begin(), n, px.begin());
  auto& c = trace.ctrl(t);
  c.u_reset = bits[n] != 0;
  c.u_cmp = bits[n + 1] != 0;
  c.cmp_val = 0;
  for (int b = 0; b < 4; ++b) c.cmp_val = static_cast<std::uint8_t>((c.cmp_val << 1) | (bits[n + 2 + b] & 1U));
}

// ---------------------------------------------------------------------------
// SPT1 binary format
//
//   "SPT1" | u32 frame_count | u32 pixel_count | u32 reset_frames | u64 seed | u8 label
//   then frame_count words of ceil((pixel_count + 6) / 8) bytes, LSB-first.
// All integers little-endian.

inline constexpr std::size_t kSptHeaderSize = 4 + 4 + 4 + 4 + 8 + 1;

constexpr std::size_t spt_frame_bytes(std::uint32_t pixel_count) noexcept {
  return (std::size_t{pixel_count} + kControlBits + 7) / 8;
}

inline std::vector<std::uint8_t> encode_spt(const SpikingTrace& trace) {
  std::vector<std::uint8_t> out;
  const std::size_t fb = spt_frame_bytes(trace.pixel_count());
  out.reserve(kSptHeaderSize + fb * trace.frame_count());
  io::put_magic(out, "SPT1");
  io::put_le<std::uint32_t>(out, trace.frame_count());
  io::put_le<std::uint32_t>(out, trace.pixel_count());
  io::put_le<std::uint32_t>(out, trace.reset_frames());
  io::put_le<std::uint64_t>(out, trace.seed());
  io::put_le<std::uint8_t>(out, trace.label());
  for (std::size_t t = 0; t < trace.frame_count(); ++t) {
    const auto bits = frame_word_bits(trace, t);
    std::vector<std::uint8_t> packed(fb, 0);
    for (std::size_t i = 0; i < bits.size(); ++i)
      if (bits[i]) packed[i / 8] |= static_cast<std::uint8_t>(1U << (i % 8));
    out.insert(out.end(), packed.begin(), packed.end());
  }
  return out;
}

inline SpikingTrace decode_spt(std::span<const std::uint8_t> data) {
  if (data.size() < 4 || std::memcmp(data.data(), "SPT1", 4) != 0) throw Error(Errc::bad_magic, "expected SPT1");
  if (data.size() < kSptHeaderSize) throw Error(Errc::malformed_header, "header shorter than 25 bytes");
  io::Reader rd(data.subspan(4));
  const auto frames = rd.le<std::uint32_t>();
  const auto pixels = rd.le<std::uint32_t>();
  const auto reset = rd.le<std::uint32_t>();
  const auto seed = rd.le<std::uint64_t>();
  const auto label = rd.le<std::uint8_t>();
  if (frames == 0) throw Error(Errc::empty_trace);
  if (pixels == 0) throw Error(Errc::malformed_header, "pixel_count is 0");
  if (reset > frames) throw Error(Errc::malformed_header, "reset_frames exceeds frame_count");
  if (label > 15) throw Error(Errc::malformed_header, "label does not fit 4 bits");

  const std::size_t fb = spt_frame_bytes(pixels);
  if (rd.remaining() < fb * frames) throw Error(Errc::truncated, "frame data shorter than header declares");
  if (rd.remaining() > fb * frames) throw Error(Errc::malformed_header, "trailing bytes after last frame");

  SpikingTrace trace(pixels, frames, reset, seed, label);
  std::vector<std::uint8_t> bits(pixels + kControlBits);
  for (std::uint32_t t = 0; t < frames; ++t) {
    const auto packed = rd.bytes(fb);
    for (std::size_t i = 0; i < bits.size(); ++i) bits[i] = (packed[i / 8] >> (i % 8)) & 1U;
    set_frame_word_bits(trace, t, bits);
  }
  return trace;
}

inline void serialize_spt(const SpikingTrace& trace, const std::string& path) {
  io::write_file(path, encode_spt(trace));
}

inline SpikingTrace parse_spt(const std::string& path) { return decode_spt(io::read_file(path)); }

// ---------------------------------------------------------------------------
// COE export. Character i of each word is bit i of the frame word.

inline void write_coe(const SpikingTrace& trace, std::ostream& os) {
  os << "; srcsnn spiking trace\n";
  os << "; rng=" << kTraceRng << " seed=" << trace.seed() << " reset_frames=" << trace.reset_frames()
     << " label=" << unsigned(trace.label()) << " pixels=" << trace.pixel_count() << '\n';
  os << "; character i is word bit i: pixels row-major, u_reset, u_cmp, cmp_val msb-first\n";
  os << "memory_initialization_radix=2;\n";
  os << "memory_initialization_vector=\n";
  for (std::size_t t = 0; t < trace.frame_count(); ++t) {
    for (auto b : frame_word_bits(trace, t)) os << (b ? '1' : '0');
    os << (t + 1 == trace.frame_count() ? ";\n" : ",\n");
  }
}

inline void export_coe(const SpikingTrace& trace, const std::string& path) {
  std::ostringstream os;
  write_coe(trace, os);
  io::write_text(path, os.str());
}

/// Debug importer for files written by write_coe.
inline SpikingTrace read_coe(std::istream& is) {
  std::string line;
  std::uint64_t seed = 0;
  std::uint32_t reset_frames = 0;
  unsigned label = 0;
  bool in_vector = false;
  std::vector<std::string> words;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == ';') {
      std::istringstream ss(line.substr(1));
      std::string tok;
      while (ss >> tok) {
        const auto eq = tok.find('=');
        if (eq == std::string::npos) continue;
        const auto key = tok.substr(0, eq);
        const auto val = tok.substr(eq + 1);
        try {
          if (key == "seed") seed = std::stoull(val);
          else if (key == "reset_frames") reset_frames = static_cast<std::uint32_t>(std::stoul(val));
          else if (key == "label") label = static_cast<unsigned>(std::stoul(val));
        } catch (const std::exception&) {
          throw Error(Errc::malformed_header, "bad COE comment field " + key);
        }
      }
      continue;
    }
    if (line.rfind("memory_initialization_radix", 0) == 0) {
      if (line != "memory_initialization_radix=2;") throw Error(Errc::malformed_header, "only radix 2 is supported");
      continue;
    }
    if (line.rfind("memory_initialization_vector", 0) == 0) {
      in_vector = true;
      continue;
    }
    if (!in_vector) throw Error(Errc::malformed_header, "data before memory_initialization_vector");
    const char term = line.back();
    if (term != ',' && term != ';') throw Error(Errc::malformed_header, "word without separator");
    words.push_back(line.substr(0, line.size() - 1));
    if (term == ';') break;
  }
  if (words.empty()) throw Error(Errc::empty_trace);
  const std::size_t width = words.front().size();
  if (width <= kControlBits) throw Error(Errc::malformed_header, "word too short");
  const auto pixels = static_cast<std::uint32_t>(width - kControlBits);
  if (reset_frames > words.size()) throw Error(Errc::malformed_header, "reset_frames exceeds frame count");
  SpikingTrace trace(pixels, static_cast<std::uint32_t>(words.size()), reset_frames, seed,
                     static_cast<std::uint8_t>(label));
  std::vector<std::uint8_t> bits(width);
  for (std::size_t t = 0; t < words.size(); ++t) {
    if (words[t].size() != width) throw Error(Errc::truncated, "word " + std::to_string(t) + " has wrong width");
    for (std::size_t i = 0; i < width; ++i) {
      const char c = words[t][i];
      if (c != '0' && c != '1') throw Error(Errc::malformed_header, "non-binary digit");
      bits[i] = c == '1';
    }
    set_frame_word_bits(trace, t, bits);
  }
  return trace;
}

inline SpikingTrace import_coe(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error(Errc::io, "cannot open " + path);
  return read_coe(is);
}

// ---------------------------------------------------------------------------
// IDX (MNIST / Fashion-MNIST)

struct IdxImageSet {
  std::uint32_t rows = 0;
  std::uint32_t cols = 0;
  std::vector<std::uint8_t> pixels;  // count * rows * cols, row-major per image
  std::vector<std::uint8_t> labels;

  std::size_t size() const noexcept { return labels.size(); }
  std::size_t image_size() const noexcept { return std::size_t{rows} * cols; }
  std::span<const std::uint8_t> image(std::size_t i) const {
    return std::span(pixels).subspan(i * image_size(), image_size());
  }
};

inline constexpr std::uint32_t kIdxImagesMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelsMagic = 0x00000801;

inline IdxImageSet decode_idx(std::span<const std::uint8_t> images, std::span<const std::uint8_t> labels) {
  if (images.size() < 16) throw Error(Errc::truncated, "IDX image header");
  if (labels.size() < 8) throw Error(Errc::truncated, "IDX label header");
  io::Reader ri(images), rl(labels);
  if (ri.be<std::uint32_t>() != kIdxImagesMagic) throw Error(Errc::bad_magic, "IDX images magic 0x00000803 expected");
  if (rl.be<std::uint32_t>() != kIdxLabelsMagic) throw Error(Errc::bad_magic, "IDX labels magic 0x00000801 expected");
  const auto n_img = ri.be<std::uint32_t>();
  IdxImageSet set;
  set.rows = ri.be<std::uint32_t>();
  set.cols = ri.be<std::uint32_t>();
  const auto n_lab = rl.be<std::uint32_t>();
  if (set.rows == 0 || set.cols == 0) throw Error(Errc::dimension_mismatch, "zero image dimension");
  if (n_img != n_lab)
    throw Error(Errc::dimension_mismatch,
                "image count " + std::to_string(n_img) + " != label count " + std::to_string(n_lab));
  const std::size_t need = std::size_t{n_img} * set.image_size();
  if (ri.remaining() != need) throw Error(Errc::truncated, "IDX image payload size");
  if (rl.remaining() != n_lab) throw Error(Errc::truncated, "IDX label payload size");
  const auto px = ri.bytes(need);
  set.pixels.assign(px.begin(), px.end());
  const auto lb = rl.bytes(n_lab);
  set.labels.assign(lb.begin(), lb.end());
  return set;
}

inline IdxImageSet parse_idx(const std::string& images_path, const std::string& labels_path) {
  return decode_idx(io::read_file(images_path), io::read_file(labels_path));
}

inline void write_idx(const IdxImageSet& set, const std::string& images_path, const std::string& labels_path) {
  std::vector<std::uint8_t> img, lab;
  io::put_be<std::uint32_t>(img, kIdxImagesMagic);
  io::put_be<std::uint32_t>(img, static_cast<std::uint32_t>(set.size()));
  io::put_be<std::uint32_t>(img, set.rows);
  io::put_be<std::uint32_t>(img, set.cols);
  img.insert(img.end(), set.pixels.begin(), set.pixels.end());
  io::put_be<std::uint32_t>(lab, kIdxLabelsMagic);
  io::put_be<std::uint32_t>(lab, static_cast<std::uint32_t>(set.size()));
  lab.insert(lab.end(), set.labels.begin(), set.labels.end());
  io::write_file(images_path, img);
  io::write_file(labels_path, lab);
}

}  // namespace srcsnn
