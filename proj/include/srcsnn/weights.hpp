#pragma once

// Synaptic weight matrices: float ingestion, 2..9-bit quantization, the
// 1-bit IR encoding and the VHDL / COE emitters.

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <map>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "srcsnn/error.hpp"
#include "srcsnn/hash.hpp"
#include "srcsnn/io.hpp"

namespace srcsnn {

inline constexpr int kMaxBitWidth = 9;
inline constexpr int kMinBitWidth = 2;

struct RealMatrix {
  std::uint32_t rows = 0;
  std::uint32_t cols = 0;
  std::vector<double> values;  // row-major

  double at(std::size_t r, std::size_t c) const { return values[r * cols + c]; }
};

/// Dense signed matrix whose entries fit `bit_width`-bit two's complement.
struct WeightMatrix {
  std::uint32_t rows = 0;
  std::uint32_t cols = 0;
  int bit_width = kMaxBitWidth;
  std::vector<std::int16_t> values;  // row-major

  std::int32_t min_value() const noexcept { return -(1 << (bit_width - 1)); }
  std::int32_t max_value() const noexcept { return (1 << (bit_width - 1)) - 1; }
  /// Left shift that restores the 9-bit magnitude of a truncated weight.
  int weight_shift() const noexcept { return kMaxBitWidth - bit_width; }

  std::span<const std::int16_t> row(std::size_t r) const { return std::span(values).subspan(r * cols, cols); }
  std::int16_t at(std::size_t r, std::size_t c) const { return values[r * cols + c]; }

  void validate() const {
    if (bit_width < kMinBitWidth || bit_width > kMaxBitWidth)
      throw Error(Errc::invalid_argument, "bit_width must lie in [2, 9], got " + std::to_string(bit_width));
    if (values.size() != std::size_t{rows} * cols) throw Error(Errc::shape_mismatch, "value count vs rows*cols");
    for (auto v : values)
      if (v < min_value() || v > max_value())
        throw Error(Errc::invalid_argument, "weight " + std::to_string(v) + " outside declared bit width");
  }

  friend bool operator==(const WeightMatrix&, const WeightMatrix&) = default;
};

/// IR weights, one bit each: 0 encodes -1, 1 encodes +10.
struct IrWeightBits {
  std::uint32_t rows = 0;
  std::uint32_t cols = 0;
  std::vector<std::uint8_t> bits;  // row-major, values 0/1

  std::span<const std::uint8_t> row(std::size_t r) const { return std::span(bits).subspan(r * cols, cols); }
  std::int32_t decoded(std::size_t r, std::size_t c) const { return bits[r * cols + c] ? 10 : -1; }

  friend bool operator==(const IrWeightBits&, const IrWeightBits&) = default;
};

// ---------------------------------------------------------------------------
// Quantization

/// Global scale mapping the largest |w| onto 255.
inline double quantization_scale(const RealMatrix& m) {
  double max_abs = 0.0;
  for (double w : m.values) {
    if (!std::isfinite(w)) throw Error(Errc::non_finite_weight);
    max_abs = std::max(max_abs, std::abs(w));
  }
  if (max_abs == 0.0) throw Error(Errc::degenerate_scale);
  return 255.0 / max_abs;
}

/// Drops the low (9 - bit_width) bits of a 9-bit matrix by arithmetic shift.
inline WeightMatrix truncate_bits(const WeightMatrix& m9, int bit_width) {
  if (bit_width < kMinBitWidth || bit_width > m9.bit_width)
    throw Error(Errc::invalid_argument, "cannot truncate to " + std::to_string(bit_width) + " bits");
  WeightMatrix out{m9.rows, m9.cols, bit_width, m9.values};
  const int drop = m9.bit_width - bit_width;
  for (auto& v : out.values) v = static_cast<std::int16_t>(v >> drop);
  return out;
}

/// v9 = saturate(round(w * scale), -256, 255), rounding half away from zero,
/// then truncation to the requested width. `scale` defaults to quantization_scale(m).
inline WeightMatrix quantize(const RealMatrix& m, int bit_width, std::optional<double> scale = std::nullopt) {
  if (bit_width < kMinBitWidth || bit_width > kMaxBitWidth)
    throw Error(Errc::invalid_argument, "bit_width must lie in [2, 9], got " + std::to_string(bit_width));
  const double s = scale ? *scale : quantization_scale(m);
  if (!(std::isfinite(s) && s > 0.0)) throw Error(Errc::degenerate_scale, "scale must be positive");
  WeightMatrix m9{m.rows, m.cols, kMaxBitWidth, {}};
  m9.values.reserve(m.values.size());
  for (double w : m.values) {
    if (!std::isfinite(w)) throw Error(Errc::non_finite_weight);
    const double q = std::clamp(std::round(w * s), -256.0, 255.0);
    m9.values.push_back(static_cast<std::int16_t>(q));
  }
  return bit_width == kMaxBitWidth ? m9 : truncate_bits(m9, bit_width);
}

inline IrWeightBits encode_ir(const RealMatrix& m) {
  IrWeightBits out{m.rows, m.cols, {}};
  out.bits.reserve(m.values.size());
  for (double w : m.values) {
    if (w == 10.0) out.bits.push_back(1);
    else if (w == -1.0) out.bits.push_back(0);
    else throw Error(Errc::invalid_argument, "IR weights must be exactly -1 or +10");
  }
  return out;
}

// ---------------------------------------------------------------------------
// WMF1 float weights: "WMF1" | u32 rows | u32 cols | rows*cols f32, little-endian

inline std::vector<std::uint8_t> encode_wmf(const RealMatrix& m) {
  std::vector<std::uint8_t> out;
  io::put_magic(out, "WMF1");
  io::put_le<std::uint32_t>(out, m.rows);
  io::put_le<std::uint32_t>(out, m.cols);
  for (double w : m.values) io::put_f32_le(out, static_cast<float>(w));
  return out;
}

inline RealMatrix decode_wmf(std::span<const std::uint8_t> data) {
  if (data.size() < 4 || std::string_view(reinterpret_cast<const char*>(data.data()), 4) != "WMF1")
    throw Error(Errc::bad_magic, "expected WMF1");
  if (data.size() < 12) throw Error(Errc::malformed_header, "WMF1 header");
  io::Reader rd(data.subspan(4));
  RealMatrix m;
  m.rows = rd.le<std::uint32_t>();
  m.cols = rd.le<std::uint32_t>();
  if (m.rows == 0 || m.cols == 0) throw Error(Errc::shape_mismatch, "zero-sized matrix");
  const std::size_t n = std::size_t{m.rows} * m.cols;
  if (rd.remaining() < n * 4) throw Error(Errc::truncated, "WMF1 payload shorter than rows*cols");
  if (rd.remaining() > n * 4) throw Error(Errc::shape_mismatch, "WMF1 payload longer than rows*cols");
  m.values.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const float f = rd.f32_le();
    if (!std::isfinite(f)) throw Error(Errc::non_finite_weight, "entry " + std::to_string(i));
    m.values.push_back(f);
  }
  return m;
}

inline RealMatrix load_float_weights(const std::string& path) { return decode_wmf(io::read_file(path)); }

inline RealMatrix load_float_weights(const std::string& path, std::uint32_t rows, std::uint32_t cols) {
  auto m = load_float_weights(path);
  if (m.rows != rows || m.cols != cols)
    throw Error(Errc::shape_mismatch, path + " is " + std::to_string(m.rows) + "x" + std::to_string(m.cols) +
                                          ", expected " + std::to_string(rows) + "x" + std::to_string(cols));
  return m;
}

inline void save_float_weights(const RealMatrix& m, const std::string& path) { io::write_file(path, encode_wmf(m)); }

// ---------------------------------------------------------------------------
// WMQ1 quantized weights: "WMQ1" | u32 rows | u32 cols | u8 bit_width | rows*cols i16, little-endian

inline std::vector<std::uint8_t> encode_wmq(const WeightMatrix& m) {
  std::vector<std::uint8_t> out;
  io::put_magic(out, "WMQ1");
  io::put_le<std::uint32_t>(out, m.rows);
  io::put_le<std::uint32_t>(out, m.cols);
  io::put_le<std::uint8_t>(out, static_cast<std::uint8_t>(m.bit_width));
  for (auto v : m.values) io::put_le<std::int16_t>(out, v);
  return out;
}

inline std::uint64_t matrix_hash(const WeightMatrix& m) {
  const auto bytes = encode_wmq(m);
  return fnv1a(std::as_bytes(std::span(bytes)));
}

inline std::uint64_t matrix_hash(const IrWeightBits& m) {
  return Fnv1a{}.update("IRB1").update_value(m.rows).update_value(m.cols).update(std::as_bytes(std::span(m.bits))).digest();
}

inline WeightMatrix decode_wmq(std::span<const std::uint8_t> data, std::optional<std::uint64_t> expected_hash = {}) {
  if (data.size() < 4 || std::string_view(reinterpret_cast<const char*>(data.data()), 4) != "WMQ1")
    throw Error(Errc::bad_magic, "expected WMQ1");
  if (data.size() < 13) throw Error(Errc::malformed_header, "WMQ1 header");
  io::Reader rd(data.subspan(4));
  WeightMatrix m;
  m.rows = rd.le<std::uint32_t>();
  m.cols = rd.le<std::uint32_t>();
  m.bit_width = rd.le<std::uint8_t>();
  if (m.bit_width < kMinBitWidth || m.bit_width > kMaxBitWidth)
    throw Error(Errc::malformed_header, "bit_width " + std::to_string(m.bit_width) + " outside [2, 9]");
  const std::size_t n = std::size_t{m.rows} * m.cols;
  if (rd.remaining() != n * 2) throw Error(Errc::truncated, "WMQ1 payload size");
  m.values.reserve(n);
  for (std::size_t i = 0; i < n; ++i) m.values.push_back(rd.le<std::int16_t>());
  m.validate();
  if (expected_hash) {
    const auto h = fnv1a(std::as_bytes(data));
    if (h != *expected_hash) throw Error(Errc::hash_mismatch);
  }
  return m;
}

inline void save_quantized(const WeightMatrix& m, const std::string& path) {
  m.validate();
  io::write_file(path, encode_wmq(m));
}

inline WeightMatrix load_quantized(const std::string& path, std::optional<std::uint64_t> expected_hash = {}) {
  return decode_wmq(io::read_file(path), expected_hash);
}

// ---------------------------------------------------------------------------
// Store

struct Provenance {
  std::string source;
  double scale = 0.0;  // 0 for matrices that were not quantized here
  int bit_width = 0;   // 1 for IR bits
  std::uint64_t hash = 0;
};

class WeightStore {
 public:
  using Entry = std::variant<WeightMatrix, IrWeightBits>;

  void add(const std::string& id, WeightMatrix m, Provenance prov = {}) {
    m.validate();
    prov.bit_width = m.bit_width;
    prov.hash = matrix_hash(m);
    insert(id, std::move(m), std::move(prov));
  }
  void add(const std::string& id, IrWeightBits m, Provenance prov = {}) {
    prov.bit_width = 1;
    prov.hash = matrix_hash(m);
    insert(id, std::move(m), std::move(prov));
  }

  bool contains(const std::string& id) const { return entries_.count(id) != 0; }

  const WeightMatrix& matrix(const std::string& id) const { return get<WeightMatrix>(id); }
  const IrWeightBits& ir_bits(const std::string& id) const { return get<IrWeightBits>(id); }
  const Provenance& provenance(const std::string& id) const {
    auto it = provenance_.find(id);
    if (it == provenance_.end()) throw Error(Errc::unknown_matrix, id);
    return it->second;
  }
  const std::map<std::string, Provenance>& all_provenance() const noexcept { return provenance_; }

 private:
  template <class T>
  const T& get(const std::string& id) const {
    auto it = entries_.find(id);
    if (it == entries_.end()) throw Error(Errc::unknown_matrix, id);
    if (auto* p = std::get_if<T>(&it->second)) return *p;
    throw Error(Errc::unknown_matrix, id + " has the wrong matrix kind");
  }
  void insert(const std::string& id, Entry e, Provenance prov) {
    if (!entries_.emplace(id, std::move(e)).second) throw Error(Errc::invalid_argument, "duplicate matrix id " + id);
    provenance_[id] = std::move(prov);
  }

  std::map<std::string, Entry> entries_;
  std::map<std::string, Provenance> provenance_;
};

// ---------------------------------------------------------------------------
// VHDL packages

inline bool is_vhdl_identifier(std::string_view name) {
  static constexpr std::array<std::string_view, 40> reserved = {
      "abs",    "access",   "after",  "alias",  "all",     "and",     "architecture", "array",
      "begin",  "block",    "body",   "buffer", "bus",     "case",    "component",    "constant",
      "downto", "else",     "end",    "entity", "for",     "function", "generate",    "if",
      "in",     "is",       "library", "loop",  "map",     "not",     "of",           "or",
      "out",    "package",  "port",   "process", "signal", "to",      "type",         "use"};
  if (name.empty() || !std::isalpha(static_cast<unsigned char>(name.front()))) return false;
  if (name.back() == '_') return false;
  for (std::size_t i = 0; i < name.size(); ++i) {
    const auto c = static_cast<unsigned char>(name[i]);
    if (!(std::isalnum(c) || c == '_')) return false;
    if (c == '_' && i + 1 < name.size() && name[i + 1] == '_') return false;
  }
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
  return std::find(reserved.begin(), reserved.end(), lower) == reserved.end();
}

/// `bits`-wide two's complement of v, most significant bit first.
inline std::string twos_complement_bits(std::int32_t v, int bits) {
  std::string s(static_cast<std::size_t>(bits), '0');
  const auto u = static_cast<std::uint32_t>(v);
  for (int i = 0; i < bits; ++i) s[static_cast<std::size_t>(bits - 1 - i)] = ((u >> i) & 1U) ? '1' : '0';
  return s;
}

namespace detail {
inline void vhdl_preamble(std::ostream& os, std::string_view name, std::uint32_t rows, std::uint32_t cols, int bits,
                          std::uint64_t hash) {
  os << "-- srcsnn weight package\n";
  os << "-- shape: " << rows << " x " << cols << ", bit_width: " << bits << ", source_hash: 0x" << std::hex
     << std::setw(16) << std::setfill('0') << hash << std::dec << std::setfill(' ') << "\n";
  os << "library ieee;\nuse ieee.std_logic_1164.all;\nuse ieee.numeric_std.all;\n\n";
  os << "package " << name << "_pkg is\n";
  os << "  constant " << name << "_ROWS : natural := " << rows << ";\n";
  os << "  constant " << name << "_COLS : natural := " << cols << ";\n";
  os << "  constant " << name << "_BITS : natural := " << bits << ";\n";
}
}  // namespace detail

inline void write_vhdl_pkg(const WeightMatrix& m, std::string_view name, std::ostream& os) {
  m.validate();
  if (!is_vhdl_identifier(name)) throw Error(Errc::invalid_argument, "invalid VHDL identifier '" + std::string(name) + "'");
  detail::vhdl_preamble(os, name, m.rows, m.cols, m.bit_width, matrix_hash(m));
  os << "  type " << name << "_row_t is array (0 to " << name << "_COLS - 1) of signed(" << name
     << "_BITS - 1 downto 0);\n";
  os << "  type " << name << "_t is array (0 to " << name << "_ROWS - 1) of " << name << "_row_t;\n";
  os << "  constant " << name << " : " << name << "_t := (\n";
  for (std::uint32_t r = 0; r < m.rows; ++r) {
    os << "    " << r << " => (";
    for (std::uint32_t c = 0; c < m.cols; ++c) {
      if (c) os << ", ";
      os << c << " => \"" << twos_complement_bits(m.at(r, c), m.bit_width) << '"';
    }
    os << (r + 1 == m.rows ? ")\n" : "),\n");
  }
  os << "  );\nend package " << name << "_pkg;\n";
}

inline void write_vhdl_pkg(const IrWeightBits& m, std::string_view name, std::ostream& os) {
  if (!is_vhdl_identifier(name)) throw Error(Errc::invalid_argument, "invalid VHDL identifier '" + std::string(name) + "'");
  if (m.bits.size() != std::size_t{m.rows} * m.cols) throw Error(Errc::shape_mismatch, "IR bit count vs rows*cols");
  detail::vhdl_preamble(os, name, m.rows, m.cols, 1, matrix_hash(m));
  os << "  -- '0' decodes to -1, '1' decodes to +10\n";
  os << "  type " << name << "_t is array (0 to " << name << "_ROWS - 1) of std_logic_vector(0 to " << name
     << "_COLS - 1);\n";
  os << "  constant " << name << " : " << name << "_t := (\n";
  for (std::uint32_t r = 0; r < m.rows; ++r) {
    os << "    " << r << " => \"";
    for (auto b : m.row(r)) os << (b ? '1' : '0');
    os << (r + 1 == m.rows ? "\"\n" : "\",\n");
  }
  os << "  );\nend package " << name << "_pkg;\n";
}

template <class M>
void emit_vhdl_pkg(const M& m, std::string_view name, const std::string& path) {
  std::ostringstream os;
  write_vhdl_pkg(m, name, os);
  io::write_text(path, os.str());
}

/// One word per neuron row: column 0 leftmost, each weight msb-first.
inline void write_weight_coe(const WeightMatrix& m, std::ostream& os) {
  m.validate();
  os << "; srcsnn weight matrix " << m.rows << " x " << m.cols << ", bit_width " << m.bit_width << "\n";
  os << "memory_initialization_radix=2;\nmemory_initialization_vector=\n";
  for (std::uint32_t r = 0; r < m.rows; ++r) {
    for (std::uint32_t c = 0; c < m.cols; ++c) os << twos_complement_bits(m.at(r, c), m.bit_width);
    os << (r + 1 == m.rows ? ";\n" : ",\n");
  }
}

inline void emit_weight_coe(const WeightMatrix& m, const std::string& path) {
  std::ostringstream os;
  write_weight_coe(m, os);
  io::write_text(path, os.str());
}

}  // namespace srcsnn
