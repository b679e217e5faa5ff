#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <sstream>

#include "srcsnn/io.hpp"
#include "srcsnn/weights.hpp"
#include "support.hpp"

using namespace srcsnn;

namespace {

RealMatrix mat(std::uint32_t r, std::uint32_t c, std::vector<double> v) { return RealMatrix{r, c, std::move(v)}; }

// Rounds half away from zero without std::round.
std::int32_t round_away(double x) {
  const double a = std::floor(std::abs(x) + 0.5);
  return static_cast<std::int32_t>(x < 0 ? -a : a);
}

}  // namespace

TEST(Quantize, ZeroStaysZero) {
  const auto m = mat(1, 3, {0.0, 0.5, -0.25});
  for (int b = kMinBitWidth; b <= kMaxBitWidth; ++b) EXPECT_EQ(quantize(m, b).at(0, 0), 0);
}

TEST(Quantize, MaxEntryHitsFullScale) {
  EXPECT_EQ(quantize(mat(1, 2, {0.1, 0.4}), 9).at(0, 1), 255);
  EXPECT_EQ(quantize(mat(1, 2, {0.1, -0.4}), 9).at(0, 1), -255);
  EXPECT_EQ(quantize(mat(1, 1, {-2.0}), 9, 200.0).at(0, 0), -256);
  EXPECT_EQ(quantize(mat(1, 1, {2.0}), 9, 200.0).at(0, 0), 255);
}

TEST(Quantize, RoundHalfAwayFromZero) {
  const auto q = quantize(mat(1, 4, {0.5, -0.5, 1.5, -2.5}), 9, 1.0);
  EXPECT_EQ(q.values, (std::vector<std::int16_t>{1, -1, 2, -3}));
}

TEST(Quantize, ShiftExample) {
  WeightMatrix m9{1, 3, 9, {255, -256, -1}};
  const auto m4 = truncate_bits(m9, 4);
  EXPECT_EQ(m4.values, (std::vector<std::int16_t>{7, -8, -1}));
  EXPECT_EQ(m4.weight_shift(), 5);
}

TEST(Quantize, RangeAndCompositionOnRandomMatrices) {
  for (std::uint64_t s = 0; s < 50; ++s) {
    auto m = synthetic::random_matrix(20, 30, s, 0.3, 0.01 * static_cast<double>(s % 7));
    const auto m9 = quantize(m, 9);
    const double scale = quantization_scale(m);
    for (std::size_t i = 0; i < m.values.size(); ++i)
      ASSERT_EQ(m9.values[i], std::clamp(round_away(m.values[i] * scale), -256, 255));
    for (int b = kMinBitWidth; b <= kMaxBitWidth; ++b) {
      const auto q = quantize(m, b);
      for (auto v : q.values) {
        ASSERT_GE(v, -(1 << (b - 1)));
        ASSERT_LE(v, (1 << (b - 1)) - 1);
      }
      ASSERT_EQ(q, truncate_bits(m9, b));
      ASSERT_EQ(q, quantize(m, b, scale));
    }
  }
}

TEST(Quantize, Errors) {
  EXPECT_THROW(quantize(mat(1, 1, {1.0}), 10), Error);
  EXPECT_THROW(quantize(mat(1, 1, {1.0}), 1), Error);
  EXPECT_THROW(quantization_scale(mat(1, 2, {0.0, 0.0})), Error);
  EXPECT_THROW(quantize(mat(1, 2, {1.0, std::nan("")}), 9), Error);
  EXPECT_THROW(quantize(mat(1, 1, {1.0}), 9, -1.0), Error);
  EXPECT_THROW(truncate_bits(WeightMatrix{1, 1, 4, {1}}, 5), Error);
}

TEST(IrBits, EncodeDecode) {
  const auto b = encode_ir(mat(1, 3, {-1, 10, -1}));
  EXPECT_EQ(b.bits, (std::vector<std::uint8_t>{0, 1, 0}));
  EXPECT_EQ(b.decoded(0, 0), -1);
  EXPECT_EQ(b.decoded(0, 1), 10);
  EXPECT_THROW(encode_ir(mat(1, 1, {0.0})), Error);
}

TEST(Wmf, RoundTripAndErrors) {
  const auto m = synthetic::random_matrix(5, 7, 3);
  const auto dir = test::temp_dir("wmf");
  const auto p = (dir / "w.wmf").string();
  save_float_weights(m, p);
  const auto back = load_float_weights(p);
  ASSERT_EQ(back.rows, 5u);
  ASSERT_EQ(back.cols, 7u);
  for (std::size_t i = 0; i < m.values.size(); ++i)
    EXPECT_EQ(back.values[i], static_cast<double>(static_cast<float>(m.values[i])));
  EXPECT_THROW(load_float_weights(p, 7, 5), Error);

  auto bytes = encode_wmf(m);
  bytes.pop_back();
  EXPECT_THROW(decode_wmf(bytes), Error);

  auto nan = mat(1, 2, {1.0, std::numeric_limits<double>::quiet_NaN()});
  try {
    decode_wmf(encode_wmf(nan));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::non_finite_weight);
  }
  EXPECT_THROW(decode_wmf(std::vector<std::uint8_t>{'W', 'M', 'F', '2'}), Error);
}

TEST(Wmq, RoundTripAndErrors) {
  const auto q = quantize(synthetic::random_matrix(6, 4, 8), 5);
  const auto dir = test::temp_dir("wmq");
  const auto p = (dir / "q.wmq").string();
  save_quantized(q, p);
  EXPECT_EQ(load_quantized(p), q);
  EXPECT_EQ(load_quantized(p, matrix_hash(q)), q);
  try {
    load_quantized(p, matrix_hash(q) ^ 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::hash_mismatch);
  }
  auto bytes = encode_wmq(q);
  bytes[12] = 10;
  EXPECT_THROW(decode_wmq(bytes), Error);
  bytes[12] = 5;
  bytes.pop_back();
  EXPECT_THROW(decode_wmq(bytes), Error);
}

TEST(Store, LookupAndProvenance) {
  WeightStore s;
  const auto q = quantize(synthetic::random_matrix(2, 2, 1), 9);
  s.add("a", q, Provenance{"a.wmf", 1.5, 0, 0});
  s.add("k", encode_ir(mat(1, 2, {10, -1})));
  EXPECT_TRUE(s.contains("a"));
  EXPECT_EQ(s.matrix("a"), q);
  EXPECT_EQ(s.provenance("a").bit_width, 9);
  EXPECT_EQ(s.provenance("a").hash, matrix_hash(q));
  EXPECT_EQ(s.provenance("k").bit_width, 1);
  EXPECT_THROW(s.add("a", q), Error);
  EXPECT_THROW(s.matrix("missing"), Error);
  EXPECT_THROW(s.matrix("k"), Error);
  EXPECT_THROW(s.ir_bits("a"), Error);
}

TEST(Vhdl, SingleEntryLiteral) {
  std::ostringstream os;
  write_vhdl_pkg(WeightMatrix{1, 1, 4, {3}}, "WeightMatrix01", os);
  const auto text = os.str();
  EXPECT_NE(text.find("package WeightMatrix01_pkg is"), std::string::npos);
  EXPECT_NE(text.find("0 => (0 => \"0011\")"), std::string::npos);
  EXPECT_NE(text.find("WeightMatrix01_BITS : natural := 4"), std::string::npos);
  EXPECT_NE(text.find("end package WeightMatrix01_pkg;"), std::string::npos);
}

TEST(Vhdl, NegativeLiteral) {
  EXPECT_EQ(twos_complement_bits(-1, 4), "1111");
  EXPECT_EQ(twos_complement_bits(-256, 9), "100000000");
  EXPECT_EQ(twos_complement_bits(255, 9), "011111111");
}

TEST(Vhdl, IrLines) {
  const auto k = encode_ir(synthetic::random_ir(10, 100, 4));
  std::ostringstream os;
  write_vhdl_pkg(k, "WeightMatrix02", os);
  std::istringstream is(os.str());
  std::string line;
  int rows = 0;
  while (std::getline(is, line)) {
    const auto q = line.find('"');
    if (q == std::string::npos) continue;
    const auto e = line.find('"', q + 1);
    ASSERT_EQ(e - q - 1, 100u);
    ++rows;
  }
  EXPECT_EQ(rows, 10);
}

TEST(Vhdl, DeterministicAndIdentifierChecked) {
  const auto q = quantize(synthetic::random_matrix(3, 5, 2), 6);
  std::ostringstream a, b;
  write_vhdl_pkg(q, "W", a);
  write_vhdl_pkg(q, "W", b);
  EXPECT_EQ(a.str(), b.str());
  std::ostringstream c;
  EXPECT_THROW(write_vhdl_pkg(q, "signal", c), Error);
  EXPECT_THROW(write_vhdl_pkg(q, "2bad", c), Error);
  EXPECT_THROW(write_vhdl_pkg(q, "a__b", c), Error);
  EXPECT_TRUE(is_vhdl_identifier("WeightMatrix01"));
}

TEST(WeightCoe, RowWords) {
  std::ostringstream os;
  write_weight_coe(WeightMatrix{2, 2, 3, {1, -1, 0, 3}}, os);
  EXPECT_NE(os.str().find("001111,\n000011;\n"), std::string::npos);
}
