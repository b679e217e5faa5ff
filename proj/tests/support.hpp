#pragma once

#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "srcsnn/network.hpp"
#include "srcsnn/synthetic.hpp"
#include "srcsnn/weights.hpp"

namespace srcsnn::test {

/// Quantized store plus config for a fully connected stack of SRC layers.
struct Built {
  NetworkConfig config;
  WeightStore store;
};

inline Built random_network(std::uint32_t input, const std::vector<std::uint32_t>& sizes, std::uint32_t ir,
                            std::uint64_t seed, int bits = 9, double sigma = 0.1, double mean = 0.02) {
  Built b;
  b.config.input_width = input;
  std::uint32_t up = input;
  for (std::size_t k = 0; k < sizes.size(); ++k) {
    const auto id = "layer" + std::to_string(k);
    b.config.src_layers.push_back(LayerConfig{sizes[k], id, {}, {}});
    b.store.add(id, quantize(synthetic::random_matrix(sizes[k], up, seed + k, sigma, mean), bits));
    up = sizes[k];
  }
  b.config.ir.size = ir;
  b.config.ir.k_bits_ref = "ir";
  b.store.add("ir", encode_ir(synthetic::random_ir(ir, up, seed + 1000)));
  return b;
}

/// Random binary image with roughly `density` ON pixels.
inline std::vector<std::uint8_t> random_binary(std::size_t n, double density, std::uint64_t seed) {
  synthetic::Rng rng(seed);
  std::vector<std::uint8_t> v(n);
  for (auto& b : v) b = rng.uniform() < density ? 1 : 0;
  return v;
}

inline std::filesystem::path temp_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("srcsnn_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace srcsnn::test
