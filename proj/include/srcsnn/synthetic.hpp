#pragma once

// Deterministic synthetic data for demos and tests: prototype-based
// "digit" images and hand-constructed (untrained) weight sets. Nothing here
// learns; weights are closed-form functions of the class prototypes.

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "srcsnn/trace.hpp"
#include "srcsnn/weights.hpp"

namespace srcsnn::synthetic {

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }
  std::uint64_t below(std::uint64_t n) { return gen_() % n; }
  double normal() {
    // Box-Muller; stable across standard library implementations.
    const double u1 = 1.0 - uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  }

 private:
  std::mt19937_64 gen_;
};

struct Prototypes {
  std::uint32_t classes = 10;
  std::uint32_t side = 28;
  std::vector<std::vector<std::uint8_t>> on;  // per class, side*side 0/1
};

/// Each class is a union of a few random filled rectangles.
inline Prototypes make_prototypes(std::uint64_t seed, std::uint32_t classes = 10, std::uint32_t side = 28) {
  Rng rng(seed);
  Prototypes p{classes, side, {}};
  for (std::uint32_t c = 0; c < classes; ++c) {
    std::vector<std::uint8_t> img(std::size_t{side} * side, 0);
    for (int s = 0; s < 4; ++s) {
      const auto w = 3 + static_cast<std::uint32_t>(rng.below(6));
      const auto h = 3 + static_cast<std::uint32_t>(rng.below(10));
      const auto x0 = 2 + static_cast<std::uint32_t>(rng.below(side - 4 - w));
      const auto y0 = 2 + static_cast<std::uint32_t>(rng.below(side - 4 - h));
      for (auto y = y0; y < y0 + h; ++y)
        for (auto x = x0; x < x0 + w; ++x) img[std::size_t{y} * side + x] = 1;
    }
    p.on.push_back(std::move(img));
  }
  return p;
}

/// Noisy grey-level samples: prototype pixels drop out, random pixels light up.
inline IdxImageSet make_images(const Prototypes& p, std::size_t count, std::uint64_t seed, double dropout = 0.2,
                               double clutter = 0.02) {
  Rng rng(seed);
  IdxImageSet set;
  set.rows = set.cols = p.side;
  set.pixels.reserve(count * set.image_size());
  for (std::size_t i = 0; i < count; ++i) {
    const auto label = static_cast<std::uint8_t>(rng.below(p.classes));
    set.labels.push_back(label);
    for (std::size_t px = 0; px < set.image_size(); ++px) {
      const bool on = p.on[label][px] ? rng.uniform() >= dropout : rng.uniform() < clutter;
      const auto grey = static_cast<std::uint8_t>(on ? 128 + rng.below(128) : rng.below(128));
      set.pixels.push_back(grey);
    }
  }
  return set;
}

/// i.i.d. Gaussian weights.
inline RealMatrix random_matrix(std::uint32_t rows, std::uint32_t cols, std::uint64_t seed, double sigma = 0.1,
                                double mean = 0.0) {
  Rng rng(seed);
  RealMatrix m{rows, cols, {}};
  m.values.reserve(std::size_t{rows} * cols);
  for (std::size_t i = 0; i < std::size_t{rows} * cols; ++i) m.values.push_back(mean + sigma * rng.normal());
  return m;
}

/// Random IR weights in {-1, +10}; `p_excite` is the chance of +10.
inline RealMatrix random_ir(std::uint32_t rows, std::uint32_t cols, std::uint64_t seed, double p_excite = 0.3) {
  Rng rng(seed);
  RealMatrix m{rows, cols, {}};
  for (std::size_t i = 0; i < std::size_t{rows} * cols; ++i) m.values.push_back(rng.uniform() < p_excite ? 10.0 : -1.0);
  return m;
}

/// Template-matching first layer: SRC neuron j prefers class j % classes.
inline RealMatrix template_weights(const Prototypes& p, std::uint32_t neurons, std::uint64_t seed,
                                   double excite = 0.03, double inhibit = -0.012, double noise = 0.006) {
  Rng rng(seed);
  const auto cols = p.side * p.side;
  RealMatrix m{neurons, cols, {}};
  m.values.reserve(std::size_t{neurons} * cols);
  for (std::uint32_t j = 0; j < neurons; ++j) {
    const auto& proto = p.on[j % p.classes];
    for (std::uint32_t i = 0; i < cols; ++i) m.values.push_back((proto[i] ? excite : inhibit) + noise * rng.normal());
  }
  return m;
}

/// Hidden-to-hidden layer routing class-j neurons onto class-j neurons.
inline RealMatrix class_routing(std::uint32_t rows, std::uint32_t cols, std::uint32_t classes, std::uint64_t seed,
                                double excite = 0.2, double inhibit = -0.05, double noise = 0.01) {
  Rng rng(seed);
  RealMatrix m{rows, cols, {}};
  for (std::uint32_t j = 0; j < rows; ++j)
    for (std::uint32_t i = 0; i < cols; ++i)
      m.values.push_back((j % classes == i % classes ? excite : inhibit) + noise * rng.normal());
  return m;
}

/// Sparse heavy tail: a `fraction` of entries get an extra N(0, sigma^2).
/// A few large weights set the quantization scale, as in trained matrices.
inline void add_outliers(RealMatrix& m, double fraction, double sigma, std::uint64_t seed) {
  Rng rng(seed);
  for (auto& w : m.values)
    if (rng.uniform() < fraction) w += sigma * rng.normal();
}

/// IR readout: +10 from neurons of the matching class, -1 otherwise.
inline RealMatrix class_ir(std::uint32_t classes, std::uint32_t cols) {
  RealMatrix m{classes, cols, {}};
  for (std::uint32_t c = 0; c < classes; ++c)
    for (std::uint32_t i = 0; i < cols; ++i) m.values.push_back(i % classes == c ? 10.0 : -1.0);
  return m;
}

/// The dataset and 784-H-10 weights used as the golden set when no trained
/// weights are configured.
struct GoldenSet {
  IdxImageSet images;
  RealMatrix layer1;
  RealMatrix ir;
};

inline GoldenSet golden_set(std::size_t images = 1000, std::uint32_t hidden = 40) {
  const auto protos = make_prototypes(7);
  GoldenSet g;
  g.images = make_images(protos, images, 11, 0.25, 0.04);
  g.layer1 = template_weights(protos, hidden, 13, 0.012, -0.004, 0.012);
  add_outliers(g.layer1, 0.002, 0.04, 99);
  g.ir = class_ir(10, hidden);
  return g;
}

}  // namespace srcsnn::synthetic
