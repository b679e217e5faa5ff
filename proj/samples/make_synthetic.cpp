// Writes a small synthetic dataset and an untrained template network so the
// CLI can be exercised end to end without MNIST or trained weights.
//
//   make_synthetic <out_dir> [images=1000] [hidden=40]

#include <charconv>
#include <filesystem>
#include <iostream>
#include <string>

#include "srcsnn/io.hpp"
#include "srcsnn/synthetic.hpp"
#include "srcsnn/trace.hpp"
#include "srcsnn/weights.hpp"

namespace {

unsigned arg_or(int argc, char** argv, int i, unsigned fallback) {
  if (argc <= i) return fallback;
  unsigned v = fallback;
  std::string_view s(argv[i]);
  std::from_chars(s.data(), s.data() + s.size(), v);
  return v;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::cerr << "usage: make_synthetic <out_dir> [images] [hidden]\n";
    return 1;
  }
  namespace fs = std::filesystem;
  using namespace srcsnn;
  const fs::path out(argv[1]);
  const auto count = arg_or(argc, argv, 2, 1000);
  const auto hidden = arg_or(argc, argv, 3, 40);
  try {
    fs::create_directories(out);
    const auto g = synthetic::golden_set(count, hidden);
    write_idx(g.images, (out / "images.idx3").string(), (out / "labels.idx1").string());
    save_float_weights(g.layer1, (out / "layer1.wmf").string());
    save_float_weights(g.ir, (out / "ir.wmf").string());

    io::write_text((out / "network.cfg").string(),
                   "# untrained template network for the synthetic dataset\n"
                   "input_width = 784\n"
                   "layers = " + std::to_string(hidden) + "\n"
                   "weights = layer1.wmf\n"
                   "ir_weights = ir.wmf\n"
                   "z_hyp = 900\n");
    io::write_text((out / "experiment.cfg").string(),
                   "network = network.cfg\n"
                   "images = images.idx3\n"
                   "labels = labels.idx1\n"
                   "spt_lengths = 44, 110, 220\n"
                   "bit_widths = 9, 6, 4, 3, 2\n"
                   "z_hyp_values = 900\n"
                   "mode = dual\n"
                   "out_dir = results\n");
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  std::cout << "wrote " << count << " images and a 784-" << hidden << "-10 network to " << out.string() << '\n';
  return 0;
}
