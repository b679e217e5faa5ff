#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "srcsnn/config.hpp"
#include "srcsnn/experiment.hpp"
#include "support.hpp"

using namespace srcsnn;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

std::vector<std::string> lines(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream is(s);
  for (std::string l; std::getline(is, l);) out.push_back(l);
  return out;
}

// Separators outside double quotes.
long csv_fields(const std::string& row) {
  long n = 1;
  bool quoted = false;
  for (char c : row) {
    if (c == '"') quoted = !quoted;
    else if (c == ',' && !quoted) ++n;
  }
  return n;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(SRCSNN_CLI) + " " + args + " > /dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

// Small synthetic network + dataset on disk.
fs::path write_fixture(const std::string& name, std::size_t images = 12, std::uint32_t hidden = 20) {
  const auto dir = test::temp_dir(name);
  const auto g = synthetic::golden_set(images, hidden);
  write_idx(g.images, (dir / "images.idx3").string(), (dir / "labels.idx1").string());
  save_float_weights(g.layer1, (dir / "l1.wmf").string());
  save_float_weights(g.ir, (dir / "ir.wmf").string());
  io::write_text((dir / "net.cfg").string(), "layers = " + std::to_string(hidden) +
                                                 "\nweights = l1.wmf\nir_weights = ir.wmf\n");
  return dir;
}

}  // namespace

TEST(KeyValue, ParseAndErrors) {
  const auto kv = KeyValueFile::parse("# c\n a = 1 \nlist = 3, 4 ,5\nname = x # trailing\n\n", "/base");
  EXPECT_EQ(kv.number_or<int>("a", 0), 1);
  EXPECT_EQ(kv.list_or<int>("list", {}), (std::vector<int>{3, 4, 5}));
  EXPECT_EQ(kv.get_or("name", ""), "x");
  EXPECT_EQ(kv.number_or<int>("missing", 7), 7);
  EXPECT_EQ(kv.path("w.wmf"), "/base/w.wmf");
  EXPECT_EQ(kv.path("/abs/w.wmf"), "/abs/w.wmf");
  EXPECT_THROW(kv.number_or<int>("name", 0), Error);
  EXPECT_THROW(kv.require_known({"a", "list"}), Error);
  EXPECT_THROW(KeyValueFile::parse("a = 1\na = 2\n"), Error);
  EXPECT_THROW(KeyValueFile::parse("no equals\n"), Error);
}

TEST(Format, LocaleIndependentNumbers) {
  EXPECT_EQ(format_number(0.5), "0.5");
  EXPECT_EQ(format_number(1.7424e-3), "0.0017424");
  EXPECT_EQ(format_fixed(96.314, 2), "96.31");
  EXPECT_EQ(hex64(255), "00000000000000ff");
}

TEST(Grid, CellCountIsProduct) {
  ExperimentSpec s;
  s.spt_lengths = {220, 110, 55};
  s.bit_widths = {9, 4};
  s.z_hyp_values = {880, 900, 920, 940};
  const auto cells = expand_grid(s);
  EXPECT_EQ(cells.size(), 24u);
  EXPECT_EQ(s.cell_count(), 24u);
  for (std::size_t i = 0; i < cells.size(); ++i) EXPECT_EQ(cells[i].index, i);
}

TEST(Grid, TraceLengthSplit) {
  const auto a = trace_params_for_length(220, 0.25);
  EXPECT_EQ(a.n_reset, 20u);
  EXPECT_EQ(a.n_active, 200u);
  const auto b = trace_params_for_length(44, 0.25);
  EXPECT_EQ(b.n_reset, 4u);
  EXPECT_EQ(b.n_active, 40u);
  const auto c = trace_params_for_length(55, 0.25);
  EXPECT_EQ(c.n_reset, 5u);
  EXPECT_THROW(trace_params_for_length(1, 0.25), Error);
}

TEST(Experiment, SingleCellCsv) {
  const auto dir = write_fixture("single");
  const auto setup = load_network_setup((dir / "net.cfg").string());
  const auto src = TraceSource::from_idx(parse_idx((dir / "images.idx3").string(), (dir / "labels.idx1").string()));
  ExperimentSpec spec;
  spec.spt_lengths = {44};
  spec.out_dir = (dir / "out").string();
  spec.workers = 1;
  const auto res = run_experiment(spec, setup, src);
  ASSERT_EQ(res.size(), 1u);
  EXPECT_TRUE(res[0].ok) << res[0].message;
  const auto csv = lines(slurp(dir / "out" / "results.csv"));
  ASSERT_EQ(csv.size(), 2u);
  EXPECT_EQ(csv[0], kResultsCsvHeader);
  EXPECT_TRUE(fs::exists(dir / "out" / "cells" / "cell_0000.json"));
  EXPECT_TRUE(fs::exists(dir / "out" / "results.json"));
  EXPECT_TRUE(fs::exists(dir / "out" / "summary.txt"));
  EXPECT_EQ(res[0].perf.total_cycles, 44u * 792u);
}

TEST(Experiment, DualModeAddsAgreement) {
  const auto dir = write_fixture("dual");
  const auto setup = load_network_setup((dir / "net.cfg").string());
  const auto src = TraceSource::from_idx(parse_idx((dir / "images.idx3").string(), (dir / "labels.idx1").string()));
  ExperimentSpec spec;
  spec.spt_lengths = {44};
  spec.bit_widths = {9, 2};
  spec.mode = RunMode::dual;
  spec.out_dir = (dir / "out").string();
  spec.workers = 2;
  const auto res = run_experiment(spec, setup, src);
  ASSERT_EQ(res.size(), 2u);
  for (const auto& r : res) {
    ASSERT_TRUE(r.ok) << r.message;
    ASSERT_TRUE(r.agreement.has_value());
    EXPECT_GE(*r.agreement, 0.0);
    EXPECT_LE(*r.agreement, 1.0);
    ASSERT_TRUE(r.float_stats.has_value());
  }
  const auto csv = lines(slurp(dir / "out" / "results.csv"));
  ASSERT_EQ(csv.size(), 3u);
  // agreement column is filled
  std::istringstream row(csv[1]);
  std::vector<std::string> cols;
  for (std::string c; std::getline(row, c, ',');) cols.push_back(c);
  ASSERT_GE(cols.size(), 18u);
  EXPECT_FALSE(cols[17].empty());
}

TEST(Experiment, DeterministicAcrossWorkerCounts) {
  const auto dir = write_fixture("det");
  const auto setup = load_network_setup((dir / "net.cfg").string());
  const auto src = TraceSource::from_idx(parse_idx((dir / "images.idx3").string(), (dir / "labels.idx1").string()));
  ExperimentSpec spec;
  spec.spt_lengths = {22, 44};
  spec.bit_widths = {9, 5};
  spec.out_dir = (dir / "a").string();
  spec.workers = 1;
  run_experiment(spec, setup, src);
  spec.out_dir = (dir / "b").string();
  spec.workers = 3;
  run_experiment(spec, setup, src);
  EXPECT_EQ(slurp(dir / "a" / "results.csv"), slurp(dir / "b" / "results.csv"));
}

TEST(Experiment, FailedCellIsReported) {
  const auto dir = write_fixture("fail");
  const auto setup = load_network_setup((dir / "net.cfg").string());
  const auto src = TraceSource::from_idx(parse_idx((dir / "images.idx3").string(), (dir / "labels.idx1").string()));
  ExperimentSpec spec;
  spec.spt_lengths = {44};
  spec.bit_widths = {9, 12};
  spec.out_dir = (dir / "out").string();
  const auto res = run_experiment(spec, setup, src);
  EXPECT_TRUE(res[0].ok);
  EXPECT_FALSE(res[1].ok);
  const auto csv = lines(slurp(dir / "out" / "results.csv"));
  ASSERT_EQ(csv.size(), 3u);
  EXPECT_NE(csv[2].find("failed"), std::string::npos);
  EXPECT_EQ(csv_fields(csv[2]), csv_fields(csv[0]));
}

TEST(Experiment, StoredTraceDirectory) {
  const auto dir = write_fixture("stored");
  ASSERT_EQ(run_cli("gen-traces --images " + (dir / "images.idx3").string() + " --labels " +
                    (dir / "labels.idx1").string() + " --out " + (dir / "traces").string() +
                    " --n-active 40 --n-reset 4 --limit 5"),
            0);
  const auto src = TraceSource::from_directory((dir / "traces").string());
  EXPECT_EQ(src.size(), 5u);
  const auto setup = load_network_setup((dir / "net.cfg").string());
  ExperimentSpec spec;
  spec.spt_lengths = {44, 220};
  spec.out_dir = (dir / "out").string();
  const auto res = run_experiment(spec, setup, src);
  EXPECT_TRUE(res[0].ok) << res[0].message;
  EXPECT_FALSE(res[1].ok);
}

TEST(Setup, ConfigErrors) {
  const auto dir = write_fixture("cfg");
  io::write_text((dir / "bad1.cfg").string(), "layers = 20, 20\nweights = l1.wmf\nir_weights = ir.wmf\n");
  EXPECT_THROW(load_network_setup((dir / "bad1.cfg").string()), Error);
  io::write_text((dir / "bad2.cfg").string(), "layers = 21\nweights = l1.wmf\nir_weights = ir.wmf\n");
  EXPECT_THROW(load_network_setup((dir / "bad2.cfg").string()), Error);
  io::write_text((dir / "bad3.cfg").string(), "layers = 20\nweights = l1.wmf\nir_weights = ir.wmf\ncolour = red\n");
  EXPECT_THROW(load_network_setup((dir / "bad3.cfg").string()), Error);
  io::write_text((dir / "ok.cfg").string(), "layers = 20\nweights = l1.wmf\nir_weights = ir.wmf\nz_hyp = 880\n");
  const auto s = load_network_setup((dir / "ok.cfg").string());
  EXPECT_EQ(s.config.int_params.z_hyp, 880);
  EXPECT_NE(s.fingerprint, load_network_setup((dir / "net.cfg").string()).fingerprint);
}

TEST(Cli, GenTracesDeterministic) {
  const auto dir = write_fixture("gen");
  const std::string base = "gen-traces --images " + (dir / "images.idx3").string() + " --labels " +
                           (dir / "labels.idx1").string() + " --limit 3 --coe --seed 5 --out ";
  ASSERT_EQ(run_cli(base + (dir / "a").string()), 0);
  ASSERT_EQ(run_cli(base + (dir / "b").string()), 0);
  for (const char* f : {"trace_00000.spt", "trace_00002.spt", "trace_00001.coe"})
    EXPECT_EQ(slurp(dir / "a" / f), slurp(dir / "b" / f)) << f;
  EXPECT_EQ(parse_spt((dir / "a" / "trace_00000.spt").string()).frame_count(), 220u);
}

TEST(Cli, RunExitCodes) {
  const auto dir = write_fixture("run");
  const std::string base = "run --network " + (dir / "net.cfg").string() + " --images " +
                           (dir / "images.idx3").string() + " --labels " + (dir / "labels.idx1").string() +
                           " --spt-lengths 22 --out ";
  EXPECT_EQ(run_cli(base + (dir / "ok").string() + " --bit-widths 9,4"), 0);
  EXPECT_EQ(lines(slurp(dir / "ok" / "results.csv")).size(), 3u);
  EXPECT_EQ(run_cli(base + (dir / "bad").string() + " --bit-widths 9,11"), 2);
  EXPECT_EQ(run_cli("run --network " + (dir / "missing.cfg").string() + " --traces-dir " + dir.string()), 1);
}

TEST(Cli, RunFromSpecFile) {
  const auto dir = write_fixture("spec");
  io::write_text((dir / "exp.cfg").string(),
                 "network = net.cfg\nimages = images.idx3\nlabels = labels.idx1\nspt_lengths = 22\n"
                 "bit_widths = 9\nz_hyp_values = 880, 900\nmode = dual\nout_dir = res\n");
  EXPECT_EQ(run_cli("run --spec " + (dir / "exp.cfg").string()), 0);
  const auto csv = lines(slurp(dir / "res" / "results.csv"));
  ASSERT_EQ(csv.size(), 3u);
  EXPECT_NE(csv[1].find(",dual,"), std::string::npos);
}

TEST(Cli, FreqSweep) {
  const auto dir = test::temp_dir("freq");
  const auto out = dir / "f.csv";
  ASSERT_EQ(run_cli("freq-sweep --z-hyp 880,980 --out " + out.string()), 0);
  const auto csv = lines(slurp(out));
  ASSERT_EQ(csv.size(), 3u);
  EXPECT_EQ(csv[0], "z_hyp,input_current,steps,spikes,rate");
  ASSERT_EQ(run_cli("freq-sweep --z-hyp 900 --current=-1000 --out " + out.string()), 0);
  const auto silent = lines(slurp(out));
  ASSERT_EQ(silent.size(), 2u);
  EXPECT_EQ(silent[1], "900,-1000,1000,0,0");
}

TEST(Cli, ExportWidths) {
  const auto dir = write_fixture("export");
  const std::string base = "export --weights " + (dir / "l1.wmf").string() + " --ir " + (dir / "ir.wmf").string();
  ASSERT_EQ(run_cli(base + " --bit-widths 9,4 --out " + (dir / "a").string()), 0);
  ASSERT_EQ(run_cli(base + " --bit-widths 9,4 --out " + (dir / "b").string()), 0);
  std::size_t pkgs = 0;
  for (const auto& e : fs::directory_iterator(dir / "a"))
    if (e.path().filename().string().starts_with("WeightMatrix01_b")) pkgs += e.path().extension() == ".vhd";
  EXPECT_EQ(pkgs, 2u);
  for (const char* f : {"WeightMatrix01_b9_pkg.vhd", "WeightMatrix01_b4_pkg.vhd", "WeightMatrix01_b4.coe",
                        "WeightMatrix02_pkg.vhd"})
    EXPECT_EQ(slurp(dir / "a" / f), slurp(dir / "b" / f)) << f;
  EXPECT_NE(run_cli(base + " --bit-widths 10 --out " + (dir / "c").string()), 0);
}

TEST(Freq, Csv) {
  const auto csv = frequency_csv(frequency_sweep({900}, 500, 10));
  EXPECT_EQ(lines(csv).size(), 2u);
  EXPECT_THROW(frequency_sweep({900}, 500, 0), Error);
}
