#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <cstdlib>
#include <string>
#include <vector>

#include "doctest.h"
#include "forenlab/data.hpp"
#include "forenlab/metrics.hpp"
#include "forenlab/models.hpp"
#include "testutil.hpp"

// FORENLAB_BIN is injected by the build: the path of the CLI executable.
// These tests drive real subprocesses and inspect their files and exit codes.

using namespace forenlab;

namespace {

struct RunResult {
  int code = -1;
  std::string out, err;
};

RunResult run_cli(testutil::TempDir& dir, const std::string& args,
                  const std::string& env = "") {
  static int counter = 0;
  std::string out_path = dir.file("stdout_" + std::to_string(counter));
  std::string err_path = dir.file("stderr_" + std::to_string(counter));
  ++counter;
  std::string cmd = (env.empty() ? "" : env + " ") + std::string(FORENLAB_BIN) + " " + args +
                    " >" + out_path + " 2>" + err_path;
  int status = std::system(cmd.c_str());
  RunResult r;
  r.code = (status >= 0 && WIFEXITED(status)) ? WEXITSTATUS(status) : -1;
  r.out = testutil::slurp(out_path);
  r.err = testutil::slurp(err_path);
  return r;
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> lines;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t nl = text.find('\n', start);
    if (nl == std::string::npos) nl = text.size();
    lines.push_back(text.substr(start, nl - start));
    start = nl + 1;
  }
  return lines;
}

std::vector<std::string> cells_of(const std::string& line) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  while (start <= line.size()) {
    std::size_t comma = line.find(',', start);
    if (comma == std::string::npos) {
      cells.push_back(line.substr(start));
      break;
    }
    cells.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  return cells;
}

// small 16x16 corpus shared by the training-path tests
std::string gen_corpus(testutil::TempDir& dir, const std::string& sub, int seed,
                       const std::string& extra = "") {
  std::string out_dir = dir.file(sub);
  RunResult r = run_cli(dir, "gen --out-dir " + out_dir + " --seed " + std::to_string(seed) +
                                 " --set n_fields=4 --set field_height=16 --set field_width=16" +
                                 (extra.empty() ? "" : " " + extra));
  REQUIRE(r.code == 0);
  return out_dir + "/manifest.txt";
}

const char* kTinyModel =
    "--set patch_size=4 --set embed_dim=8 --set heads=2 --set layers=1 "
    "--set siren_hidden_layers=2 --set scale_factor=2 --set lr=1e-3";

}  // namespace

TEST_CASE("help exits cleanly and lists the subcommands") {
  testutil::TempDir dir;
  RunResult r = run_cli(dir, "--help");
  CHECK(r.code == 0);
  for (const char* sub : {"gen", "train", "eval", "sweep", "infer", "spectrum"})
    CHECK(r.out.find(sub) != std::string::npos);
}

TEST_CASE("gen writes a loadable corpus with a manifest") {
  testutil::TempDir dir;
  std::string manifest = gen_corpus(dir, "a", 5);
  data::Manifest m = data::read_manifest(manifest);
  CHECK(m.seed == 5);
  REQUIRE(m.names.size() == 4);
  CHECK(m.names[0] == "field_0000.esmg");
  for (const std::string& path : m.paths) {
    data::GridField f = data::load_grid(path);
    CHECK(f.height == 16);
    CHECK(f.width == 16);
    for (double v : f.values) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }
  }
}

TEST_CASE("gen is deterministic in the seed") {
  testutil::TempDir dir;
  gen_corpus(dir, "a", 9);
  gen_corpus(dir, "b", 9);
  gen_corpus(dir, "c", 10);
  std::string fa = testutil::slurp(dir.file("a/field_0001.esmg"));
  std::string fb = testutil::slurp(dir.file("b/field_0001.esmg"));
  std::string fc = testutil::slurp(dir.file("c/field_0001.esmg"));
  CHECK(fa == fb);
  CHECK(fa != fc);
}

TEST_CASE("gen --set with_lr emits matching low-resolution companions") {
  testutil::TempDir dir;
  gen_corpus(dir, "a", 5, "--set with_lr=true --set scale_factor=2");
  data::GridField hr = data::load_grid(dir.file("a/field_0002.esmg"));
  data::GridField lr = data::load_grid(dir.file("a/field_0002.lr.esmg"));
  CHECK(lr.height == 8);
  CHECK(lr.width == 8);
  CHECK(lr.values == data::downsample(hr, 2).values);
}

TEST_CASE("train writes a report and a loadable checkpoint, bit-identical across runs") {
  testutil::TempDir dir;
  std::string manifest = gen_corpus(dir, "a", 3);
  std::string base = "train --manifest " + manifest + " --arch vifor --epochs 3 --seed 5 " +
                     kTinyModel;
  RunResult r1 = run_cli(dir, base + " --checkpoint " + dir.file("m1.vfr1") + " --report " +
                                  dir.file("r1.csv"));
  REQUIRE(r1.code == 0);
  CHECK(r1.out.find("val psnr") != std::string::npos);

  std::string report = testutil::slurp(dir.file("r1.csv"));
  std::vector<std::string> lines = lines_of(report);
  REQUIRE(lines.size() == 4);
  CHECK(lines[0] == "epoch,loss,mse_term,freq_term,val_mse,val_psnr,val_ssim,lr,seconds");
  CHECK(cells_of(lines[1])[0] == "1");
  CHECK(cells_of(lines[3])[0] == "3");
  for (std::size_t i = 1; i < lines.size(); ++i)
    CHECK(cells_of(lines[i]).back() == "0.000");  // timing off by default

  models::Model m = models::load_checkpoint(dir.file("m1.vfr1"));
  CHECK(m.config().arch == models::Arch::vifor);
  CHECK(m.config().lr_height == 8);
  CHECK(m.config().scale_factor == 2);

  RunResult r2 = run_cli(dir, base + " --checkpoint " + dir.file("m2.vfr1") + " --report " +
                                  dir.file("r2.csv"));
  REQUIRE(r2.code == 0);
  CHECK(testutil::slurp(dir.file("m1.vfr1")) == testutil::slurp(dir.file("m2.vfr1")));
  CHECK(report == testutil::slurp(dir.file("r2.csv")));
}

TEST_CASE("zero-epoch training checkpoints the initialization") {
  testutil::TempDir dir;
  std::string manifest = gen_corpus(dir, "a", 3);
  RunResult r = run_cli(dir, "train --manifest " + manifest +
                                 " --arch visir --epochs 0 --seed 5 " + std::string(kTinyModel) +
                                 " --checkpoint " + dir.file("init.vfr1") + " --report " +
                                 dir.file("r.csv"));
  REQUIRE(r.code == 0);
  CHECK(testutil::slurp(dir.file("r.csv")) ==
        "epoch,loss,mse_term,freq_term,val_mse,val_psnr,val_ssim,lr,seconds\n");
  models::Model saved = models::load_checkpoint(dir.file("init.vfr1"));
  models::Model fresh(saved.config(), 5);
  CHECK(models::checkpoint_bytes(saved) == models::checkpoint_bytes(fresh));
}

TEST_CASE("eval reports per-field metrics with an exact mean row") {
  testutil::TempDir dir;
  std::string manifest = gen_corpus(dir, "a", 3);
  std::string ck = dir.file("m.vfr1");
  REQUIRE(run_cli(dir, "train --manifest " + manifest + " --arch vifor --epochs 2 --seed 5 " +
                           std::string(kTinyModel) + " --checkpoint " + ck + " --report " +
                           dir.file("tr.csv"))
              .code == 0);
  RunResult r = run_cli(dir, "eval --manifest " + manifest + " --checkpoint " + ck +
                                 " --report " + dir.file("ev.csv"));
  REQUIRE(r.code == 0);
  std::vector<std::string> lines = lines_of(testutil::slurp(dir.file("ev.csv")));
  REQUIRE(lines.size() == 6);  // header, 4 fields, mean
  CHECK(lines[0] == "file,mse_pct,psnr_db,ssim");
  CHECK(cells_of(lines[1])[0] == "field_0000.esmg");
  std::vector<std::string> mean_cells = cells_of(lines[5]);
  CHECK(mean_cells[0] == "mean");
  for (int col : {1, 2, 3}) {
    double acc = 0.0;
    for (int row = 1; row <= 4; ++row) acc += std::stod(cells_of(lines[row])[col]);
    CHECK(std::abs(std::stod(mean_cells[col]) - acc / 4.0) < 1e-12);
  }
}

TEST_CASE("eval rejects fields that do not match the checkpoint geometry") {
  testutil::TempDir dir;
  std::string manifest16 = gen_corpus(dir, "a", 3);
  std::string ck = dir.file("m.vfr1");
  REQUIRE(run_cli(dir, "train --manifest " + manifest16 + " --arch vifor --epochs 1 --seed 5 " +
                           std::string(kTinyModel) + " --checkpoint " + ck + " --report " +
                           dir.file("tr.csv"))
              .code == 0);
  std::string wrong = gen_corpus(dir, "b", 3, "--set field_height=32 --set field_width=32");
  // fix up the size: regenerate 32x32 corpus and evaluate with the 16x16 model
  RunResult r = run_cli(dir, "eval --manifest " + dir.file("b/manifest.txt") + " --checkpoint " +
                                 ck + " --report " + dir.file("ev.csv"));
  CHECK(r.code == 3);
  CHECK(r.err.find("expects") != std::string::npos);
  (void)wrong;
}

TEST_CASE("sweep emits one row per value and survives failing cells") {
  testutil::TempDir dir;
  std::string manifest = gen_corpus(dir, "a", 3);
  RunResult r = run_cli(dir, "sweep --manifest " + manifest +
                                 " --arch vifor --epochs 1 --seed 5 " + std::string(kTinyModel) +
                                 " --param omega0 --values 10,-5,30 --report " +
                                 dir.file("sw.csv"));
  REQUIRE(r.code == 0);
  CHECK(r.err.find("failed") != std::string::npos);  // the bad cell is reported
  std::vector<std::string> lines = lines_of(testutil::slurp(dir.file("sw.csv")));
  REQUIRE(lines.size() == 4);
  CHECK(lines[0] == "omega0,psnr");
  CHECK(cells_of(lines[1])[0] == "10");
  CHECK(cells_of(lines[2]) == std::vector<std::string>{"-5", "nan"});
  CHECK(cells_of(lines[3])[0] == "30");
  CHECK(std::isfinite(std::stod(cells_of(lines[1])[1])));
  CHECK(std::isfinite(std::stod(cells_of(lines[3])[1])));
}

TEST_CASE("the cutoff sweep uses the fc column label") {
  testutil::TempDir dir;
  std::string manifest = gen_corpus(dir, "a", 3);
  RunResult r = run_cli(dir, "sweep --manifest " + manifest +
                                 " --arch vifor --epochs 1 --seed 5 " + std::string(kTinyModel) +
                                 " --param f_c --values 0.3 --report " + dir.file("sw.csv"));
  REQUIRE(r.code == 0);
  std::vector<std::string> lines = lines_of(testutil::slurp(dir.file("sw.csv")));
  REQUIRE(lines.size() == 2);
  CHECK(lines[0] == "fc,psnr");
}

TEST_CASE("spectrum of a grid against itself has zero band error") {
  testutil::TempDir dir;
  gen_corpus(dir, "a", 5, "--set field_height=32 --set field_width=32");
  std::string field = dir.file("a/field_0000.esmg");
  RunResult r = run_cli(dir, "spectrum --target " + field + " --report " + dir.file("sp.csv"));
  REQUIRE(r.code == 0);
  std::vector<std::string> lines = lines_of(testutil::slurp(dir.file("sp.csv")));
  REQUIRE(lines.size() == 9);  // header + 8 default bands
  CHECK(lines[0] == "band,edge_lo,edge_hi,target_energy,recon_energy,sq_error");
  CHECK(cells_of(lines[1])[1] == "0");
  CHECK(cells_of(lines[8])[2] == "1");
  double total = 0.0;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    std::vector<std::string> cells = cells_of(lines[i]);
    CHECK(cells[3] == cells[4]);
    CHECK(std::stod(cells[5]) == 0.0);
    total += std::stod(cells[3]);
  }
  // the band energies partition the total signal energy
  data::GridField f = data::load_grid(field);
  double energy = 0.0;
  for (double v : f.values) energy += v * v;
  CHECK(std::abs(total - energy) / energy < 1e-9);

  RunResult r4 = run_cli(dir, "spectrum --target " + field + " --bands 4 --report " +
                                  dir.file("sp4.csv"));
  REQUIRE(r4.code == 0);
  CHECK(lines_of(testutil::slurp(dir.file("sp4.csv"))).size() == 5);
}

TEST_CASE("infer upscales a matching input and reproduces the logged validation metrics") {
  testutil::TempDir dir;
  std::string manifest = gen_corpus(dir, "a", 3);
  std::string ck = dir.file("m.vfr1");
  REQUIRE(run_cli(dir, "train --manifest " + manifest + " --arch vifor --epochs 3 --seed 5 " +
                           std::string(kTinyModel) + " --checkpoint " + ck + " --report " +
                           dir.file("tr.csv"))
              .code == 0);

  // rebuild the split the trainer used to locate the single validation field
  data::Manifest m = data::read_manifest(manifest);
  std::vector<data::GridField> fields;
  for (const std::string& p : m.paths) fields.push_back(data::load_grid(p));
  data::DatasetSpec spec;
  spec.seed = 5;
  spec.scale = 2;
  data::Dataset ds = data::assemble(fields, m.names, spec);
  REQUIRE(ds.val.size() == 1);
  data::save_grid(ds.val[0].lr, dir.file("val_lr.esmg"));

  std::string sr = dir.file("sr.esmg");
  RunResult r = run_cli(dir, "infer --checkpoint " + ck + " --input " + dir.file("val_lr.esmg") +
                                 " --output " + sr + " --pgm " + dir.file("sr.pgm"));
  REQUIRE(r.code == 0);
  data::GridField out = data::load_grid(sr);
  CHECK(out.height == 16);
  CHECK(out.width == 16);
  CHECK(out.tag == ds.val[0].lr.tag);

  metrics::MetricTriple got =
      metrics::evaluate(out.values, ds.val[0].hr.values, out.height, out.width);
  std::vector<std::string> lines = lines_of(testutil::slurp(dir.file("tr.csv")));
  std::vector<std::string> last = cells_of(lines.back());
  CHECK(std::abs(got.mse - std::stod(last[4])) < 1e-9);
  CHECK(std::abs(got.psnr - std::stod(last[5])) < 1e-9);
  CHECK(std::abs(got.ssim - std::stod(last[6])) < 1e-9);

  std::string pgm = testutil::slurp(dir.file("sr.pgm"));
  CHECK(pgm.substr(0, 3) == "P5\n");
  CHECK(pgm.size() > 2 * 16 * 16);

  // a second run writes the same bytes
  RunResult r2 = run_cli(dir, "infer --checkpoint " + ck + " --input " +
                                  dir.file("val_lr.esmg") + " --output " + dir.file("sr2.esmg"));
  REQUIRE(r2.code == 0);
  CHECK(testutil::slurp(sr) == testutil::slurp(dir.file("sr2.esmg")));
}

TEST_CASE("infer rejects inputs whose size disagrees with the checkpoint") {
  testutil::TempDir dir;
  std::string manifest = gen_corpus(dir, "a", 3);
  std::string ck = dir.file("m.vfr1");
  REQUIRE(run_cli(dir, "train --manifest " + manifest + " --arch vifor --epochs 1 --seed 5 " +
                           std::string(kTinyModel) + " --checkpoint " + ck + " --report " +
                           dir.file("tr.csv"))
              .code == 0);
  // the HR field is 16x16 but the checkpoint wants 8x8 inputs
  RunResult r = run_cli(dir, "infer --checkpoint " + ck + " --input " +
                                 dir.file("a/field_0000.esmg") + " --output " +
                                 dir.file("sr.esmg"));
  CHECK(r.code == 3);
  CHECK(r.err.find("expects") != std::string::npos);
}

TEST_CASE("configuration errors exit with code 2, data errors with 3") {
  testutil::TempDir dir;
  CHECK(run_cli(dir, "gen --out-dir " + dir.file("x") + " --set bogus=1").code == 2);
  CHECK(run_cli(dir, "gen --out-dir " + dir.file("x") + " --set no_equals_sign").code == 2);
  CHECK(run_cli(dir, "gen --out-dir " + dir.file("x") + " --set epochs=abc").code == 2);
  CHECK(run_cli(dir, "frobnicate").code == 2);      // unknown subcommand
  CHECK(run_cli(dir, "train --epochs 1").code == 2);  // no manifest given
  CHECK(run_cli(dir, "eval --manifest " + dir.file("nope.txt") + " --checkpoint x").code == 3);
  CHECK(run_cli(dir, "infer --checkpoint " + dir.file("nope.vfr1") + " --input x --output y")
            .code == 3);
  RunResult r = run_cli(dir, "gen --out-dir " + dir.file("x") + " --set bogus=1");
  CHECK(r.err.find("bogus") != std::string::npos);
}

TEST_CASE("the seed environment variable is a default, not an override") {
  testutil::TempDir dir;
  RunResult r = run_cli(dir,
                        "gen --out-dir " + dir.file("env") +
                            " --set n_fields=1 --set field_height=16 --set field_width=16",
                        "FORENLAB_SEED=21");
  REQUIRE(r.code == 0);
  CHECK(data::read_manifest(dir.file("env/manifest.txt")).seed == 21);

  RunResult r2 = run_cli(dir,
                         "gen --out-dir " + dir.file("env2") + " --seed 4" +
                             " --set n_fields=1 --set field_height=16 --set field_width=16",
                         "FORENLAB_SEED=21");
  REQUIRE(r2.code == 0);
  CHECK(data::read_manifest(dir.file("env2/manifest.txt")).seed == 4);
}

TEST_CASE("flags override --set which overrides the config file") {
  testutil::TempDir dir;
  std::string cfg_path = dir.file("run.cfg");
  std::ofstream cfg(cfg_path);
  cfg << "# corpus settings\n"
      << "n_fields = 3\n"
      << "field_height = 16\n"
      << "field_width = 16\n"
      << "seed = 11\n";
  cfg.close();

  RunResult r = run_cli(dir, "gen --config " + cfg_path + " --out-dir " + dir.file("a"));
  REQUIRE(r.code == 0);
  data::Manifest ma = data::read_manifest(dir.file("a/manifest.txt"));
  CHECK(ma.seed == 11);
  CHECK(ma.names.size() == 3);

  RunResult r2 = run_cli(dir, "gen --config " + cfg_path + " --set n_fields=2 --set seed=12" +
                                  " --seed 13 --out-dir " + dir.file("b"));
  REQUIRE(r2.code == 0);
  data::Manifest mb = data::read_manifest(dir.file("b/manifest.txt"));
  CHECK(mb.names.size() == 2);  // --set beats the file
  CHECK(mb.seed == 13);         // the flag beats --set

  CHECK(run_cli(dir, "gen --config " + dir.file("missing.cfg")).code == 2);
}
