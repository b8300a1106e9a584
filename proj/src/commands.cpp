#include "forenlab/commands.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "forenlab/metrics.hpp"
#include "forenlab/spectral.hpp"

namespace forenlab::cli {

namespace {

namespace fs = std::filesystem;

std::string fmt_g(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

std::string field_name(int index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "field_%04d.esmg", index);
  return buf;
}

void write_text(const std::string& path, const std::string& text, const char* what) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError(std::string(what) + ": cannot open " + path + " for writing");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw DataError(std::string(what) + ": short write to " + path);
}

struct LoadedFields {
  std::vector<data::GridField> fields;
  std::vector<std::string> names;
  std::uint64_t gen_seed = 0;
};

LoadedFields load_fields(const RunConfig& cfg, const char* cmd) {
  if (cfg.manifest.empty())
    throw ConfigError(std::string(cmd) + ": a dataset manifest is required (set manifest=...)");
  data::Manifest m = data::read_manifest(cfg.manifest);
  LoadedFields out;
  out.gen_seed = m.seed;
  out.names = m.names;
  out.fields.reserve(m.paths.size());
  for (std::size_t i = 0; i < m.paths.size(); ++i) {
    data::GridField f = data::load_grid(m.paths[i]);
    if (!out.fields.empty() &&
        (f.height != out.fields[0].height || f.width != out.fields[0].width))
      throw DataError(std::string(cmd) + ": field '" + m.names[i] + "' is " +
                      std::to_string(f.height) + "x" + std::to_string(f.width) +
                      " but earlier fields are " + std::to_string(out.fields[0].height) + "x" +
                      std::to_string(out.fields[0].width));
    out.fields.push_back(std::move(f));
  }
  return out;
}

data::DatasetSpec dataset_spec(const RunConfig& cfg) {
  data::DatasetSpec spec;
  spec.mode = cfg.mode;
  spec.train_frac = cfg.train_frac;
  spec.seed = cfg.seed;
  spec.scale = cfg.model.scale_factor;
  spec.bilinear = cfg.bilinear();
  return spec;
}

// LR dims follow from the data and the scale factor; the config's lr_height
// and lr_width only stand on their own when no dataset is in play
models::ModelConfig derive_model_config(const RunConfig& cfg, const data::GridField& sample) {
  models::ModelConfig mc = cfg.model;
  std::size_t item_h = sample.height, item_w = sample.width;
  if (cfg.mode == data::DatasetMode::sub_image) {
    if (item_h % 2 != 0 || item_w % 4 != 0)
      throw DataError("sub_image mode: fields of " + std::to_string(item_h) + "x" +
                      std::to_string(item_w) + " do not split into a 2x4 tiling");
    item_h /= 2;
    item_w /= 4;
  }
  auto s = static_cast<std::size_t>(mc.scale_factor);
  if (item_h % s != 0 || item_w % s != 0)
    throw DataError("items of " + std::to_string(item_h) + "x" + std::to_string(item_w) +
                    " are not divisible by scale_factor " + std::to_string(mc.scale_factor));
  mc.lr_height = static_cast<int>(item_h / s);
  mc.lr_width = static_cast<int>(item_w / s);
  return mc;
}

// round-trip precision so the mean row stays an exact arithmetic mean of the
// per-file rows even after the values pass through the CSV text
std::string fmt_exact(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string metrics_csv(const std::vector<std::pair<std::string, metrics::MetricTriple>>& rows) {
  std::string csv = "file,mse_pct,psnr_db,ssim\n";
  metrics::MetricTriple mean;
  for (const auto& [name, t] : rows) {
    csv += name + "," + fmt_exact(100.0 * t.mse) + "," + fmt_exact(t.psnr) + "," +
           fmt_exact(t.ssim) + "\n";
    mean.mse += t.mse;
    mean.psnr += t.psnr;
    mean.ssim += t.ssim;
  }
  auto n = static_cast<double>(rows.size());
  csv += "mean," + fmt_exact(100.0 * mean.mse / n) + "," + fmt_exact(mean.psnr / n) + "," +
         fmt_exact(mean.ssim / n) + "\n";
  return csv;
}

std::vector<double> parse_values(const std::string& list) {
  std::vector<double> values;
  std::size_t start = 0;
  while (start <= list.size()) {
    std::size_t comma = list.find(',', start);
    std::string item = list.substr(start, comma == std::string::npos ? comma : comma - start);
    if (item.empty()) throw ConfigError("sweep_values: empty entry in '" + list + "'");
    try {
      std::size_t used = 0;
      values.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ConfigError("sweep_values: '" + item + "' is not a number");
    }
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  if (values.empty()) throw ConfigError("sweep_values: no values given");
  return values;
}

}  // namespace

int cmd_gen(const RunConfig& cfg) {
  if (cfg.n_fields < 1) throw ConfigError("gen: n_fields must be positive");
  data::SynthOptions opts = cfg.synth_options();
  fs::create_directories(cfg.out_dir);
  Rng field_seeds = Rng(cfg.seed).fork(0xF1E1DULL);
  std::vector<std::string> names;
  for (int i = 0; i < cfg.n_fields; ++i) {
    std::uint64_t fseed = field_seeds.next_u64();
    data::GridField f = data::synth_field(opts, fseed);
    std::string name = field_name(i);
    data::save_grid(f, (fs::path(cfg.out_dir) / name).string());
    if (cfg.with_lr) {
      data::GridField lr = cfg.bilinear() ? data::downsample_bilinear(f, cfg.model.scale_factor)
                                          : data::downsample(f, cfg.model.scale_factor);
      std::string lr_name = name.substr(0, name.size() - 5) + ".lr.esmg";
      data::save_grid(lr, (fs::path(cfg.out_dir) / lr_name).string());
    }
    names.push_back(name);
  }
  data::write_manifest((fs::path(cfg.out_dir) / "manifest.txt").string(), cfg.seed, names);
  std::cout << "gen: wrote " << cfg.n_fields << " fields to " << cfg.out_dir << "\n";
  return 0;
}

int cmd_train(const RunConfig& cfg) {
  LoadedFields loaded = load_fields(cfg, "train");
  models::ModelConfig mc = derive_model_config(cfg, loaded.fields[0]);
  data::Dataset ds = data::assemble(loaded.fields, loaded.names, dataset_spec(cfg));
  if (ds.train.empty()) throw ConfigError("train: train_frac leaves no training items");
  models::Model model(mc, cfg.seed);
  if (cfg.epochs == 0) {
    // no training requested: checkpoint equals the initialization
    training::write_report_csv(training::TrainReport{}, cfg.report);
    models::save_checkpoint(model, cfg.checkpoint);
    std::cout << "train: 0 epochs, wrote initial checkpoint to " << cfg.checkpoint << "\n";
    return 0;
  }
  training::TrainReport rep = training::train(model, ds, cfg.train_options());
  training::write_report_csv(rep, cfg.report);
  if (rep.nan_abort) throw NumericError(rep.abort_reason);
  models::save_checkpoint(model, cfg.checkpoint);
  const training::EpochRecord& last = rep.epochs.back();
  std::cout << "train: " << cfg.epochs << " epochs of " << models::arch_name(mc.arch)
            << ", final loss " << fmt_g(last.loss) << ", val psnr " << fmt_g(last.val_psnr)
            << " dB, checkpoint " << cfg.checkpoint << "\n";
  return 0;
}

int cmd_eval(const RunConfig& cfg) {
  LoadedFields loaded = load_fields(cfg, "eval");
  models::Model model = models::load_checkpoint(cfg.checkpoint);
  const models::ModelConfig& mc = model.config();
  auto want_h = static_cast<std::size_t>(mc.lr_height * mc.scale_factor);
  auto want_w = static_cast<std::size_t>(mc.lr_width * mc.scale_factor);
  NoGradGuard guard;
  std::vector<std::pair<std::string, metrics::MetricTriple>> rows;
  for (std::size_t i = 0; i < loaded.fields.size(); ++i) {
    const data::GridField& f = loaded.fields[i];
    if (f.height != want_h || f.width != want_w)
      throw DataError("eval: field '" + loaded.names[i] + "' is " + std::to_string(f.height) +
                      "x" + std::to_string(f.width) + " but the checkpoint expects " +
                      std::to_string(want_h) + "x" + std::to_string(want_w));
    data::GridField lr = cfg.bilinear() ? data::downsample_bilinear(f, mc.scale_factor)
                                        : data::downsample(f, mc.scale_factor);
    Tensor pred = model.forward(Tensor::from_data({lr.height, lr.width}, lr.values));
    rows.emplace_back(loaded.names[i],
                      metrics::evaluate(pred.data(), f.values, f.height, f.width));
  }
  write_text(cfg.report, metrics_csv(rows), "eval");
  std::cout << "eval: " << rows.size() << " fields, metrics in " << cfg.report << "\n";
  return 0;
}

int cmd_sweep(const RunConfig& cfg) {
  LoadedFields loaded = load_fields(cfg, "sweep");
  models::ModelConfig mc = derive_model_config(cfg, loaded.fields[0]);
  data::Dataset ds = data::assemble(loaded.fields, loaded.names, dataset_spec(cfg));
  training::SweepParam param = training::sweep_param_from_name(cfg.sweep_param);
  std::vector<double> values = parse_values(cfg.sweep_values);
  std::vector<training::SweepRow> rows =
      training::sweep(param, values, mc, ds, cfg.train_options(), cfg.workers);
  std::string csv = std::string(training::sweep_param_column(param)) + ",psnr\n";
  for (const training::SweepRow& row : rows) {
    csv += fmt_g(row.value) + "," + (row.ok ? fmt_g(row.psnr) : std::string("nan")) + "\n";
    if (!row.ok)
      std::cerr << "sweep: cell " << fmt_g(row.value) << " failed: " << row.error << "\n";
  }
  write_text(cfg.report, csv, "sweep");
  std::cout << "sweep: " << rows.size() << " cells over " << cfg.sweep_param << ", table in "
            << cfg.report << "\n";
  return 0;
}

int cmd_infer(const RunConfig& cfg) {
  if (cfg.input.empty()) throw ConfigError("infer: an LR input grid is required (set input=...)");
  models::Model model = models::load_checkpoint(cfg.checkpoint);
  const models::ModelConfig& mc = model.config();
  data::GridField lr = data::load_grid(cfg.input);
  if (lr.height != static_cast<std::size_t>(mc.lr_height) ||
      lr.width != static_cast<std::size_t>(mc.lr_width))
    throw DataError("infer: input " + cfg.input + " is " + std::to_string(lr.height) + "x" +
                    std::to_string(lr.width) + " but the checkpoint expects " +
                    std::to_string(mc.lr_height) + "x" + std::to_string(mc.lr_width));
  NoGradGuard guard;
  Tensor pred = model.forward(Tensor::from_data({lr.height, lr.width}, lr.values));
  data::GridField sr;
  sr.height = pred.shape()[0];
  sr.width = pred.shape()[1];
  sr.values = pred.data();
  sr.tag = lr.tag;
  sr.norm_min = lr.norm_min;
  sr.norm_max = lr.norm_max;
  data::save_grid(sr, cfg.output);
  if (!cfg.pgm.empty()) data::save_pgm16(sr, cfg.pgm);
  std::cout << "infer: wrote " << sr.height << "x" << sr.width << " grid to " << cfg.output
            << "\n";
  return 0;
}

int cmd_spectrum(const RunConfig& cfg) {
  if (cfg.target.empty())
    throw ConfigError("spectrum: a target grid is required (set target=...)");
  data::GridField target = data::load_grid(cfg.target);
  data::GridField recon;
  if (!cfg.recon.empty()) {
    recon = data::load_grid(cfg.recon);
  } else if (!cfg.input.empty()) {
    models::Model model = models::load_checkpoint(cfg.checkpoint);
    data::GridField lr = data::load_grid(cfg.input);
    NoGradGuard guard;
    Tensor pred = model.forward(Tensor::from_data({lr.height, lr.width}, lr.values));
    recon.height = pred.shape()[0];
    recon.width = pred.shape()[1];
    recon.values = pred.data();
  } else {
    recon = target;  // self-spectrum: error column is all zeros
  }
  if (recon.height != target.height || recon.width != target.width)
    throw DataError("spectrum: reconstruction is " + std::to_string(recon.height) + "x" +
                    std::to_string(recon.width) + " but the target is " +
                    std::to_string(target.height) + "x" + std::to_string(target.width));
  if (cfg.bands < 2) throw ConfigError("spectrum: bands must be at least 2");
  auto nb = static_cast<std::size_t>(cfg.bands);
  spectral::BandSpectrum ts = spectral::band_spectrum(target.values, target.height, target.width, nb);
  spectral::BandSpectrum rs = spectral::band_spectrum(recon.values, recon.height, recon.width, nb);
  std::string csv = "band,edge_lo,edge_hi,target_energy,recon_energy,sq_error\n";
  for (std::size_t b = 0; b < nb; ++b) {
    double d = ts.energy[b] - rs.energy[b];
    csv += std::to_string(b) + "," + fmt_g(ts.edges[b]) + "," + fmt_g(ts.edges[b + 1]) + "," +
           fmt_g(ts.energy[b]) + "," + fmt_g(rs.energy[b]) + "," + fmt_g(d * d) + "\n";
  }
  write_text(cfg.report, csv, "spectrum");
  std::cout << "spectrum: " << nb << " bands, table in " << cfg.report << "\n";
  return 0;
}

}  // namespace forenlab::cli
