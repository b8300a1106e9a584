#pragma once

#include <cstdint>
#include <string>

#include "forenlab/data.hpp"
#include "forenlab/models.hpp"
#include "forenlab/training.hpp"

namespace forenlab::cli {

// Everything a command needs, assembled from defaults, an optional key=value
// config file, and flag overrides (flags win over the file, the file wins
// over defaults). Unknown keys are rejected.
struct RunConfig {
  models::ModelConfig model;
  training::LossWeights weights;
  training::AdamConfig adam;
  double min_lr = 1e-6;
  int epochs = 300;
  int batch_size = 0;  // 0 = full batch
  std::uint64_t seed = 7;

  data::DatasetMode mode = data::DatasetMode::full_image;
  double train_frac = 0.75;
  int n_fields = 16;
  int field_height = 64;
  int field_width = 64;
  int n_low = 6;
  int n_high = 10;
  int n_bumps = 3;
  double amp_high = 0.4;
  std::string downsample_kind = "block_mean";  // or "bilinear"
  bool with_lr = false;

  int bands = 8;
  int workers = 1;
  bool record_timing = false;

  std::string out_dir = "out";
  std::string manifest;
  std::string checkpoint = "model.vfr1";
  std::string report = "report.csv";
  std::string input;
  std::string output = "sr.esmg";
  std::string pgm;
  std::string target;
  std::string recon;
  std::string sweep_param = "omega0";
  std::string sweep_values = "10,20,30,40,50,60";

  // built-in defaults with the FORENLAB_SEED override applied
  static RunConfig defaults();

  // parses and assigns one key; throws ConfigError for unknown keys or
  // unparseable values
  void set(const std::string& key, const std::string& value);
  void load_file(const std::string& path);

  bool bilinear() const;
  data::SynthOptions synth_options() const;
  training::TrainOptions train_options() const;
};

}  // namespace forenlab::cli
