#include "forenlab/runconfig.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

namespace forenlab::cli {

namespace {

int to_int(const std::string& v, const std::string& key) {
  try {
    std::size_t used = 0;
    int r = std::stoi(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return r;
  } catch (const std::exception&) {
    throw ConfigError("config: '" + v + "' is not a valid integer for " + key);
  }
}

double to_double(const std::string& v, const std::string& key) {
  try {
    std::size_t used = 0;
    double r = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return r;
  } catch (const std::exception&) {
    throw ConfigError("config: '" + v + "' is not a valid number for " + key);
  }
}

std::uint64_t to_u64(const std::string& v, const std::string& key) {
  try {
    std::size_t used = 0;
    std::uint64_t r = std::stoull(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return r;
  } catch (const std::exception&) {
    throw ConfigError("config: '" + v + "' is not a valid unsigned integer for " + key);
  }
}

bool to_bool(const std::string& v, const std::string& key) {
  if (v == "1" || v == "true" || v == "on" || v == "yes") return true;
  if (v == "0" || v == "false" || v == "off" || v == "no") return false;
  throw ConfigError("config: '" + v + "' is not a valid boolean for " + key);
}

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

}  // namespace

RunConfig RunConfig::defaults() {
  RunConfig cfg;
  if (const char* env = std::getenv("FORENLAB_SEED"); env && *env)
    cfg.seed = to_u64(env, "FORENLAB_SEED");
  return cfg;
}

void RunConfig::set(const std::string& key, const std::string& value) {
  // model
  if (key == "arch") model.arch = models::arch_from_name(value);
  else if (key == "patch_size") model.patch_size = to_int(value, key);
  else if (key == "embed_dim") model.embed_dim = to_int(value, key);
  else if (key == "heads") model.heads = to_int(value, key);
  else if (key == "layers") model.layers = to_int(value, key);
  else if (key == "omega0") model.omega0 = to_double(value, key);
  else if (key == "siren_hidden_layers") model.siren_hidden_layers = to_int(value, key);
  else if (key == "f_low") model.f_low = to_double(value, key);
  else if (key == "f_high") model.f_high = to_double(value, key);
  else if (key == "f_c") {  // convenience: sets both cutoffs
    model.f_low = to_double(value, key);
    model.f_high = model.f_low;
  } else if (key == "fusion_alpha") model.fusion_alpha = to_double(value, key);
  else if (key == "alpha_learnable") model.alpha_learnable = to_bool(value, key);
  else if (key == "foren_in_encoder") model.foren_in_encoder = to_bool(value, key);
  else if (key == "scale_factor") model.scale_factor = to_int(value, key);
  else if (key == "lr_height") model.lr_height = to_int(value, key);
  else if (key == "lr_width") model.lr_width = to_int(value, key);
  // loss / optimizer / loop
  else if (key == "lambda1") weights.lambda1 = to_double(value, key);
  else if (key == "lambda2") weights.lambda2 = to_double(value, key);
  else if (key == "lr") adam.lr = to_double(value, key);
  else if (key == "min_lr") min_lr = to_double(value, key);
  else if (key == "adam_beta1") adam.beta1 = to_double(value, key);
  else if (key == "adam_beta2") adam.beta2 = to_double(value, key);
  else if (key == "adam_eps") adam.eps = to_double(value, key);
  else if (key == "epochs") epochs = to_int(value, key);
  else if (key == "batch_size") batch_size = to_int(value, key);
  else if (key == "seed") seed = to_u64(value, key);
  else if (key == "record_timing") record_timing = to_bool(value, key);
  // dataset
  else if (key == "mode") {
    if (value == "full_image") mode = data::DatasetMode::full_image;
    else if (value == "sub_image") mode = data::DatasetMode::sub_image;
    else throw ConfigError("config: mode must be full_image or sub_image, got '" + value + "'");
  } else if (key == "train_frac") train_frac = to_double(value, key);
  else if (key == "n_fields") n_fields = to_int(value, key);
  else if (key == "field_height") field_height = to_int(value, key);
  else if (key == "field_width") field_width = to_int(value, key);
  else if (key == "n_low") n_low = to_int(value, key);
  else if (key == "n_high") n_high = to_int(value, key);
  else if (key == "n_bumps") n_bumps = to_int(value, key);
  else if (key == "amp_high") amp_high = to_double(value, key);
  else if (key == "downsample") {
    if (value != "block_mean" && value != "bilinear")
      throw ConfigError("config: downsample must be block_mean or bilinear, got '" + value + "'");
    downsample_kind = value;
  } else if (key == "with_lr") with_lr = to_bool(value, key);
  // reporting / execution
  else if (key == "bands") bands = to_int(value, key);
  else if (key == "workers") workers = to_int(value, key);
  // paths
  else if (key == "out_dir") out_dir = value;
  else if (key == "manifest") manifest = value;
  else if (key == "checkpoint") checkpoint = value;
  else if (key == "report") report = value;
  else if (key == "input") input = value;
  else if (key == "output") output = value;
  else if (key == "pgm") pgm = value;
  else if (key == "target") target = value;
  else if (key == "recon") recon = value;
  else if (key == "sweep_param") sweep_param = value;
  else if (key == "sweep_values") sweep_values = value;
  else throw ConfigError("config: unknown key '" + key + "'");
}

void RunConfig::load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config: " + path + ":" + std::to_string(lineno) +
                        " is not a key=value line: '" + line + "'");
    set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
}

bool RunConfig::bilinear() const { return downsample_kind == "bilinear"; }

data::SynthOptions RunConfig::synth_options() const {
  if (field_height < 16 || field_width < 16)
    throw ConfigError("config: field dims must be at least 16, got " +
                      std::to_string(field_height) + "x" + std::to_string(field_width));
  data::SynthOptions o;
  o.height = static_cast<std::size_t>(field_height);
  o.width = static_cast<std::size_t>(field_width);
  o.n_low = n_low;
  o.n_high = n_high;
  o.n_bumps = n_bumps;
  o.amp_high = amp_high;
  return o;
}

training::TrainOptions RunConfig::train_options() const {
  training::TrainOptions o;
  o.epochs = epochs;
  o.batch_size = batch_size;
  o.weights = weights;
  o.adam = adam;
  o.min_lr = min_lr;
  o.seed = seed;
  o.record_timing = record_timing;
  return o;
}

}  // namespace forenlab::cli
