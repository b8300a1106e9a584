#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "forenlab/spectral.hpp"
#include "forenlab/tensor.hpp"

namespace forenlab::models {

enum class Arch { visir, vifor, mlp_relu, siren_only };

const char* arch_name(Arch a);
Arch arch_from_name(const std::string& name);

struct ModelConfig {
  Arch arch = Arch::vifor;
  int patch_size = 8;
  int embed_dim = 64;
  int heads = 4;
  int layers = 4;
  double omega0 = 30.0;
  int siren_hidden_layers = 2;
  double f_low = 0.3;
  double f_high = 0.3;
  double fusion_alpha = 0.5;
  bool alpha_learnable = false;
  // apply the channel filter inside encoder feed-forward blocks (vifor only)
  bool foren_in_encoder = true;
  int scale_factor = 4;
  // LR input dims; structural because the positional table is sized from them
  int lr_height = 16;
  int lr_width = 16;

  void validate() const;
  std::size_t lattice_rows() const { return static_cast<std::size_t>(lr_height / patch_size); }
  std::size_t lattice_cols() const { return static_cast<std::size_t>(lr_width / patch_size); }
  std::size_t n_tokens() const { return lattice_rows() * lattice_cols(); }
};

struct TokenSequence {
  Tensor tokens;  // N x D, row-major over the patch lattice
  std::size_t rows = 0, cols = 0;
};

class Model {
 public:
  // fresh parameters drawn deterministically from the seed
  Model(const ModelConfig& cfg, std::uint64_t seed);
  // adopt existing parameters (checkpoint load); names and shapes must match
  // the config exactly
  Model(const ModelConfig& cfg, std::map<std::string, Tensor> params);

  const ModelConfig& config() const { return cfg_; }
  std::map<std::string, Tensor>& parameters() { return params_; }
  const std::map<std::string, Tensor>& parameters() const { return params_; }
  std::size_t param_count() const;

  // closed-form parameter count per arch (documented in the README)
  static std::size_t expected_param_count(const ModelConfig& cfg);
  // SIREN decoder head parameter count (single head, with output bias)
  static std::size_t decoder_param_count(const ModelConfig& cfg);
  // hidden width for the coordinate-MLP baselines, chosen so their count
  // lands within 10% of the decoder head's
  static int matched_baseline_width(const ModelConfig& cfg);

  TokenSequence patch_embed(const Tensor& img) const;
  TokenSequence encoder_forward(const TokenSequence& seq) const;
  Tensor visir_decode(const TokenSequence& seq, std::size_t out_h, std::size_t out_w) const;
  Tensor vifor_decode(const TokenSequence& seq, std::size_t out_h, std::size_t out_w) const;

  // lr -> sr dispatch on arch; input grids are data, never graph nodes
  Tensor forward(const Tensor& lr) const;

  void zero_grads();

 private:
  const Tensor& p(const std::string& name) const;
  Tensor head_forward(const std::string& prefix, const Tensor& input, bool final_bias) const;

  ModelConfig cfg_;
  std::map<std::string, Tensor> params_;
};

// normalized pixel-centre coordinates for an out_h x out_w grid, (x,y) pairs
// in [-1,1]^2, row-major
std::vector<double> pixel_coords(std::size_t out_h, std::size_t out_w);

// Checkpoint container: magic "VFR1", config text block, named parameter
// blobs. Byte-exact round trip.
std::string checkpoint_bytes(const Model& m);
void save_checkpoint(const Model& m, const std::string& path);
Model load_checkpoint(const std::string& path);

}  // namespace forenlab::models
