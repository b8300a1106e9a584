#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace forenlab::data {

// Which physical variable a grid holds. Synthetic fields come from the
// built-in generator.
enum class VarTag : std::uint8_t { synthetic = 0, ts = 1, fsw = 2, flw = 3 };

const char* var_tag_name(VarTag tag);
VarTag var_tag_from_name(const std::string& name);

struct GridField {
  std::size_t height = 0, width = 0;
  std::vector<double> values;  // row-major
  VarTag tag = VarTag::synthetic;
  // original value range before min-max normalisation; equal when the field
  // was constant (or never normalised)
  double norm_min = 0.0, norm_max = 0.0;

  double& at(std::size_t r, std::size_t c) { return values[r * width + c]; }
  double at(std::size_t r, std::size_t c) const { return values[r * width + c]; }
};

// Maps values onto [0,1], recording the original range; constant fields are
// rejected (no range to map). denormalize restores the recorded range.
void normalize(GridField& f);
GridField denormalize(const GridField& f);

struct SynthOptions {
  std::size_t height = 64, width = 64;
  int n_low = 6;        // seeded low-band sinusoids, radius in [0.05, 0.2]
  int n_high = 10;      // fixed-texture high-band sinusoids, radius in [0.5, 0.8]
  int n_bumps = 3;      // seeded Gaussian bumps, sigma in [3, 6] px
  double amp_high = 0.4;
};

// Synthetic field: per-seed low-band sinusoids and bumps plus a high-band
// sinusoid texture that is identical for every seed (so the fine detail is a
// property of the dataset, not of the individual field). Output is min-max
// normalised to [0,1].
GridField synth_field(const SynthOptions& opts, std::uint64_t seed);

// scale x scale block averaging; dimensions must divide evenly
GridField downsample(const GridField& f, int scale);
// bilinear resampling at output pixel centres
GridField downsample_bilinear(const GridField& f, int scale);
GridField upsample_nearest(const GridField& f, int scale);

// Splits a field into 8 equal non-overlapping tiles (2 rows x 4 columns).
std::array<GridField, 8> tile8(const GridField& f);
// Reassembles the tiling; exact inverse of tile8.
GridField untile8(const std::array<GridField, 8>& tiles);

// binary grid container round trip
void save_grid(const GridField& f, const std::string& path);
GridField load_grid(const std::string& path);

// 16-bit binary PGM (P5) snapshot of a normalised grid
void save_pgm16(const GridField& f, const std::string& path);

struct SRPair {
  GridField lr, hr;
  int scale = 1;
  std::string name;  // source field name, empty for in-memory data
};

SRPair make_pair(const GridField& hr, int scale, bool bilinear = false);

enum class DatasetMode { full_image, sub_image };

struct DatasetSpec {
  DatasetMode mode = DatasetMode::full_image;
  double train_frac = 0.75;
  std::uint64_t seed = 7;
  int scale = 4;
  bool bilinear = false;
};

struct Dataset {
  std::vector<SRPair> train, val;
};

// Tiles (in sub_image mode), pairs, shuffles and splits. The split is a
// disjoint cover of all pairs and depends only on the seed.
Dataset assemble(const std::vector<GridField>& fields, const std::vector<std::string>& names,
                 const DatasetSpec& spec);

struct Manifest {
  std::uint64_t seed = 0;
  std::vector<std::string> names;  // as written, relative to the manifest
  std::vector<std::string> paths;  // resolved
};

void write_manifest(const std::string& path, std::uint64_t seed,
                    const std::vector<std::string>& names);
Manifest read_manifest(const std::string& path);

}  // namespace forenlab::data
