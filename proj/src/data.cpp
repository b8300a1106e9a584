#include "forenlab/data.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>

#include "forenlab/common.hpp"

namespace forenlab::data {

namespace {

constexpr char kMagic[4] = {'E', 'S', 'M', 'G'};
constexpr std::uint8_t kVersion = 1;
constexpr double kTau = 6.283185307179586476925287;

// the high-band texture is drawn from this fixed stream for every field
constexpr std::uint64_t kTextureSeed = 0xF0C0'5EED'0000'0001ULL;

std::string read_file(const std::string& path, const char* what) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(std::string(what) + ": cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::string& path, const std::string& bytes, const char* what) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError(std::string(what) + ": cannot open " + path + " for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError(std::string(what) + ": short write to " + path);
}

// draws a sinusoid frequency whose normalised radius lands in [r_lo, r_hi]
// while both axis components stay clear of the axis Nyquist limit
void draw_radius(Rng& rng, double r_lo, double r_hi, double box, double& fx, double& fy) {
  for (int tries = 0; tries < 10000; ++tries) {
    double cx = rng.uniform(-box, box);
    double cy = rng.uniform(-box, box);
    double r = std::sqrt(2.0 * (cx * cx + cy * cy));
    if (r >= r_lo && r <= r_hi) {
      fx = cx;
      fy = cy;
      return;
    }
  }
  throw NumericError("synth_field: frequency sampling failed to converge");
}

}  // namespace

const char* var_tag_name(VarTag tag) {
  switch (tag) {
    case VarTag::synthetic: return "synthetic";
    case VarTag::ts: return "ts";
    case VarTag::fsw: return "fsw";
    case VarTag::flw: return "flw";
  }
  throw DataError("var_tag_name: unknown tag " + std::to_string(static_cast<int>(tag)));
}

VarTag var_tag_from_name(const std::string& name) {
  if (name == "synthetic") return VarTag::synthetic;
  if (name == "ts") return VarTag::ts;
  if (name == "fsw") return VarTag::fsw;
  if (name == "flw") return VarTag::flw;
  throw ConfigError("unknown variable tag '" + name + "'");
}

void normalize(GridField& f) {
  if (f.values.empty()) throw DataError("normalize: empty field");
  auto [lo_it, hi_it] = std::minmax_element(f.values.begin(), f.values.end());
  double lo = *lo_it, hi = *hi_it;
  if (!(hi > lo))
    throw DataError("normalize: field is constant (" + std::to_string(lo) +
                    "), no range to map onto [0,1]");
  f.norm_min = lo;
  f.norm_max = hi;
  double inv = 1.0 / (hi - lo);
  for (double& v : f.values) v = (v - lo) * inv;
}

GridField denormalize(const GridField& f) {
  GridField out = f;
  double span = f.norm_max - f.norm_min;
  for (double& v : out.values) v = v * span + f.norm_min;
  return out;
}

GridField synth_field(const SynthOptions& opts, std::uint64_t seed) {
  if (opts.height < 16 || opts.width < 16)
    throw ConfigError("synth_field: grid must be at least 16x16, got " +
                      std::to_string(opts.height) + "x" + std::to_string(opts.width));
  if (opts.n_low < 0 || opts.n_high < 0 || opts.n_bumps < 0 || opts.amp_high < 0.0)
    throw ConfigError("synth_field: counts and amplitudes must be non-negative");
  GridField f;
  f.height = opts.height;
  f.width = opts.width;
  f.values.assign(opts.height * opts.width, 0.0);
  f.tag = VarTag::synthetic;

  Rng rng(seed);
  struct Wave {
    double fx, fy, phase, amp;
  };
  std::vector<Wave> waves;
  waves.reserve(static_cast<std::size_t>(opts.n_low + opts.n_high));
  for (int i = 0; i < opts.n_low; ++i) {
    Wave wv;
    draw_radius(rng, 0.05, 0.2, 0.15, wv.fx, wv.fy);
    wv.phase = rng.uniform(0.0, kTau);
    wv.amp = rng.uniform(0.5, 1.0);
    waves.push_back(wv);
  }
  Rng tex(kTextureSeed);
  for (int i = 0; i < opts.n_high; ++i) {
    Wave wv;
    draw_radius(tex, 0.5, 0.8, 0.48, wv.fx, wv.fy);
    wv.phase = tex.uniform(0.0, kTau);
    wv.amp = opts.amp_high * tex.uniform(0.5, 1.0);
    waves.push_back(wv);
  }
  struct Bump {
    double cy, cx, sigma, amp;
  };
  std::vector<Bump> bumps;
  for (int i = 0; i < opts.n_bumps; ++i) {
    Bump b;
    b.cy = rng.uniform(0.2, 0.8) * static_cast<double>(opts.height);
    b.cx = rng.uniform(0.2, 0.8) * static_cast<double>(opts.width);
    b.sigma = rng.uniform(3.0, 6.0);
    b.amp = (rng.uniform() < 0.5 ? -1.0 : 1.0) * rng.uniform(0.3, 0.8);
    bumps.push_back(b);
  }
  for (std::size_t r = 0; r < opts.height; ++r)
    for (std::size_t c = 0; c < opts.width; ++c) {
      double y = static_cast<double>(r), x = static_cast<double>(c);
      double v = 0.0;
      for (const Wave& wv : waves) v += wv.amp * std::sin(kTau * (wv.fx * x + wv.fy * y) + wv.phase);
      for (const Bump& b : bumps) {
        double dy = y - b.cy, dx = x - b.cx;
        v += b.amp * std::exp(-(dx * dx + dy * dy) / (2.0 * b.sigma * b.sigma));
      }
      f.at(r, c) = v;
    }
  normalize(f);
  return f;
}

GridField downsample(const GridField& f, int scale) {
  if (scale < 1) throw ConfigError("downsample: scale must be positive");
  std::size_t s = static_cast<std::size_t>(scale);
  if (f.height % s != 0 || f.width % s != 0)
    throw DataError("downsample: " + std::to_string(f.height) + "x" + std::to_string(f.width) +
                    " is not divisible by scale " + std::to_string(scale));
  GridField out;
  out.height = f.height / s;
  out.width = f.width / s;
  out.values.assign(out.height * out.width, 0.0);
  out.tag = f.tag;
  out.norm_min = f.norm_min;
  out.norm_max = f.norm_max;
  // extended-precision accumulation keeps the equal-value block mean exact,
  // so downsample undoes upsample_nearest bit for bit
  for (std::size_t r = 0; r < out.height; ++r)
    for (std::size_t c = 0; c < out.width; ++c) {
      long double acc = 0.0L;
      for (std::size_t dr = 0; dr < s; ++dr)
        for (std::size_t dc = 0; dc < s; ++dc) acc += f.at(r * s + dr, c * s + dc);
      out.at(r, c) = static_cast<double>(acc / static_cast<long double>(s * s));
    }
  return out;
}

GridField downsample_bilinear(const GridField& f, int scale) {
  if (scale < 1) throw ConfigError("downsample_bilinear: scale must be positive");
  std::size_t s = static_cast<std::size_t>(scale);
  if (f.height % s != 0 || f.width % s != 0)
    throw DataError("downsample_bilinear: " + std::to_string(f.height) + "x" +
                    std::to_string(f.width) + " is not divisible by scale " + std::to_string(scale));
  GridField out;
  out.height = f.height / s;
  out.width = f.width / s;
  out.values.assign(out.height * out.width, 0.0);
  out.tag = f.tag;
  out.norm_min = f.norm_min;
  out.norm_max = f.norm_max;
  for (std::size_t r = 0; r < out.height; ++r)
    for (std::size_t c = 0; c < out.width; ++c) {
      // centre-aligned source position for the output pixel
      double sy = (static_cast<double>(r) + 0.5) * static_cast<double>(s) - 0.5;
      double sx = (static_cast<double>(c) + 0.5) * static_cast<double>(s) - 0.5;
      sy = std::clamp(sy, 0.0, static_cast<double>(f.height - 1));
      sx = std::clamp(sx, 0.0, static_cast<double>(f.width - 1));
      std::size_t y0 = std::min(static_cast<std::size_t>(sy), f.height - 1);
      std::size_t x0 = std::min(static_cast<std::size_t>(sx), f.width - 1);
      std::size_t y1 = std::min(y0 + 1, f.height - 1);
      std::size_t x1 = std::min(x0 + 1, f.width - 1);
      double fy = sy - static_cast<double>(y0);
      double fx = sx - static_cast<double>(x0);
      out.at(r, c) = (1 - fy) * ((1 - fx) * f.at(y0, x0) + fx * f.at(y0, x1)) +
                     fy * ((1 - fx) * f.at(y1, x0) + fx * f.at(y1, x1));
    }
  return out;
}

GridField upsample_nearest(const GridField& f, int scale) {
  if (scale < 1) throw ConfigError("upsample_nearest: scale must be positive");
  std::size_t s = static_cast<std::size_t>(scale);
  GridField out;
  out.height = f.height * s;
  out.width = f.width * s;
  out.values.assign(out.height * out.width, 0.0);
  out.tag = f.tag;
  out.norm_min = f.norm_min;
  out.norm_max = f.norm_max;
  for (std::size_t r = 0; r < out.height; ++r)
    for (std::size_t c = 0; c < out.width; ++c) out.at(r, c) = f.at(r / s, c / s);
  return out;
}

std::array<GridField, 8> tile8(const GridField& f) {
  if (f.height % 2 != 0 || f.width % 4 != 0)
    throw DataError("tile8: " + std::to_string(f.height) + "x" + std::to_string(f.width) +
                    " does not split into a 2x4 tiling");
  std::size_t th = f.height / 2, tw = f.width / 4;
  std::array<GridField, 8> tiles;
  for (std::size_t ty = 0; ty < 2; ++ty)
    for (std::size_t tx = 0; tx < 4; ++tx) {
      GridField& t = tiles[ty * 4 + tx];
      t.height = th;
      t.width = tw;
      t.values.assign(th * tw, 0.0);
      t.tag = f.tag;
      t.norm_min = f.norm_min;
      t.norm_max = f.norm_max;
      for (std::size_t r = 0; r < th; ++r)
        for (std::size_t c = 0; c < tw; ++c) t.at(r, c) = f.at(ty * th + r, tx * tw + c);
    }
  return tiles;
}

GridField untile8(const std::array<GridField, 8>& tiles) {
  std::size_t th = tiles[0].height, tw = tiles[0].width;
  for (const GridField& t : tiles)
    if (t.height != th || t.width != tw) throw DataError("untile8: tiles have mixed sizes");
  GridField f;
  f.height = th * 2;
  f.width = tw * 4;
  f.values.assign(f.height * f.width, 0.0);
  f.tag = tiles[0].tag;
  f.norm_min = tiles[0].norm_min;
  f.norm_max = tiles[0].norm_max;
  for (std::size_t ty = 0; ty < 2; ++ty)
    for (std::size_t tx = 0; tx < 4; ++tx) {
      const GridField& t = tiles[ty * 4 + tx];
      for (std::size_t r = 0; r < th; ++r)
        for (std::size_t c = 0; c < tw; ++c) f.at(ty * th + r, tx * tw + c) = t.at(r, c);
    }
  return f;
}

void save_grid(const GridField& f, const std::string& path) {
  if (f.values.size() != f.height * f.width)
    throw DataError("save_grid: field dimensions do not match its values");
  std::string buf;
  buf.reserve(30 + 8 * f.values.size());
  buf.append(kMagic, 4);
  buf.push_back(static_cast<char>(kVersion));
  put_u32(buf, static_cast<std::uint32_t>(f.height));
  put_u32(buf, static_cast<std::uint32_t>(f.width));
  buf.push_back(static_cast<char>(static_cast<std::uint8_t>(f.tag)));
  put_f64(buf, f.norm_min);
  put_f64(buf, f.norm_max);
  for (double v : f.values) put_f64(buf, v);
  write_file(path, buf, "save_grid");
}

GridField load_grid(const std::string& path) {
  std::string buf = read_file(path, "load_grid");
  ByteReader r(buf, "load_grid(" + path + ")");
  if (r.bytes(4) != std::string(kMagic, 4))
    throw DataError("load_grid: " + path + " is not a grid file (bad magic)");
  std::uint8_t version = r.u8();
  if (version != kVersion)
    throw DataError("load_grid: " + path + " has unsupported version " + std::to_string(version));
  GridField f;
  f.height = r.u32();
  f.width = r.u32();
  if (f.height == 0 || f.width == 0) throw DataError("load_grid: " + path + " has empty dimensions");
  std::uint8_t tag = r.u8();
  if (tag > 3) throw DataError("load_grid: " + path + " has unknown variable tag " + std::to_string(tag));
  f.tag = static_cast<VarTag>(tag);
  f.norm_min = r.f64();
  f.norm_max = r.f64();
  f.values.resize(f.height * f.width);
  for (double& v : f.values) {
    v = r.f64();
    if (!std::isfinite(v)) throw DataError("load_grid: " + path + " contains non-finite values");
  }
  if (!r.exhausted()) throw DataError("load_grid: " + path + " has trailing bytes");
  return f;
}

void save_pgm16(const GridField& f, const std::string& path) {
  std::string buf = "P5\n" + std::to_string(f.width) + " " + std::to_string(f.height) + "\n65535\n";
  for (double v : f.values) {
    double clamped = std::clamp(v, 0.0, 1.0);
    auto px = static_cast<std::uint16_t>(std::lround(clamped * 65535.0));
    buf.push_back(static_cast<char>(px >> 8));  // netpbm is big-endian
    buf.push_back(static_cast<char>(px & 0xFF));
  }
  write_file(path, buf, "save_pgm16");
}

SRPair make_pair(const GridField& hr, int scale, bool bilinear) {
  SRPair p;
  p.hr = hr;
  p.lr = bilinear ? downsample_bilinear(hr, scale) : downsample(hr, scale);
  p.scale = scale;
  return p;
}

Dataset assemble(const std::vector<GridField>& fields, const std::vector<std::string>& names,
                 const DatasetSpec& spec) {
  if (fields.empty()) throw DataError("assemble: no fields");
  if (!names.empty() && names.size() != fields.size())
    throw DataError("assemble: name count does not match field count");
  if (spec.train_frac < 0.0 || spec.train_frac > 1.0)
    throw ConfigError("assemble: train_frac must lie in [0,1], got " +
                      std::to_string(spec.train_frac));
  std::vector<SRPair> pairs;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    std::string name = names.empty() ? "field_" + std::to_string(i) : names[i];
    if (spec.mode == DatasetMode::sub_image) {
      auto tiles = tile8(fields[i]);
      for (std::size_t t = 0; t < tiles.size(); ++t) {
        SRPair p = make_pair(tiles[t], spec.scale, spec.bilinear);
        p.name = name + "#" + std::to_string(t);
        pairs.push_back(std::move(p));
      }
    } else {
      SRPair p = make_pair(fields[i], spec.scale, spec.bilinear);
      p.name = name;
      pairs.push_back(std::move(p));
    }
  }
  std::vector<std::size_t> order(pairs.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng = Rng(spec.seed).fork(0x5917ULL);  // split stream, independent of model init
  for (std::size_t i = order.size(); i > 1; --i)
    std::swap(order[i - 1], order[rng.integer(i)]);
  auto n_train = static_cast<std::size_t>(
      std::llround(spec.train_frac * static_cast<double>(pairs.size())));
  n_train = std::min(n_train, pairs.size());
  Dataset ds;
  for (std::size_t i = 0; i < order.size(); ++i)
    (i < n_train ? ds.train : ds.val).push_back(pairs[order[i]]);
  return ds;
}

void write_manifest(const std::string& path, std::uint64_t seed,
                    const std::vector<std::string>& names) {
  std::string buf = "seed=" + std::to_string(seed) + "\n";
  for (const std::string& n : names) buf += n + "\n";
  write_file(path, buf, "write_manifest");
}

Manifest read_manifest(const std::string& path) {
  std::string buf = read_file(path, "read_manifest");
  std::istringstream in(buf);
  std::string line;
  if (!std::getline(in, line) || line.rfind("seed=", 0) != 0)
    throw DataError("read_manifest: " + path + " must start with a seed= line");
  Manifest m;
  try {
    m.seed = std::stoull(line.substr(5));
  } catch (const std::exception&) {
    throw DataError("read_manifest: bad seed value in " + path);
  }
  std::filesystem::path base = std::filesystem::path(path).parent_path();
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    m.names.push_back(line);
    m.paths.push_back((base / line).string());
  }
  if (m.names.empty()) throw DataError("read_manifest: " + path + " lists no fields");
  return m;
}

}  // namespace forenlab::data
